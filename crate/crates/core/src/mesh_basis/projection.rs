use nalgebra::DMatrix;

use super::legendre;
use super::mesh::{SpaceTimeSlab, SpatialMesh};
use super::quadrature::GaussRule;
use super::solution::{DGBasis, SlabSolution, SpatialTrace};
use crate::error::{Result, ScdgError};
use crate::systems::{ConservationSystem, StateVector};

/// Spatial L₂ projection of v(u₀(x)) onto per-cell polynomials of degree q,
/// used as the initial bottom trace v_{0,−}.
pub fn l2_project_initial(
    sys: &dyn ConservationSystem,
    u0: &dyn Fn(f64) -> Result<StateVector>,
    mesh: &SpatialMesh,
    q: usize,
) -> Result<SpatialTrace> {
    let m = sys.m();
    let rule = GaussRule::new(2 * q + 3);
    let table: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| legendre::values(q, x)).collect();
    let mut trace = SpatialTrace::zeros(q, m, mesh.n_cells);
    for cell in 0..mesh.n_cells {
        let v: Vec<StateVector> = rule
            .nodes
            .iter()
            .map(|&xi| sys.entropy_variables(&u0(mesh.x_of(cell, xi))?))
            .collect::<Result<_>>()?;
        // Mean first, relative to a node value, so constant data projects to
        // exactly that constant with vanishing higher modes.
        let reference = &v[0];
        let mut mean = StateVector::zeros(m);
        for (vk, w) in v.iter().zip(&rule.weights) {
            mean += (vk - reference) * (*w * 0.5);
        }
        mean += reference;
        for c in 0..m {
            *trace.coeff_mut(cell, 0, c) = mean[c];
        }
        for i in 1..=q {
            let scale = (2 * i + 1) as f64 / 2.0;
            for c in 0..m {
                let s: f64 = v
                    .iter()
                    .zip(&rule.weights)
                    .zip(&table)
                    .map(|((vk, w), p)| w * (vk[c] - mean[c]) * p[i])
                    .sum();
                *trace.coeff_mut(cell, i, c) = scale * s;
            }
        }
    }
    Ok(trace)
}

/// Entropy state(s) ṽ_{n,K} whose symmetrizer weights the H¹ projection.
#[derive(Debug, Clone, Copy)]
pub enum WeightState<'a> {
    Uniform(&'a StateVector),
    PerCell(&'a [StateVector]),
}

/// Local weighted H¹ projection: per prism, find φʰ with
/// ∫∫⟨∇φʰ, ũ_v ∇w⟩ = ∫∫⟨∇φ, ũ_v ∇w⟩ for all w and ∫∫φʰ = ∫∫φ.
///
/// The right-hand side is integrated by parts, ∫∫∇φ·∇w = ∮ φ ∂ₙw − ∫∫ φ Δw,
/// so only values of φ are needed.
pub fn h1_projection(
    slab: &SpaceTimeSlab,
    basis: &DGBasis,
    sys: &dyn ConservationSystem,
    phi: &dyn Fn(f64, f64) -> StateVector,
    weights: WeightState<'_>,
) -> Result<SlabSolution> {
    let q = basis.q;
    let n1 = q + 1;
    let nb = n1 * n1;
    let m = sys.m();
    let mesh = &slab.mesh;
    let (dx, dt) = (mesh.dx(), slab.dt());
    let (sx, st) = (2.0 / dx, 2.0 / dt);
    let jac = 0.25 * dx * dt;

    let rule = GaussRule::new((2 * q + 4).max(basis.n_quad()));
    let tab: Vec<_> = rule
        .nodes
        .iter()
        .map(|&x| legendre::values_and_derivatives(q, x))
        .collect();
    let (_, dp_plus, _) = legendre::values_and_derivatives(q, 1.0);
    let (_, dp_minus, _) = legendre::values_and_derivatives(q, -1.0);

    // reference stiffness of the non-constant modes, exact with n1 points
    let srule = GaussRule::new(n1);
    let stab: Vec<_> = srule
        .nodes
        .iter()
        .map(|&x| legendre::values_and_derivatives(q, x))
        .collect();
    let mass1 = |i: usize, k: usize| -> f64 {
        srule
            .weights
            .iter()
            .zip(&stab)
            .map(|(w, (p, _, _))| w * p[i] * p[k])
            .sum()
    };
    let stiff1 = |i: usize, k: usize| -> f64 {
        srule
            .weights
            .iter()
            .zip(&stab)
            .map(|(w, (_, d, _))| w * d[i] * d[k])
            .sum()
    };
    let split = |a: usize| (a % n1, a / n1);
    let mut s_ref = DMatrix::zeros(nb, nb);
    for a in 0..nb {
        for b in 0..nb {
            let (i, j) = split(a);
            let (k, l) = split(b);
            s_ref[(a, b)] = jac * (sx * sx * stiff1(i, k) * mass1(j, l) + st * st * mass1(i, k) * stiff1(j, l));
        }
    }

    let mut sol = SlabSolution::zeros(slab.clone(), q, m);
    for cell in 0..mesh.n_cells {
        let vbar = match weights {
            WeightState::Uniform(v) => v,
            WeightState::PerCell(vs) => vs
                .get(cell)
                .ok_or_else(|| ScdgError::Index(format!("weight state for cell {cell}")))?,
        };
        let weight = sys.symmetrizer(vbar)?;

        // g[b][c] = ∫∫ ∇φ^c · ∇ψ_b, and the mean of φ^c
        let mut g = vec![StateVector::zeros(m); nb];
        let mut mean = StateVector::zeros(m);
        for (kx, &xi) in rule.nodes.iter().enumerate() {
            for (kt, &tau) in rule.nodes.iter().enumerate() {
                let f = phi(mesh.x_of(cell, xi), slab.t_of(tau));
                let w = rule.weights[kx] * rule.weights[kt] * jac;
                mean += &f * (w / slab.prism_measure());
                let (px, _, ddpx) = &tab[kx];
                let (pt, _, ddpt) = &tab[kt];
                for (b, gb) in g.iter_mut().enumerate() {
                    let (i, j) = split(b);
                    let lap = sx * sx * ddpx[i] * pt[j] + st * st * px[i] * ddpt[j];
                    *gb -= &f * (w * lap);
                }
            }
        }
        for (k, &node) in rule.nodes.iter().enumerate() {
            let (p, _, _) = &tab[k];
            let t = slab.t_of(node);
            let x = mesh.x_of(cell, node);
            let right = phi(mesh.x_of(cell, 1.0), t);
            let left = phi(mesh.x_of(cell, -1.0), t);
            let top = phi(x, slab.t1);
            let bottom = phi(x, slab.t0);
            let wt = rule.weights[k] * 0.5 * dt;
            let wx = rule.weights[k] * 0.5 * dx;
            for (b, gb) in g.iter_mut().enumerate() {
                let (i, j) = split(b);
                *gb += &right * (wt * sx * dp_plus[i] * p[j]);
                *gb -= &left * (wt * sx * dp_minus[i] * p[j]);
                *gb += &top * (wx * st * p[i] * dp_plus[j]);
                *gb -= &bottom * (wx * st * p[i] * dp_minus[j]);
            }
        }

        // weighted system on the non-constant modes: (S ⊗ W) x = (I ⊗ W) g
        let n = (nb - 1) * m;
        let mut lhs = DMatrix::zeros(n, n);
        let mut rhs = nalgebra::DVector::zeros(n);
        for a in 1..nb {
            for d in 0..m {
                let row = (a - 1) * m + d;
                for c in 0..m {
                    rhs[row] += weight[(d, c)] * g[a][c];
                    for b in 1..nb {
                        lhs[(row, (b - 1) * m + c)] = s_ref[(a, b)] * weight[(d, c)];
                    }
                }
            }
        }
        let x = lhs
            .cholesky()
            .ok_or_else(|| ScdgError::Singular(format!("H1 projection system on cell {cell}")))?
            .solve(&rhs);
        for c in 0..m {
            *sol.coeff_mut(cell, 0, c) = mean[c];
        }
        for a in 1..nb {
            for c in 0..m {
                *sol.coeff_mut(cell, a, c) = x[(a - 1) * m + c];
            }
        }
    }
    Ok(sol)
}

/// Per-prism norms of the H¹ projection against the projected function.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PrismProjection {
    pub cell: usize,
    /// ‖∇φʰ‖ and ‖∇φ‖ in L₂(K × I_n).
    pub grad_projected: f64,
    pub grad_exact: f64,
    /// The same norms weighted by ũ_v.
    pub weighted_grad_projected: f64,
    pub weighted_grad_exact: f64,
    /// ‖φ − φʰ‖ in L₂(K × I_n).
    pub l2_error: f64,
}

/// Projects `phi` and measures, per prism, the stability and error norms.
/// `grad_phi` returns (φ_x, φ_t).
pub fn h1_projection_report(
    slab: &SpaceTimeSlab,
    basis: &DGBasis,
    sys: &dyn ConservationSystem,
    phi: &dyn Fn(f64, f64) -> StateVector,
    grad_phi: &dyn Fn(f64, f64) -> (StateVector, StateVector),
    weights: WeightState<'_>,
) -> Result<Vec<PrismProjection>> {
    let sol = h1_projection(slab, basis, sys, phi, weights)?;
    let rule = GaussRule::new(2 * basis.q + 6);
    let jac = 0.25 * slab.prism_measure();
    let mut out = Vec::with_capacity(slab.mesh.n_cells);
    for cell in 0..slab.mesh.n_cells {
        let vbar = match weights {
            WeightState::Uniform(v) => v,
            WeightState::PerCell(vs) => &vs[cell],
        };
        let w = sys.symmetrizer(vbar)?;
        let mut acc = [0.0; 5];
        for (&xi, wx) in rule.nodes.iter().zip(&rule.weights) {
            for (&tau, wt) in rule.nodes.iter().zip(&rule.weights) {
                let q = wx * wt * jac;
                let (x, t) = (slab.mesh.x_of(cell, xi), slab.t_of(tau));
                let (hx, ht) = sol.gradient(cell, xi, tau)?;
                let (ex, et) = grad_phi(x, t);
                acc[0] += q * (hx.norm_squared() + ht.norm_squared());
                acc[1] += q * (ex.norm_squared() + et.norm_squared());
                acc[2] += q * (hx.dot(&(&w * &hx)) + ht.dot(&(&w * &ht)));
                acc[3] += q * (ex.dot(&(&w * &ex)) + et.dot(&(&w * &et)));
                acc[4] += q * (phi(x, t) - sol.evaluate(cell, xi, tau)?).norm_squared();
            }
        }
        let [a, b, c, d, e] = acc.map(|x: f64| x.max(0.0).sqrt());
        out.push(PrismProjection {
            cell,
            grad_projected: a,
            grad_exact: b,
            weighted_grad_projected: c,
            weighted_grad_exact: d,
            l2_error: e,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_basis::Boundary;
    use crate::systems::{Burgers, Euler, ShallowWater};

    fn mesh(n: usize) -> SpatialMesh {
        SpatialMesh::new(0.0, 1.0, n, Boundary::Periodic).unwrap()
    }

    #[test]
    fn l2_constant_is_exact() {
        let sw = ShallowWater::new(1.0, 1e-10).unwrap();
        let u = StateVector::from_vec(vec![1.3, -0.2]);
        let v = sw.entropy_variables(&u).unwrap();
        let tr = l2_project_initial(&sw, &|_| Ok(u.clone()), &mesh(5), 2).unwrap();
        for cell in 0..5 {
            for c in 0..2 {
                assert_eq!(tr.coeff(cell, 0, c), v[c]);
                assert_eq!(tr.coeff(cell, 1, c), 0.0);
                assert_eq!(tr.coeff(cell, 2, c), 0.0);
            }
        }
    }

    #[test]
    fn l2_linear_is_exact() {
        let tr = l2_project_initial(
            &Burgers,
            &|x| Ok(StateVector::from_element(1, 2.0 * x - 0.3)),
            &mesh(4),
            1,
        )
        .unwrap();
        for cell in 0..4 {
            for &xi in &[-1.0, -0.3, 0.5, 1.0] {
                let x = mesh(4).x_of(cell, xi);
                assert!((tr.evaluate(cell, xi).unwrap()[0] - (2.0 * x - 0.3)).abs() < 1e-13);
            }
        }
    }

    fn l2_error(tr: &SpatialTrace, mesh: &SpatialMesh, f: impl Fn(f64) -> f64) -> f64 {
        let rule = GaussRule::new(8);
        let mut e = 0.0;
        for cell in 0..mesh.n_cells {
            for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
                let d = tr.evaluate(cell, xi).unwrap()[0] - f(mesh.x_of(cell, xi));
                e += w * 0.5 * mesh.dx() * d * d;
            }
        }
        e.sqrt()
    }

    #[test]
    fn l2_sine_converges_at_order_q_plus_one() {
        for q in 1..=2 {
            let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
            let errs: Vec<f64> = [8, 16, 32]
                .iter()
                .map(|&n| {
                    let tr =
                        l2_project_initial(&Burgers, &|x| Ok(StateVector::from_element(1, f(x))), &mesh(n), q).unwrap();
                    l2_error(&tr, &mesh(n), f)
                })
                .collect();
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order > q as f64 + 0.9, "q={q} order {order}");
            }
        }
    }

    #[test]
    fn inadmissible_initial_data() {
        let sw = ShallowWater::new(1.0, 1e-10).unwrap();
        let r = l2_project_initial(&sw, &|x| Ok(StateVector::from_vec(vec![x - 0.5, 0.0])), &mesh(4), 1);
        assert!(r.is_err());
    }

    fn slab(n: usize) -> SpaceTimeSlab {
        SpaceTimeSlab::new(0, 0.2, 0.2 + 1.0 / n as f64, mesh(n)).unwrap()
    }

    #[test]
    fn h1_reproduces_constants_and_basis_polynomials() {
        let euler = Euler::new(1.4, 1e-10, 1e-10).unwrap();
        let vbar = euler
            .entropy_variables(&euler.from_primitive(&[1.0, 0.3, 2.0]).unwrap())
            .unwrap();
        let basis = DGBasis::with_default_quadrature(2).unwrap();
        let s = slab(3);
        let c = StateVector::from_vec(vec![0.5, -1.0, 2.0]);
        let sol = h1_projection(&s, &basis, &euler, &|_, _| c.clone(), WeightState::Uniform(&vbar)).unwrap();
        for cell in 0..3 {
            assert!((sol.evaluate(cell, 0.2, -0.7).unwrap() - &c).norm() < 1e-12);
        }
        let poly =
            |x: f64, t: f64| StateVector::from_vec(vec![x * x * t * t - x, 3.0 * x * t + t * t, 1.0 - 2.0 * x * x * t]);
        let sol = h1_projection(&s, &basis, &euler, &poly, WeightState::Uniform(&vbar)).unwrap();
        for cell in 0..3 {
            for &(xi, tau) in &[(0.0, 0.0), (-0.5, 0.9), (1.0, -1.0)] {
                let x = s.mesh.x_of(cell, xi);
                let t = s.t_of(tau);
                assert!((sol.evaluate(cell, xi, tau).unwrap() - poly(x, t)).norm() < 1e-12);
            }
        }
    }
}
