//! Discrete quasi-linear form B = B_DG + B_SC on one slab.
//!
//! Test functions are the tensor Legendre modes of each prism, so entry
//! `(cell, a, c)` of the residual is B(vʰ, φ_a e_c) restricted to that prism.

use crate::entropy_flux::{interface_flux, EntropyStableFlux, InterfaceFlux};
use crate::error::Result;
use crate::mesh_basis::{DGBasis, SlabSolution, SpaceTimeSlab, SpatialTrace};
use crate::shock_capture::{ShockCaptureState, ViscosityConfig};
use crate::systems::{ConservationSystem, StateVector};

/// Everything fixed while solving one slab.
#[derive(Debug, Clone)]
pub struct SlabProblem<'a> {
    pub sys: &'a dyn ConservationSystem,
    pub flux: &'a EntropyStableFlux,
    pub viscosity: &'a ViscosityConfig,
    pub basis: &'a DGBasis,
    pub slab: &'a SpaceTimeSlab,
    /// v_{n,−}: previous slab's top trace, or the projected initial data.
    pub prev_top: &'a SpatialTrace,
    /// Far-field entropy states (left, right) for non-periodic meshes.
    pub far_field: Option<(StateVector, StateVector)>,
    /// Global mesh size h = sup h_κ.
    pub h: f64,
}

/// A spatial facet between two cells; `None` marks a far-field ghost side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl SlabProblem<'_> {
    pub fn faces(&self) -> Vec<Face> {
        let mesh = &self.slab.mesh;
        let n = mesh.n_cells;
        if mesh.is_periodic() {
            (0..n)
                .map(|i| Face {
                    left: Some(i),
                    right: Some(mesh.right_of(i)),
                })
                .collect()
        } else {
            (0..=n)
                .map(|i| Face {
                    left: i.checked_sub(1),
                    right: (i < n).then_some(i),
                })
                .collect()
        }
    }

    pub fn m(&self) -> usize {
        self.sys.m()
    }

    pub fn n_unknowns(&self) -> usize {
        self.slab.mesh.n_cells * self.basis.size() * self.m()
    }
}

/// Point values on one prism at the Gauss nodes.
#[derive(Debug, Clone)]
pub struct CellEval {
    /// Interior nodes, index `kt * nq + kx`.
    pub v: Vec<StateVector>,
    pub vx: Vec<StateVector>,
    pub vt: Vec<StateVector>,
    pub u: Vec<StateVector>,
    pub f: Vec<StateVector>,
    /// Spatial nodes on the top / bottom facets.
    pub top_v: Vec<StateVector>,
    pub top_u: Vec<StateVector>,
    pub bottom_v: Vec<StateVector>,
    pub bottom_u: Vec<StateVector>,
    pub prev_v: Vec<StateVector>,
    pub prev_u: Vec<StateVector>,
}

#[derive(Debug, Clone)]
pub struct FaceEval {
    pub left: Option<usize>,
    pub right: Option<usize>,
    /// Temporal nodes.
    pub v_left: Vec<StateVector>,
    pub v_right: Vec<StateVector>,
    pub flux: Vec<InterfaceFlux>,
}

/// Nonlinear point evaluations of a slab iterate.
#[derive(Debug, Clone)]
pub struct SlabEval {
    pub cells: Vec<CellEval>,
    pub faces: Vec<FaceEval>,
}

impl SlabEval {
    pub fn new(problem: &SlabProblem<'_>, sol: &SlabSolution) -> Result<Self> {
        let sys = problem.sys;
        let basis = problem.basis;
        let nq = basis.n_quad();
        let n1 = basis.n1();
        let (sx, st) = (2.0 / problem.slab.mesh.dx(), 2.0 / problem.slab.dt());
        let ones = vec![1.0; n1];
        let alternating: Vec<f64> = (0..n1).map(crate::mesh_basis::legendre::at_minus_one).collect();

        let mut cells = Vec::with_capacity(sol.n_cells());
        for cell in 0..sol.n_cells() {
            let mut ce = CellEval {
                v: Vec::with_capacity(nq * nq),
                vx: Vec::with_capacity(nq * nq),
                vt: Vec::with_capacity(nq * nq),
                u: Vec::with_capacity(nq * nq),
                f: Vec::with_capacity(nq * nq),
                top_v: Vec::with_capacity(nq),
                top_u: Vec::with_capacity(nq),
                bottom_v: Vec::with_capacity(nq),
                bottom_u: Vec::with_capacity(nq),
                prev_v: Vec::with_capacity(nq),
                prev_u: Vec::with_capacity(nq),
            };
            for kt in 0..nq {
                for kx in 0..nq {
                    let (px, pt) = (&basis.values[kx], &basis.values[kt]);
                    let v = sol.evaluate_tabulated(cell, px, pt);
                    let u = sys.conserved(&v)?;
                    ce.f.push(sys.flux(&u)?);
                    ce.u.push(u);
                    ce.v.push(v);
                    ce.vx
                        .push(sol.evaluate_tabulated(cell, &basis.derivatives[kx], pt) * sx);
                    ce.vt
                        .push(sol.evaluate_tabulated(cell, px, &basis.derivatives[kt]) * st);
                }
            }
            for kx in 0..nq {
                let px = &basis.values[kx];
                let top = sol.evaluate_tabulated(cell, px, &ones);
                ce.top_u.push(sys.conserved(&top)?);
                ce.top_v.push(top);
                let bottom = sol.evaluate_tabulated(cell, px, &alternating);
                ce.bottom_u.push(sys.conserved(&bottom)?);
                ce.bottom_v.push(bottom);
                let prev = problem.prev_top.evaluate_with(cell, px);
                ce.prev_u.push(sys.conserved(&prev)?);
                ce.prev_v.push(prev);
            }
            cells.push(ce);
        }

        let faces = problem
            .faces()
            .into_iter()
            .map(|face| {
                let side = |cell: Option<usize>, right_face: bool, ghost: usize| -> Vec<StateVector> {
                    match cell {
                        Some(c) => (0..nq)
                            .map(|kt| {
                                let px = if right_face { &ones } else { &alternating };
                                sol.evaluate_tabulated(c, px, &basis.values[kt])
                            })
                            .collect(),
                        None => {
                            let (l, r) = problem.far_field.as_ref().expect("far-field states for a bounded mesh");
                            vec![if ghost == 0 { l.clone() } else { r.clone() }; nq]
                        }
                    }
                };
                let v_left = side(face.left, true, 0);
                let v_right = side(face.right, false, 1);
                let flux = v_left
                    .iter()
                    .zip(&v_right)
                    .map(|(a, b)| interface_flux(sys, problem.flux, a, b, 1.0))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FaceEval {
                    left: face.left,
                    right: face.right,
                    v_left,
                    v_right,
                    flux,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cells, faces })
    }
}

/// Residual R[(cell, a, c)] = B(vʰ, φ_a e_c) with the shock-capturing
/// viscosity and weights held at `sc`.
pub fn assemble(problem: &SlabProblem<'_>, eval: &SlabEval, sc: &ShockCaptureState) -> Vec<f64> {
    let basis = problem.basis;
    let m = problem.m();
    let nq = basis.n_quad();
    let n1 = basis.n1();
    let nb = basis.size();
    let (dx, dt) = (problem.slab.mesh.dx(), problem.slab.dt());
    let (sx, st) = (2.0 / dx, 2.0 / dt);
    let jac = 0.25 * dx * dt;
    let w = &basis.rule.weights;
    let mut r = vec![0.0; problem.n_unknowns()];

    for (cell, ce) in eval.cells.iter().enumerate() {
        let block = &mut r[cell * nb * m..(cell + 1) * nb * m];
        let eps = sc.eps[cell];
        let weight = &sc.weight[cell];
        for kt in 0..nq {
            for kx in 0..nq {
                let k = kt * nq + kx;
                let wq = w[kx] * w[kt] * jac;
                // −⟨u, φ_t⟩ − ⟨f, φ_x⟩ + ε(⟨φ_t, W v_t⟩ + ⟨φ_x, W v_x⟩)
                let mut gt = -&ce.u[k];
                let mut gx = -&ce.f[k];
                if eps != 0.0 {
                    gt += weight * &ce.vt[k] * eps;
                    gx += weight * &ce.vx[k] * eps;
                }
                for jt in 0..n1 {
                    for ix in 0..n1 {
                        let dphi_t = st * basis.values[kx][ix] * basis.derivatives[kt][jt];
                        let dphi_x = sx * basis.derivatives[kx][ix] * basis.values[kt][jt];
                        let a = jt * n1 + ix;
                        for c in 0..m {
                            block[a * m + c] += wq * (gt[c] * dphi_t + gx[c] * dphi_x);
                        }
                    }
                }
            }
        }
        // ⟨u(v_{n+1,−}), φ_{n+1,−}⟩ − ⟨u(v_{n,−}), φ_{n,+}⟩
        for kx in 0..nq {
            let wx = w[kx] * 0.5 * dx;
            for jt in 0..n1 {
                let sign = crate::mesh_basis::legendre::at_minus_one(jt);
                for ix in 0..n1 {
                    let p = wx * basis.values[kx][ix];
                    let a = jt * n1 + ix;
                    for c in 0..m {
                        block[a * m + c] += p * (ce.top_u[kx][c] - sign * ce.prev_u[kx][c]);
                    }
                }
            }
        }
    }

    // ∫⟨f̂, φ_{K,−}⟩ over each facet, once per interface
    for face in &eval.faces {
        for kt in 0..nq {
            let wt = w[kt] * 0.5 * dt;
            let fhat = &face.flux[kt].numerical;
            for jt in 0..n1 {
                let pt = wt * basis.values[kt][jt];
                for ix in 0..n1 {
                    let a = jt * n1 + ix;
                    if let Some(l) = face.left {
                        let base = (l * nb + a) * m;
                        for c in 0..m {
                            r[base + c] += pt * fhat[c];
                        }
                    }
                    if let Some(rc) = face.right {
                        let sign = crate::mesh_basis::legendre::at_minus_one(ix);
                        let base = (rc * nb + a) * m;
                        for c in 0..m {
                            r[base + c] -= sign * pt * fhat[c];
                        }
                    }
                }
            }
        }
    }
    r
}

/// B(vʰ, φ_a e_c) for one test function on one prism, with viscosity evaluated
/// at the iterate itself.
pub fn assemble_dg_form(
    problem: &SlabProblem<'_>,
    sol: &SlabSolution,
    cell: usize,
    test_index: usize,
    component: usize,
) -> Result<f64> {
    let eval = SlabEval::new(problem, sol)?;
    let (sc, _) = crate::shock_capture::shock_capture_state(problem, &eval, sol)?;
    let r = assemble(problem, &eval, &sc);
    Ok(r[sol.offset(cell, test_index, component)])
}

/// Full residual at an iterate: viscosity recomputed from the iterate.
pub fn residual(problem: &SlabProblem<'_>, sol: &SlabSolution) -> Result<(Vec<f64>, ShockCaptureState)> {
    let eval = SlabEval::new(problem, sol)?;
    let (sc, _) = crate::shock_capture::shock_capture_state(problem, &eval, sol)?;
    Ok((assemble(problem, &eval, &sc), sc))
}
