#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scdg::checks::random_state;
use scdg::diagnostics::solution_scale;
use scdg::entropy_flux::EntropyStableFlux;
use scdg::mesh_basis::{l2_project_initial, Boundary, DGBasis, SlabSolution, SpaceTimeSlab, SpatialMesh, SpatialTrace};
use scdg::shock_capture::ViscosityConfig;
use scdg::slab_solver::{directional_check, residual, solve_slab, SlabProblem, SolverConfig};
use scdg::systems::{build_system, Burgers, ConservationSystem, StateVector, SystemParams};

const SYSTEMS: [&str; 3] = ["burgers", "shallow_water", "euler"];

fn systems() -> Vec<Box<dyn ConservationSystem>> {
    SYSTEMS
        .iter()
        .map(|n| build_system(n, &SystemParams::new()).unwrap())
        .collect()
}

struct Fixture {
    sys: Box<dyn ConservationSystem>,
    flux: EntropyStableFlux,
    visc: ViscosityConfig,
    basis: DGBasis,
    slab: SpaceTimeSlab,
    prev: SpatialTrace,
    far_field: Option<(StateVector, StateVector)>,
}

impl Fixture {
    fn problem(&self) -> SlabProblem<'_> {
        SlabProblem {
            sys: self.sys.as_ref(),
            flux: &self.flux,
            viscosity: &self.visc,
            basis: &self.basis,
            slab: &self.slab,
            prev_top: &self.prev,
            far_field: self.far_field.clone(),
            h: self.slab.mesh.dx().hypot(self.slab.dt()),
        }
    }
}

fn fixture(
    sys: Box<dyn ConservationSystem>,
    n: usize,
    boundary: Boundary,
    u0: &dyn Fn(f64) -> scdg::Result<StateVector>,
) -> Fixture {
    let mesh = SpatialMesh::new(0.0, 1.0, n, boundary).unwrap();
    let basis = DGBasis::with_default_quadrature(1).unwrap();
    let prev = l2_project_initial(sys.as_ref(), u0, &mesh, 1).unwrap();
    let far_field = match boundary {
        Boundary::Periodic => None,
        _ => Some((
            sys.entropy_variables(&u0(0.0).unwrap()).unwrap(),
            sys.entropy_variables(&u0(1.0).unwrap()).unwrap(),
        )),
    };
    let flux = EntropyStableFlux::default_for(sys.as_ref());
    let slab = SpaceTimeSlab::new(0, 0.0, 0.5 * mesh.dx(), mesh).unwrap();
    Fixture {
        sys,
        flux,
        visc: ViscosityConfig::default(),
        basis,
        slab,
        prev,
        far_field,
    }
}

fn perturbed(f: &Fixture, rng: &mut ChaCha8Rng, size: f64) -> SlabSolution {
    let mut sol = SlabSolution::constant_in_time(f.slab.clone(), &f.prev);
    let amax = sol.coefficients.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for c in sol.coefficients.iter_mut() {
        *c += size * amax * rng.gen_range(-1.0..1.0);
    }
    sol
}

#[test]
fn constant_state_has_zero_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for sys in systems() {
        let u = random_state(sys.as_ref(), &mut rng).unwrap();
        for boundary in [Boundary::Periodic, Boundary::FarField] {
            let uc = u.clone();
            let f = fixture(
                build_system(sys.name(), &SystemParams::new()).unwrap(),
                5,
                boundary,
                &move |_| Ok(uc.clone()),
            );
            let sol = SlabSolution::constant_in_time(f.slab.clone(), &f.prev);
            let (r, sc) = residual(&f.problem(), &sol).unwrap();
            let rmax = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(
                rmax <= 1e-13 * u.amax().max(1.0),
                "{} {boundary:?}: {rmax:e}",
                sys.name()
            );
            assert!(sc.eps.iter().all(|&e| e == 0.0));
        }
    }
}

#[test]
fn unit_test_function_telescopes_to_mass_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for sys in systems() {
        let base = random_state(sys.as_ref(), &mut rng).unwrap();
        let u0 = move |x: f64| Ok(&base * (1.0 + 0.2 * (2.0 * std::f64::consts::PI * x).sin()));
        let f = fixture(
            build_system(sys.name(), &SystemParams::new()).unwrap(),
            7,
            Boundary::Periodic,
            &u0,
        );
        let sol = perturbed(&f, &mut rng, 1e-2);
        let (r, sc) = residual(&f.problem(), &sol).unwrap();
        assert!(sc.eps.iter().any(|&e| e > 0.0));
        let sys = f.sys.as_ref();
        let m = sys.m();
        let integral = |trace: &SpatialTrace| {
            let mut acc = vec![0.0; m];
            for cell in 0..trace.n_cells {
                for (xi, w) in f.basis.rule.nodes.iter().zip(&f.basis.rule.weights) {
                    let u = sys.conserved(&trace.evaluate(cell, *xi).unwrap()).unwrap();
                    for c in 0..m {
                        acc[c] += w * 0.5 * f.slab.mesh.dx() * u[c];
                    }
                }
            }
            acc
        };
        let (top, prev) = (integral(&sol.top_trace()), integral(&f.prev));
        for c in 0..m {
            let summed: f64 = (0..sol.n_cells()).map(|k| r[sol.offset(k, 0, c)]).sum();
            assert!(
                (summed - (top[c] - prev[c])).abs() < 1e-13,
                "{} component {c}",
                sys.name()
            );
        }
    }
}

/// Five-point Gauss-Legendre rule, exact for the polynomial integrands below.
const G5: [(f64, f64); 5] = [
    (0.0, 128.0 / 225.0),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn burgers_fhat(a: f64, b: f64) -> f64 {
    (a * a + a * b + b * b) / 6.0 - 0.5 * (a.abs().max(b.abs()) + 1e-12) * (b - a)
}

/// Independent assembly of the inviscid form for Burgers, q = 1, two cells,
/// far-field ghosts; v = c0 + c1 ξ + c2 τ + c3 ξτ per cell.
fn hand_assembled(c: &[[f64; 4]; 2], prev: &[[f64; 2]; 2], ghosts: (f64, f64), dx: f64, dt: f64) -> Vec<f64> {
    let v = |k: usize, xi: f64, tau: f64| c[k][0] + c[k][1] * xi + c[k][2] * tau + c[k][3] * xi * tau;
    let p = |ix: usize, s: f64| if ix == 0 { 1.0 } else { s };
    let dp = |ix: usize| if ix == 0 { 0.0 } else { 1.0 };
    let mut r = vec![0.0; 8];
    for k in 0..2 {
        for jt in 0..2 {
            for ix in 0..2 {
                let mut acc = 0.0;
                for &(xi, wx) in &G5 {
                    for &(tau, wt) in &G5 {
                        let val = v(k, xi, tau);
                        let phi_t = 2.0 / dt * p(ix, xi) * dp(jt);
                        let phi_x = 2.0 / dx * dp(ix) * p(jt, tau);
                        acc -= wx * wt * dx * dt / 4.0 * (val * phi_t + 0.5 * val * val * phi_x);
                    }
                    let top = v(k, xi, 1.0);
                    let old = prev[k][0] + prev[k][1] * xi;
                    acc += wx * dx / 2.0 * (top * p(ix, xi) * p(jt, 1.0) - old * p(ix, xi) * p(jt, -1.0));
                }
                for &(tau, wt) in &G5 {
                    let right_neighbor = if k == 0 { v(1, -1.0, tau) } else { ghosts.1 };
                    let left_neighbor = if k == 1 { v(0, 1.0, tau) } else { ghosts.0 };
                    let fr = burgers_fhat(v(k, 1.0, tau), right_neighbor);
                    let fl = burgers_fhat(left_neighbor, v(k, -1.0, tau));
                    acc += wt * dt / 2.0 * p(jt, tau) * (fr * p(ix, 1.0) - fl * p(ix, -1.0));
                }
                r[k * 4 + jt * 2 + ix] = acc;
            }
        }
    }
    r
}

#[test]
fn two_cell_assembly_matches_hand_oracle() {
    let c = [[1.5, -0.1, 0.05, 0.02], [0.8, -0.08, -0.04, 0.01]];
    let prev = [[1.45, -0.12], [0.82, -0.07]];
    let ghosts = (2.0, 0.5);
    let mesh = SpatialMesh::new(0.0, 1.0, 2, Boundary::FarField).unwrap();
    let slab = SpaceTimeSlab::new(0, 0.0, 0.25, mesh.clone()).unwrap();
    let mut trace = SpatialTrace::zeros(1, 1, 2);
    let mut sol = SlabSolution::zeros(slab.clone(), 1, 1);
    for k in 0..2 {
        for i in 0..2 {
            *trace.coeff_mut(k, i, 0) = prev[k][i];
        }
        for a in 0..4 {
            *sol.coeff_mut(k, a, 0) = c[k][a];
        }
    }
    let flux = EntropyStableFlux::default_for(&Burgers);
    let visc = ViscosityConfig::new(1.0, 1.0, 0.5, 0.0, 0.0).unwrap();
    let basis = DGBasis::with_default_quadrature(1).unwrap();
    let problem = SlabProblem {
        sys: &Burgers,
        flux: &flux,
        viscosity: &visc,
        basis: &basis,
        slab: &slab,
        prev_top: &trace,
        far_field: Some((
            StateVector::from_element(1, ghosts.0),
            StateVector::from_element(1, ghosts.1),
        )),
        h: mesh.dx().hypot(slab.dt()),
    };
    let (r, _) = residual(&problem, &sol).unwrap();
    let oracle = hand_assembled(&c, &prev, ghosts, mesh.dx(), slab.dt());
    for (i, (a, b)) in r.iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() < 1e-12, "entry {i}: {a} vs {b}");
    }
}

#[test]
fn colored_jacobian_matches_directional_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for sys in systems() {
        let base = random_state(sys.as_ref(), &mut rng).unwrap();
        let u0 = move |x: f64| Ok(&base * (1.0 + 0.2 * (2.0 * std::f64::consts::PI * x).cos()));
        for boundary in [Boundary::Periodic, Boundary::FarField] {
            let f = fixture(
                build_system(sys.name(), &SystemParams::new()).unwrap(),
                8,
                boundary,
                &u0,
            );
            for _ in 0..3 {
                let sol = perturbed(&f, &mut rng, 1e-3);
                let dir: Vec<f64> = (0..sol.coefficients.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mismatch = directional_check(&f.problem(), &sol, &dir, None).unwrap();
                assert!(mismatch <= 1e-5, "{} {boundary:?}: {mismatch:e}", sys.name());
            }
        }
    }
}

#[test]
fn constant_data_converges_without_a_newton_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for sys in systems() {
        let u = random_state(sys.as_ref(), &mut rng).unwrap();
        let uc = u.clone();
        let f = fixture(
            build_system(sys.name(), &SystemParams::new()).unwrap(),
            6,
            Boundary::Periodic,
            &move |_| Ok(uc.clone()),
        );
        let guess = SlabSolution::constant_in_time(f.slab.clone(), &f.prev);
        let scale = solution_scale(f.sys.as_ref(), &f.basis, &f.prev).unwrap();
        let (sol, stats, sc, _) = solve_slab(&f.problem(), &SolverConfig::default(), guess.clone(), scale).unwrap();
        assert_eq!(stats.iterations, 1);
        assert_eq!(stats.linear_solves, 0);
        assert_eq!(sol.coefficients, guess.coefficients);
        assert!(sc.eps.iter().all(|&e| e == 0.0));
    }
}

#[test]
fn converged_slab_is_a_fixed_point_of_the_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for sys in systems() {
        let base = random_state(sys.as_ref(), &mut rng).unwrap();
        let u0 = move |x: f64| Ok(&base * (1.0 + 0.3 * (2.0 * std::f64::consts::PI * x).sin()));
        let f = fixture(
            build_system(sys.name(), &SystemParams::new()).unwrap(),
            10,
            Boundary::Periodic,
            &u0,
        );
        let cfg = SolverConfig::default();
        let guess = SlabSolution::constant_in_time(f.slab.clone(), &f.prev);
        let scale = solution_scale(f.sys.as_ref(), &f.basis, &f.prev).unwrap();
        let (sol, stats, _, _) = solve_slab(&f.problem(), &cfg, guess, scale).unwrap();
        let (r, _) = residual(&f.problem(), &sol).unwrap();
        let rmax = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(rmax <= cfg.newton_tol * scale, "{}: {rmax:e}", sys.name());
        assert!(stats.linear_solves >= 1);
    }
}
