//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::path::Path;
use std::time::Instant;

use scdg::checks::{check_fluxes, check_projection, random_state, tadmor_tolerance};
use scdg::diagnostics::{conservation_ledger, entropy_ledger, observed_orders};
use scdg::harness::{check_solver, convergence_study, ConvergenceReport};
use scdg::mesh_basis::{h1_projection_report, DGBasis, SlabSolution, SpaceTimeSlab, SpatialMesh, WeightState};
use scdg::slab_solver::{residual, SlabProblem};
use scdg::systems::{build_system, StateVector, SystemParams};
use scdg::{run_simulation, RunConfig, RunOutput};

type Verdict = scdg::Result<(bool, String)>;

const HALF_C1: &str = "[viscosity]\nalpha1 = 1.0\nalpha2 = 1.0\ntheta = 0.5\nc1_sc = 0.5\nc2_sc = 1.0";

fn config(system: &str, cells: usize, aspect: f64, t_final: f64, initial: &str, extra: &str) -> RunConfig {
    let text = format!(
        "[system]\nname = \"{system}\"\n\n[mesh]\ncells = {cells}\ndomain = [0.0, 1.0]\naspect = {aspect:?}\n\n\
         [time]\nt_final = {t_final:?}\n\n[initial]\n{initial}\n{extra}\n"
    );
    RunConfig::from_toml_str(&text).expect("valid config")
}

fn repo_config(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).expect("config loads")
}

const RIEMANN_DATA: [(&str, &str, &str); 3] = [
    (
        "burgers",
        "kind = \"riemann\"\nleft = [1.0]\nright = [0.0]\nposition = 0.5",
        HALF_C1,
    ),
    (
        "shallow_water",
        "kind = \"riemann\"\nprimitive = true\nleft = [2.0, 0.0]\nright = [1.0, 0.0]\nposition = 0.5",
        "",
    ),
    (
        "euler",
        "kind = \"riemann\"\nprimitive = true\nleft = [1.0, 0.0, 1.0]\nright = [0.125, 0.0, 0.1]\nposition = 0.5",
        "",
    ),
];

fn solved(cfg: &RunConfig) -> scdg::Result<RunOutput> {
    let mut out = run_simulation(cfg)?;
    match out.failure.take() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Periodic N = 64, q = 1, 20 slabs per system.
fn conservation_runs() -> scdg::Result<Vec<(RunConfig, RunOutput)>> {
    RIEMANN_DATA
        .iter()
        .map(|(system, initial, extra)| {
            let mut cfg = config(system, 64, 0.5, 20.0 * 0.5 / 64.0, initial, extra);
            cfg.time.slabs = Some(20);
            let out = solved(&cfg)?;
            Ok((cfg, out))
        })
        .collect()
}

fn conservation(runs: &[(RunConfig, RunOutput)]) -> Verdict {
    let mut ok = true;
    let mut parts = vec![];
    for (cfg, out) in runs {
        let l = conservation_ledger(&out.diagnostics);
        let worst = l.drift.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        ok &= l.pass && out.slabs.len() == 20;
        parts.push(format!(
            "{} drift {worst:.1e} (tol {:.1e})",
            cfg.system.name, l.tolerance
        ));
    }
    Ok((ok, parts.join(", ")))
}

fn entropy() -> Verdict {
    let runs = [
        config("burgers", 64, 0.5, 0.3, RIEMANN_DATA[0].1, HALF_C1),
        config("shallow_water", 64, 0.5, 0.1, RIEMANN_DATA[1].1, ""),
        repo_config("euler_sod.toml"),
    ];
    let mut ok = true;
    let mut parts = vec![];
    for cfg in &runs {
        let out = solved(cfg)?;
        let l = entropy_ledger(&out.diagnostics);
        let worst = l.rows.iter().map(|r| r.change).fold(f64::NEG_INFINITY, f64::max);
        let jensen = l.rows.iter().map(|r| r.jensen_margin).fold(f64::INFINITY, f64::min);
        ok &= l.pass;
        parts.push(format!(
            "{} {} slabs, max change {worst:.1e}, min Jensen margin {jensen:.1e}",
            cfg.system.name,
            l.rows.len()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn flux_identity() -> Verdict {
    let mut ok = true;
    let mut parts = vec![];
    for (i, name) in ["burgers", "shallow_water", "euler"].iter().enumerate() {
        let sys = build_system(name, &SystemParams::new())?;
        let flux = scdg::entropy_flux::EntropyStableFlux::default_for(sys.as_ref());
        let rep = check_fluxes(sys.as_ref(), &flux, 1000, 100 + i as u64)?;
        let worst = rep.worst["tadmor_defect"];
        let tol = tadmor_tolerance(sys.as_ref());
        ok &= rep.count == 1000 && worst <= tol;
        parts.push(format!("{name} {worst:.1e} (tol {tol:.0e})"));
    }
    Ok((ok, parts.join(", ")))
}

fn weak_bv(rep: &ConvergenceReport) -> Verdict {
    let rows: Vec<String> = rep
        .bv
        .rows
        .iter()
        .map(|r| {
            format!(
                "N={} [{:.3e} {:.3e} {:.3e} {:.3e}]",
                r.n_cells, r.temporal_jumps, r.spatial_jumps, r.res_grad, r.bres_grad
            )
        })
        .collect();
    Ok((rep.bv.pass, rows.join(", ")))
}

fn lemma(studies: &[(&str, &ConvergenceReport)]) -> Verdict {
    let mut ok = true;
    let mut parts = vec![];
    for (name, rep) in studies {
        for l in [&rep.lemma_at_threshold, &rep.lemma_above_threshold] {
            ok &= l.res_pass && l.bres_pass;
            let res: Vec<String> = l.rows.iter().map(|r| format!("{:.3e}", r.res)).collect();
            let bres: Vec<String> = l.rows.iter().map(|r| format!("{:.3e}", r.bres)).collect();
            parts.push(format!(
                "{name} g1={} [{}] g2={} [{}]",
                l.gamma1,
                res.join(" "),
                l.gamma2,
                bres.join(" ")
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn smooth_order(rep: &ConvergenceReport) -> Verdict {
    let orders = rep.orders.clone().unwrap_or_default();
    let ok = orders.len() == 2 && orders.iter().all(|o| *o >= 1.9);
    let errors: Vec<String> = rep.l2_errors.iter().flatten().map(|e| format!("{e:.3e}")).collect();
    Ok((ok, format!("errors [{}], orders {orders:.3?}", errors.join(" "))))
}

fn projection() -> Verdict {
    let mut ok = true;
    let mut parts = vec![];
    for (i, name) in ["burgers", "shallow_water", "euler"].iter().enumerate() {
        let sys = build_system(name, &SystemParams::new())?;
        let sys = sys.as_ref();
        let m = sys.m();
        let rep = check_projection(sys, 50, 200 + i as u64)?;
        ok &= rep.pass;

        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(300 + i as u64);
        let v = sys.entropy_variables(&random_state(sys, &mut rng)?)?;
        let k = 2.0 * std::f64::consts::PI;
        let phi = |x: f64, t: f64| StateVector::from_fn(m, |c, _| (k * x + (c + 1) as f64 * t).sin());
        let grad = |x: f64, t: f64| {
            (
                StateVector::from_fn(m, |c, _| k * (k * x + (c + 1) as f64 * t).cos()),
                StateVector::from_fn(m, |c, _| (c + 1) as f64 * (k * x + (c + 1) as f64 * t).cos()),
            )
        };
        let basis = DGBasis::with_default_quadrature(1)?;
        let mut errors = vec![];
        let mut stable = true;
        for cells in [8, 16, 32] {
            let mesh = SpatialMesh::new(0.0, 1.0, cells, scdg::mesh_basis::Boundary::Periodic)?;
            let dt = 0.5 * mesh.dx();
            let slab = SpaceTimeSlab::new(0, 0.0, dt, mesh)?;
            let report = h1_projection_report(&slab, &basis, sys, &phi, &grad, WeightState::Uniform(&v))?;
            stable &= report
                .iter()
                .all(|p| p.weighted_grad_projected <= p.weighted_grad_exact * (1.0 + 1e-10));
            let sq: f64 = report.iter().map(|p| p.l2_error * p.l2_error).sum();
            errors.push((sq / dt).sqrt());
        }
        let orders = observed_orders(&errors);
        ok &= stable && orders.iter().all(|o| *o >= 1.9);
        parts.push(format!(
            "{name} stable {stable}, random cases {} violations, orders {orders:.3?}",
            rep.violations
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn degenerate() -> Verdict {
    let constants = [
        ("burgers", "kind = \"constant\"\nstate = [0.7]"),
        (
            "shallow_water",
            "kind = \"constant\"\nprimitive = true\nstate = [1.3, -0.4]",
        ),
        (
            "euler",
            "kind = \"constant\"\nprimitive = true\nstate = [0.9, 0.3, 1.7]",
        ),
    ];
    let mut ok = true;
    let mut parts = vec![];
    for (system, initial) in constants {
        let mut cfg = config(system, 32, 0.5, 50.0 * 0.5 / 32.0, initial, "");
        cfg.time.slabs = Some(50);
        let out = solved(&cfg)?;
        let reference = SlabSolution::constant_in_time(out.slabs[0].solution.slab.clone(), &out.initial);
        let size = reference.coefficients.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let mut drift: f64 = 0.0;
        for s in &out.slabs {
            for (a, b) in s.solution.coefficients.iter().zip(&reference.coefficients) {
                drift = drift.max((a - b).abs());
            }
        }
        let eps = out.diagnostics.slabs.iter().map(|s| s.eps_max).fold(0.0, f64::max);
        ok &= out.slabs.len() == 50 && drift <= 1e-13 * size && eps == 0.0;
        parts.push(format!("{system} drift {drift:.1e}, max eps {eps:e}"));
    }
    Ok((ok, parts.join(", ")))
}

fn solver_contract(runs: &[(RunConfig, RunOutput)]) -> Verdict {
    let mut ok = true;
    let mut parts = vec![];
    for (cfg, out) in runs {
        let setup = cfg.setup()?;
        let scale = out.diagnostics.scale;
        let mut prev = out.initial.clone();
        let mut worst: f64 = 0.0;
        for rec in &out.slabs {
            let problem = SlabProblem {
                sys: setup.sys.as_ref(),
                flux: &setup.flux,
                viscosity: &cfg.viscosity,
                basis: &setup.basis,
                slab: &rec.solution.slab,
                prev_top: &prev,
                far_field: None,
                h: out.h,
            };
            let (r, _) = residual(&problem, &rec.solution)?;
            worst = worst.max(r.iter().fold(0.0f64, |a, x| a.max(x.abs())) / scale);
            prev = rec.solution.top_trace();
        }
        ok &= worst <= 1e-10;
        parts.push(format!("{} max |R|/scale {worst:.1e}", cfg.system.name));
    }
    let rep = check_solver(17)?;
    ok &= rep.pass;
    parts.push(format!(
        "jacobian full {:.1e}, lagged {:.1e}",
        rep.worst["jacobian_full"], rep.worst["jacobian_lagged"]
    ));
    Ok((ok, parts.join(", ")))
}

fn lost(e: &scdg::ScdgError) -> scdg::ScdgError {
    scdg::ScdgError::Internal(e.to_string())
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, verdict: Verdict, started: Instant| {
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok((true, detail)) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Ok((false, detail)) => {
                failures += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
            Err(e) => {
                failures += 1;
                println!("FAIL {name} ({secs:.1}s): error: {e}");
            }
        }
    };

    let t = Instant::now();
    let runs = conservation_runs();
    match &runs {
        Ok(r) => report("conservation", conservation(r), t),
        Err(e) => report("conservation", Err(lost(e)), t),
    }
    let t = Instant::now();
    report("entropy_stability", entropy(), t);
    let t = Instant::now();
    report("flux_identity", flux_identity(), t);
    let t = Instant::now();
    let riemann = convergence_study(&repo_config("burgers_riemann.toml"), 3);
    report("weak_bv", riemann.as_ref().map_err(lost).and_then(weak_bv), t);
    let t = Instant::now();
    let sine = convergence_study(&repo_config("burgers_sine.toml"), 3);
    report("smooth_order", sine.as_ref().map_err(lost).and_then(smooth_order), t);
    let t = Instant::now();
    let lemma_verdict = match (&sine, &riemann) {
        (Ok(s), Ok(r)) => lemma(&[("burgers_sine", s), ("burgers_riemann", r)]),
        (Err(e), _) | (_, Err(e)) => Err(lost(e)),
    };
    report("lemma_sums", lemma_verdict, t);
    let t = Instant::now();
    report("projection", projection(), t);
    let t = Instant::now();
    report("degenerate_constant", degenerate(), t);
    let t = Instant::now();
    match &runs {
        Ok(r) => report("solver_contract", solver_contract(r), t),
        Err(e) => report("solver_contract", Err(lost(e)), t),
    }

    println!("acceptance: {} criteria, {failures} failed", 9);
    if failures > 0 {
        std::process::exit(1);
    }
}
