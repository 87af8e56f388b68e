//! Run, convergence and check commands with their on-disk artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::checks::{check_fluxes, check_projection, check_systems, CheckReport};
use crate::config::{InitialCondition, RunConfig};
use crate::diagnostics::{
    conservation_ledger, entropy_ledger, l2_error, lemma_sums, observed_orders, spectral_monitor, weak_bv_report,
    BvReport, ConservationLedger, EntropyLedger, LemmaReport, SpectralReport,
};
use crate::entropy_flux::EntropyStableFlux;
use crate::error::{Result, ScdgError};
use crate::exact::SineWave;
use crate::mesh_basis::{Boundary, SlabSolution, SpaceTimeSlab, SpatialMesh};
use crate::shock_capture::ViscosityConfig;
use crate::slab_solver::{directional_check, residual, run_simulation, RunOutput, SlabProblem};
use crate::systems::{build_system, ConservationSystem, StateVector, SystemParams};

/// Process exit status of the commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Success = 0,
    AssertionFailure = 1,
    UsageError = 2,
    SolverFailure = 3,
}

impl Outcome {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Exit status for an error raised before or during a run.
    pub fn for_error(e: &ScdgError) -> Self {
        match e {
            ScdgError::NonConvergence { .. }
            | ScdgError::LineSearch { .. }
            | ScdgError::Singular(_)
            | ScdgError::Domain { .. } => Outcome::SolverFailure,
            _ => Outcome::UsageError,
        }
    }
}

/// Environment variable that relocates relative output directories.
pub const OUT_ROOT_ENV: &str = "SCDG_OUT_ROOT";

/// `--out` wins; otherwise `output.dir`, placed under `$SCDG_OUT_ROOT` when set.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    let dir = PathBuf::from(&cfg.output.dir);
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScdgError + '_ {
    move |source| ScdgError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ScdgError + '_ {
    move |e| ScdgError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ScdgError::Internal(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn names(sys: &dyn ConservationSystem) -> Vec<String> {
    sys.component_names().iter().map(|s| s.to_string()).collect()
}

/// Conserved values at `samples` equispaced interior points per cell.
fn snapshot_rows(
    sys: &dyn ConservationSystem,
    mesh: &SpatialMesh,
    trace: &crate::mesh_basis::SpatialTrace,
    samples: usize,
) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for cell in 0..mesh.n_cells {
        for s in 0..samples {
            let xi = -1.0 + (2 * s + 1) as f64 / samples as f64;
            let u = sys.conserved(&trace.evaluate(cell, xi)?)?;
            let mut row = vec![mesh.x_of(cell, xi).to_string(), cell.to_string()];
            row.extend(u.iter().map(|x| x.to_string()));
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Verdicts of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunVerdict {
    pub conservation: ConservationLedger,
    pub entropy: EntropyLedger,
    pub solved_slabs: usize,
    pub failure: Option<String>,
}

impl RunVerdict {
    pub fn from_output(out: &RunOutput) -> Self {
        Self {
            conservation: conservation_ledger(&out.diagnostics),
            entropy: entropy_ledger(&out.diagnostics),
            solved_slabs: out.slabs.len(),
            failure: out.failure.as_ref().map(|e| e.to_string()),
        }
    }

    pub fn outcome(&self) -> Outcome {
        if self.failure.is_some() {
            Outcome::SolverFailure
        } else if self.conservation.pass && self.entropy.pass {
            Outcome::Success
        } else {
            Outcome::AssertionFailure
        }
    }
}

/// Writes snapshots, diagnostics.csv, viscosity.csv and summary.json.
pub fn write_run_artifacts(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<RunVerdict> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let setup = cfg.setup()?;
    let sys = setup.sys.as_ref();
    let comp = names(sys);
    let mut header = vec!["x".to_string(), "cell".to_string()];
    header.extend(comp.iter().cloned());

    if cfg.output.snapshot_every > 0 {
        let samples = cfg.output.samples_per_cell.max(1);
        let path = dir.join("snapshot_00000.csv");
        write_csv(&path, &header, &snapshot_rows(sys, &setup.mesh, &out.initial, samples)?)?;
        for rec in &out.slabs {
            let n = rec.stats.slab + 1;
            if n % cfg.output.snapshot_every == 0 || n == out.slabs.len() {
                let path = dir.join(format!("snapshot_{n:05}.csv"));
                write_csv(
                    &path,
                    &header,
                    &snapshot_rows(sys, &setup.mesh, &rec.solution.top_trace(), samples)?,
                )?;
            }
        }
    }

    let d = &out.diagnostics;
    let mut dh: Vec<String> = vec!["slab".into(), "t".into()];
    dh.extend(comp.iter().map(|c| format!("mass_{c}")));
    dh.push("entropy".into());
    dh.extend(comp.iter().map(|c| format!("boundary_flux_{c}")));
    for k in [
        "boundary_entropy_flux",
        "temporal_jumps",
        "spatial_jumps",
        "dissipation",
        "res_sum",
        "bres_sum",
        "res_grad_sum",
        "bres_grad_sum",
        "eps_min",
        "eps_max",
        "newton_iterations",
        "linear_solves",
        "final_residual",
    ] {
        dh.push(k.into());
    }
    let mut rows = vec![];
    let mut initial = vec!["initial".to_string(), "0".to_string()];
    initial.extend(d.initial_mass.iter().map(|x| x.to_string()));
    initial.push(d.initial_entropy.to_string());
    initial.resize(dh.len(), String::new());
    rows.push(initial);
    for s in &d.slabs {
        let mut r = vec![s.slab.to_string(), s.t.to_string()];
        r.extend(s.mass.iter().map(|x| x.to_string()));
        r.push(s.entropy.to_string());
        r.extend(s.boundary_mass_flux.iter().map(|x| x.to_string()));
        for x in [
            s.boundary_entropy_flux,
            s.temporal_jumps,
            s.spatial_jumps,
            s.dissipation,
            s.res_sum,
            s.bres_sum,
            s.res_grad_sum,
            s.bres_grad_sum,
            s.eps_min,
            s.eps_max,
        ] {
            r.push(x.to_string());
        }
        r.push(s.newton_iterations.to_string());
        r.push(s.linear_solves.to_string());
        r.push(s.final_residual.to_string());
        rows.push(r);
    }
    write_csv(&dir.join("diagnostics.csv"), &dh, &rows)?;

    let mut rows = vec![];
    for rec in &out.slabs {
        for (cell, eps) in rec.stats.eps.iter().enumerate() {
            rows.push(vec![rec.stats.slab.to_string(), cell.to_string(), eps.to_string()]);
        }
    }
    write_csv(
        &dir.join("viscosity.csv"),
        &["slab".into(), "cell".into(), "eps".into()],
        &rows,
    )?;

    let verdict = RunVerdict::from_output(out);
    let summary = json!({
        "system": d.system,
        "cells": d.n_cells,
        "q": cfg.discretization.q,
        "h": out.h,
        "dt": out.dt,
        "slabs_requested": setup.n_slabs,
        "slabs_solved": out.slabs.len(),
        "tolerances": {
            "newton_tol": cfg.solver.newton_tol,
            "scale": d.scale,
            "conservation": verdict.conservation.tolerance,
            "entropy_per_slab": verdict.entropy.tolerance,
        },
        "iterations": out.slabs.iter().map(|s| json!({
            "slab": s.stats.slab,
            "residual_evaluations": s.stats.iterations,
            "linear_solves": s.stats.linear_solves,
            "final_residual": s.stats.final_residual,
        })).collect::<Vec<_>>(),
        "assertions": {
            "conservation": verdict.conservation,
            "entropy_monotone": verdict.entropy.monotone,
            "entropy_jensen": verdict.entropy.jensen,
            "entropy_worst_margin": verdict.entropy.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
        },
        "spectral": d.spectral,
        "warnings": d.warnings,
        "failure": verdict.failure,
        "outcome": verdict.outcome(),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(verdict)
}

/// `run`: solve, write artifacts (also after a solver failure) and grade.
pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> (Outcome, String) {
    let cfg = match RunConfig::load(config_path).and_then(|c| c.setup().map(|_| c)) {
        Ok(c) => c,
        Err(e) => return (Outcome::UsageError, e.to_string()),
    };
    let output = match run_simulation(&cfg) {
        Ok(o) => o,
        Err(e) => return (Outcome::for_error(&e), e.to_string()),
    };
    let dir = output_dir(&cfg, out);
    match write_run_artifacts(&cfg, &output, &dir) {
        Ok(v) => {
            let outcome = v.outcome();
            let msg = format!(
                "{} slabs solved; conservation {}; entropy {}{}; artifacts in {}",
                v.solved_slabs,
                if v.conservation.pass { "ok" } else { "FAILED" },
                if v.entropy.pass { "ok" } else { "FAILED" },
                v.failure
                    .as_ref()
                    .map(|f| format!("; solver failure: {f}"))
                    .unwrap_or_default(),
                dir.display()
            );
            (outcome, msg)
        }
        Err(e) => (Outcome::UsageError, e.to_string()),
    }
}

/// Refinement study results.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub cells: Vec<usize>,
    pub bv: BvReport,
    /// At the lemma thresholds and ½ above them.
    pub lemma_at_threshold: LemmaReport,
    pub lemma_above_threshold: LemmaReport,
    pub spectral: SpectralReport,
    pub l2_errors: Option<Vec<f64>>,
    pub orders: Option<Vec<f64>>,
    pub order_target: Option<f64>,
    pub pass: bool,
}

/// The exact solution, when the configured problem is a pre-shock periodic
/// Burgers sine wave.
pub fn sine_oracle(cfg: &RunConfig) -> Option<SineWave> {
    if cfg.system.name != "burgers" || cfg.mesh.boundary != Boundary::Periodic {
        return None;
    }
    match &cfg.initial {
        InitialCondition::Sine {
            base,
            amplitude,
            wavenumber,
            ..
        } => {
            let w = SineWave {
                base: base[0],
                amplitude: amplitude[0],
                wavenumber: *wavenumber,
                a: cfg.mesh.domain[0],
                length: cfg.mesh.domain[1] - cfg.mesh.domain[0],
            };
            (cfg.time.t_final < w.breaking_time()).then_some(w)
        }
        _ => None,
    }
}

/// Runs the problem at `levels` successive halvings of h, concurrently.
pub fn refinement_runs(cfg: &RunConfig, levels: usize) -> Result<Vec<RunOutput>> {
    let configs: Vec<RunConfig> = (0..levels as u32).map(|l| cfg.refined(l)).collect();
    let results: Vec<Result<RunOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_simulation(c))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(ScdgError::Internal("refinement worker panicked".into())))
            })
            .collect()
    });
    let mut runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(run) = runs.iter_mut().find(|r| r.failure.is_some()) {
        log::error!("refinement level N = {} failed", run.diagnostics.n_cells);
        return Err(run.failure.take().unwrap());
    }
    Ok(runs)
}

pub fn convergence_study(cfg: &RunConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(ScdgError::InsufficientLevels { needed: 2, got: levels });
    }
    let runs = refinement_runs(cfg, levels)?;
    let diags: Vec<_> = runs.iter().map(|r| r.diagnostics.clone()).collect();
    let bv = weak_bv_report(&diags)?;
    let t1 = (2.0 + cfg.viscosity.alpha1) / 2.0;
    let lemma_at_threshold = lemma_sums(&diags, t1, 1.0)?;
    let lemma_above_threshold = lemma_sums(&diags, t1 + 0.5, 1.5)?;
    let spectral = spectral_monitor(&diags);
    let (mut l2_errors, mut orders, mut order_target) = (None, None, None);
    if let Some(w) = sine_oracle(cfg) {
        let mut errs = Vec::new();
        for (level, run) in runs.iter().enumerate() {
            let c = cfg.refined(level as u32);
            let setup = c.setup()?;
            let t = run.dt * run.slabs.len() as f64;
            let exact = |x: f64| StateVector::from_element(1, w.solution(x, t).unwrap_or(f64::NAN));
            errs.push(l2_error(
                setup.sys.as_ref(),
                &setup.mesh,
                &run.final_trace(),
                &exact,
                cfg.discretization.q + 6,
            )?);
        }
        orders = Some(observed_orders(&errs));
        l2_errors = Some(errs);
        order_target = Some(cfg.discretization.q as f64 + 0.9);
    }
    let order_ok = match (&orders, order_target) {
        (Some(o), Some(t)) => o.iter().all(|x| *x >= t),
        _ => true,
    };
    let pass = bv.pass
        && lemma_at_threshold.res_pass
        && lemma_at_threshold.bres_pass
        && lemma_above_threshold.res_pass
        && lemma_above_threshold.bres_pass
        && order_ok;
    Ok(ConvergenceReport {
        cells: diags.iter().map(|d| d.n_cells).collect(),
        bv,
        lemma_at_threshold,
        lemma_above_threshold,
        spectral,
        l2_errors,
        orders,
        order_target,
        pass,
    })
}

pub fn write_convergence_artifacts(report: &ConvergenceReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let h = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let rows: Vec<Vec<String>> = report
        .bv
        .rows
        .iter()
        .map(|r| {
            vec![
                r.h.to_string(),
                r.n_cells.to_string(),
                r.temporal_jumps.to_string(),
                r.spatial_jumps.to_string(),
                r.res_grad.to_string(),
                r.bres_grad.to_string(),
                r.dissipation_total.to_string(),
            ]
        })
        .collect();
    write_csv(
        &dir.join("weak_bv.csv"),
        &h(&[
            "h",
            "cells",
            "temporal_jumps",
            "spatial_jumps",
            "res_grad",
            "bres_grad",
            "dissipation_total",
        ]),
        &rows,
    )?;
    let mut rows = vec![];
    for rep in [&report.lemma_at_threshold, &report.lemma_above_threshold] {
        for r in &rep.rows {
            rows.push(vec![
                r.h.to_string(),
                r.n_cells.to_string(),
                rep.gamma1.to_string(),
                r.res.to_string(),
                rep.gamma2.to_string(),
                r.bres.to_string(),
            ]);
        }
    }
    write_csv(
        &dir.join("lemma_sums.csv"),
        &h(&["h", "cells", "gamma1", "res_sum", "gamma2", "bres_sum"]),
        &rows,
    )?;
    if let Some(errs) = &report.l2_errors {
        let rows: Vec<Vec<String>> = errs
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let order = if k == 0 {
                    String::new()
                } else {
                    report.orders.as_ref().unwrap()[k - 1].to_string()
                };
                vec![
                    report.bv.rows[k].h.to_string(),
                    report.cells[k].to_string(),
                    e.to_string(),
                    order,
                ]
            })
            .collect();
        write_csv(&dir.join("orders.csv"), &h(&["h", "cells", "l2_error", "order"]), &rows)?;
    }
    let value = serde_json::to_value(report).map_err(|e| ScdgError::Internal(e.to_string()))?;
    write_json(&dir.join("convergence.json"), &value)
}

/// `convergence`: refinement study with BV, lemma and (if available) order tables.
pub fn cmd_convergence(config_path: &Path, levels: usize, out: Option<&Path>) -> (Outcome, String) {
    if levels < 2 {
        return (
            Outcome::UsageError,
            format!("--levels must be at least 2, got {levels}"),
        );
    }
    let cfg = match RunConfig::load(config_path).and_then(|c| c.setup().map(|_| c)) {
        Ok(c) => c,
        Err(e) => return (Outcome::UsageError, e.to_string()),
    };
    let report = match convergence_study(&cfg, levels) {
        Ok(r) => r,
        Err(e) => return (Outcome::SolverFailure, e.to_string()),
    };
    let dir = output_dir(&cfg, out);
    if let Err(e) = write_convergence_artifacts(&report, &dir) {
        return (Outcome::UsageError, e.to_string());
    }
    let mut msg = format!(
        "cells {:?}: weak BV {}; lemma sums {}",
        report.cells,
        if report.bv.pass { "bounded" } else { "NOT bounded" },
        if report.lemma_at_threshold.res_pass
            && report.lemma_at_threshold.bres_pass
            && report.lemma_above_threshold.res_pass
            && report.lemma_above_threshold.bres_pass
        {
            "ok"
        } else {
            "FAILED"
        }
    );
    if let Some(o) = &report.orders {
        msg.push_str(&format!("; observed L2 orders {o:.3?}"));
    }
    for w in &report.spectral.warnings {
        msg.push_str(&format!("\nwarning: {w}"));
    }
    (
        if report.pass {
            Outcome::Success
        } else {
            Outcome::AssertionFailure
        },
        msg,
    )
}

pub const SUITES: [&str; 4] = ["fluxes", "systems", "projection", "full"];

fn all_systems() -> Result<Vec<Box<dyn ConservationSystem>>> {
    ["burgers", "shallow_water", "euler"]
        .iter()
        .map(|n| build_system(n, &SystemParams::new()))
        .collect()
}

/// Jacobian and fixed-point checks of the slab solver on a small smooth problem.
pub fn check_solver(seed: u64) -> Result<CheckReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CheckReport::new("solver", "all");
    for sys in all_systems()? {
        let sys = sys.as_ref();
        let mesh = SpatialMesh::new(0.0, 1.0, 6, Boundary::Periodic)?;
        let basis = crate::mesh_basis::DGBasis::with_default_quadrature(1)?;
        let flux = EntropyStableFlux::default_for(sys);
        let visc = ViscosityConfig::default();
        let slab = SpaceTimeSlab::new(0, 0.0, 0.5 * mesh.dx(), mesh.clone())?;
        let base = crate::checks::random_state(sys, &mut rng)?;
        let u0 = |x: f64| Ok(&base * (1.0 + 0.1 * (2.0 * std::f64::consts::PI * x).sin()));
        let prev = crate::mesh_basis::l2_project_initial(sys, &u0, &mesh, 1)?;
        let problem = SlabProblem {
            sys,
            flux: &flux,
            viscosity: &visc,
            basis: &basis,
            slab: &slab,
            prev_top: &prev,
            far_field: None,
            h: mesh.dx().hypot(slab.dt()),
        };
        let mut sol = SlabSolution::constant_in_time(slab.clone(), &prev);
        let amax = sol.coefficients.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for c in sol.coefficients.iter_mut() {
            *c += 1e-3 * amax * rng.gen_range(-1.0..1.0);
        }
        let dir: Vec<f64> = (0..sol.coefficients.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        rep.record("jacobian_full", directional_check(&problem, &sol, &dir, None)?, 1e-5);
        let (_, sc) = residual(&problem, &sol)?;
        rep.record(
            "jacobian_lagged",
            directional_check(&problem, &sol, &dir, Some(&sc))?,
            1e-5,
        );

        let solver = crate::slab_solver::SolverConfig::default();
        let scale = crate::diagnostics::solution_scale(sys, &basis, &prev)?;
        let guess = SlabSolution::constant_in_time(slab.clone(), &prev);
        let (sol, _, _, _) = crate::slab_solver::solve_slab(&problem, &solver, guess, scale)?;
        let (r, _) = residual(&problem, &sol)?;
        let rinf = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        rep.record("fixed_point_residual", rinf / scale, solver.newton_tol);
        rep.count += 1;
    }
    Ok(rep)
}

/// Options of the `check` command.
#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub seed: u64,
    /// Restricts the per-system suites to one system.
    pub system: Option<String>,
    /// Overrides the flux diffusion floor without validation (test hook).
    pub diffusion_floor: Option<f64>,
}

/// Runs one named suite.
pub fn run_check_suite(suite: &str, opts: &CheckOptions) -> Result<Vec<CheckReport>> {
    let (seed, diffusion_floor) = (opts.seed, opts.diffusion_floor);
    let mut reports = Vec::new();
    let want = |s: &str| suite == s || suite == "full";
    if !SUITES.contains(&suite) {
        return Err(ScdgError::config(
            "suite",
            format!("unknown suite `{suite}` (expected one of {})", SUITES.join(", ")),
        ));
    }
    for sys in all_systems()? {
        let sys = sys.as_ref();
        if opts.system.as_deref().is_some_and(|n| n != sys.name()) {
            continue;
        }
        if want("systems") {
            reports.push(check_systems(sys, 1000, seed)?);
        }
        if want("fluxes") {
            let mut flux = EntropyStableFlux::default_for(sys);
            if let Some(f) = diffusion_floor {
                flux.diffusion_floor = f;
            }
            reports.push(check_fluxes(sys, &flux, 1000, seed)?);
        }
        if want("projection") {
            reports.push(check_projection(sys, 50, seed)?);
        }
    }
    if suite == "full" {
        reports.push(check_solver(seed)?);
    }
    Ok(reports)
}

pub fn cmd_check(suite: &str, opts: &CheckOptions) -> (Outcome, String) {
    match run_check_suite(suite, opts) {
        Ok(reports) => {
            let pass = reports.iter().all(|r| r.pass);
            let lines: Vec<String> = reports.iter().map(|r| r.summary()).collect();
            (
                if pass {
                    Outcome::Success
                } else {
                    Outcome::AssertionFailure
                },
                lines.join("\n"),
            )
        }
        Err(e @ ScdgError::Config { .. }) => (Outcome::UsageError, e.to_string()),
        Err(e) => (Outcome::SolverFailure, e.to_string()),
    }
}
