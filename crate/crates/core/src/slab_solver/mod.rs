//! Per-slab assembly of B = B_DG + B_SC and the implicit Newton solve.

mod assembly;
mod jacobian;
mod linear;
mod run;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdgError};
use crate::mesh_basis::SlabSolution;
use crate::shock_capture::{shock_capture_state, CellResiduals, ShockCaptureState};

pub use assembly::{assemble, assemble_dg_form, residual, CellEval, Face, FaceEval, SlabEval, SlabProblem};
pub use jacobian::{cell_colors, directional_check, fd_jacobian, residual_with};
pub use linear::{solve_dense, BlockJacobian, LinearSolverKind};
pub use run::{run_simulation, RunOutput, SlabRecord};

/// How the viscosity enters the Newton linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// ε and ũ_v frozen at the current iterate (Picard in the viscosity).
    Lagged,
    /// Difference the full residual, viscosity included.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub max_iters: usize,
    pub backtrack: f64,
    pub max_halvings: usize,
    pub linear_solver: LinearSolverKind,
    pub jacobian: JacobianMode,
    /// On a stall, re-solve by continuation in the viscosity strength.
    pub continuation: bool,
    /// Consecutive line-search failures treated as a stall.
    pub stall_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iters: 50,
            backtrack: 0.5,
            max_halvings: 20,
            linear_solver: LinearSolverKind::DirectBanded,
            jacobian: JacobianMode::Full,
            continuation: true,
            stall_limit: 5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(ScdgError::config("solver.newton_tol", "must be positive"));
        }
        if self.max_iters < 1 {
            return Err(ScdgError::config("solver.max_iters", "must be at least 1"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(ScdgError::config("solver.backtrack", "must lie in (0, 1)"));
        }
        if self.stall_limit < 1 {
            return Err(ScdgError::config("solver.stall_limit", "must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one slab solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlabStats {
    pub slab: usize,
    /// Residual evaluations along the Newton path, the initial one included.
    pub iterations: usize,
    pub linear_solves: usize,
    pub halvings: usize,
    /// Viscosity-strength continuation stages used (0 when the direct solve converged).
    pub continuation_stages: usize,
    pub final_residual: f64,
    pub scale: f64,
    pub eps: Vec<f64>,
}

fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn two_norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves B(vʰ, ·) = 0 on one slab starting from `guess`.
///
/// Converged when ‖R‖_∞ ≤ newton_tol · scale. When Newton stalls and
/// continuation is enabled, the strengths C₁, C₂ are ramped from half their
/// value back up to the configured one, each stage seeding the next.
pub fn solve_slab(
    problem: &SlabProblem<'_>,
    cfg: &SolverConfig,
    guess: SlabSolution,
    scale: f64,
) -> Result<(SlabSolution, SlabStats, ShockCaptureState, Vec<CellResiduals>)> {
    cfg.validate()?;
    let slab = problem.slab.index;
    let mut stats = SlabStats {
        slab,
        iterations: 0,
        linear_solves: 0,
        halvings: 0,
        continuation_stages: 0,
        final_residual: f64::INFINITY,
        scale,
        eps: Vec::new(),
    };
    let sol = match newton(problem, cfg, guess.clone(), scale, &mut stats) {
        Ok(sol) => sol,
        Err(e @ (ScdgError::NonConvergence { .. } | ScdgError::LineSearch { .. })) if cfg.continuation => {
            log::info!("slab {slab}: {e}; retrying by viscosity continuation");
            continuation(problem, cfg, guess, scale, &mut stats).map_err(|_| e)?
        }
        Err(e) => return Err(e),
    };
    let eval = SlabEval::new(problem, &sol)?;
    let (sc, cell_res) = shock_capture_state(problem, &eval, &sol)?;
    stats.eps = sc.eps.clone();
    Ok((sol, stats, sc, cell_res))
}

fn continuation(
    problem: &SlabProblem<'_>,
    cfg: &SolverConfig,
    guess: SlabSolution,
    scale: f64,
    stats: &mut SlabStats,
) -> Result<SlabSolution> {
    let mut sol = guess;
    let (mut s, mut step) = (0.5, 0.5);
    let mut first = true;
    loop {
        let mut visc = *problem.viscosity;
        visc.c1_sc *= s;
        visc.c2_sc *= s;
        let staged = SlabProblem {
            viscosity: &visc,
            far_field: problem.far_field.clone(),
            ..*problem
        };
        stats.continuation_stages += 1;
        match newton(&staged, cfg, sol.clone(), scale, stats) {
            Ok(next) => {
                if s >= 1.0 {
                    return Ok(next);
                }
                sol = next;
                first = false;
                s = (s + step).min(1.0);
            }
            Err(e) => {
                if first {
                    s *= 0.5;
                    if s < 1.0 / 64.0 {
                        return Err(e);
                    }
                    continue;
                }
                s -= step;
                step *= 0.5;
                if step < 1.0 / 64.0 {
                    return Err(e);
                }
                s += step;
            }
        }
    }
}

fn newton(
    problem: &SlabProblem<'_>,
    cfg: &SolverConfig,
    guess: SlabSolution,
    scale: f64,
    stats: &mut SlabStats,
) -> Result<SlabSolution> {
    let slab = problem.slab.index;
    let mut sol = guess;
    let (mut r, mut sc) = residual(problem, &sol)?;
    stats.iterations += 1;
    stats.final_residual = inf_norm(&r);
    let target = cfg.newton_tol * scale;
    let (mut solves, mut failed_searches) = (0, 0);
    while inf_norm(&r) > target {
        if solves >= cfg.max_iters || failed_searches >= cfg.stall_limit {
            log::debug!("slab {slab}: Newton stalled at residual {:.3e}", inf_norm(&r));
            return Err(ScdgError::NonConvergence {
                slab,
                iterations: stats.iterations,
                residual: inf_norm(&r),
            });
        }
        let frozen = match cfg.jacobian {
            JacobianMode::Lagged => Some(&sc),
            JacobianMode::Full => None,
        };
        let (jac, _) = fd_jacobian(problem, &sol, &r, frozen)?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = jac.solve(&rhs, cfg.linear_solver)?;
        stats.linear_solves += 1;
        solves += 1;

        let r0 = two_norm(&r);
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut best: Option<(f64, SlabSolution, Vec<f64>, ShockCaptureState)> = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = sol.clone();
            for (c, d) in trial.coefficients.iter_mut().zip(&delta) {
                *c += alpha * d;
            }
            if let Ok((rt, sct)) = residual(problem, &trial) {
                stats.iterations += 1;
                let nt = two_norm(&rt);
                if nt.is_finite() {
                    if nt <= (1.0 - 1e-4 * alpha) * r0 {
                        accepted = Some((trial, rt, sct));
                        break;
                    }
                    if best.as_ref().is_none_or(|b| nt < b.0) {
                        best = Some((nt, trial, rt, sct));
                    }
                }
            }
            alpha *= cfg.backtrack;
            stats.halvings += 1;
        }
        let (next, rn, scn) = match (accepted, best) {
            (Some(a), _) => {
                failed_searches = 0;
                a
            }
            (None, Some((_, t, rt, sct))) => {
                failed_searches += 1;
                (t, rt, sct)
            }
            (None, None) => {
                return Err(ScdgError::LineSearch {
                    slab,
                    reason: format!(
                        "every trial step left the admissible set (residual {:.3e})",
                        inf_norm(&r)
                    ),
                })
            }
        };
        sol = next;
        r = rn;
        sc = scn;
        stats.final_residual = inf_norm(&r);
    }
    Ok(sol)
}
