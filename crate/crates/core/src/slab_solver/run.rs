use crate::config::RunConfig;
use crate::diagnostics::RunDiagnostics;
use crate::error::{Result, ScdgError};
use crate::mesh_basis::{l2_project_initial, SlabSolution, SpaceTimeSlab, SpatialTrace};

use super::{solve_slab, SlabProblem, SlabStats};

#[derive(Debug, Clone)]
pub struct SlabRecord {
    pub solution: SlabSolution,
    pub stats: SlabStats,
}

/// Everything a run produced, including the slabs solved before a failure.
#[derive(Debug)]
pub struct RunOutput {
    pub initial: SpatialTrace,
    pub slabs: Vec<SlabRecord>,
    pub diagnostics: RunDiagnostics,
    pub h: f64,
    pub dt: f64,
    pub failure: Option<ScdgError>,
}

impl RunOutput {
    /// Top trace of the last solved slab, or the initial data.
    pub fn final_trace(&self) -> SpatialTrace {
        self.slabs
            .last()
            .map_or_else(|| self.initial.clone(), |s| s.solution.top_trace())
    }
}

/// Solves the configured problem slab by slab.
///
/// Configuration and initial-data errors are returned as `Err`; a solver
/// failure stops the slab loop and is reported in [`RunOutput::failure`]
/// alongside the completed slabs.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    let setup = cfg.setup()?;
    let sys = setup.sys.as_ref();
    let mesh = &setup.mesh;
    let q = setup.basis.q;
    let u0 = |x: f64| cfg.initial.conserved_at(sys, mesh, x);
    let initial = l2_project_initial(sys, &u0, mesh, q)?;
    let far_field = if mesh.is_periodic() {
        None
    } else {
        Some((
            sys.entropy_variables(&u0(mesh.a)?)?,
            sys.entropy_variables(&u0(mesh.b)?)?,
        ))
    };
    let h = mesh.dx().hypot(setup.dt);
    let mut diagnostics = RunDiagnostics::new(
        sys,
        &setup.basis,
        mesh,
        &initial,
        &cfg.viscosity,
        h,
        cfg.solver.newton_tol,
    )?;
    let scale = diagnostics.scale;

    let mut slabs = Vec::with_capacity(setup.n_slabs);
    let mut prev = initial.clone();
    let mut failure = None;
    for n in 0..setup.n_slabs {
        let slab = SpaceTimeSlab::new(n, n as f64 * setup.dt, (n + 1) as f64 * setup.dt, mesh.clone())?;
        if n == 0 {
            slab.check_shape(cfg.mesh.sigma)?;
        }
        let problem = SlabProblem {
            sys,
            flux: &setup.flux,
            viscosity: &cfg.viscosity,
            basis: &setup.basis,
            slab: &slab,
            prev_top: &prev,
            far_field: far_field.clone(),
            h,
        };
        let guess = SlabSolution::constant_in_time(slab.clone(), &prev);
        let outcome = solve_slab(&problem, &cfg.solver, guess, scale).and_then(|(sol, stats, sc, res)| {
            diagnostics.record_slab(&problem, &sol, &sc, &res, &stats)?;
            Ok((sol, stats))
        });
        match outcome {
            Ok((solution, stats)) => {
                log::debug!(
                    "slab {n}: {} residual evaluations, residual {:.3e}",
                    stats.iterations,
                    stats.final_residual
                );
                prev = solution.top_trace();
                slabs.push(SlabRecord { solution, stats });
            }
            Err(e) => {
                log::error!("slab {n}: {e}");
                failure = Some(e);
                break;
            }
        }
    }
    Ok(RunOutput {
        initial,
        slabs,
        diagnostics,
        h,
        dt: setup.dt,
        failure,
    })
}
