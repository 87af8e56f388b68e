//! Conservation and entropy ledgers, weak-BV and residual-sum refinement
//! reports, and spectral monitors.

use serde::Serialize;

use crate::entropy_flux::interface_flux;
use crate::error::{Result, ScdgError};
use crate::mesh_basis::{DGBasis, SlabSolution, SpatialMesh, SpatialTrace};
use crate::shock_capture::{sc_quadratic_form, CellResiduals, ShockCaptureState, ViscosityConfig};
use crate::slab_solver::{SlabEval, SlabProblem, SlabStats};
use crate::systems::{spectral_norm, symmetric_eigen_range, ConservationSystem, StateVector};

/// Conditioning of u_v above which a run is flagged as near-degenerate.
pub const CONDITION_WARNING: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlabDiagnostics {
    pub slab: usize,
    pub t: f64,
    /// ∫u(vʰ(·, t_{n+1,−})) per component.
    pub mass: Vec<f64>,
    /// ∫U(vʰ(·, t_{n+1,−})).
    pub entropy: f64,
    /// ∫_{I_n} (f̂_right − f̂_left) at the domain ends; zero when periodic.
    pub boundary_mass_flux: Vec<f64>,
    /// Numerical entropy flux through the domain ends.
    pub boundary_entropy_flux: f64,
    /// Σ_K ∫_K |v_{n,+} − v_{n,−}|².
    pub temporal_jumps: f64,
    /// Σ_K ∫_{∂K × I_n} |⟦v⟧|², interior facets seen from both sides.
    pub spatial_jumps: f64,
    /// Σ_K ε_K ‖∇vʰ‖²_ũ_v, equal to B_SC(vʰ, vʰ).
    pub dissipation: f64,
    pub res_sum: f64,
    pub bres_sum: f64,
    /// h^α₁ Σ_K ̄Res_K ‖∇vʰ‖_K.
    pub res_grad_sum: f64,
    /// h^α₂ Σ_K ̄BRes_K ‖∇vʰ‖_K.
    pub bres_grad_sum: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub newton_iterations: usize,
    pub linear_solves: usize,
    pub final_residual: f64,
}

/// Observed extremes over all sampled quadrature states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralBounds {
    pub uv_min: f64,
    pub uv_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub fu_max_singular: f64,
    pub v_max: f64,
    pub samples: usize,
}

impl Default for SpectralBounds {
    fn default() -> Self {
        Self {
            uv_min: f64::INFINITY,
            uv_max: 0.0,
            d_min: f64::INFINITY,
            d_max: 0.0,
            fu_max_singular: 0.0,
            v_max: 0.0,
            samples: 0,
        }
    }
}

impl SpectralBounds {
    pub fn condition(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.uv_max / self.uv_min
        }
    }

    fn sample_state(&mut self, sys: &dyn ConservationSystem, v: &StateVector) -> Result<()> {
        let (lo, hi) = symmetric_eigen_range(&sys.symmetrizer(v)?);
        self.uv_min = self.uv_min.min(lo);
        self.uv_max = self.uv_max.max(hi);
        let u = sys.conserved(v)?;
        self.fu_max_singular = self.fu_max_singular.max(spectral_norm(&sys.flux_jacobian(&u)?));
        self.v_max = self.v_max.max(v.amax());
        self.samples += 1;
        Ok(())
    }

    pub fn sample_trace(&mut self, sys: &dyn ConservationSystem, basis: &DGBasis, trace: &SpatialTrace) -> Result<()> {
        for cell in 0..trace.n_cells {
            for p in &basis.values {
                self.sample_state(sys, &trace.evaluate_with(cell, p))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub system: String,
    pub n_cells: usize,
    pub h: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub periodic: bool,
    pub newton_tol: f64,
    /// max(1, ‖u₀‖_∞).
    pub scale: f64,
    pub initial_mass: Vec<f64>,
    pub initial_entropy: f64,
    /// |Ω| U(mean of u over the projected initial data).
    pub jensen_bound: f64,
    pub slabs: Vec<SlabDiagnostics>,
    pub spectral: SpectralBounds,
    pub warnings: Vec<String>,
}

/// (∫u, ∫U) of a spatial trace under the scheme's quadrature rule.
pub fn trace_integrals(
    sys: &dyn ConservationSystem,
    basis: &DGBasis,
    mesh: &SpatialMesh,
    trace: &SpatialTrace,
) -> Result<(Vec<f64>, f64)> {
    let mut mass = vec![0.0; sys.m()];
    let mut entropy = 0.0;
    let half = 0.5 * mesh.dx();
    for cell in 0..mesh.n_cells {
        for (p, w) in basis.values.iter().zip(&basis.rule.weights) {
            let u = sys.conserved(&trace.evaluate_with(cell, p))?;
            for (acc, x) in mass.iter_mut().zip(u.iter()) {
                *acc += w * half * x;
            }
            entropy += w * half * sys.entropy(&u)?;
        }
    }
    Ok((mass, entropy))
}

/// max |u| over the quadrature nodes of a trace, bounded below by 1.
pub fn solution_scale(sys: &dyn ConservationSystem, basis: &DGBasis, trace: &SpatialTrace) -> Result<f64> {
    let mut scale: f64 = 1.0;
    for cell in 0..trace.n_cells {
        for p in &basis.values {
            scale = scale.max(sys.conserved(&trace.evaluate_with(cell, p))?.amax());
        }
    }
    Ok(scale)
}

impl RunDiagnostics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sys: &dyn ConservationSystem,
        basis: &DGBasis,
        mesh: &SpatialMesh,
        initial: &SpatialTrace,
        viscosity: &ViscosityConfig,
        h: f64,
        newton_tol: f64,
    ) -> Result<Self> {
        let (mass, entropy) = trace_integrals(sys, basis, mesh, initial)?;
        let length = mesh.length();
        let mean = StateVector::from_iterator(mass.len(), mass.iter().map(|x| x / length));
        let jensen_bound = length * sys.entropy(&mean)?;
        let mut spectral = SpectralBounds::default();
        spectral.sample_trace(sys, basis, initial)?;
        Ok(Self {
            system: sys.name().to_string(),
            n_cells: mesh.n_cells,
            h,
            alpha1: viscosity.alpha1,
            alpha2: viscosity.alpha2,
            periodic: mesh.is_periodic(),
            newton_tol,
            scale: solution_scale(sys, basis, initial)?,
            initial_mass: mass,
            initial_entropy: entropy,
            jensen_bound,
            slabs: Vec::new(),
            spectral,
            warnings: Vec::new(),
        })
    }

    /// Appends the entry of a converged slab and updates the monitors.
    pub fn record_slab(
        &mut self,
        problem: &SlabProblem<'_>,
        sol: &SlabSolution,
        sc: &ShockCaptureState,
        residuals: &[CellResiduals],
        stats: &SlabStats,
    ) -> Result<()> {
        let sys = problem.sys;
        let basis = problem.basis;
        let mesh = &problem.slab.mesh;
        let eval = SlabEval::new(problem, sol)?;
        let (dx, dt) = (mesh.dx(), problem.slab.dt());
        let w = &basis.rule.weights;

        let mut temporal_jumps = 0.0;
        for ce in &eval.cells {
            for (k, wk) in w.iter().enumerate() {
                temporal_jumps += wk * 0.5 * dx * (&ce.bottom_v[k] - &ce.prev_v[k]).norm_squared();
            }
            for v in &ce.v {
                self.spectral.sample_state(sys, v)?;
            }
        }
        let mut spatial_jumps = 0.0;
        let mut boundary_mass_flux = vec![0.0; sys.m()];
        let mut boundary_entropy_flux = 0.0;
        for face in &eval.faces {
            let sides = face.left.is_some() as usize + face.right.is_some() as usize;
            for (k, wk) in w.iter().enumerate() {
                let wt = wk * 0.5 * dt;
                let jump = &face.v_right[k] - &face.v_left[k];
                spatial_jumps += sides as f64 * wt * jump.norm_squared();
                let (lo, hi) = symmetric_eigen_range(&face.flux[k].diffusion);
                self.spectral.d_min = self.spectral.d_min.min(lo);
                self.spectral.d_max = self.spectral.d_max.max(hi);
                if sides == 1 {
                    // outward orientation: + at the right end, − at the left end
                    let sign = if face.right.is_none() { 1.0 } else { -1.0 };
                    let fl = &face.flux[k];
                    for (acc, x) in boundary_mass_flux.iter_mut().zip(fl.numerical.iter()) {
                        *acc += sign * wt * x;
                    }
                    let vsum = &face.v_left[k] + &face.v_right[k];
                    let psi = sys.potential(&face.v_left[k])? + sys.potential(&face.v_right[k])?;
                    boundary_entropy_flux += sign * wt * 0.5 * (fl.numerical.dot(&vsum) - psi);
                }
            }
        }

        let top = sol.top_trace();
        let (mass, entropy) = trace_integrals(sys, basis, mesh, &top)?;
        let h = problem.h;
        let res_sum = residuals.iter().map(|r| r.res_bar).sum();
        let bres_sum = residuals.iter().map(|r| r.bres_bar).sum();
        let res_grad_sum = h.powf(self.alpha1) * residuals.iter().map(|r| r.res_bar * r.grad_norm).sum::<f64>();
        let bres_grad_sum = h.powf(self.alpha2) * residuals.iter().map(|r| r.bres_bar * r.grad_norm).sum::<f64>();
        let entry = SlabDiagnostics {
            slab: problem.slab.index,
            t: problem.slab.t1,
            mass,
            entropy,
            boundary_mass_flux,
            boundary_entropy_flux,
            temporal_jumps,
            spatial_jumps,
            dissipation: sc_quadratic_form(basis, sol, sc),
            res_sum,
            bres_sum,
            res_grad_sum,
            bres_grad_sum,
            eps_min: sc.eps.iter().copied().fold(f64::INFINITY, f64::min),
            eps_max: sc.eps.iter().copied().fold(0.0, f64::max),
            newton_iterations: stats.iterations,
            linear_solves: stats.linear_solves,
            final_residual: stats.final_residual,
        };
        let finite = entry.mass.iter().all(|x| x.is_finite())
            && [
                entry.entropy,
                entry.temporal_jumps,
                entry.spatial_jumps,
                entry.dissipation,
                entry.res_sum,
                entry.bres_sum,
            ]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(ScdgError::Internal(format!(
                "slab {}: non-finite diagnostics",
                entry.slab
            )));
        }
        self.slabs.push(entry);
        if self.spectral.condition() > CONDITION_WARNING
            && !self.warnings.iter().any(|w| w.starts_with("ill-conditioned"))
        {
            let msg = format!(
                "ill-conditioned symmetrizer: cond(u_v) = {:.3e} near the degenerate set",
                self.spectral.condition()
            );
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
        Ok(())
    }

    pub fn final_mass(&self) -> &[f64] {
        self.slabs.last().map_or(&self.initial_mass, |s| &s.mass)
    }

    /// Sum of a per-slab quantity over the run.
    pub fn total(&self, f: impl Fn(&SlabDiagnostics) -> f64) -> f64 {
        self.slabs.iter().map(f).sum()
    }
}

/// Verdict of a conservation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationLedger {
    /// Change of ∫u per component, corrected by the boundary fluxes.
    pub drift: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn conservation_ledger(run: &RunDiagnostics) -> ConservationLedger {
    let m = run.initial_mass.len();
    let mut drift = vec![0.0; m];
    for c in 0..m {
        let outflow: f64 = run.slabs.iter().map(|s| s.boundary_mass_flux[c]).sum();
        drift[c] = run.final_mass()[c] - run.initial_mass[c] + outflow;
    }
    let tolerance = 1e-10 * run.scale;
    let pass = drift.iter().all(|d| d.abs() <= tolerance);
    ConservationLedger { drift, tolerance, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub slab: usize,
    pub entropy: f64,
    /// ∫U(t_{n+1}) − ∫U(t_n) + boundary entropy outflow.
    pub change: f64,
    /// 10·newton_tol − change; negative means violated.
    pub margin: f64,
    /// ∫U(t_{n+1}) − Jensen bound; only asserted on periodic meshes.
    pub jensen_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyLedger {
    pub rows: Vec<LedgerRow>,
    pub tolerance: f64,
    pub monotone: bool,
    pub jensen: bool,
    pub pass: bool,
}

pub fn entropy_ledger(run: &RunDiagnostics) -> EntropyLedger {
    let tolerance = 10.0 * run.newton_tol;
    let mut previous = run.initial_entropy;
    let mut rows = Vec::with_capacity(run.slabs.len());
    for s in &run.slabs {
        let change = s.entropy - previous + s.boundary_entropy_flux;
        rows.push(LedgerRow {
            slab: s.slab,
            entropy: s.entropy,
            change,
            margin: tolerance - change,
            jensen_margin: s.entropy - run.jensen_bound,
        });
        previous = s.entropy;
    }
    let monotone = rows.iter().all(|r| r.margin >= 0.0);
    let jensen_tol = tolerance * run.scale;
    let jensen = !run.periodic
        || (run.initial_entropy - run.jensen_bound >= -jensen_tol
            && rows.iter().all(|r| r.jensen_margin >= -jensen_tol));
    EntropyLedger {
        rows,
        tolerance,
        monotone,
        jensen,
        pass: monotone && jensen,
    }
}

/// `max(values) ≤ factor · values[0]`, with an absolute floor for the
/// all-zero case.
fn bounded_by_coarsest(values: &[f64], factor: f64) -> bool {
    let first = values[0].abs();
    values.iter().all(|v| v.abs() <= factor * first + 1e-14)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvRow {
    pub n_cells: usize,
    pub h: f64,
    pub temporal_jumps: f64,
    pub spatial_jumps: f64,
    pub res_grad: f64,
    pub bres_grad: f64,
    /// Jumps plus viscous dissipation.
    pub dissipation_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvReport {
    pub rows: Vec<BvRow>,
    /// Per sum: bounded within 10× of the coarsest level.
    pub bounded: [bool; 5],
    pub pass: bool,
}

pub fn weak_bv_report(levels: &[RunDiagnostics]) -> Result<BvReport> {
    if levels.len() < 2 {
        return Err(ScdgError::InsufficientLevels {
            needed: 2,
            got: levels.len(),
        });
    }
    let rows: Vec<BvRow> = levels
        .iter()
        .map(|r| {
            let tj = r.total(|s| s.temporal_jumps);
            let sj = r.total(|s| s.spatial_jumps);
            BvRow {
                n_cells: r.n_cells,
                h: r.h,
                temporal_jumps: tj,
                spatial_jumps: sj,
                res_grad: r.total(|s| s.res_grad_sum),
                bres_grad: r.total(|s| s.bres_grad_sum),
                dissipation_total: tj + sj + r.total(|s| s.dissipation),
            }
        })
        .collect();
    let columns: [Vec<f64>; 5] = [
        rows.iter().map(|r| r.temporal_jumps).collect(),
        rows.iter().map(|r| r.spatial_jumps).collect(),
        rows.iter().map(|r| r.res_grad).collect(),
        rows.iter().map(|r| r.bres_grad).collect(),
        rows.iter().map(|r| r.dissipation_total).collect(),
    ];
    let bounded = columns.map(|c| bounded_by_coarsest(&c, 10.0));
    Ok(BvReport {
        pass: bounded.iter().all(|&b| b),
        rows,
        bounded,
    })
}

/// True when every entry is strictly below its predecessor (or all vanish).
pub fn decreasing(values: &[f64]) -> bool {
    values.iter().all(|v| *v == 0.0) || values.windows(2).all(|w| w[1] < w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow {
    pub n_cells: usize,
    pub h: f64,
    /// h^γ₁ Σ_{n,K} ̄Res.
    pub res: f64,
    /// h^γ₂ Σ_{n,K} ̄BRes.
    pub bres: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub threshold1: f64,
    pub threshold2: f64,
    pub rows: Vec<LemmaRow>,
    pub res_pass: bool,
    pub bres_pass: bool,
}

/// Asserts boundedness at or below threshold + ½ and a ≥ 10% decrease per
/// halving once γ exceeds its threshold by ½ or more.
fn lemma_verdict(values: &[f64], gamma: f64, threshold: f64) -> bool {
    if gamma >= threshold + 0.5 - 1e-12 {
        values.iter().all(|v| *v == 0.0) || values.windows(2).all(|w| w[1] <= 0.9 * w[0])
    } else if gamma >= threshold - 1e-12 {
        bounded_by_coarsest(values, 10.0)
    } else {
        true
    }
}

pub fn lemma_sums(levels: &[RunDiagnostics], gamma1: f64, gamma2: f64) -> Result<LemmaReport> {
    if levels.len() < 2 {
        return Err(ScdgError::InsufficientLevels {
            needed: 2,
            got: levels.len(),
        });
    }
    let d = 2.0;
    let threshold1 = (d + levels[0].alpha1) / 2.0;
    let threshold2 = d / 2.0;
    let rows: Vec<LemmaRow> = levels
        .iter()
        .map(|r| LemmaRow {
            n_cells: r.n_cells,
            h: r.h,
            res: r.h.powf(gamma1) * r.total(|s| s.res_sum),
            bres: r.h.powf(gamma2) * r.total(|s| s.bres_sum),
        })
        .collect();
    let res: Vec<f64> = rows.iter().map(|r| r.res).collect();
    let bres: Vec<f64> = rows.iter().map(|r| r.bres).collect();
    Ok(LemmaReport {
        gamma1,
        gamma2,
        threshold1,
        threshold2,
        res_pass: lemma_verdict(&res, gamma1, threshold1),
        bres_pass: lemma_verdict(&bres, gamma2, threshold2),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub levels: Vec<(usize, SpectralBounds)>,
    pub warnings: Vec<String>,
}

/// Collects the observed bounds and warns (never fails) on > 2× growth
/// between levels or on an ill-conditioned symmetrizer.
pub fn spectral_monitor(levels: &[RunDiagnostics]) -> SpectralReport {
    let mut warnings = Vec::new();
    for r in levels {
        if r.spectral.condition() > CONDITION_WARNING {
            warnings.push(format!(
                "N = {}: cond(u_v) = {:.3e} exceeds {CONDITION_WARNING:.0e}",
                r.n_cells,
                r.spectral.condition()
            ));
        }
    }
    for pair in levels.windows(2) {
        let (a, b) = (&pair[0].spectral, &pair[1].spectral);
        let checks = [
            ("max eig u_v", a.uv_max, b.uv_max),
            ("1 / min eig u_v", 1.0 / a.uv_min, 1.0 / b.uv_min),
            ("max eig D", a.d_max, b.d_max),
            ("max singular value f_u", a.fu_max_singular, b.fu_max_singular),
            ("max |v|", a.v_max, b.v_max),
        ];
        for (name, x, y) in checks {
            if x.is_finite() && y.is_finite() && y > 2.0 * x && y > 1e-12 {
                warnings.push(format!(
                    "{name} grew from {x:.3e} (N = {}) to {y:.3e} (N = {})",
                    pair[0].n_cells, pair[1].n_cells
                ));
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    SpectralReport {
        levels: levels.iter().map(|r| (r.n_cells, r.spectral)).collect(),
        warnings,
    }
}

/// Spectral bounds over an explicit list of entropy states, interfaces
/// between consecutive states included.
pub fn spectral_bounds_of_states(
    sys: &dyn ConservationSystem,
    flux: &crate::entropy_flux::EntropyStableFlux,
    states: &[StateVector],
) -> Result<SpectralBounds> {
    let mut b = SpectralBounds::default();
    for v in states {
        b.sample_state(sys, v)?;
    }
    for pair in states.windows(2) {
        let f = interface_flux(sys, flux, &pair[0], &pair[1], 1.0)?;
        let (lo, hi) = symmetric_eigen_range(&f.diffusion);
        b.d_min = b.d_min.min(lo);
        b.d_max = b.d_max.max(hi);
    }
    Ok(b)
}

/// L₂ distance between u(vʰ) of a trace and an exact conserved state, with
/// `points` Gauss points per cell.
pub fn l2_error(
    sys: &dyn ConservationSystem,
    mesh: &SpatialMesh,
    trace: &SpatialTrace,
    exact: &dyn Fn(f64) -> StateVector,
    points: usize,
) -> Result<f64> {
    let rule = crate::mesh_basis::GaussRule::new(points);
    let mut acc = 0.0;
    for cell in 0..mesh.n_cells {
        for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = sys.conserved(&trace.evaluate(cell, *xi)?)?;
            acc += w * 0.5 * mesh.dx() * (u - exact(mesh.x_of(cell, *xi))).norm_squared();
        }
    }
    Ok(acc.sqrt())
}

/// Observed orders log₂(e_k / e_{k+1}) between consecutive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
