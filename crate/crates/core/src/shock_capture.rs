//! Residual-driven artificial viscosity.
//!
//! The per-prism viscosity is
//! ε = (h^α₁ C₁ ̄Res + h^α₂ C₂ ̄BRes) / (‖∇vʰ‖_ũ_v + h^θ),
//! where ̄Res is the inverse-symmetrizer weighted PDE residual on the prism and
//! ̄BRes collects temporal jumps, flux defects and diffusion jumps on its facets.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdgError};
use crate::mesh_basis::{DGBasis, SlabSolution};
use crate::slab_solver::{SlabEval, SlabProblem};
use crate::systems::{ConservationSystem, Matrix, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub theta: f64,
    pub c1_sc: f64,
    pub c2_sc: f64,
}

impl Default for ViscosityConfig {
    /// α₁ = α₂ = 1 with θ at its lower bound for d' = 2.
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 1.0,
            theta: 0.5,
            c1_sc: 1.0,
            c2_sc: 1.0,
        }
    }
}

impl ViscosityConfig {
    pub fn new(alpha1: f64, alpha2: f64, theta: f64, c1_sc: f64, c2_sc: f64) -> Result<Self> {
        let cfg = Self {
            alpha1,
            alpha2,
            theta,
            c1_sc,
            c2_sc,
        };
        cfg.validate(2)?;
        Ok(cfg)
    }

    /// Smallest admissible θ = max{(d' − α₁)/2, d'/2 − α₂}.
    pub fn theta_lower_bound(&self, space_time_dim: usize) -> f64 {
        let d = space_time_dim as f64;
        ((d - self.alpha1) / 2.0).max(d / 2.0 - self.alpha2)
    }

    /// Checks α₁ ∈ (0, 2), α₂ > 0, θ ≥ max{(d' − α₁)/2, d'/2 − α₂}, C ≥ 0.
    pub fn validate(&self, space_time_dim: usize) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha1 < 2.0) {
            return Err(ScdgError::config(
                "viscosity.alpha1",
                format!("alpha1 = {} violates the constraint alpha1 in (0, 2)", self.alpha1),
            ));
        }
        if !(self.alpha2 > 0.0) {
            return Err(ScdgError::config(
                "viscosity.alpha2",
                format!("alpha2 = {} violates the constraint alpha2 > 0", self.alpha2),
            ));
        }
        let bound = self.theta_lower_bound(space_time_dim);
        if !(self.theta >= bound) {
            return Err(ScdgError::config(
                "viscosity.theta",
                format!(
                    "theta = {} violates theta >= max((d' - alpha1)/2, d'/2 - alpha2) = {bound}",
                    self.theta
                ),
            ));
        }
        if !(self.c1_sc >= 0.0) || !(self.c2_sc >= 0.0) {
            return Err(ScdgError::config(
                "viscosity.c1_sc/c2_sc",
                "strength constants must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Residual quantities feeding the viscosity of one prism.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CellResiduals {
    pub res_bar: f64,
    pub bres_bar: f64,
    /// sqrt(∫∫ ⟨v_t, ũ_v v_t⟩ + ⟨v_x, ũ_v v_x⟩)
    pub grad_norm: f64,
}

pub fn viscosity_coefficient(cfg: &ViscosityConfig, h: f64, res: &CellResiduals) -> f64 {
    let numerator = h.powf(cfg.alpha1) * cfg.c1_sc * res.res_bar + h.powf(cfg.alpha2) * cfg.c2_sc * res.bres_bar;
    if numerator == 0.0 {
        return 0.0;
    }
    numerator / (res.grad_norm + h.powf(cfg.theta))
}

/// Viscosity and frozen symmetrizer ũ_v = u_v(ṽ_{n,K}) per prism.
#[derive(Debug, Clone)]
pub struct ShockCaptureState {
    pub eps: Vec<f64>,
    pub weight: Vec<Matrix>,
}

impl ShockCaptureState {
    pub fn zero(sys: &dyn ConservationSystem, n_cells: usize) -> Self {
        Self {
            eps: vec![0.0; n_cells],
            weight: vec![Matrix::identity(sys.m(), sys.m()); n_cells],
        }
    }
}

/// ⟨r, A⁻¹ r⟩ for SPD A.
fn inverse_weighted(a: &Matrix, r: &StateVector) -> Result<f64> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| ScdgError::Singular("symmetrizer is not positive definite".into()))?;
    Ok(r.dot(&chol.solve(r)))
}

/// ̄Res on one prism by quadrature, with Res = u_v v_t + f_u u_v v_x at each node.
pub fn interior_residual_norm(
    sys: &dyn ConservationSystem,
    basis: &DGBasis,
    sol: &SlabSolution,
    cell: usize,
) -> Result<f64> {
    if cell >= sol.n_cells() {
        return Err(ScdgError::Index(format!("cell {cell} of {}", sol.n_cells())));
    }
    let nq = basis.n_quad();
    let jac = 0.25 * sol.slab.prism_measure();
    let (sx, st) = (2.0 / sol.slab.mesh.dx(), 2.0 / sol.slab.dt());
    let mut acc = 0.0;
    for kt in 0..nq {
        for kx in 0..nq {
            let (px, dpx) = (&basis.values[kx], &basis.derivatives[kx]);
            let (pt, dpt) = (&basis.values[kt], &basis.derivatives[kt]);
            let v = sol.evaluate_tabulated(cell, px, pt);
            let vx = sol.evaluate_tabulated(cell, dpx, pt) * sx;
            let vt = sol.evaluate_tabulated(cell, px, dpt) * st;
            let w = basis.rule.weights[kx] * basis.rule.weights[kt] * jac;
            acc += w * pointwise_residual(sys, &v, &vx, &vt)?;
        }
    }
    Ok(acc.sqrt())
}

/// ⟨Res, u_v⁻¹ Res⟩ at one point.
pub(crate) fn pointwise_residual(
    sys: &dyn ConservationSystem,
    v: &StateVector,
    vx: &StateVector,
    vt: &StateVector,
) -> Result<f64> {
    if vx.iter().all(|&x| x == 0.0) && vt.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let uv = sys.symmetrizer(v)?;
    let u = sys.conserved(v)?;
    let fu = sys.flux_jacobian(&u)?;
    let res = &uv * vt + fu * (&uv * vx);
    inverse_weighted(&uv, &res)
}

/// ̄BRes on one prism.
pub fn boundary_residual_norm(problem: &SlabProblem<'_>, sol: &SlabSolution, cell: usize) -> Result<f64> {
    if cell >= sol.n_cells() {
        return Err(ScdgError::Index(format!("cell {cell} of {}", sol.n_cells())));
    }
    let eval = SlabEval::new(problem, sol)?;
    Ok(boundary_residuals_squared(problem, &eval)?[cell].sqrt())
}

/// Squared ̄BRes for every prism.
pub(crate) fn boundary_residuals_squared(problem: &SlabProblem<'_>, eval: &SlabEval) -> Result<Vec<f64>> {
    let sys = problem.sys;
    let rule = &problem.basis.rule;
    let (dx, dt) = (problem.slab.mesh.dx(), problem.slab.dt());
    let mut out = vec![0.0; eval.cells.len()];
    for (cell, ce) in eval.cells.iter().enumerate() {
        for (k, w) in rule.weights.iter().enumerate() {
            let jump = &ce.prev_u[k] - &ce.bottom_u[k];
            out[cell] += w * 0.5 * dx * jump.norm_squared();
        }
    }
    for face in &eval.faces {
        for (k, w) in rule.weights.iter().enumerate() {
            let fl = &face.flux[k];
            let diff = (&fl.diffusion * (&face.v_right[k] - &face.v_left[k]) * 0.5).norm_squared();
            let wt = w * 0.5 * dt;
            if let Some(l) = face.left {
                let f_int = sys.flux(&sys.conserved(&face.v_left[k])?)?;
                out[l] += wt * ((&fl.conservative - f_int).norm_squared() + diff);
            }
            if let Some(r) = face.right {
                let f_int = sys.flux(&sys.conserved(&face.v_right[k])?)?;
                out[r] += wt * ((&fl.conservative - f_int).norm_squared() + diff);
            }
        }
    }
    Ok(out)
}

/// sqrt(∫∫⟨v_t, W v_t⟩ + ⟨v_x, W v_x⟩) on one prism for a fixed weight W.
pub fn weighted_gradient_norm(basis: &DGBasis, sol: &SlabSolution, cell: usize, weight: &Matrix) -> f64 {
    let nq = basis.n_quad();
    let jac = 0.25 * sol.slab.prism_measure();
    let (sx, st) = (2.0 / sol.slab.mesh.dx(), 2.0 / sol.slab.dt());
    let mut acc = 0.0;
    for kt in 0..nq {
        for kx in 0..nq {
            let vx = sol.evaluate_tabulated(cell, &basis.derivatives[kx], &basis.values[kt]) * sx;
            let vt = sol.evaluate_tabulated(cell, &basis.values[kx], &basis.derivatives[kt]) * st;
            let w = basis.rule.weights[kx] * basis.rule.weights[kt] * jac;
            acc += w * (vt.dot(&(weight * &vt)) + vx.dot(&(weight * &vx)));
        }
    }
    acc.max(0.0).sqrt()
}

/// Per-prism residuals, viscosities and frozen weights of a slab iterate.
pub fn shock_capture_state(
    problem: &SlabProblem<'_>,
    eval: &SlabEval,
    sol: &SlabSolution,
) -> Result<(ShockCaptureState, Vec<CellResiduals>)> {
    let sys = problem.sys;
    let basis = problem.basis;
    let bres2 = boundary_residuals_squared(problem, eval)?;
    let n = sol.n_cells();
    let mut state = ShockCaptureState {
        eps: Vec::with_capacity(n),
        weight: Vec::with_capacity(n),
    };
    let mut residuals = Vec::with_capacity(n);
    let nq = basis.n_quad();
    let jac = 0.25 * sol.slab.prism_measure();
    for (cell, ce) in eval.cells.iter().enumerate() {
        let weight = sys.symmetrizer(&sol.cell_average(cell))?;
        let mut res2 = 0.0;
        for kt in 0..nq {
            for kx in 0..nq {
                let k = kt * nq + kx;
                let w = basis.rule.weights[kx] * basis.rule.weights[kt] * jac;
                res2 += w * pointwise_residual(sys, &ce.v[k], &ce.vx[k], &ce.vt[k])?;
            }
        }
        let r = CellResiduals {
            res_bar: res2.sqrt(),
            bres_bar: bres2[cell].sqrt(),
            grad_norm: weighted_gradient_norm(basis, sol, cell, &weight),
        };
        state.eps.push(viscosity_coefficient(problem.viscosity, problem.h, &r));
        state.weight.push(weight);
        residuals.push(r);
    }
    Ok((state, residuals))
}

/// B_SC(vʰ, φ) for the test function φ = P_ix(ξ) P_jt(τ) e_c on `cell`.
pub fn sc_form(
    basis: &DGBasis,
    sol: &SlabSolution,
    cell: usize,
    test_index: usize,
    component: usize,
    state: &ShockCaptureState,
) -> f64 {
    let n1 = basis.n1();
    let (ix, jt) = (test_index % n1, test_index / n1);
    let nq = basis.n_quad();
    let jac = 0.25 * sol.slab.prism_measure();
    let (sx, st) = (2.0 / sol.slab.mesh.dx(), 2.0 / sol.slab.dt());
    let weight = &state.weight[cell];
    let mut acc = 0.0;
    for kt in 0..nq {
        for kx in 0..nq {
            let vx = sol.evaluate_tabulated(cell, &basis.derivatives[kx], &basis.values[kt]) * sx;
            let vt = sol.evaluate_tabulated(cell, &basis.values[kx], &basis.derivatives[kt]) * st;
            let dphi_x = sx * basis.derivatives[kx][ix] * basis.values[kt][jt];
            let dphi_t = st * basis.values[kx][ix] * basis.derivatives[kt][jt];
            let w = basis.rule.weights[kx] * basis.rule.weights[kt] * jac;
            acc += w * (dphi_t * (weight * &vt)[component] + dphi_x * (weight * &vx)[component]);
        }
    }
    state.eps[cell] * acc
}

/// B_SC(vʰ, vʰ) = Σ ε_K ‖∇vʰ‖²_ũ_v.
pub fn sc_quadratic_form(basis: &DGBasis, sol: &SlabSolution, state: &ShockCaptureState) -> f64 {
    (0..sol.n_cells())
        .map(|cell| state.eps[cell] * weighted_gradient_norm(basis, sol, cell, &state.weight[cell]).powi(2))
        .sum()
}
