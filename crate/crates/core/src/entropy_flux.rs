//! Interface fluxes: entropy-conservative flux f*, diffusion matrix D and the
//! entropy-stable flux f̂ = f* − ½ D (v₊ − v₋).

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdgError};
use crate::mesh_basis::quadrature::GaussRule;
use crate::systems::{ConservationSystem, Matrix, StateVector};

/// Default positivity floor added to the diffusion wave speed.
pub const DEFAULT_DIFFUSION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConservativePart {
    /// f* = ∫₀¹ f(u(v₋ + θ(v₊ − v₋))) dθ by Gauss quadrature.
    PathQuadrature,
    /// The system's closed-form two-point flux.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    /// D = (max(λ(u₋), λ(u₊)) + floor)·u_v(v(ū)), ū the average conserved state.
    RusanovEntropy,
    /// D = (λ(ū) + floor)·u_v(v(ū)); differentiable where the side maximum is not.
    RusanovAverage,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyStableFlux {
    pub conservative_part: ConservativePart,
    pub diffusion_kind: DiffusionKind,
    pub quadrature_points: usize,
    #[serde(default = "default_floor")]
    pub diffusion_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_DIFFUSION_FLOOR
}

impl EntropyStableFlux {
    /// Path quadrature for Burgers (exact: the integrand is a quadratic in θ),
    /// closed forms for the other systems.
    pub fn default_for(sys: &dyn ConservationSystem) -> Self {
        let conservative_part = if sys.name() == "burgers" {
            ConservativePart::PathQuadrature
        } else {
            ConservativePart::ClosedForm
        };
        Self {
            conservative_part,
            diffusion_kind: DiffusionKind::RusanovEntropy,
            // ⌈(deg f + 1)/2⌉ + 1 with deg f = 2 in θ for Burgers
            quadrature_points: 3,
            diffusion_floor: DEFAULT_DIFFUSION_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quadrature_points == 0 {
            return Err(ScdgError::config("flux.quadrature_points", "must be at least 1"));
        }
        if !(self.diffusion_floor > 0.0) {
            return Err(ScdgError::config("flux.diffusion_floor", "must be strictly positive"));
        }
        Ok(())
    }
}

/// Straight line v(θ) = v₋ + θ (v₊ − v₋) between two entropy states.
#[derive(Debug, Clone)]
pub struct PathParameterization<'a> {
    pub v_minus: &'a StateVector,
    pub v_plus: &'a StateVector,
}

impl PathParameterization<'_> {
    pub fn at(&self, theta: f64) -> StateVector {
        self.v_minus + (self.v_plus - self.v_minus) * theta
    }
}

/// All interface quantities needed by assembly and the boundary residual.
#[derive(Debug, Clone)]
pub struct InterfaceFlux {
    /// f*(v₋, v₊; n)
    pub conservative: StateVector,
    pub diffusion: Matrix,
    /// f̂(v₋, v₊; n)
    pub numerical: StateVector,
}

pub fn entropy_conservative_flux(
    sys: &dyn ConservationSystem,
    cfg: &EntropyStableFlux,
    v_minus: &StateVector,
    v_plus: &StateVector,
    normal: f64,
) -> Result<StateVector> {
    if v_minus == v_plus {
        // consistency holds exactly, not just to quadrature round-off
        let u = sys.conserved(v_minus)?;
        return Ok(sys.flux(&u)? * normal);
    }
    let flux = match cfg.conservative_part {
        ConservativePart::ClosedForm => match sys.closed_form_ec_flux(v_minus, v_plus) {
            Some(f) => f?,
            None => path_flux(sys, cfg.quadrature_points, v_minus, v_plus)?,
        },
        ConservativePart::PathQuadrature => path_flux(sys, cfg.quadrature_points, v_minus, v_plus)?,
    };
    Ok(flux * normal)
}

fn path_flux(
    sys: &dyn ConservationSystem,
    points: usize,
    v_minus: &StateVector,
    v_plus: &StateVector,
) -> Result<StateVector> {
    let path = PathParameterization { v_minus, v_plus };
    let (nodes, weights) = GaussRule::new(points).on_unit_interval();
    let mut acc = StateVector::zeros(sys.m());
    for (&theta, &w) in nodes.iter().zip(&weights) {
        let u = sys.conserved(&path.at(theta)).map_err(|e| ScdgError::Path {
            theta,
            source: Box::new(e),
        })?;
        acc += sys.flux(&u)? * w;
    }
    Ok(acc)
}

pub fn diffusion_matrix(
    sys: &dyn ConservationSystem,
    cfg: &EntropyStableFlux,
    v_minus: &StateVector,
    v_plus: &StateVector,
    _normal: f64,
) -> Result<Matrix> {
    let m = sys.m();
    match cfg.diffusion_kind {
        DiffusionKind::None => Ok(Matrix::zeros(m, m)),
        DiffusionKind::RusanovEntropy | DiffusionKind::RusanovAverage => {
            let (u_minus, u_plus) = (sys.conserved(v_minus)?, sys.conserved(v_plus)?);
            let u_avg = (&u_minus + &u_plus) * 0.5;
            let lambda = match cfg.diffusion_kind {
                DiffusionKind::RusanovEntropy => sys.max_wave_speed(&u_minus)?.max(sys.max_wave_speed(&u_plus)?),
                _ => sys.max_wave_speed(&u_avg)?,
            };
            Ok(sys.symmetrizer(&sys.entropy_variables(&u_avg)?)? * (lambda + cfg.diffusion_floor))
        }
    }
}

pub fn interface_flux(
    sys: &dyn ConservationSystem,
    cfg: &EntropyStableFlux,
    v_minus: &StateVector,
    v_plus: &StateVector,
    normal: f64,
) -> Result<InterfaceFlux> {
    let conservative = entropy_conservative_flux(sys, cfg, v_minus, v_plus, normal)?;
    let diffusion = diffusion_matrix(sys, cfg, v_minus, v_plus, normal)?;
    let numerical = &conservative - &diffusion * (v_plus - v_minus) * 0.5;
    Ok(InterfaceFlux {
        conservative,
        diffusion,
        numerical,
    })
}

pub fn numerical_flux(
    sys: &dyn ConservationSystem,
    cfg: &EntropyStableFlux,
    v_minus: &StateVector,
    v_plus: &StateVector,
    normal: f64,
) -> Result<StateVector> {
    Ok(interface_flux(sys, cfg, v_minus, v_plus, normal)?.numerical)
}

/// Defect of the entropy-conservation identity ⟨f*, v₊ − v₋⟩ − (ψ(v₊) − ψ(v₋))·n.
pub fn tadmor_defect(
    sys: &dyn ConservationSystem,
    cfg: &EntropyStableFlux,
    v_minus: &StateVector,
    v_plus: &StateVector,
    normal: f64,
) -> Result<f64> {
    let f = entropy_conservative_flux(sys, cfg, v_minus, v_plus, normal)?;
    let jump_psi = (sys.potential(v_plus)? - sys.potential(v_minus)?) * normal;
    Ok(f.dot(&(v_plus - v_minus)) - jump_psi)
}
