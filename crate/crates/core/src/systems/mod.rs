//! Conservation-law systems in entropy variables.
//!
//! Every system bundles its conserved/entropy variable maps, fluxes, an entropy
//! pair (U, F), the entropy potential ψ = ⟨f, v⟩ − F, and the Jacobians u_v and
//! f_u. The rest of the crate is written against [`ConservationSystem`] only.

mod burgers;
mod euler;
mod shallow_water;

use std::collections::BTreeMap;
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ScdgError};

pub use burgers::Burgers;
pub use euler::Euler;
pub use shallow_water::ShallowWater;

/// Conserved or entropy-variable state; the role is fixed by the call site.
pub type StateVector = DVector<f64>;
/// Dense m×m matrix (symmetrizer, flux Jacobian, diffusion matrix).
pub type Matrix = DMatrix<f64>;

/// Default admissibility floor for depth, density and pressure.
pub const DEFAULT_FLOOR: f64 = 1e-10;

pub trait ConservationSystem: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of conserved quantities.
    fn m(&self) -> usize;

    /// Spatial dimension. Only `1` is implemented.
    fn spatial_dimension(&self) -> usize {
        1
    }

    fn component_names(&self) -> &'static [&'static str];

    /// Checks the admissible-set predicate on a conserved state.
    fn check_admissible(&self, u: &StateVector) -> Result<()>;

    /// v = (∂U/∂u)ᵀ.
    fn entropy_variables(&self, u: &StateVector) -> Result<StateVector>;

    /// Inverse map u(v); fails if the image is not admissible.
    fn conserved(&self, v: &StateVector) -> Result<StateVector>;

    fn flux(&self, u: &StateVector) -> Result<StateVector>;

    fn entropy(&self, u: &StateVector) -> Result<f64>;

    fn entropy_flux(&self, u: &StateVector) -> Result<f64>;

    /// Entropy potential ψ(v) = ⟨f(u(v)), v⟩ − F(u(v)).
    fn potential(&self, v: &StateVector) -> Result<f64>;

    /// u_v(v), symmetric positive definite on admissible states.
    fn symmetrizer(&self, v: &StateVector) -> Result<Matrix>;

    /// f_u(u).
    fn flux_jacobian(&self, u: &StateVector) -> Result<Matrix>;

    /// Largest characteristic speed |λ(f_u)|.
    fn max_wave_speed(&self, u: &StateVector) -> Result<f64>;

    /// Closed-form two-point entropy-conservative flux for normal +1, if the
    /// system has one.
    fn closed_form_ec_flux(&self, _v_minus: &StateVector, _v_plus: &StateVector) -> Option<Result<StateVector>> {
        None
    }

    /// Converts primitive variables (u; h, vel; ρ, vel, p) to conserved ones.
    fn from_primitive(&self, w: &[f64]) -> Result<StateVector>;
}

/// Named system parameters as read from a run configuration.
pub type SystemParams = BTreeMap<String, f64>;

/// Builds a bundled system by name ("burgers" | "shallow_water" | "euler").
pub fn build_system(name: &str, params: &SystemParams) -> Result<Box<dyn ConservationSystem>> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let known: &[&str] = match name {
        "burgers" => &[],
        "shallow_water" => &["g", "h_min"],
        "euler" => &["gamma", "rho_min", "p_min"],
        other => {
            return Err(ScdgError::config(
                "system.name",
                format!("unknown system `{other}` (expected burgers | shallow_water | euler)"),
            ))
        }
    };
    if let Some(bad) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(ScdgError::config(
            format!("system.params.{bad}"),
            format!("unknown parameter for system `{name}`"),
        ));
    }
    Ok(match name {
        "burgers" => Box::new(Burgers),
        "shallow_water" => Box::new(ShallowWater::new(get("g", 1.0), get("h_min", DEFAULT_FLOOR))?),
        _ => Box::new(Euler::new(
            get("gamma", 1.4),
            get("rho_min", DEFAULT_FLOOR),
            get("p_min", DEFAULT_FLOOR),
        )?),
    })
}

pub(crate) fn check_len(system: &'static str, x: &StateVector, m: usize) -> Result<()> {
    if x.len() != m {
        return Err(ScdgError::domain(
            system,
            format!("state has {} components, expected {m}", x.len()),
        ));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(ScdgError::domain(system, "non-finite component"));
    }
    Ok(())
}

/// Smallest and largest eigenvalue of the symmetric part of `a`.
pub fn symmetric_eigen_range(a: &Matrix) -> (f64, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) mod testing {
    //! Finite-difference oracles shared by the per-system unit tests.
    use super::*;

    pub use crate::checks::{fd_gradient, fd_jacobian};

    pub fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).norm() / b.norm().max(1.0)
    }

    /// Generic property checks every system must satisfy at an admissible `u`.
    pub fn check_system_at(sys: &dyn ConservationSystem, u: &StateVector) {
        let v = sys.entropy_variables(u).unwrap();
        let back = sys.conserved(&v).unwrap();
        assert!(
            (&back - u).norm() <= 1e-12 * u.norm().max(1.0),
            "round trip {u} -> {back}"
        );

        let a = sys.symmetrizer(&v).unwrap();
        assert!((&a - a.transpose()).norm() <= 1e-12 * a.norm());
        let (lo, _) = symmetric_eigen_range(&a);
        assert!(lo > 0.0, "symmetrizer not SPD at {u}");
        let fd = fd_jacobian(|w| sys.conserved(w).unwrap(), &v, 1e-6);
        assert!(rel_err(&a, &fd) < 1e-5, "u_v mismatch: {a} vs {fd}");

        let fu = sys.flux_jacobian(u).unwrap();
        let fd = fd_jacobian(|w| sys.flux(w).unwrap(), u, 1e-6);
        assert!(rel_err(&fu, &fd) < 1e-5, "f_u mismatch: {fu} vs {fd}");

        let grad_u = fd_gradient(|w| sys.entropy(w).unwrap(), u, 1e-6);
        assert!((&grad_u - &v).norm() < 1e-5 * v.norm().max(1.0), "v != U_u");

        let grad_f = fd_gradient(|w| sys.entropy_flux(w).unwrap(), u, 1e-6);
        let compat = fu.transpose() * &v;
        assert!(
            (&grad_f - &compat).norm() < 1e-5 * compat.norm().max(1.0),
            "entropy pair incompatible"
        );

        let f = sys.flux(u).unwrap();
        let psi = f.dot(&v) - sys.entropy_flux(u).unwrap();
        let scale = f.norm() * v.norm() + 1.0;
        assert!((sys.potential(&v).unwrap() - psi).abs() <= 1e-12 * scale);
    }
}
