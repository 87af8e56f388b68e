use super::{check_len, ConservationSystem, Matrix, StateVector};
use crate::error::Result;

/// Inviscid Burgers equation u_t + (u²/2)_x = 0 with U = u²/2, so v = u.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

const NAME: &str = "burgers";

impl ConservationSystem for Burgers {
    fn name(&self) -> &'static str {
        NAME
    }

    fn m(&self) -> usize {
        1
    }

    fn component_names(&self) -> &'static [&'static str] {
        &["u"]
    }

    fn check_admissible(&self, u: &StateVector) -> Result<()> {
        check_len(NAME, u, 1)
    }

    fn entropy_variables(&self, u: &StateVector) -> Result<StateVector> {
        self.check_admissible(u)?;
        Ok(u.clone())
    }

    fn conserved(&self, v: &StateVector) -> Result<StateVector> {
        check_len(NAME, v, 1)?;
        Ok(v.clone())
    }

    fn flux(&self, u: &StateVector) -> Result<StateVector> {
        self.check_admissible(u)?;
        Ok(StateVector::from_element(1, 0.5 * u[0] * u[0]))
    }

    fn entropy(&self, u: &StateVector) -> Result<f64> {
        self.check_admissible(u)?;
        Ok(0.5 * u[0] * u[0])
    }

    fn entropy_flux(&self, u: &StateVector) -> Result<f64> {
        self.check_admissible(u)?;
        Ok(u[0].powi(3) / 3.0)
    }

    fn potential(&self, v: &StateVector) -> Result<f64> {
        check_len(NAME, v, 1)?;
        Ok(v[0].powi(3) / 6.0)
    }

    fn symmetrizer(&self, v: &StateVector) -> Result<Matrix> {
        check_len(NAME, v, 1)?;
        Ok(Matrix::identity(1, 1))
    }

    fn flux_jacobian(&self, u: &StateVector) -> Result<Matrix> {
        self.check_admissible(u)?;
        Ok(Matrix::from_element(1, 1, u[0]))
    }

    fn max_wave_speed(&self, u: &StateVector) -> Result<f64> {
        self.check_admissible(u)?;
        Ok(u[0].abs())
    }

    fn closed_form_ec_flux(&self, v_minus: &StateVector, v_plus: &StateVector) -> Option<Result<StateVector>> {
        let (a, b) = (v_minus[0], v_plus[0]);
        Some(Ok(StateVector::from_element(1, (a * a + a * b + b * b) / 6.0)))
    }

    fn from_primitive(&self, w: &[f64]) -> Result<StateVector> {
        let u = StateVector::from_column_slice(w);
        self.check_admissible(&u)?;
        Ok(u)
    }
}
