use super::{check_len, ConservationSystem, Matrix, StateVector};
use crate::error::{Result, ScdgError};

/// 1D shallow water equations in (h, hu) with the total-energy entropy
/// U = (h u² + g h²)/2.
#[derive(Debug, Clone, Copy)]
pub struct ShallowWater {
    pub g: f64,
    pub h_min: f64,
}

const NAME: &str = "shallow_water";

impl ShallowWater {
    pub fn new(g: f64, h_min: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(ScdgError::config("system.params.g", "gravity must be positive"));
        }
        if !(h_min >= 0.0) {
            return Err(ScdgError::config(
                "system.params.h_min",
                "depth floor must be non-negative",
            ));
        }
        Ok(Self { g, h_min })
    }

    fn check_depth(&self, h: f64) -> Result<()> {
        if h >= self.h_min && h > 0.0 {
            Ok(())
        } else {
            Err(ScdgError::domain(
                NAME,
                format!("depth h = {h:e} below floor h_min = {:e}", self.h_min),
            ))
        }
    }

    fn split(&self, u: &StateVector) -> Result<(f64, f64)> {
        check_len(NAME, u, 2)?;
        self.check_depth(u[0])?;
        Ok((u[0], u[1] / u[0]))
    }
}

impl ConservationSystem for ShallowWater {
    fn name(&self) -> &'static str {
        NAME
    }

    fn m(&self) -> usize {
        2
    }

    fn component_names(&self) -> &'static [&'static str] {
        &["h", "hu"]
    }

    fn check_admissible(&self, u: &StateVector) -> Result<()> {
        self.split(u).map(|_| ())
    }

    fn entropy_variables(&self, u: &StateVector) -> Result<StateVector> {
        let (h, vel) = self.split(u)?;
        Ok(StateVector::from_vec(vec![self.g * h - 0.5 * vel * vel, vel]))
    }

    fn conserved(&self, v: &StateVector) -> Result<StateVector> {
        check_len(NAME, v, 2)?;
        let vel = v[1];
        let h = (v[0] + 0.5 * vel * vel) / self.g;
        self.check_depth(h)?;
        Ok(StateVector::from_vec(vec![h, h * vel]))
    }

    fn flux(&self, u: &StateVector) -> Result<StateVector> {
        let (h, vel) = self.split(u)?;
        Ok(StateVector::from_vec(vec![
            h * vel,
            h * vel * vel + 0.5 * self.g * h * h,
        ]))
    }

    fn entropy(&self, u: &StateVector) -> Result<f64> {
        let (h, vel) = self.split(u)?;
        Ok(0.5 * (h * vel * vel + self.g * h * h))
    }

    fn entropy_flux(&self, u: &StateVector) -> Result<f64> {
        let (h, vel) = self.split(u)?;
        Ok((0.5 * h * vel * vel + self.g * h * h) * vel)
    }

    fn potential(&self, v: &StateVector) -> Result<f64> {
        let u = self.conserved(v)?;
        let (h, vel) = (u[0], v[1]);
        Ok(0.5 * self.g * h * h * vel)
    }

    fn symmetrizer(&self, v: &StateVector) -> Result<Matrix> {
        let u = self.conserved(v)?;
        let (h, vel, g) = (u[0], v[1], self.g);
        Ok(Matrix::from_row_slice(
            2,
            2,
            &[1.0 / g, vel / g, vel / g, h + vel * vel / g],
        ))
    }

    fn flux_jacobian(&self, u: &StateVector) -> Result<Matrix> {
        let (h, vel) = self.split(u)?;
        Ok(Matrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, self.g * h - vel * vel, 2.0 * vel],
        ))
    }

    fn max_wave_speed(&self, u: &StateVector) -> Result<f64> {
        let (h, vel) = self.split(u)?;
        Ok(vel.abs() + (self.g * h).sqrt())
    }

    fn closed_form_ec_flux(&self, v_minus: &StateVector, v_plus: &StateVector) -> Option<Result<StateVector>> {
        let flux = || -> Result<StateVector> {
            let a = self.conserved(v_minus)?;
            let b = self.conserved(v_plus)?;
            let (h_l, u_l) = (a[0], v_minus[1]);
            let (h_r, u_r) = (b[0], v_plus[1]);
            let h_avg = 0.5 * (h_l + h_r);
            let u_avg = 0.5 * (u_l + u_r);
            let h2_avg = 0.5 * (h_l * h_l + h_r * h_r);
            Ok(StateVector::from_vec(vec![
                h_avg * u_avg,
                h_avg * u_avg * u_avg + 0.5 * self.g * h2_avg,
            ]))
        };
        Some(flux())
    }

    fn from_primitive(&self, w: &[f64]) -> Result<StateVector> {
        if w.len() != 2 {
            return Err(ScdgError::domain(NAME, "primitive state needs (h, u)"));
        }
        let u = StateVector::from_vec(vec![w[0], w[0] * w[1]]);
        self.check_admissible(&u)?;
        Ok(u)
    }
}
