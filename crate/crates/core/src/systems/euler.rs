use super::{check_len, ConservationSystem, Matrix, StateVector};
use crate::error::{Result, ScdgError};

/// Polytropic Euler equations in (ρ, ρu, E) with the entropy pair
/// U = −ρs/(γ−1), F = U·u, s = ln(p ρ^{−γ}).
#[derive(Debug, Clone, Copy)]
pub struct Euler {
    pub gamma: f64,
    pub rho_min: f64,
    pub p_min: f64,
}

const NAME: &str = "euler";

#[derive(Debug, Clone, Copy)]
struct Primitive {
    rho: f64,
    vel: f64,
    p: f64,
}

impl Euler {
    pub fn new(gamma: f64, rho_min: f64, p_min: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(ScdgError::config("system.params.gamma", "gamma must exceed 1"));
        }
        if !(rho_min >= 0.0) || !(p_min >= 0.0) {
            return Err(ScdgError::config(
                "system.params",
                "density and pressure floors must be non-negative",
            ));
        }
        Ok(Self { gamma, rho_min, p_min })
    }

    fn check_primitive(&self, w: Primitive) -> Result<Primitive> {
        if !(w.rho >= self.rho_min && w.rho > 0.0) {
            return Err(ScdgError::domain(
                NAME,
                format!("density rho = {:e} below floor {:e}", w.rho, self.rho_min),
            ));
        }
        if !(w.p >= self.p_min && w.p > 0.0) {
            return Err(ScdgError::domain(
                NAME,
                format!("pressure p = {:e} below floor {:e}", w.p, self.p_min),
            ));
        }
        Ok(w)
    }

    fn primitive(&self, u: &StateVector) -> Result<Primitive> {
        check_len(NAME, u, 3)?;
        let rho = u[0];
        if !(rho > 0.0) {
            return self.check_primitive(Primitive { rho, vel: 0.0, p: 0.0 });
        }
        let vel = u[1] / rho;
        let p = (self.gamma - 1.0) * (u[2] - 0.5 * rho * vel * vel);
        self.check_primitive(Primitive { rho, vel, p })
    }

    fn conserved_from(&self, w: Primitive) -> StateVector {
        StateVector::from_vec(vec![
            w.rho,
            w.rho * w.vel,
            w.p / (self.gamma - 1.0) + 0.5 * w.rho * w.vel * w.vel,
        ])
    }

    /// Primitive variables recovered from entropy variables.
    fn primitive_from_entropy(&self, v: &StateVector) -> Result<Primitive> {
        check_len(NAME, v, 3)?;
        let g = self.gamma;
        if !(v[2] < 0.0) {
            return Err(ScdgError::domain(
                NAME,
                format!("entropy variable v3 = {:e} must be negative (rho/p > 0)", v[2]),
            ));
        }
        let rho_over_p = -v[2];
        let vel = v[1] / rho_over_p;
        let s = g - (g - 1.0) * (v[0] - v[1] * v[1] / (2.0 * v[2]));
        let rho = (rho_over_p * s.exp()).powf(1.0 / (1.0 - g));
        let p = rho / rho_over_p;
        self.check_primitive(Primitive { rho, vel, p })
    }

    fn specific_entropy(&self, w: Primitive) -> f64 {
        w.p.ln() - self.gamma * w.rho.ln()
    }
}

/// Logarithmic mean (a − b)/(ln a − ln b), stable near a = b.
pub(crate) fn log_mean(a: f64, b: f64) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if a == b {
        return a;
    }
    let zeta = a / b;
    let f = (zeta - 1.0) / (zeta + 1.0);
    let u = f * f;
    let big_f = if u < 1e-4 {
        1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0
    } else {
        zeta.ln() / (2.0 * f)
    };
    (a + b) / (2.0 * big_f)
}

impl ConservationSystem for Euler {
    fn name(&self) -> &'static str {
        NAME
    }

    fn m(&self) -> usize {
        3
    }

    fn component_names(&self) -> &'static [&'static str] {
        &["rho", "rho_u", "E"]
    }

    fn check_admissible(&self, u: &StateVector) -> Result<()> {
        self.primitive(u).map(|_| ())
    }

    fn entropy_variables(&self, u: &StateVector) -> Result<StateVector> {
        let w = self.primitive(u)?;
        let g = self.gamma;
        let s = self.specific_entropy(w);
        let beta = w.rho / w.p;
        Ok(StateVector::from_vec(vec![
            (g - s) / (g - 1.0) - 0.5 * beta * w.vel * w.vel,
            beta * w.vel,
            -beta,
        ]))
    }

    fn conserved(&self, v: &StateVector) -> Result<StateVector> {
        Ok(self.conserved_from(self.primitive_from_entropy(v)?))
    }

    fn flux(&self, u: &StateVector) -> Result<StateVector> {
        let w = self.primitive(u)?;
        Ok(StateVector::from_vec(vec![
            u[1],
            u[1] * w.vel + w.p,
            (u[2] + w.p) * w.vel,
        ]))
    }

    fn entropy(&self, u: &StateVector) -> Result<f64> {
        let w = self.primitive(u)?;
        Ok(-w.rho * self.specific_entropy(w) / (self.gamma - 1.0))
    }

    fn entropy_flux(&self, u: &StateVector) -> Result<f64> {
        let w = self.primitive(u)?;
        Ok(-w.rho * self.specific_entropy(w) / (self.gamma - 1.0) * w.vel)
    }

    fn potential(&self, v: &StateVector) -> Result<f64> {
        let w = self.primitive_from_entropy(v)?;
        Ok(w.rho * w.vel)
    }

    fn symmetrizer(&self, v: &StateVector) -> Result<Matrix> {
        let w = self.primitive_from_entropy(v)?;
        let g = self.gamma;
        let (rho, vel, p) = (w.rho, w.vel, w.p);
        let e = p / (g - 1.0) + 0.5 * rho * vel * vel;
        let enthalpy = (e + p) / rho;
        let c2 = g * p / rho;
        let m = rho * vel;
        Ok(Matrix::from_row_slice(
            3,
            3,
            &[
                rho,
                m,
                e,
                m,
                m * vel + p,
                m * enthalpy,
                e,
                m * enthalpy,
                rho * enthalpy * enthalpy - c2 * p / (g - 1.0),
            ],
        ))
    }

    fn flux_jacobian(&self, u: &StateVector) -> Result<Matrix> {
        let w = self.primitive(u)?;
        let g = self.gamma;
        let vel = w.vel;
        let enthalpy = (u[2] + w.p) / w.rho;
        Ok(Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0,
                0.0,
                0.5 * (g - 3.0) * vel * vel,
                (3.0 - g) * vel,
                g - 1.0,
                vel * (0.5 * (g - 1.0) * vel * vel - enthalpy),
                enthalpy - (g - 1.0) * vel * vel,
                g * vel,
            ],
        ))
    }

    fn max_wave_speed(&self, u: &StateVector) -> Result<f64> {
        let w = self.primitive(u)?;
        Ok(w.vel.abs() + (self.gamma * w.p / w.rho).sqrt())
    }

    /// Chandrashekar's kinetic-energy-preserving entropy-conservative flux.
    fn closed_form_ec_flux(&self, v_minus: &StateVector, v_plus: &StateVector) -> Option<Result<StateVector>> {
        let flux = || -> Result<StateVector> {
            let l = self.primitive_from_entropy(v_minus)?;
            let r = self.primitive_from_entropy(v_plus)?;
            let g = self.gamma;
            let beta_l = 0.5 * l.rho / l.p;
            let beta_r = 0.5 * r.rho / r.p;
            let rho_ln = log_mean(l.rho, r.rho);
            let beta_ln = log_mean(beta_l, beta_r);
            let rho_avg = 0.5 * (l.rho + r.rho);
            let beta_avg = 0.5 * (beta_l + beta_r);
            let vel_avg = 0.5 * (l.vel + r.vel);
            let vel2_avg = 0.5 * (l.vel * l.vel + r.vel * r.vel);
            let mass = rho_ln * vel_avg;
            let momentum = rho_avg / (2.0 * beta_avg) + vel_avg * mass;
            let energy = (1.0 / (2.0 * (g - 1.0) * beta_ln) - 0.5 * vel2_avg) * mass + vel_avg * momentum;
            Ok(StateVector::from_vec(vec![mass, momentum, energy]))
        };
        Some(flux())
    }

    fn from_primitive(&self, w: &[f64]) -> Result<StateVector> {
        if w.len() != 3 {
            return Err(ScdgError::domain(NAME, "primitive state needs (rho, u, p)"));
        }
        let w = self.check_primitive(Primitive {
            rho: w[0],
            vel: w[1],
            p: w[2],
        })?;
        Ok(self.conserved_from(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::symmetric_eigen_range;
    use crate::systems::testing::{check_system_at, fd_gradient, fd_jacobian, rel_err};

    fn air() -> Euler {
        Euler::new(1.4, 1e-10, 1e-10).unwrap()
    }

    fn rest() -> StateVector {
        air().from_primitive(&[1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn entropy_variables_at_rest_match_fd_of_entropy() {
        let v = air().entropy_variables(&rest()).unwrap();
        let fd = fd_gradient(|w| air().entropy(w).unwrap(), &rest(), 1e-6);
        assert!((&v - &fd).norm() < 1e-8, "{v} vs {fd}");
        // frozen from the finite-difference oracle: ((γ − 0)/(γ − 1), 0, −ρ/p)
        let fixture = StateVector::from_vec(vec![3.5, 0.0, -1.0]);
        assert!((&v - &fixture).norm() < 1e-12);
    }

    #[test]
    fn symmetrizer_at_rest() {
        let v = air().entropy_variables(&rest()).unwrap();
        let a = air().symmetrizer(&v).unwrap();
        assert!((&a - a.transpose()).norm() <= 1e-12 * a.norm());
        assert!(symmetric_eigen_range(&a).0 > 0.0);
        let fd = fd_jacobian(|w| air().conserved(w).unwrap(), &v, 1e-6);
        assert!(rel_err(&a, &fd) < 1e-6);
    }

    #[test]
    fn generic_properties() {
        for w in [[1.0, 0.0, 1.0], [0.125, 0.0, 0.1], [2.3, -1.2, 0.4], [0.5, 3.0, 7.0]] {
            check_system_at(&air(), &air().from_primitive(&w).unwrap());
        }
    }

    #[test]
    fn vacuum_rejected() {
        assert!(air().from_primitive(&[0.0, 0.0, 1.0]).is_err());
        let err = air()
            .check_admissible(&StateVector::from_vec(vec![1.0, 0.0, -1.0]))
            .unwrap_err();
        assert!(err.to_string().contains("pressure"));
        assert!(air().conserved(&StateVector::from_vec(vec![1.0, 0.0, 0.5])).is_err());
    }

    #[test]
    fn log_mean_is_symmetric_and_accurate() {
        for (a, b) in [
            (1.0f64, 2.0f64),
            (1.0, 1.0 + 1e-9),
            (0.1, 10.0),
            (3.0, 3.0 * (1.0 + 1e-3)),
        ] {
            let exact = if a == b { a } else { (b - a) / (b.ln() - a.ln()) };
            assert!((log_mean(a, b) - exact).abs() <= 1e-7 * exact);
            assert_eq!(log_mean(a, b), log_mean(b, a));
        }
        // series branch against the direct formula where the latter is well conditioned
        let (a, b) = (1.0, 1.015);
        let direct = (b - a) / (f64::ln(b) - f64::ln(a));
        assert!((log_mean(a, b) - direct).abs() < 1e-14);
    }
}
