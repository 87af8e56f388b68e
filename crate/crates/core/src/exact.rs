//! Exact Burgers solutions by characteristics, valid before shock formation.

use crate::error::{Result, ScdgError};

/// Solves u = u₀(x − u t) by Newton's method.
///
/// Requires 1 + t u₀' > 0 along the characteristic (pre-shock).
pub fn burgers_characteristics(u0: impl Fn(f64) -> f64, du0: impl Fn(f64) -> f64, x: f64, t: f64) -> Result<f64> {
    let mut u = u0(x);
    for _ in 0..100 {
        let xi = x - u * t;
        let g = u - u0(xi);
        let dg = 1.0 + t * du0(xi);
        if dg <= 0.0 {
            return Err(ScdgError::domain(
                "burgers",
                format!("characteristics cross at x = {x}, t = {t}"),
            ));
        }
        let step = g / dg;
        u -= step;
        if step.abs() <= 1e-15 * u.abs().max(1.0) {
            return Ok(u);
        }
    }
    Err(ScdgError::domain(
        "burgers",
        format!("characteristic solve did not converge at x = {x}, t = {t}"),
    ))
}

/// u₀ = base + amplitude sin(2π k (x − a)/L) on a periodic interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineWave {
    pub base: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub a: f64,
    pub length: f64,
}

impl SineWave {
    fn k(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.wavenumber / self.length
    }

    pub fn initial(&self, x: f64) -> f64 {
        self.base + self.amplitude * (self.k() * (x - self.a)).sin()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.amplitude * self.k() * (self.k() * (x - self.a)).cos()
    }

    /// First time at which characteristics cross, 1 / max(−u₀').
    pub fn breaking_time(&self) -> f64 {
        1.0 / (self.amplitude.abs() * self.k())
    }

    pub fn solution(&self, x: f64, t: f64) -> Result<f64> {
        burgers_characteristics(|y| self.initial(y), |y| self.derivative(y), x, t)
    }
}
