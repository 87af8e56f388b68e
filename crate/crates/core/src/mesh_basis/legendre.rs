//! Legendre polynomials on [−1, 1].

/// Values P_0..=P_q at `x`.
pub fn values(q: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; q + 1];
    p[0] = 1.0;
    if q >= 1 {
        p[1] = x;
    }
    for n in 1..q {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
    }
    p
}

/// Values, first and second derivatives of P_0..=P_q at `x`.
pub fn values_and_derivatives(q: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = values(q, x);
    let mut dp = vec![0.0; q + 1];
    let mut ddp = vec![0.0; q + 1];
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n, and likewise one derivative up.
    for n in 0..q {
        let c = (2 * n + 1) as f64;
        let prev = if n >= 1 { dp[n - 1] } else { 0.0 };
        dp[n + 1] = prev + c * p[n];
        let prev2 = if n >= 1 { ddp[n - 1] } else { 0.0 };
        ddp[n + 1] = prev2 + c * dp[n];
    }
    (p, dp, ddp)
}

/// Value of P_n at x = −1.
pub fn at_minus_one(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// ∫_{−1}^{1} P_n² = 2/(2n+1).
pub fn norm_squared(n: usize) -> f64 {
    2.0 / (2 * n + 1) as f64
}
