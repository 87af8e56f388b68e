//! Colored finite-difference Jacobian of the slab residual.

use crate::error::Result;
use crate::mesh_basis::SlabSolution;
use crate::shock_capture::ShockCaptureState;

use super::assembly::{assemble, residual, SlabEval, SlabProblem};
use super::linear::BlockJacobian;

/// Cells sharing a color are at cyclic distance ≥ 3, so their residual
/// stencils {k − 1, k, k + 1} never overlap.
pub fn cell_colors(n: usize) -> Vec<usize> {
    if n < 3 {
        return (0..n).collect();
    }
    let full = n - n % 3;
    (0..n).map(|k| if k < full { k % 3 } else { 3 + (k - full) }).collect()
}

fn stencil(n: usize, periodic: bool, cell: usize) -> Vec<usize> {
    let mut out = vec![cell];
    if periodic {
        out.push((cell + n - 1) % n);
        out.push((cell + 1) % n);
    } else {
        if cell > 0 {
            out.push(cell - 1);
        }
        if cell + 1 < n {
            out.push(cell + 1);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Central-difference step, near the cube root of machine epsilon.
pub fn fd_step(c: f64) -> f64 {
    6e-6 * c.abs().max(1.0)
}

/// Residual with viscosity either frozen at `frozen` or recomputed.
pub fn residual_with(
    problem: &SlabProblem<'_>,
    sol: &SlabSolution,
    frozen: Option<&ShockCaptureState>,
) -> Result<Vec<f64>> {
    match frozen {
        Some(sc) => Ok(assemble(problem, &SlabEval::new(problem, sol)?, sc)),
        None => Ok(residual(problem, sol)?.0),
    }
}

/// Central-difference Jacobian of [`residual_with`] about `sol`, colored so
/// that one probe pair serves every cell of a color. Where a probe leaves the
/// admissible set, the one-sided difference against `base` (the residual at
/// `sol`) is used instead. Returns the Jacobian and the number of residual
/// evaluations spent.
pub fn fd_jacobian(
    problem: &SlabProblem<'_>,
    sol: &SlabSolution,
    base: &[f64],
    frozen: Option<&ShockCaptureState>,
) -> Result<(BlockJacobian, usize)> {
    let n = sol.n_cells();
    let bs = sol.block_size();
    let periodic = problem.slab.mesh.is_periodic();
    let colors = cell_colors(n);
    let n_colors = colors.iter().max().map_or(0, |c| c + 1);
    let mut jac = BlockJacobian::zeros(n, bs, periodic);
    let mut evals = 0;
    let mut probe = sol.clone();
    for color in 0..n_colors {
        let cells: Vec<usize> = (0..n).filter(|&k| colors[k] == color).collect();
        for local in 0..bs {
            let steps: Vec<f64> = cells
                .iter()
                .map(|&k| fd_step(sol.coefficients[k * bs + local]))
                .collect();
            let mut shifted = |sign: f64| {
                for (&k, s) in cells.iter().zip(&steps) {
                    let idx = k * bs + local;
                    probe.coefficients[idx] = sol.coefficients[idx] + sign * s;
                }
                evals += 1;
                residual_with(problem, &probe, frozen).ok()
            };
            let (plus, minus) = (shifted(1.0), shifted(-1.0));
            let (hi, lo, width): (&[f64], &[f64], f64) = match (&plus, &minus) {
                (Some(p), Some(m)) => (p, m, 2.0),
                (Some(p), None) => (p, base, 1.0),
                (None, Some(m)) => (base, m, 1.0),
                (None, None) => {
                    return Err(crate::error::ScdgError::LineSearch {
                        slab: problem.slab.index,
                        reason: "both Jacobian probes left the admissible set".into(),
                    })
                }
            };
            for (&k, s) in cells.iter().zip(&steps) {
                probe.coefficients[k * bs + local] = sol.coefficients[k * bs + local];
                for row in stencil(n, periodic, k) {
                    let column: Vec<f64> = (0..bs)
                        .map(|r| (hi[row * bs + r] - lo[row * bs + r]) / (width * s))
                        .collect();
                    jac.add_column(row, k, local, &column);
                }
            }
        }
    }
    Ok((jac, evals))
}

/// Relative mismatch ‖J d − D_d R‖ / ‖D_d R‖ between the colored Jacobian
/// and a central difference of the same residual along `direction`.
pub fn directional_check(
    problem: &SlabProblem<'_>,
    sol: &SlabSolution,
    direction: &[f64],
    frozen: Option<&ShockCaptureState>,
) -> Result<f64> {
    let base = residual_with(problem, sol, frozen)?;
    let (jac, _) = fd_jacobian(problem, sol, &base, frozen)?;
    let jd = jac.mul_vec(direction);
    let dn = direction.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let scale = sol.coefficients.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let t = 1e-6 * scale / dn.max(1e-300);
    let shifted = |s: f64| {
        let mut p = sol.clone();
        for (c, d) in p.coefficients.iter_mut().zip(direction) {
            *c += s * d;
        }
        residual_with(problem, &p, frozen)
    };
    let (rp, rm) = (shifted(t)?, shifted(-t)?);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..jd.len() {
        let fd = (rp[k] - rm[k]) / (2.0 * t);
        num += (jd[k] - fd).powi(2);
        den += fd * fd;
    }
    Ok((num / den.max(1e-300)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors_separate_stencils() {
        for n in 1..20 {
            let c = cell_colors(n);
            for i in 0..n {
                for j in i + 1..n {
                    if c[i] == c[j] {
                        let d = (j - i).min(n - (j - i));
                        assert!(d >= 3, "n={n} cells {i},{j}");
                    }
                }
            }
        }
    }
}
