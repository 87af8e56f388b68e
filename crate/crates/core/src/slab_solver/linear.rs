//! Block-tridiagonal (optionally cyclic) Jacobians and their direct solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolverKind {
    /// Block-tridiagonal elimination with a bordered last block for the
    /// periodic corner couplings.
    DirectBanded,
    /// Dense LU; only sensible for small problems and cross-checks.
    Dense,
}

/// Jacobian with cell-block structure: row block `i` couples to `i − 1`,
/// `i` and `i + 1` (indices mod N when periodic).
#[derive(Debug, Clone)]
pub struct BlockJacobian {
    pub n: usize,
    pub bs: usize,
    pub periodic: bool,
    pub diag: Vec<DMatrix<f64>>,
    /// Coupling of row block `i` to column block `i − 1`.
    pub lower: Vec<DMatrix<f64>>,
    /// Coupling of row block `i` to column block `i + 1`.
    pub upper: Vec<DMatrix<f64>>,
}

impl BlockJacobian {
    pub fn zeros(n: usize, bs: usize, periodic: bool) -> Self {
        let z = DMatrix::zeros(bs, bs);
        Self {
            n,
            bs,
            periodic,
            diag: vec![z.clone(); n],
            lower: vec![z.clone(); n],
            upper: vec![z; n],
        }
    }

    /// Block (row, col) if it lies on the stencil; for n < 3 periodic several
    /// slots alias one column block, so callers use [`Self::add_column`].
    pub fn add_column(&mut self, row_cell: usize, col_cell: usize, local_col: usize, values: &[f64]) {
        let n = self.n;
        let target = if row_cell == col_cell {
            &mut self.diag[row_cell]
        } else if col_cell == (row_cell + n - 1) % n && (self.periodic || row_cell > 0) {
            &mut self.lower[row_cell]
        } else if col_cell == (row_cell + 1) % n && (self.periodic || row_cell + 1 < n) {
            &mut self.upper[row_cell]
        } else {
            panic!("block ({row_cell}, {col_cell}) outside the tridiagonal stencil");
        };
        for (r, v) in values.iter().enumerate() {
            target[(r, local_col)] += v;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, bs) = (self.n, self.bs);
        let mut a = DMatrix::zeros(n * bs, n * bs);
        for i in 0..n {
            let mut put = |j: usize, blk: &DMatrix<f64>| {
                let mut view = a.view_mut((i * bs, j * bs), (bs, bs));
                view += blk;
            };
            put(i, &self.diag[i]);
            if self.periodic || i > 0 {
                put((i + n - 1) % n, &self.lower[i]);
            }
            if self.periodic || i + 1 < n {
                put((i + 1) % n, &self.upper[i]);
            }
        }
        a
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let a = self.to_dense();
        (a * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn solve(&self, rhs: &[f64], kind: LinearSolverKind) -> Result<Vec<f64>> {
        if kind == LinearSolverKind::Dense || self.n < 3 {
            return solve_dense(&self.to_dense(), rhs);
        }
        self.solve_banded(rhs)
    }

    fn solve_banded(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (n, bs) = (self.n, self.bs);
        let last = n - 1;
        let zero = DMatrix::<f64>::zeros(bs, bs);
        let r = |i: usize| DMatrix::from_column_slice(bs, 1, &rhs[i * bs..(i + 1) * bs]);
        let lower = |i: usize| if self.periodic || i > 0 { &self.lower[i] } else { &zero };
        let upper = |i: usize| {
            if self.periodic || i + 1 < n {
                &self.upper[i]
            } else {
                &zero
            }
        };

        // rows 0..last reduce to x_i + G_i x_{i+1} + H_i x_last = y_i
        let mut g: Vec<DMatrix<f64>> = Vec::with_capacity(last);
        let mut h: Vec<DMatrix<f64>> = Vec::with_capacity(last);
        let mut y: Vec<DMatrix<f64>> = Vec::with_capacity(last);
        for i in 0..last {
            let (m, mut next, mut to_last, b) = if i == 0 {
                (self.diag[0].clone(), upper(0).clone(), lower(0).clone(), r(0))
            } else {
                let l = lower(i);
                (
                    &self.diag[i] - l * &g[i - 1],
                    upper(i).clone(),
                    -(l * &h[i - 1]),
                    r(i) - l * &y[i - 1],
                )
            };
            if i + 1 == last {
                to_last += &next;
                next = zero.clone();
            }
            let lu = m.lu();
            let solve = |x: &DMatrix<f64>| {
                lu.solve(x)
                    .ok_or_else(|| ScdgError::Singular(format!("block pivot {i} of the slab Jacobian")))
            };
            g.push(solve(&next)?);
            h.push(solve(&to_last)?);
            y.push(solve(&b)?);
        }

        // eliminate x_0..x_{last-1} from the last row
        let mut z = self.diag[last].clone();
        let mut rho = r(last);
        let mut p = upper(last).clone();
        for j in 0..last {
            rho -= &p * &y[j];
            z -= &p * &h[j];
            let mut next = -(&p * &g[j]);
            if j + 2 == last {
                next += lower(last);
            }
            p = next;
        }
        let x_last = z
            .lu()
            .solve(&rho)
            .ok_or_else(|| ScdgError::Singular("last block of the slab Jacobian".into()))?;
        let mut x = vec![DMatrix::zeros(bs, 1); n];
        x[last] = x_last;
        for i in (0..last).rev() {
            let mut xi = &y[i] - &h[i] * &x[last];
            if i + 1 < last {
                xi -= &g[i] * &x[i + 1];
            }
            x[i] = xi;
        }
        Ok(x.into_iter().flat_map(|b| b.as_slice().to_vec()).collect())
    }
}

pub fn solve_dense(a: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let sol = a
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .ok_or_else(|| ScdgError::Singular("dense slab Jacobian".into()))?;
    Ok(sol.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_jacobian(n: usize, bs: usize, periodic: bool, seed: u64) -> BlockJacobian {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut j = BlockJacobian::zeros(n, bs, periodic);
        let mut rnd = |scale: f64| DMatrix::from_fn(bs, bs, |_, _| scale * rng.gen_range(-1.0..1.0));
        for i in 0..n {
            j.diag[i] = rnd(1.0) + DMatrix::identity(bs, bs) * (4.0 * bs as f64);
            j.lower[i] = rnd(1.0);
            j.upper[i] = rnd(1.0);
        }
        j
    }

    #[test]
    fn banded_matches_dense() {
        for &(n, periodic) in &[(3, true), (4, true), (7, true), (3, false), (5, false), (9, false)] {
            for bs in [1, 4, 6] {
                let j = random_jacobian(n, bs, periodic, (n * 31 + bs) as u64);
                let rhs: Vec<f64> = (0..n * bs).map(|k| (k as f64 * 0.37).sin()).collect();
                let a = solve_dense(&j.to_dense(), &rhs).unwrap();
                let b = j.solve(&rhs, LinearSolverKind::DirectBanded).unwrap();
                let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(err < 1e-12, "n={n} bs={bs} periodic={periodic} err={err}");
            }
        }
    }

    #[test]
    fn small_periodic_falls_back_to_dense() {
        let j = random_jacobian(2, 3, true, 5);
        let rhs = vec![1.0; 6];
        let x = j.solve(&rhs, LinearSolverKind::DirectBanded).unwrap();
        let back = j.mul_vec(&x);
        for v in back {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
