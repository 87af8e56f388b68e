use super::legendre;
use super::mesh::SpaceTimeSlab;
use super::quadrature::GaussRule;
use crate::error::{Result, ScdgError};
use crate::systems::StateVector;

/// Tensor-product Legendre basis P_i(ξ) P_j(τ), 0 ≤ i, j ≤ q, on the reference
/// prism [−1, 1]², with tabulated values at the Gauss nodes.
#[derive(Debug, Clone)]
pub struct DGBasis {
    pub q: usize,
    pub rule: GaussRule,
    /// `values[k][i]` = P_i(node_k).
    pub values: Vec<Vec<f64>>,
    /// `derivatives[k][i]` = P_i'(node_k).
    pub derivatives: Vec<Vec<f64>>,
}

impl DGBasis {
    pub fn new(q: usize, quadrature_points: usize) -> Result<Self> {
        if q < 1 {
            return Err(ScdgError::config("q", "polynomial degree must be at least 1"));
        }
        if quadrature_points < q + 1 {
            return Err(ScdgError::config(
                "quadrature_points",
                format!("need at least q + 1 = {} points per direction", q + 1),
            ));
        }
        let rule = GaussRule::new(quadrature_points);
        let (values, derivatives) = rule
            .nodes
            .iter()
            .map(|&x| {
                let (p, dp, _) = legendre::values_and_derivatives(q, x);
                (p, dp)
            })
            .unzip();
        Ok(Self {
            q,
            rule,
            values,
            derivatives,
        })
    }

    /// Default rule: q + 2 Gauss points per direction.
    pub fn with_default_quadrature(q: usize) -> Result<Self> {
        Self::new(q, q + 2)
    }

    /// Polynomials per direction.
    pub fn n1(&self) -> usize {
        self.q + 1
    }

    /// Basis functions per prism.
    pub fn size(&self) -> usize {
        self.n1() * self.n1()
    }

    pub fn index(&self, ix: usize, jt: usize) -> usize {
        jt * self.n1() + ix
    }

    pub fn n_quad(&self) -> usize {
        self.rule.len()
    }
}

/// Per-cell Legendre expansion in x of a time trace v(·, t).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialTrace {
    pub q: usize,
    pub m: usize,
    pub n_cells: usize,
    /// Layout `(cell * (q + 1) + i) * m + c`.
    pub coefficients: Vec<f64>,
}

impl SpatialTrace {
    pub fn zeros(q: usize, m: usize, n_cells: usize) -> Self {
        Self {
            q,
            m,
            n_cells,
            coefficients: vec![0.0; n_cells * (q + 1) * m],
        }
    }

    pub fn coeff(&self, cell: usize, i: usize, c: usize) -> f64 {
        self.coefficients[(cell * (self.q + 1) + i) * self.m + c]
    }

    pub fn coeff_mut(&mut self, cell: usize, i: usize, c: usize) -> &mut f64 {
        &mut self.coefficients[(cell * (self.q + 1) + i) * self.m + c]
    }

    /// Evaluates at reference coordinate ξ given tabulated P_i(ξ).
    pub fn evaluate_with(&self, cell: usize, p: &[f64]) -> StateVector {
        let mut out = StateVector::zeros(self.m);
        let base = cell * (self.q + 1) * self.m;
        for (i, pi) in p.iter().enumerate().take(self.q + 1) {
            for c in 0..self.m {
                out[c] += self.coefficients[base + i * self.m + c] * pi;
            }
        }
        out
    }

    pub fn evaluate(&self, cell: usize, xi: f64) -> Result<StateVector> {
        if cell >= self.n_cells {
            return Err(ScdgError::Index(format!("cell {cell} of {}", self.n_cells)));
        }
        Ok(self.evaluate_with(cell, &legendre::values(self.q, xi)))
    }
}

/// One-sided traces of an interface as Legendre expansions in τ.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalTrace {
    pub q: usize,
    pub m: usize,
    /// Trace from the left cell, layout `j * m + c`.
    pub left: Vec<f64>,
    /// Trace from the right cell.
    pub right: Vec<f64>,
}

impl TemporalTrace {
    fn eval(&self, coefficients: &[f64], tau: f64) -> StateVector {
        let p = legendre::values(self.q, tau);
        StateVector::from_fn(self.m, |c, _| {
            (0..=self.q).map(|j| coefficients[j * self.m + c] * p[j]).sum()
        })
    }

    pub fn left_at(&self, tau: f64) -> StateVector {
        self.eval(&self.left, tau)
    }

    pub fn right_at(&self, tau: f64) -> StateVector {
        self.eval(&self.right, tau)
    }

    /// ⟦v⟧ = v_right − v_left.
    pub fn jump_at(&self, tau: f64) -> StateVector {
        self.right_at(tau) - self.left_at(tau)
    }
}

/// All one-sided limits of a slab solution.
#[derive(Debug, Clone)]
pub struct Traces {
    /// v_{n,+}: own bottom trace.
    pub bottom: SpatialTrace,
    /// v_{n+1,−}: own top trace.
    pub top: SpatialTrace,
    /// Interface `i` sits between cell `i` and `i + 1` (mod N when periodic).
    pub interfaces: Vec<TemporalTrace>,
}

/// Coefficients of vʰ on one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSolution {
    pub slab: SpaceTimeSlab,
    pub q: usize,
    pub m: usize,
    /// Layout `(cell * (q + 1)² + jt * (q + 1) + ix) * m + c`.
    pub coefficients: Vec<f64>,
}

impl SlabSolution {
    pub fn zeros(slab: SpaceTimeSlab, q: usize, m: usize) -> Self {
        let n = slab.mesh.n_cells * (q + 1) * (q + 1) * m;
        Self {
            slab,
            q,
            m,
            coefficients: vec![0.0; n],
        }
    }

    /// The trace extended constant in time across the slab.
    pub fn constant_in_time(slab: SpaceTimeSlab, trace: &SpatialTrace) -> Self {
        let mut sol = Self::zeros(slab, trace.q, trace.m);
        for cell in 0..trace.n_cells {
            for i in 0..=trace.q {
                for c in 0..trace.m {
                    *sol.coeff_mut(cell, i, c) = trace.coeff(cell, i, c);
                }
            }
        }
        sol
    }

    pub fn n_cells(&self) -> usize {
        self.slab.mesh.n_cells
    }

    pub fn basis_size(&self) -> usize {
        (self.q + 1) * (self.q + 1)
    }

    pub fn block_size(&self) -> usize {
        self.basis_size() * self.m
    }

    #[inline]
    pub fn offset(&self, cell: usize, a: usize, c: usize) -> usize {
        (cell * self.basis_size() + a) * self.m + c
    }

    pub fn coeff(&self, cell: usize, a: usize, c: usize) -> f64 {
        self.coefficients[self.offset(cell, a, c)]
    }

    pub fn coeff_mut(&mut self, cell: usize, a: usize, c: usize) -> &mut f64 {
        let k = self.offset(cell, a, c);
        &mut self.coefficients[k]
    }

    fn check_point(&self, cell: usize, xi: f64, tau: f64) -> Result<()> {
        if cell >= self.n_cells() {
            return Err(ScdgError::Index(format!("cell {cell} of {}", self.n_cells())));
        }
        if !(-1.0..=1.0).contains(&xi) || !(-1.0..=1.0).contains(&tau) {
            return Err(ScdgError::Index(format!(
                "reference point ({xi}, {tau}) outside [-1, 1]^2"
            )));
        }
        Ok(())
    }

    /// vʰ at reference coordinates (ξ, τ) ∈ [−1, 1]² of `cell`.
    pub fn evaluate(&self, cell: usize, xi: f64, tau: f64) -> Result<StateVector> {
        self.check_point(cell, xi, tau)?;
        let px = legendre::values(self.q, xi);
        let pt = legendre::values(self.q, tau);
        Ok(self.evaluate_tabulated(cell, &px, &pt))
    }

    pub(crate) fn evaluate_tabulated(&self, cell: usize, px: &[f64], pt: &[f64]) -> StateVector {
        let n1 = self.q + 1;
        let mut out = StateVector::zeros(self.m);
        let base = cell * self.basis_size() * self.m;
        for jt in 0..n1 {
            for ix in 0..n1 {
                let w = px[ix] * pt[jt];
                let k = base + (jt * n1 + ix) * self.m;
                for c in 0..self.m {
                    out[c] += self.coefficients[k + c] * w;
                }
            }
        }
        out
    }

    /// Physical gradient (v_x, v_t) at reference coordinates.
    pub fn gradient(&self, cell: usize, xi: f64, tau: f64) -> Result<(StateVector, StateVector)> {
        self.check_point(cell, xi, tau)?;
        let (px, dpx, _) = legendre::values_and_derivatives(self.q, xi);
        let (pt, dpt, _) = legendre::values_and_derivatives(self.q, tau);
        let sx = 2.0 / self.slab.mesh.dx();
        let st = 2.0 / self.slab.dt();
        Ok((
            self.evaluate_tabulated(cell, &dpx, &pt) * sx,
            self.evaluate_tabulated(cell, &px, &dpt) * st,
        ))
    }

    /// Prism average ṽ_{n,K}, the constant-mode coefficient.
    pub fn cell_average(&self, cell: usize) -> StateVector {
        StateVector::from_fn(self.m, |c, _| self.coeff(cell, 0, c))
    }

    fn spatial_trace(&self, top: bool) -> SpatialTrace {
        let n1 = self.q + 1;
        let mut tr = SpatialTrace::zeros(self.q, self.m, self.n_cells());
        for cell in 0..self.n_cells() {
            for ix in 0..n1 {
                for c in 0..self.m {
                    let mut s = 0.0;
                    for jt in 0..n1 {
                        let p = if top { 1.0 } else { legendre::at_minus_one(jt) };
                        s += self.coeff(cell, jt * n1 + ix, c) * p;
                    }
                    *tr.coeff_mut(cell, ix, c) = s;
                }
            }
        }
        tr
    }

    /// v_{n+1,−}.
    pub fn top_trace(&self) -> SpatialTrace {
        self.spatial_trace(true)
    }

    /// v_{n,+}.
    pub fn bottom_trace(&self) -> SpatialTrace {
        self.spatial_trace(false)
    }

    fn side_trace(&self, cell: usize, right_face: bool) -> Vec<f64> {
        let n1 = self.q + 1;
        let mut out = vec![0.0; n1 * self.m];
        for jt in 0..n1 {
            for ix in 0..n1 {
                let p = if right_face { 1.0 } else { legendre::at_minus_one(ix) };
                for c in 0..self.m {
                    out[jt * self.m + c] += self.coeff(cell, jt * n1 + ix, c) * p;
                }
            }
        }
        out
    }

    pub fn traces(&self) -> Traces {
        let mesh = &self.slab.mesh;
        let interfaces = (0..mesh.n_interfaces())
            .map(|i| TemporalTrace {
                q: self.q,
                m: self.m,
                left: self.side_trace(i, true),
                right: self.side_trace(mesh.right_of(i), false),
            })
            .collect();
        Traces {
            bottom: self.bottom_trace(),
            top: self.top_trace(),
            interfaces,
        }
    }
}
