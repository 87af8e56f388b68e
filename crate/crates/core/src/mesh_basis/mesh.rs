use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdgError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    /// Ghost cells hold the initial data's far-field states at both ends.
    FarField,
}

/// Uniform partition of [a, b] into `n_cells` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

impl SpatialMesh {
    pub fn new(a: f64, b: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if n_cells == 0 {
            return Err(ScdgError::config("mesh.cells", "need at least one cell"));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(ScdgError::config("mesh.domain", format!("empty domain [{a}, {b}]")));
        }
        Ok(Self {
            a,
            b,
            n_cells,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n_cells as f64
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn cell_left(&self, cell: usize) -> f64 {
        self.a + cell as f64 * self.dx()
    }

    /// Physical x of reference coordinate ξ ∈ [−1, 1] in `cell`.
    pub fn x_of(&self, cell: usize, xi: f64) -> f64 {
        self.cell_left(cell) + 0.5 * (xi + 1.0) * self.dx()
    }

    /// Number of interfaces carrying a two-sided flux.
    pub fn n_interfaces(&self) -> usize {
        if self.is_periodic() {
            self.n_cells
        } else {
            self.n_cells - 1
        }
    }

    /// Cell to the right of interface `i` (interface `i` is the right face of cell `i`).
    pub fn right_of(&self, interface: usize) -> usize {
        (interface + 1) % self.n_cells
    }
}

/// Geometry monitors of the prisms in one slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeReport {
    /// Exterior diameter h_κ.
    pub diameter: f64,
    /// Inscribed-circle diameter ρ_κ.
    pub inscribed: f64,
    pub aspect_ratio: f64,
    /// p_κ h_κ / |κ|.
    pub perimeter_ratio: f64,
}

/// Ω × [t_n, t_{n+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSlab {
    pub index: usize,
    pub t0: f64,
    pub t1: f64,
    pub mesh: SpatialMesh,
}

impl SpaceTimeSlab {
    pub fn new(index: usize, t0: f64, t1: f64, mesh: SpatialMesh) -> Result<Self> {
        if !(t1 > t0) {
            return Err(ScdgError::config(
                "time",
                format!("slab {index}: t1 = {t1} must exceed t0 = {t0}"),
            ));
        }
        Ok(Self { index, t0, t1, mesh })
    }

    pub fn dt(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn t_of(&self, tau: f64) -> f64 {
        self.t0 + 0.5 * (tau + 1.0) * self.dt()
    }

    /// Prism measure |K × I_n|.
    pub fn prism_measure(&self) -> f64 {
        self.mesh.dx() * self.dt()
    }

    pub fn shape(&self) -> ShapeReport {
        let (dx, dt) = (self.mesh.dx(), self.dt());
        let diameter = dx.hypot(dt);
        let inscribed = dx.min(dt);
        ShapeReport {
            diameter,
            inscribed,
            aspect_ratio: dx.max(dt) / inscribed,
            perimeter_ratio: 2.0 * (dx + dt) * diameter / (dx * dt),
        }
    }

    /// Quasi-uniformity h/ρ_κ ≤ σ.
    pub fn check_shape(&self, sigma: f64) -> Result<()> {
        let s = self.shape();
        let ratio = s.diameter / s.inscribed;
        if ratio > sigma {
            return Err(ScdgError::config(
                "mesh.aspect",
                format!("prism shape ratio h/rho = {ratio:.3} exceeds sigma = {sigma}"),
            ));
        }
        Ok(())
    }
}
