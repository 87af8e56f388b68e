//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy_flux::EntropyStableFlux;
use crate::error::{Result, ScdgError};
use crate::mesh_basis::{Boundary, DGBasis, SpatialMesh};
use crate::shock_capture::ViscosityConfig;
use crate::slab_solver::SolverConfig;
use crate::systems::{build_system, ConservationSystem, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for the randomized check suites.
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSection,
    pub mesh: MeshSection,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    pub time: TimeSection,
    pub initial: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<EntropyStableFlux>,
    #[serde(default)]
    pub viscosity: ViscosityConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub cells: usize,
    pub domain: [f64; 2],
    /// Δt / Δx.
    #[serde(default = "one")]
    pub aspect: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Bound on the prism shape ratio h/ρ.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn one() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_points: Option<usize>,
}

fn default_q() -> usize {
    1
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        Self {
            q: 1,
            quadrature_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    /// Overrides the slab count derived from `mesh.aspect`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slabs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        state: Vec<f64>,
        #[serde(default)]
        primitive: bool,
    },
    /// `left` for x < position, `right` otherwise.
    Riemann {
        left: Vec<f64>,
        right: Vec<f64>,
        position: f64,
        #[serde(default)]
        primitive: bool,
    },
    /// `inner` on [left_position, right_position), `outer` elsewhere.
    DoubleRiemann {
        outer: Vec<f64>,
        inner: Vec<f64>,
        left_position: f64,
        right_position: f64,
        #[serde(default)]
        primitive: bool,
    },
    /// base + amplitude · sin(2π k (x − a)/|Ω|), componentwise.
    Sine {
        base: Vec<f64>,
        amplitude: Vec<f64>,
        #[serde(default = "one")]
        wavenumber: f64,
        #[serde(default)]
        primitive: bool,
    },
}

impl InitialCondition {
    fn vectors(&self) -> Vec<&Vec<f64>> {
        match self {
            Self::Constant { state, .. } => vec![state],
            Self::Riemann { left, right, .. } => vec![left, right],
            Self::DoubleRiemann { outer, inner, .. } => vec![outer, inner],
            Self::Sine { base, amplitude, .. } => vec![base, amplitude],
        }
    }

    fn is_primitive(&self) -> bool {
        match self {
            Self::Constant { primitive, .. }
            | Self::Riemann { primitive, .. }
            | Self::DoubleRiemann { primitive, .. }
            | Self::Sine { primitive, .. } => *primitive,
        }
    }

    /// Data in the configured variables (primitive or conserved) at x.
    fn raw(&self, x: f64, a: f64, length: f64) -> Vec<f64> {
        match self {
            Self::Constant { state, .. } => state.clone(),
            Self::Riemann {
                left, right, position, ..
            } => {
                if x < *position {
                    left.clone()
                } else {
                    right.clone()
                }
            }
            Self::DoubleRiemann {
                outer,
                inner,
                left_position,
                right_position,
                ..
            } => {
                if x >= *left_position && x < *right_position {
                    inner.clone()
                } else {
                    outer.clone()
                }
            }
            Self::Sine {
                base,
                amplitude,
                wavenumber,
                ..
            } => {
                let s = (2.0 * PI * wavenumber * (x - a) / length).sin();
                base.iter().zip(amplitude).map(|(b, am)| b + am * s).collect()
            }
        }
    }

    /// Conserved initial state u₀(x).
    pub fn conserved_at(&self, sys: &dyn ConservationSystem, mesh: &SpatialMesh, x: f64) -> Result<StateVector> {
        let w = self.raw(x, mesh.a, mesh.length());
        if self.is_primitive() {
            sys.from_primitive(&w)
        } else {
            let u = StateVector::from_vec(w);
            sys.check_admissible(&u)?;
            Ok(u)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Write a snapshot every this many slabs (0 disables snapshots).
    #[serde(default = "default_every")]
    pub snapshot_every: usize,
    #[serde(default = "default_samples")]
    pub samples_per_cell: usize,
}

fn default_dir() -> String {
    "out".into()
}

fn default_every() -> usize {
    1
}

fn default_samples() -> usize {
    3
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            snapshot_every: default_every(),
            samples_per_cell: default_samples(),
        }
    }
}

/// Validated objects built from a [`RunConfig`].
#[derive(Debug)]
pub struct Setup {
    pub sys: Box<dyn ConservationSystem>,
    pub flux: EntropyStableFlux,
    pub mesh: SpatialMesh,
    pub basis: DGBasis,
    pub dt: f64,
    pub n_slabs: usize,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ScdgError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ScdgError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ScdgError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ScdgError::Parse(msg) => ScdgError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn build_mesh(&self) -> Result<SpatialMesh> {
        SpatialMesh::new(
            self.mesh.domain[0],
            self.mesh.domain[1],
            self.mesh.cells,
            self.mesh.boundary,
        )
    }

    /// Cross-field validation; returns the objects the solver needs.
    pub fn setup(&self) -> Result<Setup> {
        let sys = build_system(&self.system.name, &self.system.params)?;
        let mesh = self.build_mesh()?;
        let q = self.discretization.q;
        let basis = DGBasis::new(q, self.discretization.quadrature_points.unwrap_or(q + 2))?;
        self.viscosity.validate(sys.spatial_dimension() + 1)?;
        self.solver.validate()?;
        let flux = self
            .flux
            .clone()
            .unwrap_or_else(|| EntropyStableFlux::default_for(sys.as_ref()));
        flux.validate()?;
        for v in self.initial.vectors() {
            if v.len() != sys.m() {
                return Err(ScdgError::config(
                    "initial",
                    format!(
                        "state has {} components, system `{}` has {}",
                        v.len(),
                        sys.name(),
                        sys.m()
                    ),
                ));
            }
        }
        if !(self.mesh.aspect > 0.0) {
            return Err(ScdgError::config("mesh.aspect", "must be positive"));
        }
        if !(self.time.t_final >= 0.0) || !self.time.t_final.is_finite() {
            return Err(ScdgError::config("time.t_final", "must be finite and non-negative"));
        }
        let n_slabs = match self.time.slabs {
            Some(n) => n,
            None if self.time.t_final == 0.0 => 0,
            None => ((self.time.t_final / (self.mesh.aspect * mesh.dx())).round() as usize).max(1),
        };
        let dt = if n_slabs == 0 {
            self.mesh.aspect * mesh.dx()
        } else {
            self.time.t_final / n_slabs as f64
        };
        if n_slabs > 0 && !(dt > 0.0) {
            return Err(ScdgError::config("time.t_final", "slabs requested with t_final = 0"));
        }
        Ok(Setup {
            sys,
            flux,
            mesh,
            basis,
            dt,
            n_slabs,
        })
    }

    /// Same problem with the cell count scaled by 2^level (slab count too,
    /// when it is given explicitly).
    pub fn refined(&self, level: u32) -> Self {
        let mut cfg = self.clone();
        let k = 1usize << level;
        cfg.mesh.cells *= k;
        if let Some(s) = cfg.time.slabs.as_mut() {
            *s *= k;
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 7

[system]
name = "euler"
params = { gamma = 1.4 }

[mesh]
cells = 16
domain = [0.0, 1.0]
aspect = 0.5
boundary = "far_field"

[time]
t_final = 0.1

[initial]
kind = "riemann"
primitive = true
left = [1.0, 0.0, 1.0]
right = [0.125, 0.0, 0.1]
position = 0.5

[viscosity]
alpha1 = 1.0
alpha2 = 1.0
theta = 0.5
c1_sc = 1.0
c2_sc = 1.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.mesh.boundary, Boundary::FarField);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
        let setup = cfg.setup().unwrap();
        assert_eq!(setup.n_slabs, 3);
        assert!((setup.dt * 3.0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn field_level_errors() {
        let bad = EXAMPLE.replace("alpha1 = 1.0", "alpha1 = 2.5");
        let err = RunConfig::from_toml_str(&bad).unwrap().setup().unwrap_err();
        assert!(err.to_string().contains("viscosity.alpha1"));
        assert!(err.to_string().contains("alpha1 in (0, 2)"));

        let bad = EXAMPLE.replace("cells = 16", "cells = 16\nbogus = 1");
        assert!(RunConfig::from_toml_str(&bad).is_err());

        let bad = EXAMPLE.replace("left = [1.0, 0.0, 1.0]", "left = [1.0, 0.0]");
        assert!(RunConfig::from_toml_str(&bad).unwrap().setup().is_err());

        let bad = EXAMPLE.replace("[time]", "[discretization]\nq = 0\n\n[time]");
        assert!(RunConfig::from_toml_str(&bad).unwrap().setup().is_err());
    }

    #[test]
    fn initial_data_sampling() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let setup = cfg.setup().unwrap();
        let u = cfg.initial.conserved_at(setup.sys.as_ref(), &setup.mesh, 0.7).unwrap();
        assert!((u[0] - 0.125).abs() < 1e-15);
        assert!((u[2] - 0.25).abs() < 1e-12);
    }
}
