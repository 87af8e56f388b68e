//! Space-time prisms, the tensor-product Legendre basis, trace extraction and
//! the L₂/H¹ projections.

pub mod legendre;
mod mesh;
mod projection;
pub mod quadrature;
mod solution;

pub use mesh::{Boundary, ShapeReport, SpaceTimeSlab, SpatialMesh};
pub use projection::{h1_projection, h1_projection_report, l2_project_initial, PrismProjection, WeightState};
pub use quadrature::GaussRule;
pub use solution::{DGBasis, SlabSolution, SpatialTrace, TemporalTrace, Traces};
