//! Multi-vehicle routing for MGV-UGV teams with human-robot-interaction costs.
//!
//! Teams of one manned leader and several unmanned followers visit points of
//! interest (POIs). The objective weighs travel (tour length plus depot
//! replenishment convoys), HRI cost of the team sizes and a fixed cost per
//! deployed team. The crate provides a construction heuristic, a skewed
//! variable neighborhood search, an exhaustive oracle for small instances,
//! a seeded instance generator and benchmark runners.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`.

pub mod assignment;
pub mod bench;
pub mod construction;
pub mod exact;
pub mod instances;
pub mod model;
pub mod neighborhoods;
pub mod scalar;
pub mod svns;

pub use scalar::Scalar;

pub type Point = model::Point<f64>;
pub type Poi = model::Poi<f64>;
pub type Instance = model::Instance<f64>;
pub type Weights = model::Weights<f64>;
pub type CostMatrix = model::CostMatrix<f64>;
pub type CostBreakdown = model::CostBreakdown<f64>;
