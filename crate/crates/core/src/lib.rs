//! Analytics engine for grids of (latent code × concept direction) edits.
//!
//! The engine organizes directions and codes into two hierarchies, measures
//! how consistently edits behave over any selection, and computes the
//! geometry for a dual-icicle exploration view. Everything is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix the working precision.

pub mod cluster;
pub mod consistency;
pub mod error;
pub mod extraction;
pub mod layout;
mod linalg;
pub mod matrix;
pub mod scalar;
pub mod store;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use linalg::{right_singular, RightSingular};

pub type FeatureStore = store::FeatureStore<f64>;
pub type FeatureStore32 = store::FeatureStore<f32>;
pub type WeightBundle = store::WeightBundle<f64>;
pub type Hierarchy = cluster::Hierarchy<f64>;
pub type Hierarchy32 = cluster::Hierarchy<f32>;
pub type DistanceMatrix = cluster::DistanceMatrix<f64>;
pub type ConsistencyStats = consistency::ConsistencyStats<f64>;
pub type ColorDomain = consistency::ColorDomain<f64>;
pub type DirectionSet = extraction::DirectionSet<f64>;
pub type Matrix = matrix::Matrix<f64>;
