//! Secure function computation over a remote source: exact information
//! arithmetic, rate-region evaluation and search, the binary
//! information-bottleneck example, and a small-blocklength binning simulator.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod bottleneck;
pub mod error;
pub mod model;
pub mod multiregion;
pub mod osrbsim;
pub mod probcore;
pub mod region;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dist = probcore::Dist<f64>;
pub type CondDist = probcore::CondDist<f64>;
pub type JointDist = probcore::JointDist<f64>;
pub type SourceModel = model::SourceModel<f64>;
pub type DistortionSpec = model::DistortionSpec<f64>;
pub type MultiModel = model::MultiModel<f64>;
pub type AuxSystem = region::AuxSystem<f64>;
pub type RateTuple = region::RateTuple<f64>;
