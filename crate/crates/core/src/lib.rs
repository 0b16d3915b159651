//! Random walks in iid random environments on `Z^d`: simulation, and inference
//! of the walk's law and of the environment law from a single trajectory.
//!
//! The numeric types are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`, which the command-line tool and the
//! verification suites use.

pub mod environment;
pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod history;
pub mod lattice;
pub mod multi_index;
pub mod reconstruction;
pub mod resampler;
pub mod scalar;
pub mod seed;
mod site_map;
pub mod statlab;
pub mod trajectory;
pub mod walker;

pub use error::{Error, Result};
pub use lattice::{GroupElement, JumpSet};
pub use multi_index::MultiIndex;
pub use scalar::Scalar;
pub use trajectory::Trajectory;

pub type SiteLaw = environment::SiteLaw<f64>;
pub type EnvironmentLaw = environment::EnvironmentLaw<f64>;
pub type Environment = environment::Environment<f64>;
pub type VEstimate = estimator::VEstimate<f64>;
pub type MomentTable = reconstruction::MomentTable<f64>;
pub type CdfGrid = reconstruction::CdfGrid<f64>;
pub type Reconstruction = reconstruction::Reconstruction<f64>;

pub type SiteLaw32 = environment::SiteLaw<f32>;
pub type EnvironmentLaw32 = environment::EnvironmentLaw<f32>;
pub type MomentTable32 = reconstruction::MomentTable<f32>;
