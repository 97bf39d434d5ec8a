//! Sequential search for a single anomalous process among many, when the
//! anomaly switches between a normal and an abnormal state according to a
//! hidden Markov chain.
//!
//! The crate provides the observation model and world simulator, the
//! belief-tracking search policies (with and without predictive scheduling)
//! and their i.i.d. baselines, rate-function analysis, and a Monte Carlo
//! harness that sweeps the observation cost and writes CSV summaries.
//!
//! All numeric code is generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix the scalar to `f64`, which is what the harness and CLI use.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod obs;
pub mod policy;
pub mod scalar;
pub mod verify;

pub use error::{Result, SearchError};
pub use scalar::Scalar;

pub type Distribution = obs::DistributionSpec<f64>;
pub type MixtureLaw = obs::Law<f64>;
pub type Hmm = obs::HmmParams<f64>;
pub type World = obs::WorldState<f64>;
pub type Palette = analysis::OraclePalette<f64>;
pub type SearchPolicy = policy::Policy<f64>;
pub type SearchConfig = policy::PolicyConfig<f64>;
pub type SearchModel = policy::PolicyModel<f64>;
pub type SearchState = policy::PolicyState<f64>;
