//! Observation laws, the hidden Markov chain and the world simulator.

mod distribution;
mod hmm;
mod world;

pub use distribution::{mixture_density, DistributionSpec, Law, SupportKind, TABULATED_MASS_TOL};
pub(crate) use distribution::check_probability;
pub use hmm::{hmm_step, HiddenState, HmmParams};
pub use world::{oracle_world_step, Dynamics, Observation, WorldState};
