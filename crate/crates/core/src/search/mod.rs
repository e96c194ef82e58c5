//! Sampling-based structure search.
//!
//! [`run_local_search`] evaluates an initial structure, then repeatedly
//! generates candidates around the current center, evaluates them, and moves
//! the center to the best structure seen whenever that is a strict
//! improvement. Candidates come from random rank perturbation
//! ([`sample_neighborhood`]) or from sweeping one rank variable at a time
//! ([`enumerate_variable`]).

mod config;
mod exhaustive;
mod local;
mod neighborhood;
mod stopping;

pub use config::{default_rank_bound, EnumConfig, NeighborhoodConfig, StoppingConfig, Strategy};
pub use exhaustive::{exhaustive_search, EXHAUSTIVE_LIMIT};
pub use local::{run_local_search, SearchState};
pub use neighborhood::{enumerate_variable, sample_neighborhood, NeighborhoodSampler};
pub use stopping::early_stop_check;
