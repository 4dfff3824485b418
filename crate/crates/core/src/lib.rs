//! Bayesian inference of hierarchical core-periphery structure.
//!
//! Nodes belong to a base group 0 plus any subset of groups `1..k`. Each
//! node pair is connected with the probability of the highest group both
//! endpoints share. [`sampler`] draws group assignments (and optionally
//! `k`) from the posterior with Metropolis-Hastings moves; [`generator`]
//! samples networks from the same model.

pub mod enumerate;
pub mod error;
pub mod generator;
pub mod graph;
pub mod membership;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
pub use graph::{load_edge_list, load_gml, Graph, LabelMap, LoadReport};
pub use membership::Membership;
pub use model::{GroupStats, ModelState};
