//! Tabular model-based reinforcement learning with confidence-interval
//! planning and confidence-degree fusion of subspace policies, plus the
//! baselines it is benchmarked against.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`gridworld`]: maze environments, reward laws, and the exact-model
//!   extractor used as a test oracle;
//! - [`spaces`]: feature declarations, subspace projections, and dense
//!   indexing;
//! - [`model`]: per-space tabular estimation and confidence radii;
//! - [`planner`]: value iteration, one-step backups, and extended value
//!   iteration over the confidence sets;
//! - [`cdm`]: confidence degrees and policy fusion;
//! - [`agents`]: the complete learners sharing one episode protocol.

pub mod agents;
pub mod cdm;
pub mod gridworld;
pub mod model;
pub mod planner;
pub mod spaces;
