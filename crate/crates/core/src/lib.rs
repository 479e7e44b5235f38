//! Stochastic simulator of agent productivity across workflow graphs.
//!
//! Each workflow node draws its precision from one of seven m-distribution
//! regimes, picked by how agent experience compares with the node's
//! information content. Around that core sit a Monte Carlo engine,
//! entropy and queueing metrics, and a classifier that recovers the regime
//! from observed data.

pub mod classifier;
pub mod cli;
pub mod error;
pub mod learning;
pub mod metrics;
pub mod model;
pub mod quadrature;
pub mod regimes;
pub mod simulator;

pub use error::{Error, Result};
