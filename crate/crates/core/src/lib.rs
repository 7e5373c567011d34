//! Budgeted two-phase profit maximization for viral marketing under the
//! Independent Cascade model.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: directed probabilistic networks, ingestion, randomized
//!   edge-probability / cost / benefit assignment and residual views.
//! - [`diffusion`]: IC simulation, partial observation at a timestep,
//!   evidence-consistent continuation and Monte Carlo profit estimators.
//! - [`oracle`]: exact evaluation over all live graphs for small instances,
//!   including the two-phase objective and property checks on it.
//! - [`selection`]: the greedy family (simple, double, stochastic) and the
//!   degree / clustering / random baselines.
//! - [`two_phase`]: the end-to-end two-phase protocol and its single-phase
//!   counterpart.
//! - [`harness`]: experiment grids, CSV persistence, improvement reports and
//!   plot data.

pub mod diffusion;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod selection;
pub mod two_phase;

pub use error::{Error, Result};
pub use graph::{Instance, NodeEconomics, NodeId, ResidualView, SocialNetwork};
