//! Slotted simulator for multi-user goal-oriented edge offloading.
//!
//! Devices feed classification workloads into per-device queues and decide
//! every slot whether to compress and offload them to an edge server or to
//! classify them locally. Two drift-plus-penalty controllers pick rates,
//! clocks, compression profiles and offload decisions under long-term delay,
//! accuracy and energy constraints:
//!
//! * [`PolicyKind::MuMeda`] minimizes weighted energy subject to delay and
//!   accuracy targets.
//! * [`PolicyKind::MuMade`] maximizes accuracy subject to delay and energy
//!   budgets.
//!
//! A fixed-profile and a fixed-rate baseline are provided for comparison.
//! Start from [`model::load_config`] and [`engine::run`], or from the
//! scenario builders in [`experiments`].

pub mod channel;
pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod policies;
pub mod queueing;
pub mod solvers;

pub use error::{ConfigError, Error, Result};
pub use model::{Config, PolicyKind};
