//! Best feasible arm identification in linear bandits under a fixed budget.
//!
//! An [`Instance`] holds training arms (which may be pulled), testing arms
//! (which may be recommended), unknown reward and cost parameters and a
//! cost threshold. The goal is to name the testing arm with the highest
//! reward among those whose cost stays below the threshold.
//!
//! * [`design`] — G-optimal experimental design.
//! * [`hardness`] — the optimal error exponent `Γ` and its allocation `w*`.
//! * [`learners`] — ridge posterior, AdaHedge, constrained posterior sampling.
//! * [`algorithms`] — BLFAIPS and the baseline strategies.
//! * [`harness`] — instance generators, configured sweeps and exponent fits.

pub mod algorithms;
pub mod design;
pub mod env;
pub mod error;
pub mod hardness;
pub mod harness;
pub mod instance;
pub mod learners;
pub mod linalg;

pub use error::{Error, InstanceError, Result, SolverError};
pub use instance::{ArmSet, Instance, InstanceSpec};
