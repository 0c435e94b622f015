//! Composite model-reference adaptive control with resetting regression
//! filtration.
//!
//! The crate covers the whole pipeline: small dense linear algebra, the
//! uncertain plant and its reference model, the resetting filter bank,
//! seven adaptive laws and a fixed-step hybrid simulator with diagnostics.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod acceptance;
pub mod error;
pub mod filters;
pub mod laws;
pub mod linalg;
pub mod sim;
pub mod system;

pub use error::{Error, Result};
pub use filters::{FilterBank, FilterGains, MemoryBank, MixOutput};
pub use laws::{LawKind, LawParams};
pub use linalg::Mat;
pub use sim::{run, run_with_probe, Record, Scenario, Trajectory};
pub use system::{ReferenceSchedule, ReferenceSystem, Regressor, ThetaJump, ThetaSchedule, UncertainPlant};
