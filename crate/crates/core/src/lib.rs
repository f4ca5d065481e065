#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod caps;
pub mod eqgraph;
pub mod error;
pub mod export;
pub mod scalar;
pub mod simulator;
pub mod spectra;
pub mod cli;
mod sums;
pub mod counter;
pub mod surd;

pub use caps::Caps;
pub use error::{Error, Result};
pub use scalar::Scalar;
