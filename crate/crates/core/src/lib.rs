//! Secrecy-rate maximization for IRS-assisted MIMOME wiretap channels.

pub mod bsm;
pub mod channel;
pub mod cov_opt;
pub mod error;
pub mod harness;
pub mod rates;
pub mod numerics;
pub mod phase_opt;

pub use error::{Error, Result};
