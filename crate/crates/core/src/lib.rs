//! PQ learning: selective classification under covariate shift, built from
//! reliable learners.

pub mod distribution;
pub mod domain;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod parity;
pub mod reduction;
pub mod reliable;
pub mod rng;
pub mod slicedice;

pub use error::{Error, Result};
