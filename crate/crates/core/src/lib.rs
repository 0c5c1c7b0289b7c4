//! Downlink coverage and capacity of a hexagonal cellular grid when mobiles
//! attach to the strongest received base station under log-normal
//! shadowing.
//!
//! The analytical chain runs `geometry` → `attachment` → `interference` /
//! `iopr` → `dimensioning`; `montecarlo` is an independent grid simulator
//! used to check every analytical curve.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attachment;
pub mod cli;
pub mod config;
pub mod dimensioning;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod iopr;
pub mod montecarlo;
pub mod numerics;
pub mod verify;

pub use config::{MarginalTerms, NetworkConfig};
pub use error::{ModelError, Result};
