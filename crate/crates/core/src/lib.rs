//! Analyst coverage network momentum strategies.
//!
//! The crate turns analyst estimate records into dated firm-to-firm coverage
//! graphs, computes multi-horizon momentum features, trains graph attention
//! networks (on a small reverse-mode autodiff engine) to classify monthly
//! out/under-performance, and evaluates quartile long/short portfolios in a
//! rolling walk-forward loop.
//!
//! Everything here is pure computation over in-memory data and builds under
//! `no_std` with `alloc`. File formats, the command line and thread pools
//! live in the `covnet` companion crate.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
mod math;

pub mod autodiff;
pub mod backtest;
pub mod baselines;
pub mod features;
pub mod gnn;
pub mod graphs;
pub mod labels;
pub mod market_data;
pub mod metrics;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use market_data::{EstimateRecord, IndustryMap, PricePanel};
