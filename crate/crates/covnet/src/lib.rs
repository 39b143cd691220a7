//! File formats, parallel runners and the `covnet` command line on top of
//! [`covnet_core`].

pub mod cli;
pub mod config;
pub mod dump;
pub mod error;
pub mod io;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
