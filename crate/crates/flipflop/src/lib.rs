//! File formats, experiment harness and command line front end for [`flipflop_core`].
//!
//! - [`io`]: `DMAT` matrices, `DTEN` tensors, CSV matrices, observation sets and
//!   SVD result bundles;
//! - [`config`]: `key=value` configuration text;
//! - [`experiment`]: experiment configurations, runners and the results table.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use error::{Error, Result};
