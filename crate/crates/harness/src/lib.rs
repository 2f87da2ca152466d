//! Command-line front end for the Muskat thin-film toolkit: TOML scenario
//! files, CSV/JSON artifacts, parameter sweeps, exponent fits and the
//! verification suite.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod suite;
pub mod sweep;

pub use error::{HarnessError, Status};
