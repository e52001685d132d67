//! Command-line front end: CSV input, assessments at Criterion E horizons,
//! coverage runs, span planning and grid exports.

pub mod commands;
pub mod config;
pub mod errors;
pub mod format;
pub mod series_io;

pub use commands::{run, Cli};
pub use errors::exit_code;
