//! File formats and command-line front end for `ordqual-core`.

pub mod cli;
pub mod error;
pub mod io;

pub use error::{DroppedRow, IoError};
pub use ordqual_core as core;
