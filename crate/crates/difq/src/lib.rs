//! Command-line front end: scenario files, CSV output, charts and the run
//! manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charts;
pub mod checks;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
