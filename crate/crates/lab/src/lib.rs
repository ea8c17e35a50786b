//! Experiment harness for `symlab-core`: configuration, parallel drivers,
//! output formats and the `symlab` command line.

pub mod cli;
pub mod config;
pub mod harness;
pub mod io;
