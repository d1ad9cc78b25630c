//! Library surface of the `irlqr` command-line harness: configuration
//! loading, experiment execution, and chart emission. The binary in
//! `main.rs` is a thin dispatcher over these modules.

pub mod config;
pub mod run;
pub mod svg;
