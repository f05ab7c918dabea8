//! Command line front end for randomized benchmarking simulation and
//! analysis: strict configuration loading, deterministic artifact output,
//! decay fitting with formula-tagged reports, shadow correlation
//! estimation and an embedded verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod selftest;
pub mod svg;
