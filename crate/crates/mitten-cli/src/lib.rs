//! Library surface of the benchmark runner, shared by the binary and the
//! acceptance tests.

pub mod calibrate;
pub mod config;
pub mod diagnose;
pub mod report;
pub mod runner;
pub mod validate;
