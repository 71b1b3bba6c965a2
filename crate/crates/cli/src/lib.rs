//! Experiment harness library: configuration parsing and the experiment
//! runners behind the `steklov` binary.

pub mod config;
pub mod experiments;
