//! Experiment harness: configuration, manifests, Monte Carlo runs and the
//! `srr` command-line tool.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod manifest;

pub use config::{MotionSource, Preset, RunConfig};
