//! Experiment harness for SNN sampling of truncated multivariate normals.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
