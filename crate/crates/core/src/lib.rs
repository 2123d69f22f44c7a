//! Depth-control workbench for a planar REMUS AUV.

pub mod baselines;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod nn;
pub mod noise;
pub mod profile;
pub mod replay;
pub mod trainer;

pub use error::{Error, Result};
