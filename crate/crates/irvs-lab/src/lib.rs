//! Desk-scale laboratory for implicit offline RL via supervised
//! learning: an energy-based joint model over actions and returns
//! trained with InfoNCE and sampled via Langevin dynamics under an
//! exponential tilt, next to explicit return-conditioned and
//! behavior-cloning baselines, evaluated on two synthetic
//! linear-dynamics benchmarks.
//!
//! The `examples/` directory contains one runnable program per major
//! capability; the `irvs-lab` binary exposes the same pipeline as
//! `gen-data`, `train`, `eval`, `sweep`, and `report` subcommands.

pub mod dataset;
pub mod ebm;
pub mod envs;
pub mod error;
pub mod harness;
pub mod langevin;
pub mod ndmath;
pub mod rvs_explicit;

pub use error::{Error, Result};
