//! Std companion to `varexp-core`: a rayon executor, run configuration,
//! CSV/JSON/SVG writers and the subcommands behind the `varexp` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;
pub mod svg;

pub use varexp_core as core;

pub use commands::{run, Command, Invocation, Outcome};
pub use config::{Format, ModelEntry, RunConfig, SmileConfig};
pub use error::CliError;
pub use exec::Rayon;

/// Configuration reproducing the reference study: GBM, `p₁` and `p₂` at
/// μ = 0.05, σ = 0.2, T = 1, Δt = 0.001, 10 000 antithetic pairs.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/paper.json");
