//! Numerical core for the variable-exponent diffusion
//! `dX = μX dt + σX^{p(X)} dW` on `(0, ∞)`.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: exponent functions, the models, one-step schemes, per-path
//! random streams, the sequential engine, pathwise analysis, the closed-form
//! bounds and Black–Scholes pricing. Parallel execution, file formats and the
//! command line live in the `varexp` crate.
#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod exponent;
pub mod math;
pub mod model;
pub mod pricing;
pub mod rng;
pub mod scheme;

pub use error::{Error, Result};
pub use analysis::{ErrorReport, TerminalStats};
pub use bounds::{BoundInputs, BoundParams, BoundTable};
pub use engine::{Executor, PathBatch, PathSummary, Sequential, SimConfig};
pub use exponent::{CheckOptions, CheckReport, ExponentKind, ExponentSpec, GrowthConstants};
pub use model::{ModelSpec, NamedModel};
pub use pricing::{SmileFlag, SmilePoint, SmileRequest};
pub use scheme::Scheme;
