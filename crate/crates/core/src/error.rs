use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (e.g. `x <= 0`).
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A configuration or parameter set violates a documented invariant.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// Grid evaluation produced NaN or infinity.
    #[error("non-finite value in {op} at x = {x}")]
    NonFinite { op: &'static str, x: f64 },

    /// One or more paths left the representable range.
    #[error("path blow-up in model '{model}' at path indices {paths:?}")]
    BlowUp { model: String, paths: Vec<usize> },

    /// Two batches cannot be compared pathwise.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A price outside the no-arbitrage band has no implied volatility.
    #[error("no implied volatility: price {price} violates the {bound} bound {limit}")]
    NoSolution {
        price: f64,
        bound: Bound,
        limit: f64,
    },
}

/// Which side of the no-arbitrage band a price crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Upper,
}

impl core::fmt::Display for Bound {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower"),
            Bound::Upper => f.write_str("upper"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}

/// Rejects `x <= 0` and NaN.
pub(crate) fn require_positive(op: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(domain(op, alloc::format!("x must be > 0, got {x}")))
    }
}
