//! One-step discretizations.
//!
//! The log-space schemes integrate `Y = ln X` under the Itô-transformed SDE
//!
//! ```text
//! dY = (μ − ½ b(Y)²) dt + b(Y) dW,   b(y) = σ·x^{p(x)−1},  x = e^y
//! ```
//!
//! with the analytic derivative `b'(y) = b(y)·[(p(x) − 1) + x·p'(x)·ln x]`.
//! The recovered state `e^Y` is positive by construction, and for `p ≡ 1` the
//! diffusion is constant so the Milstein correction vanishes and the step is
//! the exact GBM transition.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Error, Result};
use crate::math::{exp, ln};
use crate::model::ModelSpec;

/// `|ln X|` beyond this is treated as a blow-up.
pub const LOG_LIMIT: f64 = 700.0;

/// Direct-space states at or below zero are moved here and counted as breaches.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    Milstein,
    LogEulerMaruyama,
    #[default]
    LogMilstein,
}

impl Scheme {
    pub fn is_log_space(self) -> bool {
        matches!(self, Scheme::LogEulerMaruyama | Scheme::LogMilstein)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler_maruyama",
            Scheme::Milstein => "milstein",
            Scheme::LogEulerMaruyama => "log_euler_maruyama",
            Scheme::LogMilstein => "log_milstein",
        }
    }

    /// Advances `ln X`. Only meaningful for the log-space schemes.
    #[inline]
    pub(crate) fn advance_log(self, m: &ModelSpec, y: f64, dt: f64, dw: f64) -> f64 {
        let x = exp(y);
        let p = m.exponent.p_at(x);
        let b = if p == 1.0 { m.sigma } else { m.sigma * exp((p - 1.0) * y) };
        let mut next = y + (m.mu - 0.5 * b * b) * dt + b * dw;
        if self == Scheme::LogMilstein {
            let dp = m.exponent.dp_at(x);
            if p != 1.0 || dp != 0.0 {
                let db = b * ((p - 1.0) + x * dp * y);
                next += 0.5 * b * db * (dw * dw - dt);
            }
        }
        next
    }

    /// Advances `X` directly. May return values `<= 0`.
    #[inline]
    pub(crate) fn advance_direct(self, m: &ModelSpec, x: f64, dt: f64, dw: f64) -> f64 {
        let b = m.diffusion_at(x);
        let mut next = x + m.mu * x * dt + b * dw;
        if self == Scheme::Milstein {
            next += 0.5 * b * m.diffusion_deriv_at(x) * (dw * dw - dt);
        }
        next
    }
}

fn check_step_args(op: &'static str, x: f64, dt: f64) -> Result<()> {
    require_positive(op, x)?;
    if !(dt > 0.0) {
        return Err(domain(op, alloc::format!("dt must be > 0, got {dt}")));
    }
    Ok(())
}

fn blow_up() -> Error {
    Error::BlowUp {
        model: String::new(),
        paths: Vec::new(),
    }
}

fn finish_log(y: f64) -> Result<f64> {
    if y.is_finite() && y.abs() <= LOG_LIMIT {
        Ok(exp(y))
    } else {
        Err(blow_up())
    }
}

/// One log-transformed Milstein step from `x`.
pub fn step_log_milstein(m: &ModelSpec, x: f64, dt: f64, dw: f64) -> Result<f64> {
    check_step_args("step_log_milstein", x, dt)?;
    finish_log(Scheme::LogMilstein.advance_log(m, ln(x), dt, dw))
}

/// One log-transformed Euler–Maruyama step from `x`.
pub fn step_log_euler(m: &ModelSpec, x: f64, dt: f64, dw: f64) -> Result<f64> {
    check_step_args("step_log_euler", x, dt)?;
    finish_log(Scheme::LogEulerMaruyama.advance_log(m, ln(x), dt, dw))
}

/// Direct-space Euler–Maruyama. The result can be non-positive; callers
/// apply [`apply_floor`].
pub fn step_euler(m: &ModelSpec, x: f64, dt: f64, dw: f64) -> Result<f64> {
    check_step_args("step_euler", x, dt)?;
    Ok(Scheme::EulerMaruyama.advance_direct(m, x, dt, dw))
}

/// Direct-space Milstein.
pub fn step_milstein(m: &ModelSpec, x: f64, dt: f64, dw: f64) -> Result<f64> {
    check_step_args("step_milstein", x, dt)?;
    Ok(Scheme::Milstein.advance_direct(m, x, dt, dw))
}

/// Positivity policy for direct-space schemes: returns the state to keep and
/// whether a breach occurred.
#[inline]
pub fn apply_floor(x: f64) -> (f64, bool) {
    if x > POSITIVITY_FLOOR {
        (x, false)
    } else {
        (POSITIVITY_FLOOR, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gbm() -> ModelSpec {
        ModelSpec::gbm(0.05, 0.2)
    }

    fn p1_model() -> ModelSpec {
        ModelSpec::new(0.05, 0.2, ExponentSpec::exp_decay(0.005, 0.1))
    }

    #[test]
    fn gbm_log_milstein_is_exact_transition() {
        for (x, dw) in [(1.0, 0.0), (0.7, 0.03), (2.5, -0.05)] {
            let got = step_log_milstein(&gbm(), x, 0.001, dw).unwrap();
            let want = x * ((0.05 - 0.02) * 0.001 + 0.2 * dw).exp();
            assert_relative_eq!(got, want, max_relative = 1e-14);
        }
        assert_relative_eq!(step_log_milstein(&gbm(), 1.0, 0.001, 0.0).unwrap(), 1.000_030_000_45, max_relative = 1e-12);
    }

    #[test]
    fn log_milstein_odd_even_decomposition() {
        // ±dw share the drift and correction terms; only b·dw flips sign.
        let m = p1_model();
        let (x, dt, dw) = (1.7, 0.001, 0.04);
        let up = step_log_milstein(&m, x, dt, dw).unwrap().ln() - x.ln();
        let down = step_log_milstein(&m, x, dt, -dw).unwrap().ln() - x.ln();
        let b = 0.2 * ((m.exponent.p_at(x) - 1.0) * x.ln()).exp();
        assert_relative_eq!(up - down, 2.0 * b * dw, max_relative = 1e-9);
    }

    #[test]
    fn log_milstein_correction_matches_finite_difference_of_log_diffusion() {
        let m = p1_model();
        let b = |y: f64| 0.2 * ((m.exponent.p_at(y.exp()) - 1.0) * y).exp();
        for y in [-1.0_f64, -0.2, 0.4, 1.3] {
            let h = 1e-6;
            let fd = (b(y + h) - b(y - h)) / (2.0 * h);
            let x = y.exp();
            let p = m.exponent.p_at(x);
            let analytic = b(y) * ((p - 1.0) + x * m.exponent.dp_at(x) * y);
            assert!((fd - analytic).abs() < 1e-9, "y={y}: fd={fd} analytic={analytic}");
        }
    }

    #[test]
    fn euler_examples() {
        assert_relative_eq!(step_euler(&gbm(), 1.0, 0.001, 0.0).unwrap(), 1.000_05, max_relative = 1e-15);
        let breach = step_euler(&gbm(), 1.0, 0.001, -10.0).unwrap();
        assert!(breach < 0.0);
        assert_eq!(apply_floor(breach), (POSITIVITY_FLOOR, true));
        let still = ModelSpec::gbm(0.0, 0.0);
        assert_eq!(step_euler(&still, 3.3, 0.01, 0.7).unwrap(), 3.3);
    }

    #[test]
    fn milstein_direct_adds_correction() {
        let m = gbm();
        let (x, dt, dw) = (1.2, 0.01, 0.1);
        let e = step_euler(&m, x, dt, dw).unwrap();
        let mil = step_milstein(&m, x, dt, dw).unwrap();
        assert_relative_eq!(mil - e, 0.5 * 0.2 * x * 0.2 * (dw * dw - dt), max_relative = 1e-10);
    }

    #[test]
    fn blow_up_signal() {
        let m = ModelSpec::gbm(0.0, 1.0);
        assert!(matches!(step_log_milstein(&m, 1.0, 0.001, 800.0), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn argument_checks() {
        assert!(step_log_milstein(&gbm(), 0.0, 0.001, 0.0).is_err());
        assert!(step_log_euler(&gbm(), 1.0, 0.0, 0.0).is_err());
        assert!(step_milstein(&gbm(), -1.0, 0.001, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn log_schemes_stay_positive(lx in -5.0..5.0f64, dw in -1.0..1.0f64) {
            let x = lx.exp();
            for m in [gbm(), p1_model(), ModelSpec::new(0.05, 0.2, ExponentSpec::inverse_square(1.0))] {
                prop_assert!(step_log_milstein(&m, x, 0.001, dw).unwrap() > 0.0);
                prop_assert!(step_log_euler(&m, x, 0.001, dw).unwrap() > 0.0);
            }
        }
    }
}
