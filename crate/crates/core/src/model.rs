use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::exponent::ExponentSpec;

/// Autonomous coefficients `μx` and `σ x^{p(x)}`.
///
/// GBM is `exponent = Constant(1)`; CEV is `Constant(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Drift rate per unit time.
    pub mu: f64,
    /// Diffusion scale per √time. Zero gives the deterministic limit.
    pub sigma: f64,
    pub exponent: ExponentSpec,
}

impl ModelSpec {
    pub fn new(mu: f64, sigma: f64, exponent: ExponentSpec) -> Self {
        ModelSpec { mu, sigma, exponent }
    }

    pub fn gbm(mu: f64, sigma: f64) -> Self {
        Self::new(mu, sigma, ExponentSpec::gbm())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameters(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        self.exponent.validate()
    }

    pub fn drift(&self, x: f64) -> Result<f64> {
        require_positive("drift", x)?;
        Ok(self.mu * x)
    }

    pub fn diffusion(&self, x: f64) -> Result<f64> {
        require_positive("diffusion", x)?;
        Ok(self.diffusion_at(x))
    }

    /// Derivative of the diffusion coefficient, used by the Milstein correction.
    pub fn diffusion_deriv(&self, x: f64) -> Result<f64> {
        require_positive("diffusion_deriv", x)?;
        Ok(self.diffusion_deriv_at(x))
    }

    #[inline]
    pub(crate) fn diffusion_at(&self, x: f64) -> f64 {
        self.sigma * self.exponent.phi_at(x)
    }

    #[inline]
    pub(crate) fn diffusion_deriv_at(&self, x: f64) -> f64 {
        self.sigma * self.exponent.dphi_at(x)
    }
}

/// A model with the label used in reports and file names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    pub label: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

impl NamedModel {
    pub fn new(label: impl Into<String>, spec: ModelSpec) -> Self {
        NamedModel {
            label: label.into(),
            spec,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p1_model() -> ModelSpec {
        ModelSpec::new(0.05, 0.2, ExponentSpec::exp_decay(0.005, 0.1))
    }

    #[test]
    fn drift_examples() {
        assert_eq!(ModelSpec::gbm(0.05, 0.2).drift(1.0).unwrap(), 0.05);
        assert_eq!(ModelSpec::gbm(0.0, 0.2).drift(3.3).unwrap(), 0.0);
        assert_eq!(ModelSpec::gbm(0.05, 0.2).drift(2.0).unwrap(), 0.1);
    }

    #[test]
    fn diffusion_examples() {
        assert_relative_eq!(ModelSpec::gbm(0.05, 0.2).diffusion(1.5).unwrap(), 0.3, max_relative = 1e-15);
        assert_eq!(p1_model().diffusion(1.0).unwrap(), 0.2);
        let cev = ModelSpec::new(0.05, 0.2, ExponentSpec::cev(2.0));
        assert_relative_eq!(cev.diffusion(2.0).unwrap(), 0.8, max_relative = 1e-14);
    }

    #[test]
    fn diffusion_deriv_examples() {
        assert_eq!(ModelSpec::gbm(0.05, 0.2).diffusion_deriv(4.0).unwrap(), 0.2);
        let cev = ModelSpec::new(0.05, 0.2, ExponentSpec::cev(2.0));
        assert_relative_eq!(cev.diffusion_deriv(3.0).unwrap(), 1.2, max_relative = 1e-14);
        assert_relative_eq!(p1_model().diffusion_deriv(1.0).unwrap(), 0.200_904_837_418_036, max_relative = 1e-12);
    }

    #[test]
    fn domain_errors() {
        let m = p1_model();
        assert!(m.drift(0.0).is_err());
        assert!(m.diffusion(-1.0).is_err());
        assert!(m.diffusion_deriv(0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(p1_model().validate().is_ok());
        assert!(ModelSpec::gbm(0.05, -0.1).validate().is_err());
        assert!(ModelSpec::gbm(f64::NAN, 0.1).validate().is_err());
    }

    proptest! {
        #[test]
        fn diffusion_positive_and_gbm_exact(x in 1e-8..1e8f64) {
            prop_assert!(p1_model().diffusion(x).unwrap() > 0.0);
            prop_assert_eq!(ModelSpec::gbm(0.05, 0.2).diffusion(x).unwrap(), 0.2 * x);
        }

        #[test]
        fn deriv_matches_finite_difference(lx in -6.0..6.0f64) {
            let x = lx.exp();
            for m in [p1_model(), ModelSpec::new(0.05, 0.2, ExponentSpec::rational_decay(1e-3))] {
                let h = 1e-6 * x;
                let fd = (m.diffusion_at(x + h) - m.diffusion_at(x - h)) / (2.0 * h);
                let d = m.diffusion_deriv_at(x);
                prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-12));
            }
        }
    }
}
