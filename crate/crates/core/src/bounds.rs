//! Closed-form moment and model-to-GBM error bounds.
//!
//! Pathwise error on a state window `[λ, R]`:
//!
//! ```text
//! E(λ, R) ≤ √(12σ² e^{3T²μ² + 12Tσ²}) · Λ(λ, R, p⁺) · sup_{[λ,R]} |p − 1|
//! Λ = |ln λ|(λ + λ^{p⁺}) + |ln R|(R + R^{p⁺})
//! ```
//!
//! Second moment of the running maximum:
//!
//! ```text
//! E[sup_{t≤T} X²] ≤ (1 + 3E[x₀²]) e^{3μ²T² + 24σ²TK²}
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponent::ExponentSpec;
use crate::math::{exp, ln, powf, sqrt};

/// Inputs to [`error_bound`] and [`moment_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub mu: f64,
    pub sigma: f64,
    pub t_horizon: f64,
    pub lambda: f64,
    pub r: f64,
    pub p_plus: f64,
    /// `sup |p(x) − 1|` over `[λ, R]`.
    pub sup_dev: f64,
    pub growth_k: f64,
    /// `E[x₀²]`.
    pub ex0_sq: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        check_window("BoundInputs", self.lambda, self.r)?;
        if !(self.p_plus >= 1.0) {
            return Err(domain("BoundInputs", format!("p_plus must be >= 1, got {}", self.p_plus)));
        }
        if !(self.sigma >= 0.0 && self.t_horizon > 0.0) {
            return Err(domain("BoundInputs", "need sigma >= 0 and T > 0"));
        }
        if !(self.sup_dev >= 0.0 && self.sup_dev <= self.p_plus - 1.0 + 1e-15) {
            return Err(domain(
                "BoundInputs",
                format!("sup_dev = {} must lie in [0, p_plus - 1]", self.sup_dev),
            ));
        }
        if !(self.growth_k > 0.0 && self.ex0_sq >= 0.0) {
            return Err(domain("BoundInputs", "need growth_k > 0 and E[x0^2] >= 0"));
        }
        Ok(())
    }
}

fn check_window(op: &'static str, lambda: f64, r: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(op, format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(r > 1.0 && r.is_finite()) {
        return Err(domain(op, format!("R must be > 1, got {r}")));
    }
    Ok(())
}

/// `Λ = |ln λ|(λ + λ^{p⁺}) + |ln R|(R + R^{p⁺})`.
pub fn lambda_factor(lambda: f64, r: f64, p_plus: f64) -> Result<f64> {
    check_window("lambda_factor", lambda, r)?;
    if !(p_plus >= 1.0 && p_plus.is_finite()) {
        return Err(domain("lambda_factor", format!("p_plus must be >= 1, got {p_plus}")));
    }
    Ok(ln(lambda).abs() * (lambda + powf(lambda, p_plus)) + ln(r).abs() * (r + powf(r, p_plus)))
}

/// `√(12σ² e^{3T²μ² + 12Tσ²})`.
pub fn coefficient(mu: f64, sigma: f64, t: f64) -> f64 {
    sqrt(12.0 * sigma * sigma * exp(3.0 * t * t * mu * mu + 12.0 * t * sigma * sigma))
}

pub fn error_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    Ok(coefficient(b.mu, b.sigma, b.t_horizon) * lambda_factor(b.lambda, b.r, b.p_plus)? * b.sup_dev)
}

/// `(1 + 3E[x₀²]) e^{3μ²T² + 24σ²TK²}`.
pub fn moment_bound(mu: f64, sigma: f64, t: f64, growth_k: f64, ex0_sq: f64) -> Result<f64> {
    if !(growth_k > 0.0) {
        return Err(domain("moment_bound", format!("growth_k must be > 0, got {growth_k}")));
    }
    if !(ex0_sq >= 0.0) {
        return Err(domain("moment_bound", "E[x0^2] must be >= 0"));
    }
    let rate = 3.0 * mu * mu * t * t + 24.0 * sigma * sigma * t * growth_k * growth_k;
    Ok((1.0 + 3.0 * ex0_sq) * exp(rate))
}

/// Model parameters shared by every row of a bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub mu: f64,
    pub sigma: f64,
    pub t_horizon: f64,
}

/// The ten `(λ, R)` windows of the reference analysis, in order.
pub const REFERENCE_CASES: [(f64, f64); 10] = [
    (0.1, 1.1),
    (0.01, 1.2),
    (0.001, 1.4),
    (0.0001, 1.5),
    (0.00001, 1.7),
    (0.0001, 1.5),
    (0.001, 1.4),
    (0.01, 1.3),
    (0.1, 1.2),
    (0.2, 1.1),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    /// 1-based case number.
    pub case: usize,
    pub lambda: f64,
    pub r: f64,
    /// One bound per exponent column.
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub params: BoundParams,
    pub columns: Vec<String>,
    pub rows: Vec<BoundRow>,
}

/// Error bound per `(λ, R)` case and exponent. `Λ` uses each exponent's own
/// declared `p⁺`.
pub fn table1(params: &BoundParams, exponents: &[(String, ExponentSpec)], cases: &[(f64, f64)]) -> Result<BoundTable> {
    let mut rows = Vec::with_capacity(cases.len());
    for (idx, &(lambda, r)) in cases.iter().enumerate() {
        check_window("table1", lambda, r).map_err(|e| match e {
            Error::Domain { detail, .. } => domain("table1", format!("case {}: {detail}", idx + 1)),
            other => other,
        })?;
        let bounds = exponents
            .iter()
            .map(|(_, spec)| {
                let inputs = BoundInputs {
                    mu: params.mu,
                    sigma: params.sigma,
                    t_horizon: params.t_horizon,
                    lambda,
                    r,
                    p_plus: spec.p_plus.max(1.0),
                    sup_dev: spec.sup_deviation(lambda, r)?,
                    growth_k: 1.0,
                    ex0_sq: 0.0,
                };
                error_bound(&inputs)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(BoundRow {
            case: idx + 1,
            lambda,
            r,
            bounds,
        });
    }
    Ok(BoundTable {
        params: *params,
        columns: exponents.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const PARAMS: BoundParams = BoundParams {
        mu: 0.05,
        sigma: 0.2,
        t_horizon: 1.0,
    };

    fn inputs(lambda: f64, r: f64, spec: &ExponentSpec) -> BoundInputs {
        BoundInputs {
            mu: 0.05,
            sigma: 0.2,
            t_horizon: 1.0,
            lambda,
            r,
            p_plus: spec.p_plus,
            sup_dev: spec.sup_deviation(lambda, r).unwrap(),
            growth_k: 1.0,
            ex0_sq: 1.0,
        }
    }

    #[test]
    fn lambda_factor_examples() {
        assert_relative_eq!(lambda_factor(0.1, 1.1, 1.005).unwrap(), 0.667_613_640_881_647_3, max_relative = 1e-12);
        assert_relative_eq!(lambda_factor(0.1, 1.2, 1.005).unwrap(), 0.895_652_545_380_650_1, max_relative = 1e-12);
        assert!(lambda_factor(1.0 - 1e-12, 1.0 + 1e-12, 1.005).unwrap() < 1e-10);
        assert!(lambda_factor(1.0, 1.5, 1.0).is_err());
        assert!(lambda_factor(0.5, 1.0, 1.0).is_err());
        assert!(lambda_factor(0.5, 1.5, 0.9).is_err());
    }

    #[test]
    fn coefficient_examples() {
        assert_relative_eq!(coefficient(0.05, 0.2, 1.0), 0.884_056_249_652_613_8, max_relative = 1e-13);
        assert_eq!(coefficient(0.05, 0.0, 1.0), 0.0);
        assert_relative_eq!(coefficient(0.0, 0.2, 1.0), 0.880_747_246_974_175_2, max_relative = 1e-13);
    }

    #[test]
    fn error_bound_examples() {
        let p1 = ExponentSpec::exp_decay(0.005, 0.1);
        let p2 = ExponentSpec::rational_decay(1e-3);
        assert!((error_bound(&inputs(0.1, 1.1, &p1)).unwrap() - 0.002922).abs() < 5e-7);
        assert!((error_bound(&inputs(0.00001, 1.7, &p2)).unwrap() - 0.001596).abs() < 5e-7);
        assert_eq!(error_bound(&inputs(0.1, 1.1, &ExponentSpec::gbm())).unwrap(), 0.0);
    }

    #[test]
    fn moment_bound_examples() {
        assert_relative_eq!(moment_bound(0.05, 0.2, 1.0, 1.0, 1.0).unwrap(), 10.525_431_339_667_387, max_relative = 1e-12);
        assert_eq!(moment_bound(0.0, 0.0, 1.0, 1.0, 0.0).unwrap(), 1.0);
        let k1 = moment_bound(0.05, 0.2, 1.0, 1.1, 1.0).unwrap();
        let k2 = moment_bound(0.05, 0.2, 1.0, 2.2, 1.0).unwrap();
        assert_relative_eq!(k2 / k1, (24.0 * 0.04 * 3.0 * 1.21f64).exp(), max_relative = 1e-12);
        assert!(moment_bound(0.05, 0.2, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn reference_table_columns() {
        let exps = vec![
            (String::from("p1"), ExponentSpec::exp_decay(0.005, 0.1)),
            (String::from("p2"), ExponentSpec::rational_decay(1e-3)),
            (String::from("gbm"), ExponentSpec::gbm()),
        ];
        let t = table1(&PARAMS, &exps, &REFERENCE_CASES).unwrap();
        let printed = [
            (0.002922, 0.000538),
            (0.002335, 0.000463),
            (0.004228, 0.000844),
            (0.005390, 0.001077),
            (0.007986, 0.001596),
            (0.005390, 0.001077),
            (0.004228, 0.000844),
            (0.003416, 0.000678),
            (0.003920, 0.000721),
            (0.003687, 0.000628),
        ];
        for (row, (e1, e2)) in t.rows.iter().zip(printed) {
            assert!((row.bounds[0] - e1).abs() <= 5e-7, "case {}: {}", row.case, row.bounds[0]);
            assert!((row.bounds[1] - e2).abs() <= 5e-7, "case {}: {}", row.case, row.bounds[1]);
            assert_eq!(row.bounds[2], 0.0);
        }
        // duplicated windows give identical rows
        assert_eq!(t.rows[3].bounds, t.rows[5].bounds);
        assert_eq!(t.rows[2].bounds, t.rows[6].bounds);
    }

    #[test]
    fn table_rejects_bad_window() {
        let exps = vec![(String::from("p1"), ExponentSpec::exp_decay(0.005, 0.1))];
        let err = table1(&PARAMS, &exps, &[(0.1, 1.1), (1.0, 1.5)]).unwrap_err();
        assert!(alloc::format!("{err}").contains("case 2"));
        assert!(table1(&PARAMS, &exps, &[]).unwrap().rows.is_empty());
    }

    #[test]
    fn lambda_term_grows_with_lambda_below_inverse_e() {
        // |ln λ|(λ + λ^{p⁺}) ≈ 2λ|ln λ| increases on (0, 1/e), so shrinking λ
        // towards zero lowers Λ at fixed R (compare reference cases 1 and 2).
        for r in [1.1, 1.3, 2.0] {
            for pp in [1.0, 1.001, 1.005] {
                let mut last = 0.0;
                for lambda in [1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.3] {
                    let v = lambda_factor(lambda, r, pp).unwrap();
                    assert!(v > last, "lambda={lambda}");
                    last = v;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn error_bound_monotone_in_sup_dev_and_r(
            lambda in 1e-5..0.9f64, r in 1.01..5.0f64, dr in 0.0..2.0f64, d1 in 0.0..0.005f64, dd in 0.0..0.005f64
        ) {
            let base = BoundInputs { mu: 0.05, sigma: 0.2, t_horizon: 1.0, lambda, r, p_plus: 1.01, sup_dev: d1, growth_k: 1.0, ex0_sq: 1.0 };
            let more_dev = BoundInputs { sup_dev: d1 + dd, ..base };
            let wider = BoundInputs { r: r + dr, ..base };
            prop_assert!(error_bound(&more_dev).unwrap() >= error_bound(&base).unwrap());
            prop_assert!(error_bound(&wider).unwrap() >= error_bound(&base).unwrap());
        }

        #[test]
        fn moment_bound_at_least_initial_term(mu in -1.0..1.0f64, sigma in 0.0..1.0f64, k in 0.01..3.0f64, e in 0.0..4.0f64) {
            prop_assert!(moment_bound(mu, sigma, 1.0, k, e).unwrap() >= 1.0 + 3.0 * e);
        }
    }
}
