//! Variable exponent functions `p: (0, ∞) → [p⁻, p⁺]` and their numerical
//! diagnostics.
//!
//! An [`ExponentSpec`] pairs a closed-form exponent with the constants the
//! user declares for it (`p⁻`, `p⁺`, `δ`, `M₀`, `C₀`, `α`). Those constants are
//! never inferred from the formula at check time: [`ExponentSpec::check_class_s`]
//! tests them against a log-spaced grid and reports every violation with a
//! witness. A passing report is evidence at grid scale, not a proof.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Error, Result};
use crate::math::{exp, ln, log_grid, powf};

/// Closed-form family of the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentKind {
    /// `p(x) = γ`. `γ = 1` is GBM, other values are CEV.
    Constant { gamma: f64 },
    /// `p(x) = 1 + a·e^{-b x}`
    ExpDecay { a: f64, b: f64 },
    /// `p(x) = 1 + a/(1 + x)²`
    InverseSquare { a: f64 },
    /// `p(x) = 1 + c/(1 + x)`
    RationalDecay { c: f64 },
}

/// An exponent function together with its declared class-𝒮 constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "SpecRepr", into = "SpecRepr")]
pub struct ExponentSpec {
    pub kind: ExponentKind,
    /// Declared infimum of `p` over `(0, ∞)`.
    pub p_minus: f64,
    /// Declared supremum of `p` over `(0, ∞)`.
    pub p_plus: f64,
    /// Split point of the piecewise derivative bound.
    pub delta: f64,
    /// Bound on `|p'|` over `(0, δ]`.
    pub m0: f64,
    /// Tail coefficient: `|p'(x)| ≤ C₀ x^{-1-α}` for `x > δ`.
    pub c0: f64,
    /// Tail decay exponent; the class requires `p⁺ < 1 + α`.
    pub alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    #[serde(flatten)]
    kind: ExponentKind,
    #[serde(default)]
    p_minus: Option<f64>,
    #[serde(default)]
    p_plus: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    m0: Option<f64>,
    #[serde(default)]
    c0: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
}

impl From<SpecRepr> for ExponentSpec {
    fn from(r: SpecRepr) -> Self {
        let d = ExponentSpec::new(r.kind);
        ExponentSpec {
            kind: r.kind,
            p_minus: r.p_minus.unwrap_or(d.p_minus),
            p_plus: r.p_plus.unwrap_or(d.p_plus),
            delta: r.delta.unwrap_or(d.delta),
            m0: r.m0.unwrap_or(d.m0),
            c0: r.c0.unwrap_or(d.c0),
            alpha: r.alpha.unwrap_or(d.alpha),
        }
    }
}

impl From<ExponentSpec> for SpecRepr {
    fn from(s: ExponentSpec) -> Self {
        SpecRepr {
            kind: s.kind,
            p_minus: Some(s.p_minus),
            p_plus: Some(s.p_plus),
            delta: Some(s.delta),
            m0: Some(s.m0),
            c0: Some(s.c0),
            alpha: Some(s.alpha),
        }
    }
}

impl ExponentSpec {
    /// Builds a spec with constants that are valid for the closed form.
    ///
    /// Kinds that cannot satisfy the tail hypothesis (e.g. `RationalDecay`
    /// with `c ≥ 1`, where `p⁺ ≥ 2` but the derivative only decays like `x⁻²`)
    /// still get constants; the class check will then flag them.
    pub fn new(kind: ExponentKind) -> Self {
        let (p_minus, p_plus, delta, m0, c0, alpha) = match kind {
            ExponentKind::Constant { gamma } => (gamma, gamma, 1.0, 1.0, 1.0, gamma.max(1.0)),
            ExponentKind::ExpDecay { a, b } => {
                let alpha = 1.0 + a;
                let delta = 1.0;
                // sup over x > δ of a·b·e^{-bx}·x^{1+α}
                let m = 1.0 + alpha;
                let x_star = (m / b).max(delta);
                let c0 = a * b * exp(-b * x_star) * powf(x_star, m) * (1.0 + 1e-9);
                (1.0, 1.0 + a, delta, a * b, c0, alpha)
            }
            ExponentKind::InverseSquare { a } => (1.0, 1.0 + a, 1.0, 2.0 * a, 2.0 * a, 2.0),
            ExponentKind::RationalDecay { c } => (1.0, 1.0 + c, 1.0, c, c, 1.0),
        };
        ExponentSpec {
            kind,
            p_minus,
            p_plus,
            delta,
            m0,
            c0,
            alpha,
        }
    }

    /// `p ≡ 1`, the GBM exponent.
    pub fn gbm() -> Self {
        Self::new(ExponentKind::Constant { gamma: 1.0 })
    }

    pub fn cev(gamma: f64) -> Self {
        Self::new(ExponentKind::Constant { gamma })
    }

    pub fn exp_decay(a: f64, b: f64) -> Self {
        Self::new(ExponentKind::ExpDecay { a, b })
    }

    pub fn inverse_square(a: f64) -> Self {
        Self::new(ExponentKind::InverseSquare { a })
    }

    pub fn rational_decay(c: f64) -> Self {
        Self::new(ExponentKind::RationalDecay { c })
    }

    /// True when `p ≡ 1` exactly.
    pub fn is_identity(&self) -> bool {
        matches!(self.kind, ExponentKind::Constant { gamma } if gamma == 1.0)
    }

    /// Constant exponents below one are representable but excluded from the
    /// class and from the Lipschitz/growth guarantees.
    pub fn is_sublinear_cev(&self) -> bool {
        matches!(self.kind, ExponentKind::Constant { gamma } if gamma < 1.0)
    }

    /// Structural checks on parameters and declared constants.
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameters(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        match self.kind {
            ExponentKind::Constant { gamma } => {
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::InvalidParameters(format!(
                        "gamma must be finite and >= 0, got {gamma}"
                    )));
                }
            }
            ExponentKind::ExpDecay { a, b } => {
                finite_pos("a", a)?;
                finite_pos("b", b)?;
            }
            ExponentKind::InverseSquare { a } => finite_pos("a", a)?,
            ExponentKind::RationalDecay { c } => finite_pos("c", c)?,
        }
        finite_pos("delta", self.delta)?;
        finite_pos("m0", self.m0)?;
        finite_pos("c0", self.c0)?;
        finite_pos("alpha", self.alpha)?;
        if !(self.p_minus.is_finite() && self.p_plus.is_finite() && self.p_minus <= self.p_plus) {
            return Err(Error::InvalidParameters(format!(
                "need finite p_minus <= p_plus, got [{}, {}]",
                self.p_minus, self.p_plus
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn p_at(&self, x: f64) -> f64 {
        match self.kind {
            ExponentKind::Constant { gamma } => gamma,
            ExponentKind::ExpDecay { a, b } => 1.0 + a * exp(-b * x),
            ExponentKind::InverseSquare { a } => 1.0 + a / ((1.0 + x) * (1.0 + x)),
            ExponentKind::RationalDecay { c } => 1.0 + c / (1.0 + x),
        }
    }

    #[inline]
    pub(crate) fn dp_at(&self, x: f64) -> f64 {
        match self.kind {
            ExponentKind::Constant { .. } => 0.0,
            ExponentKind::ExpDecay { a, b } => -a * b * exp(-b * x),
            ExponentKind::InverseSquare { a } => {
                let s = 1.0 + x;
                -2.0 * a / (s * s * s)
            }
            ExponentKind::RationalDecay { c } => {
                let s = 1.0 + x;
                -c / (s * s)
            }
        }
    }

    /// `x^{p(x)}` as `exp(p(x)·ln x)`, returning `x` itself when `p(x) = 1`.
    #[inline]
    pub(crate) fn phi_at(&self, x: f64) -> f64 {
        let p = self.p_at(x);
        if p == 1.0 {
            x
        } else {
            exp(p * ln(x))
        }
    }

    /// `p(x)·x^{p(x)-1} + p'(x)·x^{p(x)}·ln x`
    #[inline]
    pub(crate) fn dphi_at(&self, x: f64) -> f64 {
        let p = self.p_at(x);
        let dp = self.dp_at(x);
        if p == 1.0 && dp == 0.0 {
            return 1.0;
        }
        let lx = ln(x);
        let x_pm1 = exp((p - 1.0) * lx);
        p * x_pm1 + dp * (x_pm1 * x) * lx
    }

    pub fn eval_p(&self, x: f64) -> Result<f64> {
        require_positive("eval_p", x)?;
        Ok(self.p_at(x))
    }

    pub fn eval_dp(&self, x: f64) -> Result<f64> {
        require_positive("eval_dp", x)?;
        Ok(self.dp_at(x))
    }

    pub fn eval_phi(&self, x: f64) -> Result<f64> {
        require_positive("eval_phi", x)?;
        Ok(self.phi_at(x))
    }

    pub fn eval_dphi(&self, x: f64) -> Result<f64> {
        require_positive("eval_dphi", x)?;
        Ok(self.dphi_at(x))
    }

    /// `sup_{x∈[λ,R]} |p(x) − 1|`.
    ///
    /// The three decaying kinds are monotone decreasing in `x`, so the
    /// supremum sits at the left endpoint.
    pub fn sup_deviation(&self, lambda: f64, r: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(domain("sup_deviation", format!("lambda must be > 0, got {lambda}")));
        }
        if !(r > lambda) {
            return Err(domain(
                "sup_deviation",
                format!("need R > lambda, got lambda = {lambda}, R = {r}"),
            ));
        }
        Ok(match self.kind {
            ExponentKind::Constant { gamma } => (gamma - 1.0).abs(),
            ExponentKind::ExpDecay { a, b } => a * exp(-b * lambda),
            ExponentKind::InverseSquare { a } => a / ((1.0 + lambda) * (1.0 + lambda)),
            ExponentKind::RationalDecay { c } => c / (1.0 + lambda),
        })
    }

    /// Numerical evidence for hypotheses (p1)–(p3) on a log-spaced grid over
    /// `[grid_lo, cutoff]`.
    pub fn check_class_s(&self, opts: &CheckOptions) -> Result<CheckReport> {
        if !(opts.cutoff > self.delta) {
            return Err(domain(
                "check_class_s",
                format!("cutoff {} must exceed delta {}", opts.cutoff, self.delta),
            ));
        }
        if opts.grid_points < 100 {
            return Err(domain(
                "check_class_s",
                format!("grid_points must be >= 100, got {}", opts.grid_points),
            ));
        }
        if !(opts.grid_lo > 0.0 && opts.grid_lo < opts.cutoff) {
            return Err(domain("check_class_s", "need 0 < grid_lo < cutoff"));
        }
        let grid = log_grid(opts.grid_lo, opts.cutoff, opts.grid_points);

        // (p1): declared bounds are admissible and contain every grid value.
        let p1 = {
            let mut h = Hypothesis::pass();
            if !(self.p_minus >= 1.0) {
                h.fail(None, format!("declared p_minus = {} < 1", self.p_minus));
            } else if !self.p_plus.is_finite() || self.p_plus < self.p_minus {
                h.fail(None, format!("declared p_plus = {} invalid", self.p_plus));
            } else {
                let slack = opts.range_tol * self.p_plus.abs().max(1.0);
                let worst = grid
                    .iter()
                    .map(|&x| {
                        let p = self.p_at(x);
                        let excess = (self.p_minus - p).max(p - self.p_plus);
                        (x, p, excess)
                    })
                    .fold((0.0, 0.0, f64::NEG_INFINITY), |acc, c| if c.2 > acc.2 { c } else { acc });
                if worst.2 > slack {
                    h.fail(
                        Some(worst.0),
                        format!(
                            "p({}) = {} outside declared [{}, {}]",
                            worst.0, worst.1, self.p_minus, self.p_plus
                        ),
                    );
                }
            }
            h
        };

        // (p2): p(cutoff) close to one and (p(x)-1)·ln x not growing over the
        // last decade of the grid.
        let p2 = {
            let mut h = Hypothesis::pass();
            let dev_at_cutoff = (self.p_at(opts.cutoff) - 1.0).abs();
            let log_dev = |x: f64| (self.p_at(x) - 1.0) * ln(x);
            let tail_start = (opts.cutoff / 10.0).max(opts.grid_lo);
            let tail_max = grid
                .iter()
                .filter(|&&x| x >= 1.0 && x <= tail_start)
                .map(|&x| log_dev(x).abs())
                .fold(0.0, f64::max);
            let at_cutoff = log_dev(opts.cutoff).abs();
            if !(dev_at_cutoff <= opts.limit_tol) {
                h.fail(
                    Some(opts.cutoff),
                    format!("|p(cutoff) - 1| = {dev_at_cutoff} exceeds {}", opts.limit_tol),
                );
            }
            if !(at_cutoff <= tail_max + opts.limit_tol) {
                h.fail(
                    Some(opts.cutoff),
                    format!(
                        "(p(x)-1)·ln x still growing: {at_cutoff} at cutoff vs {tail_max} up to cutoff/10"
                    ),
                );
            }
            h
        };

        // (p3): p⁺ < 1 + α and the piecewise derivative bound.
        let p3 = {
            let mut h = Hypothesis::pass();
            if !(self.p_plus < 1.0 + self.alpha) {
                h.fail(
                    None,
                    format!("p_plus = {} is not < 1 + alpha = {}", self.p_plus, 1.0 + self.alpha),
                );
            }
            let mut worst = (0.0, 1.0);
            for &x in &grid {
                let bound = if x <= self.delta {
                    self.m0
                } else {
                    self.c0 * powf(x, -1.0 - self.alpha)
                };
                let ratio = self.dp_at(x).abs() / bound;
                if ratio > worst.1 * (1.0 + opts.range_tol) {
                    worst = (x, ratio);
                }
            }
            if worst.1 > 1.0 + opts.range_tol {
                h.fail(
                    Some(worst.0),
                    format!("|p'(x)| exceeds the declared bound by factor {} at x = {}", worst.1, worst.0),
                );
            }
            h
        };

        Ok(CheckReport {
            grid_lo: opts.grid_lo,
            cutoff: opts.cutoff,
            grid_points: opts.grid_points,
            limit_tol: opts.limit_tol,
            range_tol: opts.range_tol,
            passed: p1.passed && p2.passed && p3.passed,
            p1,
            p2,
            p3,
            scope: String::from("evidence at grid scale"),
        })
    }

    /// Grid oracle for the Lipschitz constant `L` and the linear-growth
    /// constant `K` of `φ(x) = x^{p(x)}`, each inflated by [`SAFETY_FACTOR`].
    pub fn estimate_constants(&self, grid_lo: f64, grid_hi: f64, grid_points: usize) -> Result<GrowthConstants> {
        if !(grid_lo > 0.0 && grid_lo < grid_hi) {
            return Err(domain(
                "estimate_constants",
                format!("need 0 < grid_lo < grid_hi, got ({grid_lo}, {grid_hi})"),
            ));
        }
        if grid_points < 1000 {
            return Err(domain(
                "estimate_constants",
                format!("grid_points must be >= 1000, got {grid_points}"),
            ));
        }
        let mut raw_l = 0.0_f64;
        let mut raw_k = 0.0_f64;
        for x in log_grid(grid_lo, grid_hi, grid_points) {
            let d = self.dphi_at(x);
            let g = self.phi_at(x) / (1.0 + x);
            if !d.is_finite() {
                return Err(Error::NonFinite { op: "estimate_constants (dphi)", x });
            }
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "estimate_constants (phi)", x });
            }
            raw_l = raw_l.max(d.abs());
            raw_k = raw_k.max(g);
        }
        Ok(GrowthConstants {
            lipschitz_l: SAFETY_FACTOR * raw_l,
            growth_k: SAFETY_FACTOR * raw_k,
            raw_l,
            raw_k,
            grid_lo,
            grid_hi,
            grid_points,
        })
    }
}

/// Inflation applied to grid maxima, which underestimate true suprema.
pub const SAFETY_FACTOR: f64 = 1.05;

/// Default oracle grid: log-spaced, 10 000 points on `(1e-6, 1e6)`.
pub const DEFAULT_GRID: (f64, f64, usize) = (1e-6, 1e6, 10_000);

/// Grid oracle result for the Lipschitz and linear-growth constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub lipschitz_l: f64,
    pub growth_k: f64,
    /// Grid maxima before the safety factor.
    pub raw_l: f64,
    pub raw_k: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
}

/// Grid and tolerances for [`ExponentSpec::check_class_s`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    pub grid_lo: f64,
    pub cutoff: f64,
    pub grid_points: usize,
    /// Tolerance on `|p(cutoff) − 1|` and on tail growth of `(p−1)·ln x`.
    pub limit_tol: f64,
    /// Relative slack for the range and derivative bounds.
    pub range_tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            grid_lo: 1e-6,
            cutoff: 1e4,
            grid_points: 10_000,
            limit_tol: 1e-3,
            range_tol: 1e-9,
        }
    }
}

/// Outcome for one hypothesis, with the worst witness when it fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub passed: bool,
    pub witness: Option<f64>,
    pub violations: Vec<String>,
}

impl Hypothesis {
    fn pass() -> Self {
        Hypothesis {
            passed: true,
            witness: None,
            violations: Vec::new(),
        }
    }

    fn fail(&mut self, witness: Option<f64>, msg: String) {
        self.passed = false;
        if self.witness.is_none() {
            self.witness = witness;
        }
        self.violations.push(msg);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub grid_lo: f64,
    pub cutoff: f64,
    pub grid_points: usize,
    pub limit_tol: f64,
    pub range_tol: f64,
    pub passed: bool,
    pub p1: Hypothesis,
    pub p2: Hypothesis,
    pub p3: Hypothesis,
    pub scope: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p1() -> ExponentSpec {
        ExponentSpec::exp_decay(0.005, 0.1)
    }

    fn p2() -> ExponentSpec {
        ExponentSpec::rational_decay(1e-3)
    }

    #[test]
    fn eval_p_examples() {
        assert_relative_eq!(p1().eval_p(1.0).unwrap(), 1.004_524_187_090_179_8, max_relative = 1e-14);
        assert_eq!(ExponentSpec::gbm().eval_p(123.0).unwrap(), 1.0);
        assert_relative_eq!(p2().eval_p(0.1).unwrap(), 1.0 + 1e-3 / 1.1, max_relative = 1e-15);
    }

    #[test]
    fn eval_dp_examples() {
        assert_relative_eq!(p1().eval_dp(1e-300).unwrap(), -0.0005, max_relative = 1e-12);
        assert_eq!(ExponentSpec::cev(1.7).eval_dp(3.0).unwrap(), 0.0);
        assert_relative_eq!(ExponentSpec::inverse_square(1.0).eval_dp(1.0).unwrap(), -0.25);
    }

    #[test]
    fn eval_phi_examples() {
        assert_eq!(ExponentSpec::gbm().eval_phi(2.5).unwrap(), 2.5);
        assert_eq!(p1().eval_phi(1.0).unwrap(), 1.0);
        assert_relative_eq!(p2().eval_phi(0.5).unwrap(), 0.499_769_004_315_259_7, max_relative = 1e-12);
    }

    #[test]
    fn eval_dphi_examples() {
        assert_eq!(ExponentSpec::gbm().eval_dphi(7.0).unwrap(), 1.0);
        assert_relative_eq!(ExponentSpec::cev(2.0).eval_dphi(3.0).unwrap(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(p1().eval_dphi(1.0).unwrap(), 1.004_524_187_090_179_8, max_relative = 1e-14);
    }

    #[test]
    fn non_positive_arguments_are_domain_errors() {
        let s = p1();
        for x in [0.0, -1.0, f64::NAN] {
            assert!(matches!(s.eval_p(x), Err(Error::Domain { .. })));
            assert!(matches!(s.eval_dp(x), Err(Error::Domain { .. })));
            assert!(matches!(s.eval_phi(x), Err(Error::Domain { .. })));
            assert!(matches!(s.eval_dphi(x), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn sup_deviation_examples() {
        assert_relative_eq!(p1().sup_deviation(0.1, 1.1).unwrap(), 0.005 * (-0.01f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(p2().sup_deviation(0.1, 1.1).unwrap(), 1e-3 / 1.1, max_relative = 1e-14);
        assert_eq!(ExponentSpec::gbm().sup_deviation(0.3, 4.0).unwrap(), 0.0);
        assert!(p1().sup_deviation(0.0, 1.0).is_err());
        assert!(p1().sup_deviation(0.5, 0.5).is_err());
    }

    #[test]
    fn sup_deviation_matches_dense_scan() {
        for spec in [p1(), p2(), ExponentSpec::inverse_square(1.0)] {
            let (lam, r) = (0.05, 3.0);
            let scan = log_grid(lam, r, 20_001)
                .into_iter()
                .map(|x| (spec.p_at(x) - 1.0).abs())
                .fold(0.0, f64::max);
            assert_relative_eq!(spec.sup_deviation(lam, r).unwrap(), scan, max_relative = 1e-12);
        }
    }

    #[test]
    fn class_s_passes_for_decaying_examples() {
        let opts = CheckOptions::default();
        for spec in [p1(), p2()] {
            let report = spec.check_class_s(&opts).unwrap();
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn class_s_inverse_square_constants_pass() {
        let mut spec = ExponentSpec::inverse_square(1.0);
        spec.delta = 1.0;
        spec.m0 = 2.0;
        spec.c0 = 2.0;
        spec.alpha = 2.0;
        let report = spec.check_class_s(&CheckOptions::default()).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn class_s_rejects_constant_two() {
        let report = ExponentSpec::cev(2.0).check_class_s(&CheckOptions::default()).unwrap();
        assert!(!report.passed);
        assert!(!report.p2.passed);
        assert_eq!(report.p2.witness, Some(1e4));
        assert!(report.p1.passed);
    }

    #[test]
    fn class_s_flags_sublinear_cev_under_p1() {
        let spec = ExponentSpec::cev(0.5);
        assert!(spec.is_sublinear_cev());
        let report = spec.check_class_s(&CheckOptions::default()).unwrap();
        assert!(!report.p1.passed);
    }

    #[test]
    fn class_s_flags_understated_derivative_bound() {
        let mut spec = p1();
        spec.m0 = 1e-4;
        let report = spec.check_class_s(&CheckOptions::default()).unwrap();
        assert!(!report.p3.passed);
        assert!(report.p3.witness.unwrap() <= spec.delta);
    }

    #[test]
    fn class_s_flags_p_plus_range_violation() {
        let mut spec = p2();
        spec.p_plus = 1.0005;
        let report = spec.check_class_s(&CheckOptions::default()).unwrap();
        assert!(!report.p1.passed);
        assert!(report.p1.witness.unwrap() < 1.0);
    }

    #[test]
    fn class_s_preconditions() {
        let spec = p1();
        let opts = CheckOptions { grid_points: 50, ..CheckOptions::default() };
        assert!(spec.check_class_s(&opts).is_err());
        let opts = CheckOptions { cutoff: 0.5, ..CheckOptions::default() };
        assert!(spec.check_class_s(&opts).is_err());
    }

    #[test]
    fn constants_for_identity_are_exact() {
        let (lo, hi, n) = DEFAULT_GRID;
        let c = ExponentSpec::gbm().estimate_constants(lo, hi, n).unwrap();
        assert_eq!(c.raw_l, 1.0);
        assert!(c.raw_k < 1.0);
        assert_relative_eq!(c.lipschitz_l, 1.05);
        assert_relative_eq!(c.growth_k, 1.05, max_relative = 1e-6);
    }

    #[test]
    fn constants_for_decaying_examples_are_finite() {
        let (lo, hi, n) = DEFAULT_GRID;
        let c1 = p1().estimate_constants(lo, hi, n).unwrap();
        assert!(c1.raw_k <= 1.01 && c1.lipschitz_l.is_finite());
        let c2 = p2().estimate_constants(lo, hi, n).unwrap();
        assert!(c2.growth_k.is_finite() && c2.lipschitz_l.is_finite());
        assert!(p1().estimate_constants(lo, hi, 999).is_err());
        assert!(p1().estimate_constants(2.0, 1.0, 1000).is_err());
    }

    #[test]
    fn json_shape() {
        let json = r#"{"kind":"exp_decay","a":0.005,"b":0.1,"p_minus":1.0,"p_plus":1.005,"delta":1.0,"m0":0.0005,"c0":0.03,"alpha":1.0}"#;
        let spec: ExponentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, ExponentKind::ExpDecay { a: 0.005, b: 0.1 });
        assert_eq!(spec.c0, 0.03);
        let back: ExponentSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        // omitted constants fall back to the closed-form defaults
        let bare: ExponentSpec = serde_json::from_str(r#"{"kind":"rational_decay","c":0.001}"#).unwrap();
        assert_eq!(bare, p2());
    }

    fn any_spec() -> impl Strategy<Value = ExponentSpec> {
        prop_oneof![
            (0.0..3.0f64).prop_map(ExponentSpec::cev),
            (1e-4..1.0f64, 1e-3..2.0f64).prop_map(|(a, b)| ExponentSpec::exp_decay(a, b)),
            (1e-4..2.0f64).prop_map(ExponentSpec::inverse_square),
            (1e-4..1.0f64).prop_map(ExponentSpec::rational_decay),
        ]
    }

    proptest! {
        #[test]
        fn dphi_matches_central_difference(spec in any_spec(), lx in -8.0..8.0f64) {
            let x = lx.exp();
            let h = 1e-6 * x;
            let fd = (spec.phi_at(x + h) - spec.phi_at(x - h)) / (2.0 * h);
            let d = spec.dphi_at(x);
            prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()), "x={x} d={d} fd={fd}");
        }

        #[test]
        fn p_stays_in_declared_range(spec in any_spec(), lx in -12.0..12.0f64) {
            let p = spec.p_at(lx.exp());
            prop_assert!(p >= spec.p_minus - 1e-15 && p <= spec.p_plus + 1e-15);
        }

        #[test]
        fn identity_exponent_is_exact(x in 1e-300..1e300f64) {
            let g = ExponentSpec::gbm();
            prop_assert_eq!(g.phi_at(x), x);
            prop_assert_eq!(g.dphi_at(x), 1.0);
        }

        #[test]
        fn sup_deviation_non_increasing_in_lambda(l1 in 1e-6..5.0f64, l2 in 1e-6..5.0f64) {
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            for spec in [p1(), p2(), ExponentSpec::inverse_square(1.0)] {
                prop_assert!(spec.sup_deviation(lo, 10.0).unwrap() >= spec.sup_deviation(hi, 10.0).unwrap());
            }
        }
    }
}
