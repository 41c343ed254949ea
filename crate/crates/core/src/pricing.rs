//! European call pricing and implied volatility from terminal samples.
//!
//! Paths come from the real-world dynamics, so a smile built from them is an
//! illustration of the shape induced by `p(·)`, not a risk-neutral valuation.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::PathBatch;
use crate::error::{domain, Bound, Error, Result};
use crate::math::{exp, ln, mean, norm_cdf, norm_pdf, sample_variance, sqrt};

/// Lower end of the implied-vol bracket; prices at or below the call value
/// at this vol are reported at the floor.
pub const VOL_FLOOR: f64 = 1e-6;
pub const VOL_CAP: f64 = 5.0;

fn check_contract(op: &'static str, spot: f64, strike: f64, rate: f64, maturity: f64) -> Result<()> {
    if !(spot > 0.0 && spot.is_finite()) {
        return Err(domain(op, format!("spot must be > 0, got {spot}")));
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(domain(op, format!("strike must be > 0, got {strike}")));
    }
    if !rate.is_finite() {
        return Err(domain(op, "rate must be finite"));
    }
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(domain(op, format!("maturity must be > 0, got {maturity}")));
    }
    Ok(())
}

fn call_unchecked(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> f64 {
    let df = exp(-rate * maturity);
    if vol == 0.0 {
        return (spot - strike * df).max(0.0);
    }
    let sd = vol * sqrt(maturity);
    let d1 = (ln(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / sd;
    spot * norm_cdf(d1) - strike * df * norm_cdf(d1 - sd)
}

fn vega_unchecked(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> f64 {
    let sd = vol * sqrt(maturity);
    let d1 = (ln(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / sd;
    spot * norm_pdf(d1) * sqrt(maturity)
}

/// Black–Scholes call value. `vol = 0` gives the discounted intrinsic value.
pub fn bs_call(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> Result<f64> {
    check_contract("bs_call", spot, strike, rate, maturity)?;
    if !(vol >= 0.0 && vol.is_finite()) {
        return Err(domain("bs_call", format!("vol must be >= 0, got {vol}")));
    }
    Ok(call_unchecked(spot, strike, rate, vol, maturity))
}

/// `∂C/∂σ`.
pub fn bs_vega(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> Result<f64> {
    check_contract("bs_vega", spot, strike, rate, maturity)?;
    if !(vol > 0.0) {
        return Err(domain("bs_vega", format!("vol must be > 0, got {vol}")));
    }
    Ok(vega_unchecked(spot, strike, rate, vol, maturity))
}

/// No-arbitrage band `[max(S − K e^{−rT}, 0), S)` for a call price.
pub fn call_price_bounds(spot: f64, strike: f64, rate: f64, maturity: f64) -> (f64, f64) {
    ((spot - strike * exp(-rate * maturity)).max(0.0), spot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedVol {
    pub vol: f64,
    /// The price sat at or below the value at [`VOL_FLOOR`].
    pub floored: bool,
}

/// Inverts [`bs_call`] by bisection on `[VOL_FLOOR, VOL_CAP]` followed by
/// safeguarded Newton steps.
pub fn implied_vol(price: f64, spot: f64, strike: f64, rate: f64, maturity: f64) -> Result<ImpliedVol> {
    check_contract("implied_vol", spot, strike, rate, maturity)?;
    let (lower, upper) = call_price_bounds(spot, strike, rate, maturity);
    if !(price >= lower) {
        return Err(Error::NoSolution {
            price,
            bound: Bound::Lower,
            limit: lower,
        });
    }
    if !(price < upper) {
        return Err(Error::NoSolution {
            price,
            bound: Bound::Upper,
            limit: upper,
        });
    }
    let f = |v: f64| call_unchecked(spot, strike, rate, v, maturity) - price;
    let (mut lo, mut hi) = (VOL_FLOOR, VOL_CAP);
    // at the floor the call value equals the lower bound up to rounding
    if f(lo) >= -1e-12 * price {
        return Ok(ImpliedVol {
            vol: VOL_FLOOR,
            floored: true,
        });
    }
    let f_hi = f(hi);
    if f_hi < 0.0 {
        return Err(Error::NoSolution {
            price,
            bound: Bound::Upper,
            limit: f_hi + price,
        });
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fv = f(v);
        if fv.abs() <= 1e-13 * price || hi - lo <= 1e-15 * v {
            break;
        }
        if fv < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let vega = vega_unchecked(spot, strike, rate, v, maturity);
        let newton = v - fv / vega;
        v = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(ImpliedVol { vol: v, floored: false })
}

/// Monte-Carlo price with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub price: f64,
    pub se: f64,
}

/// Averages antithetic partners (`i`, `i + n/2`) into one observation each.
fn pair_average(values: &[f64], antithetic: bool) -> Vec<f64> {
    if antithetic {
        let half = values.len() / 2;
        (0..half).map(|i| 0.5 * (values[i] + values[i + half])).collect()
    } else {
        values.to_vec()
    }
}

fn discounted_estimate(obs: &[f64], df: f64) -> McPrice {
    let n = obs.len() as f64;
    McPrice {
        price: df * mean(obs),
        se: 1.96 * df * sqrt(sample_variance(obs)) / sqrt(n),
    }
}

/// Discounted mean call payoff over terminal states. With `antithetic`, the
/// second half of `terminal` must hold the partners of the first half.
pub fn mc_call_price(terminal: &[f64], strike: f64, rate: f64, maturity: f64, antithetic: bool) -> Result<McPrice> {
    if terminal.is_empty() || (antithetic && !terminal.len().is_multiple_of(2)) {
        return Err(Error::InvalidParameters(format!(
            "need a non-empty sample (even-sized when antithetic), got {}",
            terminal.len()
        )));
    }
    let payoffs: Vec<f64> = terminal.iter().map(|&x| (x - strike).max(0.0)).collect();
    Ok(discounted_estimate(&pair_average(&payoffs, antithetic), exp(-rate * maturity)))
}

/// Control-variate estimator against coupled GBM terminals whose exact price
/// is the Black–Scholes value at `control_vol`:
/// `C = e^{−rT}·mean(payoff − payoff_gbm) + BS(control_vol)`.
#[allow(clippy::too_many_arguments)]
pub fn mc_call_price_cv(
    terminal: &[f64],
    control_terminal: &[f64],
    control_vol: f64,
    spot: f64,
    strike: f64,
    rate: f64,
    maturity: f64,
    antithetic: bool,
) -> Result<McPrice> {
    if terminal.len() != control_terminal.len() {
        return Err(Error::ShapeMismatch(format!(
            "control sample has {} paths, model has {}",
            control_terminal.len(),
            terminal.len()
        )));
    }
    if terminal.is_empty() || (antithetic && !terminal.len().is_multiple_of(2)) {
        return Err(Error::InvalidParameters(alloc::string::String::from(
            "need a non-empty sample (even-sized when antithetic)",
        )));
    }
    let diffs: Vec<f64> = terminal
        .iter()
        .zip(control_terminal)
        .map(|(&x, &g)| (x - strike).max(0.0) - (g - strike).max(0.0))
        .collect();
    let est = discounted_estimate(&pair_average(&diffs, antithetic), exp(-rate * maturity));
    Ok(McPrice {
        price: est.price + bs_call(spot, strike, rate, control_vol, maturity)?,
        se: est.se,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileRequest {
    pub strikes: Vec<f64>,
    pub rate: f64,
    pub maturity: f64,
    pub spot: f64,
}

impl SmileRequest {
    /// 21 strikes uniform on `[0.8, 1.2]·spot`.
    pub fn default_grid(spot: f64, rate: f64, maturity: f64) -> Self {
        SmileRequest {
            strikes: (0..21).map(|i| spot * (0.8 + 0.02 * i as f64)).collect(),
            rate,
            maturity,
            spot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strikes.is_empty() || self.strikes.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidParameters(alloc::string::String::from(
                "strikes must be non-empty and positive",
            )));
        }
        if self.strikes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameters(alloc::string::String::from(
                "strikes must be strictly increasing",
            )));
        }
        check_contract("smile", self.spot, self.strikes[0], self.rate, self.maturity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmileFlag {
    Ok,
    /// Price within one half-width of a no-arbitrage bound.
    NearBound,
    /// Implied vol hit the bracket floor.
    Floor,
    NoSolution,
}

impl SmileFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            SmileFlag::Ok => "ok",
            SmileFlag::NearBound => "near_bound",
            SmileFlag::Floor => "floor",
            SmileFlag::NoSolution => "no_solution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub strike: f64,
    pub price: f64,
    pub price_se: f64,
    pub iv: Option<f64>,
    /// Implied vols at `price ∓ price_se`.
    pub se_low: Option<f64>,
    pub se_high: Option<f64>,
    pub flag: SmileFlag,
}

impl SmilePoint {
    /// Half the width of the implied-vol band.
    pub fn iv_half_width(&self) -> Option<f64> {
        Some(0.5 * (self.se_high? - self.se_low?))
    }
}

/// GBM paths coupled to the priced batch, used as a control variate.
#[derive(Debug, Clone, Copy)]
pub struct ControlVariate<'a> {
    pub batch: &'a PathBatch,
    pub vol: f64,
}

/// Implied-vol smile from a batch's terminal states. Failing strikes are
/// flagged; the call fails only on malformed inputs.
pub fn smile(batch: &PathBatch, req: &SmileRequest, control: Option<ControlVariate<'_>>) -> Result<Vec<SmilePoint>> {
    req.validate()?;
    let t = batch.config.t_horizon;
    if (t - req.maturity).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::InvalidParameters(format!(
            "batch horizon {t} does not match maturity {}",
            req.maturity
        )));
    }
    let terminal = batch.terminals();
    let antithetic = batch.config.antithetic;
    let control_terminal = match control {
        Some(cv) => {
            if cv.batch.config.antithetic != antithetic || cv.batch.time_grid != batch.time_grid {
                return Err(Error::ShapeMismatch(alloc::string::String::from(
                    "control batch is not coupled to the priced batch",
                )));
            }
            Some(cv.batch.terminals())
        }
        None => None,
    };
    req.strikes
        .iter()
        .map(|&strike| {
            let est = match (&control_terminal, control) {
                (Some(ct), Some(cv)) => mc_call_price_cv(
                    &terminal, ct, cv.vol, req.spot, strike, req.rate, req.maturity, antithetic,
                )?,
                _ => mc_call_price(&terminal, strike, req.rate, req.maturity, antithetic)?,
            };
            Ok(smile_point(strike, est, req))
        })
        .collect()
}

fn smile_point(strike: f64, est: McPrice, req: &SmileRequest) -> SmilePoint {
    let mut point = SmilePoint {
        strike,
        price: est.price,
        price_se: est.se,
        iv: None,
        se_low: None,
        se_high: None,
        flag: SmileFlag::Ok,
    };
    let (lower, upper) = call_price_bounds(req.spot, strike, req.rate, req.maturity);
    if est.price - est.se <= lower || est.price + est.se >= upper {
        point.flag = SmileFlag::NearBound;
        return point;
    }
    let invert = |p: f64| implied_vol(p, req.spot, strike, req.rate, req.maturity);
    match (invert(est.price), invert(est.price - est.se), invert(est.price + est.se)) {
        (Ok(mid), Ok(lo), Ok(hi)) => {
            point.flag = if mid.floored { SmileFlag::Floor } else { SmileFlag::Ok };
            point.iv = Some(mid.vol);
            point.se_low = Some(lo.vol);
            point.se_high = Some(hi.vol);
        }
        _ => point.flag = SmileFlag::NoSolution,
    }
    point
}
