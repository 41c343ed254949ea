//! Pathwise statistics over simulated batches.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bounds::{error_bound, BoundInputs};
use crate::engine::{integrate_path, Executor, PathBatch};
use crate::error::{domain, Error, Result};
use crate::exponent::ExponentSpec;
use crate::math::{log_log_slope, mean, sample_variance, sqrt};
use crate::model::ModelSpec;
use crate::rng::{coarsen, gen_increments};
use crate::scheme::Scheme;

/// Estimate of `E[sup_t |X(t) − Y(t)|]` for two coupled batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub model_label: String,
    pub reference_label: String,
    pub strong_error: f64,
    /// 95% half-width over pair-level observations.
    pub ci_half_width: f64,
    /// Smallest state visited by either batch.
    pub lambda_obs: f64,
    /// Largest state visited by either batch.
    pub r_obs: f64,
    pub n_paths: usize,
    pub n_pairs: usize,
    pub analytic_bound: Option<f64>,
}

impl ErrorReport {
    /// Attaches the analytical bound on the observed window
    /// `[lambda_obs, r_obs]`, using the exponent's declared `p⁺`.
    pub fn attach_bound(&mut self, exponent: &ExponentSpec, mu: f64, sigma: f64, t_horizon: f64) -> Result<f64> {
        let (lambda, r) = (self.lambda_obs, self.r_obs);
        let bound = error_bound(&BoundInputs {
            mu,
            sigma,
            t_horizon,
            lambda,
            r,
            p_plus: exponent.p_plus.max(1.0),
            sup_dev: exponent.sup_deviation(lambda, r)?,
            growth_k: 1.0,
            ex0_sq: 0.0,
        })?;
        self.analytic_bound = Some(bound);
        Ok(bound)
    }
}

fn pair_observations(values: &[f64], antithetic: bool) -> Vec<f64> {
    if antithetic {
        let half = values.len() / 2;
        (0..half).map(|i| 0.5 * (values[i] + values[i + half])).collect()
    } else {
        values.to_vec()
    }
}

fn mean_and_half_width(obs: &[f64]) -> (f64, f64) {
    let m = mean(obs);
    (m, 1.96 * sqrt(sample_variance(obs)) / sqrt(obs.len() as f64))
}

/// Per-path `max_k |a_i(t_k) − b_i(t_k)|`, from dense rows when both batches
/// have them, otherwise from the coupling record of a coupled run.
pub fn pathwise_sup_diff(a: &PathBatch, b: &PathBatch) -> Result<Vec<f64>> {
    if a.time_grid != b.time_grid {
        return Err(Error::ShapeMismatch(String::from("time grids differ")));
    }
    if a.n_paths() != b.n_paths() || a.config.antithetic != b.config.antithetic {
        return Err(Error::ShapeMismatch(format!(
            "path layouts differ: {} vs {} paths",
            a.n_paths(),
            b.n_paths()
        )));
    }
    if let (Some(ra), Some(rb)) = (&a.values, &b.values) {
        return Ok(ra
            .iter()
            .zip(rb)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
            .collect());
    }
    for (from, other) in [(a, b), (b, a)] {
        if let Some(c) = &from.coupling {
            if c.reference_label == other.model_label {
                return Ok(c.sup_diff.clone());
            }
        }
    }
    Err(Error::ShapeMismatch(String::from(
        "batches are neither dense nor coupled to each other",
    )))
}

/// Strong (pathwise sup) error between two coupled batches. Antithetic
/// partners are averaged before the confidence interval is formed.
pub fn strong_error(a: &PathBatch, b: &PathBatch) -> Result<ErrorReport> {
    let diffs = pathwise_sup_diff(a, b)?;
    let obs = pair_observations(&diffs, a.config.antithetic);
    let (m, hw) = mean_and_half_width(&obs);
    Ok(ErrorReport {
        model_label: a.model_label.clone(),
        reference_label: b.model_label.clone(),
        strong_error: m,
        ci_half_width: hw,
        lambda_obs: a.min_value().min(b.min_value()),
        r_obs: a.max_value().max(b.max_value()),
        n_paths: a.n_paths(),
        n_pairs: obs.len(),
        analytic_bound: None,
    })
}

/// Monte-Carlo `E[sup_{t≤T} X(t)²]` on the grid.
pub fn sup_second_moment(batch: &PathBatch) -> Result<f64> {
    if batch.n_paths() == 0 {
        return Err(Error::InvalidParameters(String::from("empty batch")));
    }
    let sq: Vec<f64> = batch.summaries.iter().map(|s| s.max * s.max).collect();
    Ok(mean(&sq))
}

pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins on `[min, max]`; a degenerate range puts everything
    /// in the first bin.
    pub fn build(xs: &[f64], bins: usize) -> Self {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &x in xs {
            let idx = if width > 0.0 {
                (((x - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[idx] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub n_paths: usize,
    pub mean: f64,
    /// 95% half-width of the mean, antithetic pairs averaged first.
    pub mean_half_width: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

pub fn terminal_stats(batch: &PathBatch) -> Result<TerminalStats> {
    if batch.n_paths() == 0 {
        return Err(Error::InvalidParameters(String::from("empty batch")));
    }
    let xs = batch.terminals();
    let (_, hw) = mean_and_half_width(&pair_observations(&xs, batch.config.antithetic));
    let histogram = Histogram::build(&xs, HISTOGRAM_BINS);
    Ok(TerminalStats {
        n_paths: xs.len(),
        mean: mean(&xs),
        mean_half_width: hw,
        variance: sample_variance(&xs),
        min: histogram.lo,
        max: histogram.hi,
        histogram,
    })
}

/// Range of the state-dependent diffusion factor `x^{p(x)}` over visited
/// states. Without dense rows the factor is evaluated at each path's extreme
/// states, which is exact when `x ↦ x^{p(x)}` is monotone on the range.
pub fn diffusion_range(batch: &PathBatch, m: &ModelSpec) -> (f64, f64) {
    let phi = |x: f64| m.exponent.phi_at(x);
    let fold = |acc: (f64, f64), v: f64| (acc.0.min(v), acc.1.max(v));
    let init = (f64::INFINITY, f64::NEG_INFINITY);
    match &batch.values {
        Some(rows) => rows.iter().flat_map(|r| r.iter()).map(|&x| phi(x)).fold(init, fold),
        None => batch
            .summaries
            .iter()
            .flat_map(|s| [phi(s.min), phi(s.max)])
            .fold(init, fold),
    }
}

/// Self-refinement study of strong convergence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub scheme: Scheme,
    pub reference_dt: f64,
    pub dts: Vec<f64>,
    /// `E[max_k |X_Δt(t_k) − X_ref(t_k)|]` over the coarse grid.
    pub errors: Vec<f64>,
    pub ci_half_widths: Vec<f64>,
    /// Least-squares slope of log error against log step.
    pub slope: f64,
}

/// Runs `scheme` at each step in `dts` and at `reference_dt` on the same
/// Brownian paths, with coarse increments formed by summing fine ones.
#[allow(clippy::too_many_arguments)]
pub fn strong_convergence<E: Executor>(
    exec: &E,
    m: &ModelSpec,
    scheme: Scheme,
    x0: f64,
    t_horizon: f64,
    dts: &[f64],
    reference_dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ConvergenceStudy> {
    let steps = |dt: f64| -> Result<usize> {
        let n = libm::round(t_horizon / dt) as usize;
        if n == 0 || (n as f64 * dt - t_horizon).abs() > 1e-12 * t_horizon {
            return Err(domain("strong_convergence", format!("T/dt is not an integer for dt = {dt}")));
        }
        Ok(n)
    };
    let n_ref = steps(reference_dt)?;
    let mut factors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let n = steps(dt)?;
        if n_ref % n != 0 {
            return Err(domain(
                "strong_convergence",
                format!("dt = {dt} is not a multiple of the reference step"),
            ));
        }
        factors.push(n_ref / n);
    }
    if dts.len() < 2 || n_paths == 0 {
        return Err(domain("strong_convergence", "need >= 2 step sizes and >= 1 path"));
    }

    let per_path: Vec<core::result::Result<Vec<f64>, usize>> = exec.map(n_paths, |i| {
        let fine = gen_increments(seed, i as u64, n_ref, reference_dt);
        let mut reference = Vec::new();
        integrate_path(m, scheme, x0, reference_dt, &fine, &mut reference).map_err(|_| i)?;
        let mut row = Vec::new();
        let mut errs = Vec::with_capacity(factors.len());
        for (&dt, &f) in dts.iter().zip(&factors) {
            integrate_path(m, scheme, x0, dt, &coarsen(&fine, f), &mut row).map_err(|_| i)?;
            let e = row
                .iter()
                .enumerate()
                .map(|(k, &x)| (x - reference[k * f]).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        Ok(errs)
    });
    let mut table: Vec<Vec<f64>> = vec![Vec::with_capacity(n_paths); dts.len()];
    let mut blown = Vec::new();
    for r in per_path {
        match r {
            Ok(errs) => errs.into_iter().enumerate().for_each(|(j, e)| table[j].push(e)),
            Err(i) => blown.push(i),
        }
    }
    if !blown.is_empty() {
        return Err(Error::BlowUp {
            model: String::from("convergence study"),
            paths: blown,
        });
    }
    let (errors, ci_half_widths): (Vec<f64>, Vec<f64>) = table.iter().map(|e| mean_and_half_width(e)).unzip();
    Ok(ConvergenceStudy {
        scheme,
        reference_dt,
        dts: dts.to_vec(),
        slope: log_log_slope(dts, &errors),
        errors,
        ci_half_widths,
    })
}
