//! Path generation.
//!
//! The unit of work is one base path index `i`: its increments are drawn once
//! from the `(seed, i)` stream and every model is advanced on them, then again
//! on the negated increments when antithetic pairing is on. Row `i` holds the
//! main path and row `n_base_paths + i` its antithetic partner. Units are
//! independent, so an [`Executor`] may run them in any order or in parallel;
//! results are always assembled by index.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::ln;
use crate::model::{ModelSpec, NamedModel};
use crate::rng::fill_increments;
use crate::scheme::{apply_floor, Scheme, LOG_LIMIT};

/// Dense storage cap; larger runs keep only per-path summaries.
pub const DEFAULT_DENSE_LIMIT_BYTES: u64 = 2 << 30;

fn default_dense_limit() -> u64 {
    DEFAULT_DENSE_LIMIT_BYTES
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Horizon `T`.
    pub t_horizon: f64,
    /// Step `Δt`; `T/Δt` must be an integer.
    pub dt: f64,
    pub n_base_paths: usize,
    #[serde(default)]
    pub antithetic: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Deterministic initial state.
    pub x0: f64,
    #[serde(default = "default_dense_limit")]
    pub dense_limit_bytes: u64,
}

impl SimConfig {
    pub fn new(t_horizon: f64, dt: f64, n_base_paths: usize, x0: f64) -> Self {
        SimConfig {
            t_horizon,
            dt,
            n_base_paths,
            antithetic: false,
            seed: 0,
            scheme: Scheme::LogMilstein,
            x0,
            dense_limit_bytes: DEFAULT_DENSE_LIMIT_BYTES,
        }
    }

    pub fn n_steps(&self) -> usize {
        libm::round(self.t_horizon / self.dt) as usize
    }

    pub fn total_paths(&self) -> usize {
        self.n_base_paths * if self.antithetic { 2 } else { 1 }
    }

    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) {
            return bad(format!("t_horizon must be > 0, got {}", self.t_horizon));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_horizon) {
            return bad(format!("dt must lie in (0, T], got {}", self.dt));
        }
        let n = self.n_steps();
        if ((n as f64 * self.dt) - self.t_horizon).abs() > 1e-12 * self.t_horizon {
            return bad(format!(
                "T/dt = {} is not an integer step count",
                self.t_horizon / self.dt
            ));
        }
        if self.n_base_paths == 0 {
            return bad(String::from("n_base_paths must be >= 1"));
        }
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return bad(format!("x0 must be > 0, got {}", self.x0));
        }
        Ok(())
    }
}

/// Running functionals of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub min: f64,
    pub max: f64,
    pub terminal: f64,
    /// Positivity-floor hits (direct-space schemes only).
    pub breaches: u32,
}

/// Pathwise distance to the first model of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub reference_label: String,
    /// `max_k |X_i(t_k) − X_ref,i(t_k)|` per path.
    pub sup_diff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub model_label: String,
    pub config: SimConfig,
    pub time_grid: Vec<f64>,
    /// One row of `n_steps + 1` states per path; `None` above the dense cap.
    pub values: Option<Vec<Vec<f64>>>,
    pub summaries: Vec<PathSummary>,
    pub coupling: Option<Coupling>,
}

impl PathBatch {
    pub fn n_paths(&self) -> usize {
        self.summaries.len()
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.values.as_ref().and_then(|v| v.get(i)).map(Vec::as_slice)
    }

    pub fn terminals(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.terminal).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.summaries.iter().map(|s| s.min).fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.summaries.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_breaches(&self) -> u64 {
        self.summaries.iter().map(|s| s.breaches as u64).sum()
    }

    /// Index of the antithetic partner of path `i`, if any.
    pub fn partner(&self, i: usize) -> Option<usize> {
        if !self.config.antithetic {
            return None;
        }
        let n = self.config.n_base_paths;
        Some(if i < n { i + n } else { i - n })
    }
}

/// Runs independent units of work and returns results in index order.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs units one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Advances one path from `x0` on the given increments, writing every state
/// into `row` (`increments.len() + 1` entries). Fails when the log state
/// leaves `[-LOG_LIMIT, LOG_LIMIT]` or a direct-space state is not finite.
pub fn integrate_path(
    m: &ModelSpec,
    scheme: Scheme,
    x0: f64,
    dt: f64,
    increments: &[f64],
    row: &mut Vec<f64>,
) -> core::result::Result<PathSummary, usize> {
    row.clear();
    row.reserve(increments.len() + 1);
    row.push(x0);
    let mut summary = PathSummary {
        min: x0,
        max: x0,
        terminal: x0,
        breaches: 0,
    };
    if scheme.is_log_space() {
        let mut y = ln(x0);
        for (k, &dw) in increments.iter().enumerate() {
            y = scheme.advance_log(m, y, dt, dw);
            if !(y.abs() <= LOG_LIMIT) {
                return Err(k + 1);
            }
            let x = libm::exp(y);
            summary.min = summary.min.min(x);
            summary.max = summary.max.max(x);
            row.push(x);
        }
    } else {
        let mut x = x0;
        for (k, &dw) in increments.iter().enumerate() {
            let next = scheme.advance_direct(m, x, dt, dw);
            if !next.is_finite() {
                return Err(k + 1);
            }
            let (kept, breached) = apply_floor(next);
            summary.breaches += breached as u32;
            x = kept;
            summary.min = summary.min.min(x);
            summary.max = summary.max.max(x);
            row.push(x);
        }
    }
    summary.terminal = *row.last().unwrap_or(&x0);
    Ok(summary)
}

fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct PathOut {
    row: Option<Vec<f64>>,
    summary: PathSummary,
    sup_diff: f64,
}

/// Per base index: `[sign][model]`.
/// `Err` carries the failing path indices per model.
type UnitOut = core::result::Result<Vec<Vec<PathOut>>, Vec<Vec<usize>>>;

/// Simulates every model on the same increments. Path `i` of each returned
/// batch consumed the identical increment array.
pub fn simulate_coupled_with<E: Executor>(
    exec: &E,
    models: &[NamedModel],
    cfg: &SimConfig,
) -> Result<Vec<PathBatch>> {
    cfg.validate()?;
    if models.is_empty() {
        return Err(Error::InvalidParameters(String::from("at least one model is required")));
    }
    for m in models {
        m.spec.validate()?;
    }
    let n_steps = cfg.n_steps();
    let n_base = cfg.n_base_paths;
    let dense_bytes = (models.len() as u64)
        .saturating_mul(cfg.total_paths() as u64)
        .saturating_mul((n_steps as u64 + 1) * 8);
    let keep_rows = dense_bytes <= cfg.dense_limit_bytes;
    let signs: &[f64] = if cfg.antithetic { &[1.0, -1.0] } else { &[1.0] };

    let units: Vec<UnitOut> = exec.map(n_base, |i| {
        let mut incs = vec![0.0; n_steps];
        fill_increments(cfg.seed, i as u64, cfg.dt, &mut incs);
        let mut failures: Vec<Vec<usize>> = vec![Vec::new(); models.len()];
        let mut out = Vec::with_capacity(signs.len());
        for (s, &sign) in signs.iter().enumerate() {
            if sign < 0.0 {
                incs.iter_mut().for_each(|w| *w = -*w);
            }
            let path_index = i + s * n_base;
            let mut per_model: Vec<PathOut> = Vec::with_capacity(models.len());
            let mut reference: Option<Vec<f64>> = None;
            for (j, m) in models.iter().enumerate() {
                let mut row = Vec::new();
                match integrate_path(&m.spec, cfg.scheme, cfg.x0, cfg.dt, &incs, &mut row) {
                    Ok(summary) => {
                        let sup_diff = match &reference {
                            Some(r) => sup_abs_diff(&row, r),
                            None => 0.0,
                        };
                        if j == 0 {
                            reference = Some(row.clone());
                        }
                        per_model.push(PathOut {
                            row: if keep_rows { Some(row) } else { None },
                            summary,
                            sup_diff,
                        });
                    }
                    Err(_) => {
                        failures[j].push(path_index);
                        per_model.push(PathOut {
                            row: None,
                            summary: PathSummary {
                                min: f64::NAN,
                                max: f64::NAN,
                                terminal: f64::NAN,
                                breaches: 0,
                            },
                            sup_diff: f64::NAN,
                        });
                    }
                }
            }
            out.push(per_model);
        }
        if failures.iter().any(|f| !f.is_empty()) {
            Err(failures)
        } else {
            Ok(out)
        }
    });

    // Blow-ups are reported for the first model that had any, with every
    // failing path index.
    let mut blown: Vec<Vec<usize>> = vec![Vec::new(); models.len()];
    for f in units.iter().filter_map(|u| u.as_ref().err()) {
        for (j, paths) in f.iter().enumerate() {
            blown[j].extend_from_slice(paths);
        }
    }
    if let Some(j) = blown.iter().position(|b| !b.is_empty()) {
        let mut paths = core::mem::take(&mut blown[j]);
        paths.sort_unstable();
        return Err(Error::BlowUp {
            model: models[j].label.clone(),
            paths,
        });
    }

    let total = cfg.total_paths();
    let time_grid = cfg.time_grid();
    let mut batches: Vec<PathBatch> = models
        .iter()
        .enumerate()
        .map(|(j, m)| PathBatch {
            model_label: m.label.clone(),
            config: *cfg,
            time_grid: time_grid.clone(),
            values: if keep_rows { Some(Vec::with_capacity(total)) } else { None },
            summaries: Vec::with_capacity(total),
            coupling: if j == 0 {
                None
            } else {
                Some(Coupling {
                    reference_label: models[0].label.clone(),
                    sup_diff: Vec::with_capacity(total),
                })
            },
        })
        .collect();

    let mut units: Vec<Vec<Vec<PathOut>>> = units.into_iter().map(|u| u.unwrap_or_default()).collect();
    for s in 0..signs.len() {
        for unit in units.iter_mut() {
            let per_model = core::mem::take(&mut unit[s]);
            for (b, out) in batches.iter_mut().zip(per_model) {
                if let (Some(rows), Some(row)) = (b.values.as_mut(), out.row) {
                    rows.push(row);
                }
                b.summaries.push(out.summary);
                if let Some(c) = b.coupling.as_mut() {
                    c.sup_diff.push(out.sup_diff);
                }
            }
        }
    }
    Ok(batches)
}

pub fn simulate_coupled(models: &[NamedModel], cfg: &SimConfig) -> Result<Vec<PathBatch>> {
    simulate_coupled_with(&Sequential, models, cfg)
}

pub fn simulate_batch(model: &NamedModel, cfg: &SimConfig) -> Result<PathBatch> {
    simulate_batch_with(&Sequential, model, cfg)
}

pub fn simulate_batch_with<E: Executor>(exec: &E, model: &NamedModel, cfg: &SimConfig) -> Result<PathBatch> {
    let mut v = simulate_coupled_with(exec, core::slice::from_ref(model), cfg)?;
    Ok(v.remove(0))
}
