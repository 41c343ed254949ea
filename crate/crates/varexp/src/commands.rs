//! The five subcommands. Each reads a [`RunConfig`], writes its data files to
//! the output directory and finishes with a `manifest_<command>.json`.

use std::path::PathBuf;

use serde::Serialize;
use varexp_core::analysis::{diffusion_range, strong_error, terminal_stats, Histogram};
use varexp_core::bounds::{table1, BoundParams, BoundRow};
use varexp_core::engine::simulate_coupled_with;
use varexp_core::exponent::DEFAULT_GRID;
use varexp_core::pricing::{smile, ControlVariate};
use varexp_core::{
    CheckReport, ErrorReport, ExponentSpec, GrowthConstants, NamedModel, PathBatch, Scheme, SimConfig, SmileFlag,
    SmilePoint,
};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::exec::Rayon;
use crate::output::{num, opt_num, Manifest, OutputDir};
use crate::svg::{line_chart, Series};

/// How the volatility-range column is computed.
pub const VOLATILITY_RANGE_DEFINITION: &str = "interpretation A: range of x^p(x) over visited states";

const MEASURE_NOTE: &str =
    "paths are simulated under the real-world measure; prices are illustrative, not risk-neutral valuations";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckExponent,
    BoundTable,
    StrongError,
    Simulate,
    Smile,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckExponent => "check-exponent",
            Command::BoundTable => "bound-table",
            Command::StrongError => "strong-error",
            Command::Simulate => "simulate",
            Command::Smile => "smile",
        }
    }
}

/// A command plus the global flags.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// 0 on success, 1 when a check fails.
    pub exit_code: i32,
    pub out_dir: PathBuf,
    /// Data files written, in order, excluding the manifest.
    pub files: Vec<String>,
    pub messages: Vec<String>,
}

pub fn run(inv: &Invocation) -> Result<Outcome> {
    let (mut cfg, bytes) = RunConfig::load(&inv.config)?;
    if let Some(dir) = &inv.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = inv.seed {
        cfg.sim.seed = seed;
    }
    if let Some(f) = inv.format {
        cfg.formats = vec![f];
    }
    run_config(inv.command, &cfg, &bytes)
}

/// Runs `command` on an already loaded config. CSV is always written;
/// `formats` adds JSON and SVG.
pub fn run_config(command: Command, cfg: &RunConfig, config_bytes: &[u8]) -> Result<Outcome> {
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut messages = Vec::new();
    let exit_code = match command {
        Command::CheckExponent => check_exponent(cfg, &mut out, &mut messages)?,
        Command::BoundTable => bound_table(cfg, &mut out)?,
        Command::StrongError => cmd_strong_error(cfg, &mut out, &mut messages)?,
        Command::Simulate => simulate(cfg, &mut out, &mut messages)?,
        Command::Smile => cmd_smile(cfg, &mut out, &mut messages)?,
    };
    let files = out.written().to_vec();
    let manifest = ManifestFile {
        manifest: Manifest::new(command.name(), config_bytes, cfg.sim.seed, &files),
        config: cfg,
    };
    out.json(&format!("manifest_{}.json", command.name()), &manifest)?;
    Ok(Outcome {
        exit_code,
        out_dir: cfg.output_dir.clone(),
        files,
        messages,
    })
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    #[serde(flatten)]
    manifest: Manifest<'a>,
    /// Effective config after command-line overrides.
    config: &'a RunConfig,
}

fn header<S: AsRef<str>>(cols: &[S]) -> Vec<String> {
    cols.iter().map(|c| c.as_ref().to_owned()).collect()
}

fn simulate_all(cfg: &RunConfig, sim: &SimConfig, context: &str) -> Result<(Vec<NamedModel>, Vec<PathBatch>)> {
    let models = cfg.named_models();
    let batches = simulate_coupled_with(&Rayon, &models, sim).map_err(|e| CliError::from_core(context, e))?;
    Ok((models, batches))
}

/// Summary-only run: the error and pricing statistics need no dense rows.
fn lean(sim: &SimConfig) -> SimConfig {
    SimConfig {
        dense_limit_bytes: 0,
        ..*sim
    }
}

#[derive(Serialize)]
struct CheckFile<'a> {
    label: &'a str,
    declared_class_s: bool,
    exponent: &'a ExponentSpec,
    report: CheckReport,
    growth_constants: Option<GrowthConstants>,
}

fn check_exponent(cfg: &RunConfig, out: &mut OutputDir, messages: &mut Vec<String>) -> Result<i32> {
    let mut code = 0;
    for e in &cfg.models {
        let label = e.model.label.as_str();
        let exponent = &e.model.spec.exponent;
        let report = exponent
            .check_class_s(&cfg.check)
            .map_err(|err| CliError::from_core(&format!("check {label}"), err))?;
        if e.class_s && !report.passed {
            code = 1;
            for (name, h) in [("p1", &report.p1), ("p2", &report.p2), ("p3", &report.p3)] {
                if !h.passed {
                    let at = h.witness.map(|x| format!(" at x = {x}")).unwrap_or_default();
                    messages.push(format!("{label}: ({name}) fails{at}: {}", h.violations.join("; ")));
                }
            }
        }
        let growth_constants = exponent.estimate_constants(DEFAULT_GRID.0, DEFAULT_GRID.1, DEFAULT_GRID.2).ok();
        out.json(
            &format!("check_{label}.json"),
            &CheckFile {
                label,
                declared_class_s: e.class_s,
                exponent,
                report,
                growth_constants,
            },
        )?;
    }
    Ok(code)
}

#[derive(Serialize)]
struct BoundColumn<'a> {
    label: &'a str,
    mu: f64,
    sigma: f64,
    t_horizon: f64,
    p_plus: f64,
}

#[derive(Serialize)]
struct Table1File<'a> {
    columns: Vec<BoundColumn<'a>>,
    rows: Vec<BoundRow>,
}

fn bound_table(cfg: &RunConfig, out: &mut OutputDir) -> Result<i32> {
    for (i, &(lambda, r)) in cfg.bound_cases.iter().enumerate() {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(CliError::Precondition(format!(
                "bound case {}: lambda must lie in (0, 1), got {lambda}",
                i + 1
            )));
        }
        if !(r > 1.0 && r.is_finite()) {
            return Err(CliError::Precondition(format!("bound case {}: R must be > 1, got {r}", i + 1)));
        }
    }
    // p ≡ 1 has a zero bound everywhere
    let cols: Vec<_> = cfg.models.iter().filter(|e| !e.model.spec.exponent.is_identity()).collect();
    let t = cfg.sim.t_horizon;
    let tables = cols
        .iter()
        .map(|e| {
            let spec = &e.model.spec;
            let params = BoundParams {
                mu: spec.mu,
                sigma: spec.sigma,
                t_horizon: t,
            };
            table1(&params, &[(e.model.label.clone(), spec.exponent)], &cfg.bound_cases)
                .map_err(|err| CliError::from_core("bound-table", err))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<BoundRow> = cfg
        .bound_cases
        .iter()
        .enumerate()
        .map(|(i, &(lambda, r))| BoundRow {
            case: i + 1,
            lambda,
            r,
            bounds: tables.iter().map(|t| t.rows[i].bounds[0]).collect(),
        })
        .collect();

    let mut head = header(&["case", "lambda", "R"]);
    head.extend(cols.iter().map(|e| format!("bound_{}", e.model.label)));
    out.csv(
        "table1.csv",
        &head,
        rows.iter().map(|row| {
            let mut rec = vec![row.case.to_string(), num(row.lambda), num(row.r)];
            rec.extend(row.bounds.iter().map(|b| format!("{b:.6}")));
            rec
        }),
    )?;
    if cfg.wants(Format::Json) {
        let columns = cols
            .iter()
            .map(|e| BoundColumn {
                label: &e.model.label,
                mu: e.model.spec.mu,
                sigma: e.model.spec.sigma,
                t_horizon: t,
                p_plus: e.model.spec.exponent.p_plus,
            })
            .collect();
        out.json("table1.json", &Table1File { columns, rows })?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct ErrorFile<'a> {
    #[serde(flatten)]
    report: &'a ErrorReport,
    volatility_range: [f64; 2],
    volatility_range_definition: &'static str,
    scheme: Scheme,
    dt: f64,
    seed: u64,
    antithetic: bool,
}

fn cmd_strong_error(cfg: &RunConfig, out: &mut OutputDir, messages: &mut Vec<String>) -> Result<i32> {
    if cfg.models.len() < 2 {
        return Err(CliError::Precondition(
            "strong-error needs at least two models; the first is the reference".into(),
        ));
    }
    let sim = lean(&cfg.sim);
    let (models, batches) = simulate_all(cfg, &sim, "strong-error")?;
    let mut rows = Vec::new();
    for (m, b) in models.iter().zip(&batches).skip(1) {
        let mut report = strong_error(b, &batches[0]).map_err(|e| CliError::from_core("strong-error", e))?;
        let spec = &m.spec;
        if let Err(e) = report.attach_bound(&spec.exponent, spec.mu, spec.sigma, sim.t_horizon) {
            messages.push(format!(
                "{}: no analytic bound on [{}, {}]: {e}",
                m.label, report.lambda_obs, report.r_obs
            ));
        }
        let (vlo, vhi) = diffusion_range(b, spec);
        if cfg.wants(Format::Json) {
            out.json(
                &format!("error_{}.json", m.label),
                &ErrorFile {
                    report: &report,
                    volatility_range: [vlo, vhi],
                    volatility_range_definition: VOLATILITY_RANGE_DEFINITION,
                    scheme: sim.scheme,
                    dt: sim.dt,
                    seed: sim.seed,
                    antithetic: sim.antithetic,
                },
            )?;
        }
        rows.push(vec![
            m.label.clone(),
            num(vlo),
            num(vhi),
            num(report.strong_error),
            num(report.ci_half_width),
            num(report.lambda_obs),
            num(report.r_obs),
            opt_num(report.analytic_bound),
            report.n_paths.to_string(),
            report.n_pairs.to_string(),
            sim.seed.to_string(),
            VOLATILITY_RANGE_DEFINITION.to_owned(),
        ]);
    }
    out.csv(
        "table2.csv",
        &header(&[
            "function",
            "volatility_range_lo",
            "volatility_range_hi",
            "strong_error",
            "ci_half_width",
            "lambda_obs",
            "R_obs",
            "analytic_bound",
            "n_paths",
            "n_pairs",
            "seed",
            "volatility_range_definition",
        ]),
        rows,
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    label: &'a str,
    seed: u64,
    scheme: Scheme,
    n_paths: usize,
    terminal_mean: f64,
    terminal_mean_half_width: f64,
    terminal_variance: f64,
    min_value: f64,
    max_value: f64,
    breaches: u64,
    terminal_histogram: &'a Histogram,
}

fn simulate(cfg: &RunConfig, out: &mut OutputDir, messages: &mut Vec<String>) -> Result<i32> {
    let sim = cfg.sim;
    let (models, batches) = simulate_all(cfg, &sim, "simulate")?;
    // path 0 depends only on (seed, 0), so a one-path run reproduces it even
    // when the full batch is too large to keep dense
    let one = SimConfig {
        n_base_paths: 1,
        antithetic: false,
        dense_limit_bytes: u64::MAX,
        ..sim
    };
    let (_, firsts) = simulate_all(cfg, &one, "simulate")?;
    let firsts: Vec<&[f64]> = firsts.iter().map(|b| b.row(0).unwrap_or(&[])).collect();
    let grid = &batches[0].time_grid;

    let mut head = header(&["t"]);
    head.extend(models.iter().map(|m| m.label.clone()));
    out.csv(
        "sample_paths.csv",
        &head,
        grid.iter().enumerate().map(|(k, &t)| {
            let mut rec = vec![num(t)];
            rec.extend(firsts.iter().map(|row| num(row[k])));
            rec
        }),
    )?;

    let mut summary_rows = Vec::new();
    for (m, b) in models.iter().zip(&batches) {
        let label = &m.label;
        match &b.values {
            Some(values) => {
                let stride = b.n_paths().div_ceil(cfg.max_export_paths);
                let picked: Vec<usize> = (0..b.n_paths()).step_by(stride).collect();
                let mut head = header(&["t"]);
                head.extend(picked.iter().map(|i| format!("path_{i}")));
                out.csv(
                    &format!("paths_{label}.csv"),
                    &head,
                    grid.iter().enumerate().map(|(k, &t)| {
                        let mut rec = vec![num(t)];
                        rec.extend(picked.iter().map(|&i| num(values[i][k])));
                        rec
                    }),
                )?;
            }
            None => messages.push(format!(
                "{label}: paths_{label}.csv skipped, the batch exceeds dense_limit_bytes"
            )),
        }

        let stats = terminal_stats(b).map_err(|e| CliError::from_core("simulate", e))?;
        let edges = stats.histogram.edges();
        out.csv(
            &format!("terminal_hist_{label}.csv"),
            &header(&["bin_lo", "bin_hi", "count"]),
            stats
                .histogram
                .counts
                .iter()
                .enumerate()
                .map(|(i, c)| vec![num(edges[i]), num(edges[i + 1]), c.to_string()]),
        )?;
        let breaches = b.total_breaches();
        if breaches > 0 {
            messages.push(format!("{label}: {breaches} positivity-floor hits"));
        }
        if cfg.wants(Format::Json) {
            out.json(
                &format!("summary_{label}.json"),
                &SummaryFile {
                    label,
                    seed: sim.seed,
                    scheme: sim.scheme,
                    n_paths: stats.n_paths,
                    terminal_mean: stats.mean,
                    terminal_mean_half_width: stats.mean_half_width,
                    terminal_variance: stats.variance,
                    min_value: b.min_value(),
                    max_value: b.max_value(),
                    breaches,
                    terminal_histogram: &stats.histogram,
                },
            )?;
        }
        summary_rows.push(vec![
            label.clone(),
            stats.n_paths.to_string(),
            num(stats.mean),
            num(stats.mean_half_width),
            num(stats.variance),
            num(b.min_value()),
            num(b.max_value()),
            breaches.to_string(),
            sim.seed.to_string(),
        ]);
    }
    out.csv(
        "summaries.csv",
        &header(&[
            "label",
            "n_paths",
            "terminal_mean",
            "terminal_mean_half_width",
            "terminal_variance",
            "min_value",
            "max_value",
            "breaches",
            "seed",
        ]),
        summary_rows,
    )?;

    if cfg.wants(Format::Svg) {
        let series: Vec<Series> = models
            .iter()
            .zip(&firsts)
            .map(|(m, row)| Series {
                label: m.label.clone(),
                points: grid.iter().copied().zip(row.iter().copied()).collect(),
            })
            .collect();
        out.text(
            "sample_paths.svg",
            &line_chart("Sample path, identical increments", "t", "X(t)", &series),
        )?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct SmileSeries<'a> {
    label: &'a str,
    control_variate: bool,
    points: &'a [SmilePoint],
}

#[derive(Serialize)]
struct SmileFile<'a> {
    note: &'static str,
    spot: f64,
    rate: f64,
    maturity: f64,
    series: Vec<SmileSeries<'a>>,
}

fn cmd_smile(cfg: &RunConfig, out: &mut OutputDir, messages: &mut Vec<String>) -> Result<i32> {
    let sc = cfg.smile_or_default();
    let req = &sc.request;
    req.validate().map_err(|e| CliError::Config(format!("smile: {e}")))?;
    let sim = lean(&cfg.sim);
    let (models, batches) = simulate_all(cfg, &sim, "smile")?;

    let reference = &models[0].spec;
    let cv_usable = reference.exponent.is_identity() && req.rate == reference.mu && req.spot == sim.x0;
    let use_cv = sc.control_variate && cv_usable && models.len() > 1;
    if sc.control_variate && !cv_usable {
        messages.push(
            "control variate off: the first model must be GBM with drift equal to the rate and x0 equal to spot".into(),
        );
    }

    let mut all_points = Vec::with_capacity(models.len());
    let mut code = 0;
    for (i, (m, b)) in models.iter().zip(&batches).enumerate() {
        let control = (use_cv && i > 0).then_some(ControlVariate {
            batch: &batches[0],
            vol: reference.sigma,
        });
        let points = smile(b, req, control).map_err(|e| CliError::from_core("smile", e))?;
        out.csv(
            &format!("smile_{}.csv", m.label),
            &header(&["strike", "iv", "se_low", "se_high", "flag"]),
            points.iter().map(|p| {
                vec![
                    num(p.strike),
                    opt_num(p.iv),
                    opt_num(p.se_low),
                    opt_num(p.se_high),
                    p.flag.as_str().to_owned(),
                ]
            }),
        )?;
        if points.iter().all(|p| p.iv.is_none() || p.flag == SmileFlag::Floor) {
            code = 1;
            messages.push(format!("{}: no strike produced an implied volatility", m.label));
        }
        all_points.push((control.is_some(), points));
    }

    if cfg.wants(Format::Json) {
        let series = models
            .iter()
            .zip(&all_points)
            .map(|(m, (cv, points))| SmileSeries {
                label: &m.label,
                control_variate: *cv,
                points,
            })
            .collect();
        out.json(
            "smile.json",
            &SmileFile {
                note: MEASURE_NOTE,
                spot: req.spot,
                rate: req.rate,
                maturity: req.maturity,
                series,
            },
        )?;
    }
    if cfg.wants(Format::Svg) {
        let series: Vec<Series> = models
            .iter()
            .zip(&all_points)
            .map(|(m, (_, points))| Series {
                label: m.label.clone(),
                points: points.iter().filter_map(|p| Some((p.strike, p.iv?))).collect(),
            })
            .collect();
        out.text(
            "smile.svg",
            &line_chart(
                &format!("Implied volatility at T = {}", req.maturity),
                "strike",
                "implied vol",
                &series,
            ),
        )?;
    }
    Ok(code)
}
