//! JSON run configuration shared by every subcommand.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varexp_core::{CheckOptions, NamedModel, SimConfig, SmileRequest};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub model: NamedModel,
    /// Whether the exponent is claimed to satisfy (p1)–(p3).
    #[serde(default = "yes")]
    pub class_s: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileConfig {
    #[serde(flatten)]
    pub request: SmileRequest,
    /// Price non-reference models against the coupled GBM reference.
    #[serde(default = "yes")]
    pub control_variate: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_max_export_paths() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The first model is the reference for coupling and error reports.
    pub models: Vec<ModelEntry>,
    pub sim: SimConfig,
    /// `(λ, R)` windows for the bound table.
    #[serde(default)]
    pub bound_cases: Vec<(f64, f64)>,
    #[serde(default)]
    pub check: CheckOptions,
    #[serde(default)]
    pub smile: Option<SmileConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Path files are thinned to at most this many columns.
    #[serde(default = "default_max_export_paths")]
    pub max_export_paths: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_slice(&bytes)?;
        Ok((cfg, bytes))
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_slice(bytes).map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        let mut seen = HashSet::new();
        for e in &self.models {
            let label = &e.model.label;
            let safe = !label.is_empty()
                && label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
            if !safe {
                return bad(format!("model label {label:?} must be non-empty [A-Za-z0-9_.-]"));
            }
            if !seen.insert(label.as_str()) {
                return bad(format!("duplicate model label {label:?}"));
            }
            e.model
                .spec
                .validate()
                .map_err(|err| CliError::Config(format!("model {label}: {err}")))?;
        }
        self.sim.validate().map_err(|e| CliError::Config(format!("sim: {e}")))?;
        if let Some(s) = &self.smile {
            s.request.validate().map_err(|e| CliError::Config(format!("smile: {e}")))?;
            if (s.request.maturity - self.sim.t_horizon).abs() > 1e-12 * self.sim.t_horizon {
                return bad(format!(
                    "smile maturity {} differs from the simulation horizon {}",
                    s.request.maturity, self.sim.t_horizon
                ));
            }
        }
        if self.formats.is_empty() {
            return bad("formats must not be empty".into());
        }
        if self.max_export_paths == 0 {
            return bad("max_export_paths must be >= 1".into());
        }
        Ok(())
    }

    pub fn named_models(&self) -> Vec<NamedModel> {
        self.models.iter().map(|e| e.model.clone()).collect()
    }

    /// The configured smile, or 21 strikes on `[0.8, 1.2]·x₀` discounted at
    /// the reference drift.
    pub fn smile_or_default(&self) -> SmileConfig {
        self.smile.clone().unwrap_or_else(|| SmileConfig {
            request: SmileRequest::default_grid(self.sim.x0, self.models[0].model.spec.mu, self.sim.t_horizon),
            control_variate: true,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
