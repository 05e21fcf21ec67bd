//! JSON experiment configuration, schema `v1`.

use std::path::{Path, PathBuf};

use quadsgd_core::{
    Ambient, CheckpointPolicy, EtaPolicy, ExperimentConfig, InitPolicy, LogBase, ModelKind,
    ProblemParams, DEFAULT_C0, DEFAULT_C_ETA,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: &str = "v1";
pub const DEFAULT_C1: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientSpec {
    FiniteD(usize),
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    Quadratic,
    Linear,
}

impl From<KindSpec> for ModelKind {
    fn from(k: KindSpec) -> Self {
        match k {
            KindSpec::Quadratic => ModelKind::Quadratic,
            KindSpec::Linear => ModelKind::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalePolicy {
    Auto(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBaseSpec {
    Natural,
    Base2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointSpec {
    Final,
    /// `T₁` plus this many Phase II points.
    Phase(usize),
    Explicit(Vec<usize>),
}

fn default_eta_policy() -> ScalePolicy {
    ScalePolicy::Auto(DEFAULT_C_ETA)
}

fn default_init_policy() -> ScalePolicy {
    ScalePolicy::Auto(DEFAULT_C0)
}

/// The on-disk configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfigFile {
    pub schema: String,
    pub alpha: f64,
    pub beta: f64,
    pub noise_sigma: f64,
    pub lambda_scale: f64,
    pub vstar_scale: f64,
    pub ambient: AmbientSpec,
    pub t_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub model_kinds: Vec<KindSpec>,
    #[serde(default = "default_eta_policy")]
    pub eta_policy: ScalePolicy,
    #[serde(default = "default_init_policy")]
    pub init_policy: ScalePolicy,
    pub log_base: LogBaseSpec,
    pub checkpoints: CheckpointSpec,
    pub output: PathBuf,
    /// Box half-width for the Phase I diagnostic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

impl CliConfigFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn c1(&self) -> f64 {
        self.c1.unwrap_or(DEFAULT_C1)
    }

    /// Validated harness configuration.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let ambient = match self.ambient {
            AmbientSpec::FiniteD(d) => Ambient::FiniteDim(d),
            AmbientSpec::Analytic => Ambient::AnalyticInfinite,
        };
        let problem = ProblemParams {
            alpha: self.alpha,
            beta: self.beta,
            model_size: 1,
            ambient,
            noise_sigma: self.noise_sigma,
            lambda_scale: self.lambda_scale,
            vstar_scale: self.vstar_scale,
        };
        let cfg = ExperimentConfig {
            problem,
            t_grid: self.t_grid.clone(),
            m_grid: self.m_grid.clone(),
            repetitions: self.repetitions,
            base_seed: self.base_seed,
            model_kinds: self.model_kinds.iter().map(|&k| k.into()).collect(),
            eta_policy: match self.eta_policy {
                ScalePolicy::Auto(c) => EtaPolicy::Auto(c),
                ScalePolicy::Fixed(v) => EtaPolicy::Fixed(v),
            },
            init_policy: match self.init_policy {
                ScalePolicy::Auto(c) => InitPolicy::Auto(c),
                ScalePolicy::Fixed(v) => InitPolicy::Fixed(v),
            },
            log_base: match self.log_base {
                LogBaseSpec::Natural => LogBase::Natural,
                LogBaseSpec::Base2 => LogBase::Base2,
            },
            checkpoints: match &self.checkpoints {
                CheckpointSpec::Final => CheckpointPolicy::Final,
                CheckpointSpec::Phase(n) => CheckpointPolicy::Phase { phase2_points: *n },
                CheckpointSpec::Explicit(ts) => CheckpointPolicy::Explicit(ts.clone()),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Path of the JSON summary written next to the CSV.
    pub fn summary_path(&self) -> PathBuf {
        self.output.with_extension("summary.json")
    }
}
