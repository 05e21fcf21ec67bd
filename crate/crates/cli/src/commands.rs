//! Subcommand implementations. Each returns its data so tests can call them
//! without a process boundary; `main` only handles printing and exit codes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use quadsgd_core::{
    aggregate, fit_summaries, phase_box_report, rate_exponent, theory::optimal_allocation,
    Checkpoint, CheckpointPolicy, GridSummary, ModelKind, RateKind, Regime, SlopeFit, SweepRecord,
};
use serde::Serialize;

use crate::config::{CliConfigFile, SCHEMA};
use crate::error::CliError;
use crate::records;
use crate::sweep;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatesTable {
    pub alpha: f64,
    pub beta: f64,
    pub regime: &'static str,
    pub quadratic: f64,
    pub linear: f64,
    pub info_lower: f64,
    pub allocation: Option<Allocation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Allocation {
    pub budget: f64,
    #[serde(rename = "M")]
    pub model_size: u64,
    #[serde(rename = "T")]
    pub total_steps: u64,
}

pub fn cmd_rates(alpha: f64, beta: f64, budget: Option<f64>) -> Result<RatesTable, CliError> {
    let q = rate_exponent(alpha, beta, ModelKind::Quadratic)?;
    let l = rate_exponent(alpha, beta, ModelKind::Linear)?;
    let info = rate_exponent(alpha, beta, RateKind::InfoLower)?;
    let allocation = budget
        .map(|b| {
            optimal_allocation(b, alpha, beta).map(|(m, t)| Allocation {
                budget: b,
                model_size: m,
                total_steps: t,
            })
        })
        .transpose()?;
    Ok(RatesTable {
        alpha,
        beta,
        regime: q.regime.as_str(),
        quadratic: q.exponent,
        linear: l.exponent,
        info_lower: info.exponent,
        allocation,
    })
}

impl RatesTable {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alpha\t{}", self.alpha);
        let _ = writeln!(s, "beta\t{}", self.beta);
        let _ = writeln!(s, "regime\t{}", self.regime);
        let _ = writeln!(s, "quadratic\t{:.4}", self.quadratic);
        let _ = writeln!(s, "linear\t{:.4}", self.linear);
        let _ = writeln!(s, "info_lower\t{:.4}", self.info_lower);
        if let Some(a) = self.allocation {
            let _ = writeln!(s, "budget\t{}", a.budget);
            let _ = writeln!(s, "optimal_M\t{}", a.model_size);
            let _ = writeln!(s, "optimal_T\t{}", a.total_steps);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub grid_id: usize,
    #[serde(rename = "T")]
    pub total_steps: usize,
    #[serde(rename = "M")]
    pub model_size: usize,
    pub model_kind: &'static str,
    pub n_ok: usize,
    pub divergence_count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub stderr: Option<f64>,
    pub median: Option<f64>,
}

impl From<&GridSummary> for AggregateRow {
    fn from(s: &GridSummary) -> Self {
        Self {
            grid_id: s.grid_id,
            total_steps: s.total_steps,
            model_size: s.model_size,
            model_kind: s.kind.as_str(),
            n_ok: s.n_ok,
            divergence_count: s.divergence_count,
            mean: s.mean,
            std: s.std,
            stderr: s.stderr,
            median: s.median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub model_kind: &'static str,
    #[serde(rename = "M")]
    pub model_size: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub theory_exponent: Option<f64>,
    pub regime: Option<&'static str>,
    pub gap: Option<f64>,
}

impl FitRow {
    fn new(kind: ModelKind, model_size: usize, fit: &SlopeFit) -> Self {
        Self {
            model_kind: kind.as_str(),
            model_size,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            n_points: fit.n_points,
            theory_exponent: fit.theory_exponent,
            regime: fit.regime.map(Regime::as_str),
            gap: fit.gap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub schema: &'static str,
    pub aggregates: Vec<AggregateRow>,
    pub fits: Vec<FitRow>,
}

/// Aggregates plus one slope fit per `(model kind, M)` that has at least two
/// usable grid points.
pub fn summarize(records: &[SweepRecord]) -> Result<SweepSummary, CliError> {
    let summaries = aggregate(records)?;
    let keys: BTreeSet<(ModelKind, usize)> =
        summaries.iter().map(|s| (s.kind, s.model_size)).collect();
    let fits = keys
        .into_iter()
        .filter_map(|(kind, m)| {
            fit_summaries(&summaries, kind, m)
                .ok()
                .map(|f| FitRow::new(kind, m, &f))
        })
        .collect();
    Ok(SweepSummary {
        schema: SCHEMA,
        aggregates: summaries.iter().map(AggregateRow::from).collect(),
        fits,
    })
}

pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

/// Run the sweep described by `config`, write the CSV and JSON summary.
pub fn cmd_sweep(
    config: &CliConfigFile,
    threads: Option<usize>,
    seed_override: Option<u64>,
) -> Result<SweepOutput, CliError> {
    let mut exp = config.experiment()?;
    if let Some(seed) = seed_override {
        exp.base_seed = seed;
    }
    let records = sweep::run_sweep(&exp, threads)?;
    let summary = summarize(&records)?;
    if let Some(dir) = config.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let file = File::create(&config.output)
        .map_err(|e| CliError::Io(format!("{}: {e}", config.output.display())))?;
    records::write_records(BufWriter::new(file), &records)?;
    let summary_path = config.summary_path();
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, json + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", summary_path.display())))?;
    Ok(SweepOutput { records, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub schema: &'static str,
    pub model_kind: &'static str,
    #[serde(rename = "M")]
    pub model_size: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub theory_exponent: f64,
    pub gap: f64,
}

/// Fit records already in memory.
pub fn fit_records(records: &[SweepRecord], kind: ModelKind) -> Result<FitReport, CliError> {
    let summaries = aggregate(records)?;
    let sizes: BTreeSet<usize> = summaries
        .iter()
        .filter(|s| s.kind == kind)
        .map(|s| s.model_size)
        .collect();
    let model_size = match sizes.len() {
        0 => return Err(CliError::Usage(format!("no {kind} records in input"))),
        1 => *sizes.iter().next().unwrap(),
        _ => {
            return Err(CliError::Usage(format!(
                "input mixes model sizes {sizes:?}; fit one M at a time"
            )))
        }
    };
    let fit = fit_summaries(&summaries, kind, model_size)?;
    let theory_exponent = fit.theory_exponent.expect("fit_summaries attaches theory");
    Ok(FitReport {
        schema: SCHEMA,
        model_kind: kind.as_str(),
        model_size,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_points: fit.n_points,
        theory_exponent,
        gap: fit.slope.abs() - theory_exponent,
    })
}

pub fn cmd_fit(csv_path: &Path, kind: ModelKind) -> Result<FitReport, CliError> {
    let file =
        File::open(csv_path).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    let records = records::read_records(BufReader::new(file))?;
    fit_records(&records, kind)
}

/// Replace trained trajectories in `diagnose` (test mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stub {
    /// Every checkpoint sits at the ground truth.
    Optimum,
    /// Every checkpoint is the zero vector.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseReport {
    pub schema: &'static str,
    #[serde(rename = "T")]
    pub total_steps: usize,
    #[serde(rename = "M")]
    pub model_size: usize,
    #[serde(rename = "T1")]
    pub decay_len: Option<usize>,
    pub effective_dim: usize,
    pub c1: f64,
    pub eta: f64,
    pub repetitions: usize,
    pub divergence_count: usize,
    pub phase1_hit_fraction: Option<f64>,
    pub phase1_tail_fraction: Option<f64>,
    pub phase2_confinement_fraction: Option<f64>,
}

/// Train the quadratic model `R` times at the config's single `(T, M)` and
/// report coverage of the Phase I / Phase II boxes.
pub fn cmd_diagnose(
    config: &CliConfigFile,
    threads: Option<usize>,
    seed_override: Option<u64>,
    stub: Option<Stub>,
) -> Result<DiagnoseReport, CliError> {
    let mut exp = config.experiment()?;
    if let Some(seed) = seed_override {
        exp.base_seed = seed;
    }
    if exp.t_grid.len() != 1 || exp.m_grid.len() != 1 {
        return Err(CliError::Config(
            "diagnose expects exactly one T and one M".into(),
        ));
    }
    if matches!(exp.checkpoints, CheckpointPolicy::Final) {
        return Err(CliError::Config(
            "diagnose needs checkpoints at T1 and in Phase II (use {\"phase\": n})".into(),
        ));
    }
    exp.model_kinds = vec![ModelKind::Quadratic];
    let (total, m) = (exp.t_grid[0], exp.m_grid[0]);
    let instance = exp.instance_for(m)?;
    let plan = exp.plan_for(&instance, total)?;
    let eta = exp.eta_for(&instance, total)?;
    let c1 = config.c1();
    let mut report = DiagnoseReport {
        schema: SCHEMA,
        total_steps: total,
        model_size: m,
        decay_len: plan.schedule().map(|s| s.decay_len()),
        effective_dim: instance.effective_dimension(total),
        c1,
        eta,
        repetitions: exp.repetitions,
        divergence_count: 0,
        phase1_hit_fraction: None,
        phase1_tail_fraction: None,
        phase2_confinement_fraction: None,
    };
    let Some(schedule) = plan.schedule() else {
        // zero steps: no Phase I endpoint, no Phase II
        return Ok(report);
    };

    let runs: Vec<Vec<Checkpoint>> = match stub {
        Some(stub) => {
            let params: Vec<f64> = match stub {
                Stub::Optimum => (1..=m)
                    .map(|i| instance.vstar_at(i))
                    .collect::<Result<_, _>>()?,
                Stub::Zero => vec![0.0; m],
            };
            let ts = exp.checkpoints_for(&plan);
            (0..exp.repetitions)
                .map(|_| {
                    ts.iter()
                        .map(|&t| Checkpoint {
                            t,
                            params: params.clone(),
                            excess: 0.0,
                        })
                        .collect()
                })
                .collect()
        }
        None => {
            let jobs = exp.jobs();
            let outcomes = sweep::run_jobs(&exp, &jobs, threads)?;
            let mut runs = Vec::new();
            for (outcome, _) in outcomes {
                if outcome.result.diverged.is_some() {
                    report.divergence_count += 1;
                } else {
                    runs.push(outcome.result.checkpoints);
                }
            }
            runs
        }
    };
    if runs.is_empty() {
        return Ok(report);
    }
    let refs: Vec<&[Checkpoint]> = runs.iter().map(Vec::as_slice).collect();
    let boxes = phase_box_report(&instance, &refs, schedule, c1)?;
    report.effective_dim = boxes.effective_dim;
    report.phase1_hit_fraction = Some(boxes.phase1_hit_fraction);
    report.phase1_tail_fraction = boxes.phase1_tail_fraction;
    report.phase2_confinement_fraction = Some(boxes.phase2_confinement_fraction);
    Ok(report)
}
