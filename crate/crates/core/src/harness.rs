//! Experiment sweeps: seeds, single jobs, aggregation, slope fits and the
//! two-phase box diagnostics.
//!
//! Everything here is sequential and deterministic. The std companion crate
//! schedules [`Job`]s in parallel and stamps wall-clock times.

use alloc::vec::Vec;

use libm::{log, sqrt};

use crate::error::{Error, Result};
use crate::problem::{ProblemInstance, ProblemParams};
use crate::risk;
use crate::sampler::SampleStream;
use crate::sgd::{
    train, Checkpoint, ConstantStep, InitSpec, LogBase, ModelKind, StepSchedule, StepSize,
    TrainResult,
};
use crate::theory::{self, Regime};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one `(grid point, model kind, repetition)`.
///
/// The tuple is packed into one word as `grid_id << 40 | kind << 39 | rep`,
/// then `mix64(base ^ mix64(packed + φ))`. Both mixing steps are bijections,
/// so for a fixed base the map is injective whenever `grid_id < 2^24` and
/// `rep < 2^39`.
pub fn derive_seed(base_seed: u64, grid_id: usize, kind: ModelKind, rep: usize) -> u64 {
    let kind_bit = match kind {
        ModelKind::Quadratic => 0u64,
        ModelKind::Linear => 1u64,
    };
    let packed = ((grid_id as u64) << 40) | (kind_bit << 39) | (rep as u64 & ((1 << 39) - 1));
    mix64(base_seed ^ mix64(packed.wrapping_add(GOLDEN)))
}

/// Default `c_eta` for [`EtaPolicy::Auto`].
pub const DEFAULT_C_ETA: f64 = 0.1;
/// Default `c0` for [`InitPolicy::Auto`].
pub const DEFAULT_C0: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaPolicy {
    /// `recommended_eta(T, c_eta)` per grid point.
    Auto(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitPolicy {
    /// `default_init_scale(c0)` for the quadratic model, zero for the linear one.
    Auto(f64),
    /// Every coordinate of either model starts at this value.
    Fixed(f64),
}

impl Default for EtaPolicy {
    fn default() -> Self {
        EtaPolicy::Auto(DEFAULT_C_ETA)
    }
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::Auto(DEFAULT_C0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointPolicy {
    /// Only the final iterate.
    Final,
    /// `T₁` plus `phase2_points` evenly spaced steps in `(T₁, T]`, ending at `T`.
    Phase {
        phase2_points: usize,
    },
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Problem parameters; `model_size` is overridden by each grid point.
    pub problem: ProblemParams,
    pub t_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub model_kinds: Vec<ModelKind>,
    pub eta_policy: EtaPolicy,
    pub init_policy: InitPolicy,
    pub log_base: LogBase,
    pub checkpoints: CheckpointPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub grid_id: usize,
    pub total_steps: usize,
    pub model_size: usize,
}

/// One unit of work in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub point: GridPoint,
    pub kind: ModelKind,
    pub rep: usize,
    pub seed: u64,
}

/// One `(grid point, model kind, rep)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub grid_id: usize,
    pub total_steps: usize,
    pub model_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub kind: ModelKind,
    pub rep: usize,
    pub seed: u64,
    pub excess_risk: f64,
    pub diverged: bool,
    pub wall_ms: f64,
}

impl SweepRecord {
    fn key(&self) -> (usize, ModelKind, usize) {
        (self.grid_id, self.kind, self.rep)
    }
}

/// A schedule that also covers the `T = 0` case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plan {
    Idle(ConstantStep),
    TailGeometric(StepSchedule),
}

impl StepSize for Plan {
    fn total_steps(&self) -> usize {
        match self {
            Plan::Idle(c) => c.total_steps(),
            Plan::TailGeometric(s) => s.total_steps(),
        }
    }

    fn eta_at(&self, t: usize) -> Result<f64> {
        match self {
            Plan::Idle(c) => c.eta_at(t),
            Plan::TailGeometric(s) => s.eta_at(t),
        }
    }
}

impl Plan {
    pub fn schedule(&self) -> Option<&StepSchedule> {
        match self {
            Plan::Idle(_) => None,
            Plan::TailGeometric(s) => Some(s),
        }
    }
}

/// Output of a single job, before timing.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub job: Job,
    pub eta: f64,
    pub plan: Plan,
    pub result: TrainResult,
    pub excess_risk: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() || self.m_grid.is_empty() || self.model_kinds.is_empty() {
            return Err(Error::InvalidConfig(
                "grids and model kinds must be nonempty",
            ));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidConfig("repetitions must be at least 1"));
        }
        for &m in &self.m_grid {
            self.instance_for(m)?;
        }
        Ok(())
    }

    pub fn instance_for(&self, model_size: usize) -> Result<ProblemInstance> {
        ProblemInstance::new(ProblemParams {
            model_size,
            ..self.problem
        })
    }

    /// Grid points with `M` outer and `T` inner.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.t_grid.len() * self.m_grid.len());
        for &model_size in &self.m_grid {
            for &total_steps in &self.t_grid {
                out.push(GridPoint {
                    grid_id: out.len(),
                    total_steps,
                    model_size,
                });
            }
        }
        out
    }

    /// All jobs, sorted by `(grid_id, kind, rep)`.
    pub fn jobs(&self) -> Vec<Job> {
        let mut kinds = self.model_kinds.clone();
        kinds.sort();
        kinds.dedup();
        let mut out = Vec::new();
        for point in self.grid() {
            for &kind in &kinds {
                for rep in 0..self.repetitions {
                    out.push(Job {
                        point,
                        kind,
                        rep,
                        seed: derive_seed(self.base_seed, point.grid_id, kind, rep),
                    });
                }
            }
        }
        out
    }

    pub fn eta_for(&self, instance: &ProblemInstance, total_steps: usize) -> Result<f64> {
        match self.eta_policy {
            EtaPolicy::Auto(c_eta) => instance.recommended_eta(total_steps.max(1), c_eta),
            EtaPolicy::Fixed(eta) => Ok(eta),
        }
    }

    pub fn plan_for(&self, instance: &ProblemInstance, total_steps: usize) -> Result<Plan> {
        let eta = self.eta_for(instance, total_steps)?;
        if total_steps == 0 {
            Ok(Plan::Idle(ConstantStep { eta, steps: 0 }))
        } else {
            StepSchedule::new(total_steps, eta, self.log_base).map(Plan::TailGeometric)
        }
    }

    pub fn init_for(&self) -> InitSpec {
        match self.init_policy {
            InitPolicy::Auto(c0) => InitSpec::Default { c0 },
            InitPolicy::Fixed(value) => InitSpec::Constant(value),
        }
    }

    pub fn checkpoints_for(&self, plan: &Plan) -> Vec<usize> {
        let total = plan.total_steps();
        match &self.checkpoints {
            CheckpointPolicy::Final => alloc::vec![total],
            CheckpointPolicy::Explicit(ts) => ts.iter().copied().filter(|&t| t <= total).collect(),
            CheckpointPolicy::Phase { phase2_points } => match plan.schedule() {
                None => alloc::vec![total],
                Some(s) => phase_checkpoints(s, *phase2_points),
            },
        }
    }

    /// Train one job from scratch.
    pub fn run_job(&self, job: &Job) -> Result<JobOutcome> {
        let instance = self.instance_for(job.point.model_size)?;
        let plan = self.plan_for(&instance, job.point.total_steps)?;
        let checkpoints = self.checkpoints_for(&plan);
        let mut stream = SampleStream::new(&instance, job.seed);
        let result = train(
            &instance,
            &plan,
            &mut stream,
            job.kind,
            &self.init_for(),
            &checkpoints,
        )?;
        let excess_risk = risk::excess_risk(&instance, job.kind, &result.params)?.excess;
        Ok(JobOutcome {
            job: *job,
            eta: plan.eta_at(0)?,
            plan,
            result,
            excess_risk,
        })
    }

    pub fn record(&self, outcome: &JobOutcome, wall_ms: f64) -> SweepRecord {
        let job = &outcome.job;
        SweepRecord {
            grid_id: job.point.grid_id,
            total_steps: job.point.total_steps,
            model_size: job.point.model_size,
            alpha: self.problem.alpha,
            beta: self.problem.beta,
            kind: job.kind,
            rep: job.rep,
            seed: job.seed,
            excess_risk: outcome.excess_risk,
            diverged: outcome.result.diverged.is_some(),
            wall_ms,
        }
    }

    /// Sequential sweep with zero wall-clock times.
    pub fn run_sweep_sequential(&self) -> Result<Vec<SweepRecord>> {
        self.validate()?;
        self.jobs()
            .iter()
            .map(|job| self.run_job(job).map(|o| self.record(&o, 0.0)))
            .collect()
    }
}

/// `T₁` followed by `n` evenly spaced steps in `(T₁, T]` ending at `T`.
pub fn phase_checkpoints(schedule: &StepSchedule, n: usize) -> Vec<usize> {
    let t1 = schedule.decay_len();
    let total = schedule.total_steps();
    let mut out = alloc::vec![t1];
    let n = n.max(1);
    for k in 1..=n {
        let t = t1 + ((total - t1) * k).div_ceil(n);
        if t > *out.last().unwrap() {
            out.push(t);
        }
    }
    out
}

/// Per-`(grid point, model kind)` statistics over non-diverged repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub grid_id: usize,
    pub total_steps: usize,
    pub model_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub kind: ModelKind,
    pub n_ok: usize,
    pub divergence_count: usize,
    pub mean: Option<f64>,
    /// Sample (n-1) standard deviation; needs two values.
    pub std: Option<f64>,
    pub stderr: Option<f64>,
    pub median: Option<f64>,
}

/// Summaries sorted by `(grid_id, kind)`; independent of the input order.
pub fn aggregate(records: &[SweepRecord]) -> Result<Vec<GridSummary>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.key());
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let head = sorted[start];
        let mut end = start;
        while end < sorted.len()
            && (sorted[end].grid_id, sorted[end].kind) == (head.grid_id, head.kind)
        {
            end += 1;
        }
        let group = &sorted[start..end];
        let mut values: Vec<f64> = group
            .iter()
            .filter(|r| !r.diverged)
            .map(|r| r.excess_risk)
            .collect();
        let n = values.len();
        let (mean, std, stderr, median) = if n == 0 {
            (None, None, None, None)
        } else {
            let mean = values.iter().sum::<f64>() / n as f64;
            let (std, stderr) = if n >= 2 {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                let sd = sqrt(ss / (n - 1) as f64);
                (Some(sd), Some(sd / sqrt(n as f64)))
            } else {
                (None, None)
            };
            values.sort_by(f64::total_cmp);
            let median = if n % 2 == 1 {
                values[n / 2]
            } else {
                0.5 * (values[n / 2 - 1] + values[n / 2])
            };
            (Some(mean), std, stderr, Some(median))
        };
        out.push(GridSummary {
            grid_id: head.grid_id,
            total_steps: head.total_steps,
            model_size: head.model_size,
            alpha: head.alpha,
            beta: head.beta,
            kind: head.kind,
            n_ok: n,
            divergence_count: group.len() - n,
            mean,
            std,
            stderr,
            median,
        });
        start = end;
    }
    Ok(out)
}

/// Least-squares line through `(ln T, ln risk)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// Signed; negative for a decaying curve.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub theory_exponent: Option<f64>,
    pub regime: Option<Regime>,
}

impl SlopeFit {
    pub fn with_theory(mut self, exponent: f64, regime: Regime) -> Self {
        self.theory_exponent = Some(exponent);
        self.regime = Some(regime);
        self
    }

    /// `|slope| - theory_exponent`.
    pub fn gap(&self) -> Option<f64> {
        self.theory_exponent.map(|e| self.slope.abs() - e)
    }
}

pub fn fit_loglog(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::NonPositiveValue(x, y));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| log(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| log(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
        theory_exponent: None,
        regime: None,
    })
}

/// Fit mean excess risk against `T` for one model kind and model size, with
/// the predicted exponent attached. Grid points without a mean or with
/// `T = 0` are skipped.
pub fn fit_summaries(
    summaries: &[GridSummary],
    kind: ModelKind,
    model_size: usize,
) -> Result<SlopeFit> {
    let rows: Vec<&GridSummary> = summaries
        .iter()
        .filter(|s| s.kind == kind && s.model_size == model_size && s.total_steps > 0)
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|s| s.mean.map(|m| (s.total_steps as f64, m)))
        .collect();
    let fit = fit_loglog(&points)?;
    let first = rows[0];
    let rate = theory::rate_exponent(first.alpha, first.beta, kind)?;
    Ok(fit.with_theory(rate.exponent, rate.regime))
}

/// Empirical coverage of the Phase I / Phase II boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseBoxReport {
    pub effective_dim: usize,
    pub c1: f64,
    /// `(rep, i ≤ D)` pairs with `v_i^{T₁} ∈ [(1-c1) v*_i, (1+c1) v*_i]`.
    pub phase1_hit_fraction: f64,
    /// `(rep, i > D)` pairs with `v_i^{T₁} ∈ [0, 3/2 v*_i]`; `None` when `D = M`.
    pub phase1_tail_fraction: Option<f64>,
    /// Phase II checkpoints with every `i ≤ D` in `[v*/2, 3v*/2]` and every
    /// `i > D` in `[0, 2 v*]`.
    pub phase2_confinement_fraction: f64,
}

/// Box coverage over a set of repetitions' checkpoints.
pub fn phase_box_report(
    instance: &ProblemInstance,
    runs: &[&[Checkpoint]],
    schedule: &StepSchedule,
    c1: f64,
) -> Result<PhaseBoxReport> {
    if !(c1 > 0.0 && c1 < 1.0) {
        return Err(Error::InvalidScale {
            name: "c1",
            value: c1,
        });
    }
    if runs.is_empty() {
        return Err(Error::MissingCheckpoint("no trajectories supplied"));
    }
    let m = instance.model_size();
    let d = instance.effective_dimension(schedule.total_steps());
    let t1 = schedule.decay_len();
    let total = schedule.total_steps();
    let vstar: Vec<f64> = (1..=m).map(|i| instance.vstar_unchecked(i)).collect();
    let within = |x: f64, lo: f64, hi: f64| x >= lo && x <= hi;

    let (mut hits, mut head_pairs) = (0usize, 0usize);
    let (mut tail_hits, mut tail_pairs) = (0usize, 0usize);
    let (mut confined, mut phase2_total) = (0usize, 0usize);
    for run in runs {
        let at_t1 = run
            .iter()
            .find(|c| c.t == t1)
            .ok_or(Error::MissingCheckpoint("no checkpoint at T1"))?;
        if at_t1.params.len() != m {
            return Err(Error::DimMismatch {
                expected: m,
                got: at_t1.params.len(),
            });
        }
        for (i, (&v, &vs)) in at_t1.params.iter().zip(&vstar).enumerate() {
            if i < d {
                head_pairs += 1;
                hits += within(v, (1.0 - c1) * vs, (1.0 + c1) * vs) as usize;
            } else {
                tail_pairs += 1;
                tail_hits += within(v, 0.0, 1.5 * vs) as usize;
            }
        }
        for ck in run.iter().filter(|c| c.t > t1 && c.t <= total) {
            phase2_total += 1;
            let ok = ck
                .params
                .iter()
                .zip(&vstar)
                .enumerate()
                .all(|(i, (&v, &vs))| {
                    if i < d {
                        within(v, 0.5 * vs, 1.5 * vs)
                    } else {
                        within(v, 0.0, 2.0 * vs)
                    }
                });
            confined += ok as usize;
        }
    }
    if phase2_total == 0 {
        return Err(Error::MissingCheckpoint("no checkpoint in (T1, T]"));
    }
    Ok(PhaseBoxReport {
        effective_dim: d,
        c1,
        phase1_hit_fraction: hits as f64 / head_pairs as f64,
        phase1_tail_fraction: (tail_pairs > 0).then(|| tail_hits as f64 / tail_pairs as f64),
        phase2_confinement_fraction: confined as f64 / phase2_total as f64,
    })
}
