//! Tail-geometric step sizes and the online SGD recursion.
//!
//! Step `t = 1..=T` consumes one fresh sample and uses `η_t`. The step size
//! is held at `η` through `t = h + T₁` (inclusive), then halves every `T₁`
//! steps: `η_t = η / 2^⌊(t-h)/T₁⌋`.

use alloc::vec::Vec;

use libm::{ceil, floor, ldexp, log, log2};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::risk;
use crate::sampler::{Sample, SampleStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}

impl LogBase {
    fn apply(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => log(x),
            LogBase::Base2 => log2(x),
        }
    }
}

/// Anything that can hand out `η_t` for `t ∈ [0, T]`.
pub trait StepSize {
    fn total_steps(&self) -> usize;
    fn eta_at(&self, t: usize) -> Result<f64>;
}

/// Warm-up + tail-geometric decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    eta0: f64,
    middle: usize,
    decay_len: usize,
    total: usize,
    log_base: LogBase,
}

impl StepSchedule {
    /// `h = ⌈T/log T⌉`, `T₁ = ⌊(T-h)/log(T-h)⌋`.
    pub fn new(total: usize, eta0: f64, log_base: LogBase) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::InvalidScale {
                name: "eta0",
                value: eta0,
            });
        }
        if total < 4 {
            return Err(Error::TooFewSteps(total));
        }
        let t = total as f64;
        let middle = ceil(t / log_base.apply(t)) as usize;
        if middle >= total || total - middle < 2 {
            return Err(Error::TooFewSteps(total));
        }
        let rest = (total - middle) as f64;
        let decay_len = floor(rest / log_base.apply(rest)) as usize;
        if decay_len < 1 {
            return Err(Error::TooFewSteps(total));
        }
        Ok(Self {
            eta0,
            middle,
            decay_len,
            total,
            log_base,
        })
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    /// Middle phase length `h`.
    pub fn middle(&self) -> usize {
        self.middle
    }

    /// Decaying phase length `T₁`.
    pub fn decay_len(&self) -> usize {
        self.decay_len
    }

    pub fn log_base(&self) -> LogBase {
        self.log_base
    }

    /// Last step run at the initial step size: `h + T₁`.
    pub fn constant_until(&self) -> usize {
        self.middle + self.decay_len
    }

    /// Number of halvings applied by step `T`.
    pub fn halvings(&self) -> usize {
        (self.total - self.middle) / self.decay_len
    }
}

impl StepSize for StepSchedule {
    fn total_steps(&self) -> usize {
        self.total
    }

    fn eta_at(&self, t: usize) -> Result<f64> {
        if t > self.total {
            return Err(Error::IndexOutOfRange {
                index: t,
                max: self.total,
            });
        }
        if t <= self.constant_until() {
            return Ok(self.eta0);
        }
        let l = (t - self.middle) / self.decay_len;
        // exact division by 2^l
        Ok(ldexp(self.eta0, -(l.min(i32::MAX as usize) as i32)))
    }
}

/// A constant step size for a fixed number of steps (possibly zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantStep {
    pub eta: f64,
    pub steps: usize,
}

impl StepSize for ConstantStep {
    fn total_steps(&self) -> usize {
        self.steps
    }

    fn eta_at(&self, t: usize) -> Result<f64> {
        if t > self.steps {
            return Err(Error::IndexOutOfRange {
                index: t,
                max: self.steps,
            });
        }
        Ok(self.eta)
    }
}

/// Which predictor is being trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    /// `f_v(x) = ⟨v^⊙2, x⟩`
    Quadratic,
    /// `f_w(x) = ⟨w, x⟩`
    Linear,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Quadratic => "quadratic",
            ModelKind::Linear => "linear",
        }
    }

    pub fn predict(self, params: &[f64], x: &[f64]) -> f64 {
        match self {
            ModelKind::Quadratic => params.iter().zip(x).map(|(v, x)| v * v * x).sum(),
            ModelKind::Linear => params.iter().zip(x).map(|(w, x)| w * x).sum(),
        }
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ModelKind::Quadratic),
            "linear" => Ok(ModelKind::Linear),
            _ => Err(Error::InvalidConfig(
                "model kind must be quadratic or linear",
            )),
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_len(params: &[f64], sample: &Sample) -> Result<()> {
    if params.len() != sample.x_obs.len() {
        return Err(Error::DimMismatch {
            expected: sample.x_obs.len(),
            got: params.len(),
        });
    }
    Ok(())
}

/// In-place `v ← v - η (⟨v^⊙2, x⟩ - y) (v ⊙ x)`.
pub fn quadratic_step_in_place(v: &mut [f64], sample: &Sample, eta: f64) -> Result<()> {
    check_len(v, sample)?;
    let residual = ModelKind::Quadratic.predict(v, &sample.x_obs) - sample.y;
    let scale = eta * residual;
    let mut finite = true;
    for (vi, &xi) in v.iter_mut().zip(&sample.x_obs) {
        *vi -= scale * *vi * xi;
        finite &= vi.is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// In-place `w ← w - η (⟨w, x⟩ - y) x`.
pub fn linear_step_in_place(w: &mut [f64], sample: &Sample, eta: f64) -> Result<()> {
    check_len(w, sample)?;
    let residual = ModelKind::Linear.predict(w, &sample.x_obs) - sample.y;
    let scale = eta * residual;
    let mut finite = true;
    for (wi, &xi) in w.iter_mut().zip(&sample.x_obs) {
        *wi -= scale * xi;
        finite &= wi.is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// One quadratic-model SGD step. No factor 2 on the gradient: it is absorbed into `η`.
pub fn sgd_step_quadratic(v: &[f64], sample: &Sample, eta: f64) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    quadratic_step_in_place(&mut out, sample, eta)?;
    Ok(out)
}

/// One linear-model SGD step.
pub fn sgd_step_linear(w: &[f64], sample: &Sample, eta: f64) -> Result<Vec<f64>> {
    let mut out = w.to_vec();
    linear_step_in_place(&mut out, sample, eta)?;
    Ok(out)
}

/// Initial parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Quadratic: `default_init_scale(c0) · 1_M`. Linear: the zero vector.
    Default {
        c0: f64,
    },
    /// Every coordinate set to the given value.
    Constant(f64),
    Explicit(Vec<f64>),
}

impl InitSpec {
    pub fn materialize(&self, instance: &ProblemInstance, kind: ModelKind) -> Result<Vec<f64>> {
        let m = instance.model_size();
        match self {
            InitSpec::Default { c0 } => match kind {
                ModelKind::Quadratic => Ok(alloc::vec![instance.default_init_scale(*c0)?; m]),
                ModelKind::Linear => Ok(alloc::vec![0.0; m]),
            },
            InitSpec::Constant(value) => Ok(alloc::vec![*value; m]),
            InitSpec::Explicit(values) => {
                if values.len() != m {
                    return Err(Error::DimMismatch {
                        expected: m,
                        got: values.len(),
                    });
                }
                Ok(values.clone())
            }
        }
    }
}

/// Parameters and analytic excess risk recorded after step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: usize,
    pub params: Vec<f64>,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub params: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    /// First step at which the iterate left the divergence cap or became non-finite.
    pub diverged: Option<usize>,
    pub steps_run: usize,
}

impl TrainResult {
    pub fn checkpoint(&self, t: usize) -> Option<&Checkpoint> {
        self.checkpoints
            .binary_search_by_key(&t, |c| c.t)
            .ok()
            .map(|i| &self.checkpoints[i])
    }
}

/// Magnitude beyond which a run is declared divergent.
pub fn divergence_cap(instance: &ProblemInstance, kind: ModelKind) -> f64 {
    let vmax = instance.max_vstar();
    match kind {
        ModelKind::Quadratic => 10.0 * f64::max(1.0, vmax),
        ModelKind::Linear => 10.0 * f64::max(1.0, vmax * vmax),
    }
}

/// Run `T` single-pass SGD steps, drawing one fresh sample per step.
///
/// Checkpoints are taken after the step with the matching index (`0` is the
/// initialization). A run that exceeds the divergence cap stops at that step;
/// later checkpoints are not recorded.
pub fn train<S: StepSize + ?Sized>(
    instance: &ProblemInstance,
    schedule: &S,
    stream: &mut SampleStream<'_>,
    kind: ModelKind,
    init: &InitSpec,
    checkpoint_ts: &[usize],
) -> Result<TrainResult> {
    let total = schedule.total_steps();
    let mut wanted: Vec<usize> = checkpoint_ts.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    if let Some(&last) = wanted.last() {
        if last > total {
            return Err(Error::IndexOutOfRange {
                index: last,
                max: total,
            });
        }
    }

    let mut params = init.materialize(instance, kind)?;
    let cap = divergence_cap(instance, kind);
    let mut checkpoints = Vec::with_capacity(wanted.len());
    let mut next_ck = wanted.iter().copied().peekable();
    let record = |t: usize, params: &[f64], checkpoints: &mut Vec<Checkpoint>| -> Result<()> {
        checkpoints.push(Checkpoint {
            t,
            params: params.to_vec(),
            excess: risk::excess_risk(instance, kind, params)?.excess,
        });
        Ok(())
    };
    if next_ck.next_if_eq(&0).is_some() {
        record(0, &params, &mut checkpoints)?;
    }

    let mut sample = Sample::zeros(instance.model_size());
    let mut diverged = None;
    let mut steps_run = 0;
    for t in 1..=total {
        let eta = schedule.eta_at(t)?;
        stream.fill(&mut sample);
        let step = match kind {
            ModelKind::Quadratic => quadratic_step_in_place(&mut params, &sample, eta),
            ModelKind::Linear => linear_step_in_place(&mut params, &sample, eta),
        };
        steps_run = t;
        match step {
            Ok(()) if params.iter().all(|p| p.abs() <= cap) => {}
            Ok(()) | Err(Error::NonFinite) => {
                diverged = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
        if next_ck.next_if_eq(&t).is_some() {
            record(t, &params, &mut checkpoints)?;
        }
    }

    Ok(TrainResult {
        params,
        checkpoints,
        diverged,
        steps_run,
    })
}
