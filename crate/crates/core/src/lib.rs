//! Single-pass SGD on a quadratically parameterized linear model
//! `f_v(x) = ⟨x, v^⊙2⟩` over Gaussian data with power-law spectrum.
//!
//! The crate is `no_std` (with `alloc`): the problem family, a seeded sample
//! stream, the tail-geometric step schedule and SGD updates, closed-form
//! excess risk, theoretical rates/bounds, and the sequential parts of the
//! experiment harness. IO, parallel sweeps and the CLI live in `quadsgd`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod harness;
pub mod math;
pub mod problem;
pub mod risk;
pub mod sampler;
pub mod sgd;
pub mod theory;

pub use error::{Error, Result};
pub use harness::{
    aggregate, derive_seed, fit_loglog, fit_summaries, phase_box_report, phase_checkpoints,
    CheckpointPolicy, EtaPolicy, ExperimentConfig, GridPoint, GridSummary, InitPolicy, Job,
    JobOutcome, PhaseBoxReport, Plan, SlopeFit, SweepRecord, DEFAULT_C0, DEFAULT_C_ETA,
};
pub use problem::{Ambient, ProblemInstance, ProblemParams};
pub use risk::{
    excess_risk, excess_risk_linear, excess_risk_quadratic, mc_excess_risk, McEstimate, RiskReport,
};
pub use sampler::{Sample, SampleStream};
pub use sgd::{
    divergence_cap, linear_step_in_place, quadratic_step_in_place, sgd_step_linear,
    sgd_step_quadratic, train, Checkpoint, ConstantStep, InitSpec, LogBase, ModelKind,
    StepSchedule, StepSize, TrainResult,
};
pub use theory::{
    lower_bound_terms, model_limited_bound, optimal_allocation, rate_exponent, rate_for_instance,
    upper_bound_terms, BoundTerms, RateKind, RatePrediction, Regime,
};
