//! Closed-form excess risk and a Monte-Carlo cross-check.
//!
//! With independent zero-mean coordinates, the population excess risk of a
//! predictor with effective coefficients `c_i` (`v_i²` or `w_i`) is
//! `Σ_{i≤M} λ_i (c_i - (v*_i)²)² + Σ_{i>M} λ_i (v*_i)^4`.

use libm::sqrt;

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::sampler::{Sample, SampleStream};
use crate::sgd::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    /// `head_term + tail_term`
    pub excess: f64,
    /// Contribution of the `M` modelled coordinates.
    pub head_term: f64,
    /// Approximation floor `tail_moment(M)`.
    pub tail_term: f64,
}

fn report(
    instance: &ProblemInstance,
    params: &[f64],
    coef: impl Fn(f64) -> f64,
) -> Result<RiskReport> {
    let m = instance.model_size();
    if params.len() != m {
        return Err(Error::DimMismatch {
            expected: m,
            got: params.len(),
        });
    }
    let mut head = 0.0;
    for (idx, &p) in params.iter().enumerate() {
        let i = idx + 1;
        let v = instance.vstar_unchecked(i);
        let diff = coef(p) - v * v;
        head += instance.lambda_unchecked(i) * diff * diff;
    }
    let tail = instance.approximation_floor();
    Ok(RiskReport {
        excess: head + tail,
        head_term: head,
        tail_term: tail,
    })
}

pub fn excess_risk_quadratic(instance: &ProblemInstance, v: &[f64]) -> Result<RiskReport> {
    report(instance, v, |v| v * v)
}

pub fn excess_risk_linear(instance: &ProblemInstance, w: &[f64]) -> Result<RiskReport> {
    report(instance, w, |w| w)
}

pub fn excess_risk(
    instance: &ProblemInstance,
    kind: ModelKind,
    params: &[f64],
) -> Result<RiskReport> {
    match kind {
        ModelKind::Quadratic => excess_risk_quadratic(instance, params),
        ModelKind::Linear => excess_risk_linear(instance, params),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

/// Monte-Carlo estimate of the excess risk: mean of `(f(x) - y)² - σ_ξ²` over
/// `n` fresh samples, with its standard error.
pub fn mc_excess_risk(
    instance: &ProblemInstance,
    kind: ModelKind,
    params: &[f64],
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let m = instance.model_size();
    if params.len() != m {
        return Err(Error::DimMismatch {
            expected: m,
            got: params.len(),
        });
    }
    let noise_var = instance.noise_sigma() * instance.noise_sigma();
    let mut stream = SampleStream::new(instance, seed);
    let mut sample = Sample::zeros(m);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=n {
        stream.fill(&mut sample);
        let r = kind.predict(params, &sample.x_obs) - sample.y;
        let z = r * r - noise_var;
        let delta = z - mean;
        mean += delta / k as f64;
        m2 += delta * (z - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        stderr: sqrt(var / n as f64),
    })
}
