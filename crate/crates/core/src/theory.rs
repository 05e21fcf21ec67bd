//! Predicted rates, order-level bound terms and compute-optimal allocations.
//!
//! All hidden constants are 1. These are comparison curves for simulations,
//! not certified bounds.

use libm::{floor, pow};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::sgd::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `β ≥ α`: SGD on the quadratic model attains `1 - 1/β`.
    BetaDominant,
    /// `α > β`: the quadratic model beats the linear one but misses `1 - 1/β`.
    AlphaDominant,
    /// `M` is below the effective dimension; risk decays as `M/T` to the floor.
    ModelLimited,
}

impl Regime {
    pub fn classify(alpha: f64, beta: f64) -> Self {
        if beta >= alpha {
            Regime::BetaDominant
        } else {
            Regime::AlphaDominant
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::BetaDominant => "BetaDominant",
            Regime::AlphaDominant => "AlphaDominant",
            Regime::ModelLimited => "ModelLimited",
        }
    }
}

/// Which rate to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateKind {
    Model(ModelKind),
    /// Information-theoretic lower-bound rate, taken as `1 - 1/β`.
    InfoLower,
}

impl From<ModelKind> for RateKind {
    fn from(kind: ModelKind) -> Self {
        RateKind::Model(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    /// Positive `e` with risk `∝ T^(-e)`.
    pub exponent: f64,
    pub regime: Regime,
    pub kind: RateKind,
}

fn check_spectrum(alpha: f64, beta: f64) -> Result<()> {
    if alpha > 1.0 && beta > 1.0 && alpha.is_finite() && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpectrum { alpha, beta })
    }
}

/// Decay exponent of the excess risk in `T` when `M` is large.
pub fn rate_exponent(alpha: f64, beta: f64, kind: impl Into<RateKind>) -> Result<RatePrediction> {
    check_spectrum(alpha, beta)?;
    let kind = kind.into();
    let regime = Regime::classify(alpha, beta);
    let exponent = match kind {
        RateKind::Model(ModelKind::Quadratic) => match regime {
            Regime::BetaDominant => 1.0 - 1.0 / beta,
            _ => (2.0 * beta - 2.0) / (alpha + beta),
        },
        RateKind::Model(ModelKind::Linear) => (beta - 1.0) / alpha,
        RateKind::InfoLower => 1.0 - 1.0 / beta,
    };
    Ok(RatePrediction {
        exponent,
        regime,
        kind,
    })
}

/// Rate for a concrete instance: `ModelLimited` with exponent 1 (the `M/T`
/// term) once the effective dimension saturates at `M`.
pub fn rate_for_instance(
    instance: &ProblemInstance,
    total_steps: usize,
    kind: ModelKind,
) -> RatePrediction {
    let raw = pow(
        total_steps.max(1) as f64,
        1.0 / instance.dimension_exponent(),
    );
    let base = rate_exponent(instance.alpha(), instance.beta(), kind)
        .expect("instance spectrum is validated at construction");
    if kind == ModelKind::Quadratic && raw >= instance.model_size() as f64 {
        RatePrediction {
            exponent: 1.0,
            regime: Regime::ModelLimited,
            kind: kind.into(),
        }
    } else {
        base
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub approximation: f64,
    pub variance: f64,
    pub bias: f64,
    pub effective_dim: usize,
    /// Noise level used in the variance term.
    pub sigma_sq: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.approximation + self.variance + self.bias
    }
}

/// Order-level terms of the high-probability upper bound:
/// `M^(1-β) + σ² D/T + D/T + D^(1-β) 1{D<M}`.
pub fn upper_bound_terms(instance: &ProblemInstance, total_steps: usize) -> BoundTerms {
    let t = total_steps.max(1) as f64;
    let m = instance.model_size();
    let d = instance.effective_dimension(total_steps);
    let beta = instance.beta();
    let sigma_sq = instance.sigma_sq();
    let df = d as f64;
    let truncation = if d < m { pow(df, 1.0 - beta) } else { 0.0 };
    BoundTerms {
        approximation: pow(m as f64, 1.0 - beta),
        variance: sigma_sq * df / t,
        bias: df / t + truncation,
        effective_dim: d,
        sigma_sq,
    }
}

/// Bound when the model is the bottleneck: `M^(1-β) + (σ² + 1) M / T`.
pub fn model_limited_bound(instance: &ProblemInstance, total_steps: usize) -> f64 {
    let t = total_steps.max(1) as f64;
    let m = instance.model_size() as f64;
    pow(m, 1.0 - instance.beta()) + (instance.sigma_sq() + 1.0) * m / t
}

/// Order-level algorithmic lower bound `M^(1-β) + σ̄² D/T + D^(1-β) 1{M>D}`,
/// using the same effective dimension as the upper bound.
pub fn lower_bound_terms(instance: &ProblemInstance, total_steps: usize) -> BoundTerms {
    let t = total_steps.max(1) as f64;
    let m = instance.model_size();
    let d = instance.effective_dimension(total_steps);
    let beta = instance.beta();
    let sigma_bar_sq = instance.sigma_sq();
    let df = d as f64;
    BoundTerms {
        approximation: pow(m as f64, 1.0 - beta),
        variance: sigma_bar_sq * df / t,
        bias: if m > d { pow(df, 1.0 - beta) } else { 0.0 },
        effective_dim: d,
        sigma_sq: sigma_bar_sq,
    }
}

/// Split a compute budget `B = M T` between model size and sample count.
pub fn optimal_allocation(budget: f64, alpha: f64, beta: f64) -> Result<(u64, u64)> {
    check_spectrum(alpha, beta)?;
    if !(budget >= 4.0 && budget.is_finite()) {
        return Err(Error::InvalidScale {
            name: "budget",
            value: budget,
        });
    }
    let s = if beta > alpha {
        beta
    } else {
        0.5 * (alpha + beta)
    };
    let m = floor(pow(budget, 1.0 / (1.0 + s)) * (1.0 + 1e-12)).max(1.0);
    let t = floor(pow(budget, s / (1.0 + s)) * (1.0 + 1e-12)).max(1.0);
    Ok((m as u64, t as u64))
}
