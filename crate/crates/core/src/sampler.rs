//! Seeded stream of observed covariates and responses.
//!
//! Each sample draws `x_i ~ N(0, λ_i)` independently for `i ≤ M`, then the
//! unobserved tail contribution `ζ = Σ_{i>M} x_i (v*_i)^2`, then the noise
//! `ξ ~ N(0, σ_ξ²)`, in that order. The generator is ChaCha8 seeded from a
//! 64-bit seed, so a stream is fully determined by `(instance, seed)`.

use alloc::vec::Vec;

use libm::sqrt;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::problem::{Ambient, ProblemInstance};

/// One observation: the first `M` covariates and the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x_obs: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn zeros(model_size: usize) -> Self {
        Self {
            x_obs: alloc::vec![0.0; model_size],
            y: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Tail {
    None,
    Sampled {
        sqrt_lambda: Vec<f64>,
        coef: Vec<f64>,
    },
    Aggregated {
        std_dev: f64,
    },
}

/// Deterministic sample generator. Single owner; use distinct seeds for
/// concurrent runs.
#[derive(Debug, Clone)]
pub struct SampleStream<'a> {
    instance: &'a ProblemInstance,
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
    sqrt_lambda: Vec<f64>,
    coef: Vec<f64>,
    tail: Tail,
}

impl<'a> SampleStream<'a> {
    pub fn new(instance: &'a ProblemInstance, seed: u64) -> Self {
        let m = instance.model_size();
        let sqrt_lambda = (1..=m)
            .map(|i| sqrt(instance.lambda_unchecked(i)))
            .collect();
        let coef = (1..=m)
            .map(|i| {
                let v = instance.vstar_unchecked(i);
                v * v
            })
            .collect();
        let tail = match instance.ambient() {
            Ambient::FiniteDim(d) if d > m => Tail::Sampled {
                sqrt_lambda: (m + 1..=d)
                    .map(|i| sqrt(instance.lambda_unchecked(i)))
                    .collect(),
                coef: (m + 1..=d)
                    .map(|i| {
                        let v = instance.vstar_unchecked(i);
                        v * v
                    })
                    .collect(),
            },
            Ambient::FiniteDim(_) => Tail::None,
            Ambient::AnalyticInfinite => Tail::Aggregated {
                std_dev: sqrt(instance.approximation_floor()),
            },
        };
        Self {
            instance,
            seed,
            counter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sqrt_lambda,
            coef,
            tail,
        }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of samples drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Overwrite `sample` with the next draw, reusing its buffer.
    pub fn fill(&mut self, sample: &mut Sample) {
        let rng = &mut self.rng;
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let m = self.sqrt_lambda.len();
        sample.x_obs.resize(m, 0.0);
        let mut y = 0.0;
        for ((x, &sd), &c) in sample
            .x_obs
            .iter_mut()
            .zip(&self.sqrt_lambda)
            .zip(&self.coef)
        {
            *x = sd * normal();
            y += *x * c;
        }
        match &self.tail {
            Tail::None => {}
            Tail::Sampled { sqrt_lambda, coef } => {
                let mut zeta = 0.0;
                for (&sd, &c) in sqrt_lambda.iter().zip(coef) {
                    zeta += sd * normal() * c;
                }
                y += zeta;
            }
            Tail::Aggregated { std_dev } => y += std_dev * normal(),
        }
        y += self.instance.noise_sigma() * normal();
        sample.y = y;
        self.counter += 1;
    }

    pub fn next_sample(&mut self) -> Sample {
        let mut sample = Sample::zeros(self.sqrt_lambda.len());
        self.fill(&mut sample);
        sample
    }
}

impl Iterator for SampleStream<'_> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        Some(self.next_sample())
    }
}
