//! Power-sum tails `Σ_{i>n} i^(-s)` for `s > 1`.
//!
//! The infinite tail is a partial sum up to a small cutoff followed by an
//! Euler-Maclaurin remainder. The integral test gives a rigorous bracket
//! ([`tail_bracket`]) that the estimate always falls inside.

use libm::pow;

/// First index handled by the Euler-Maclaurin remainder.
const EM_START: u64 = 32;

/// `B_{2k} / (2k)!` for k = 1..=6.
const BERNOULLI_RATIOS: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

/// `Σ_{i ≥ a} i^(-s)` via Euler-Maclaurin; accurate to ~1e-15 relative for a ≥ 32.
fn em_remainder(s: f64, a: f64) -> f64 {
    let mut total = pow(a, 1.0 - s) / (s - 1.0) + 0.5 * pow(a, -s);
    // rising factorial s(s+1)...(s+2k-2) times a^(-s-2k+1)
    let mut rising = s;
    let mut power = pow(a, -s - 1.0);
    let inv_a2 = 1.0 / (a * a);
    for (k, ratio) in BERNOULLI_RATIOS.iter().enumerate() {
        if k > 0 {
            let k = k as f64;
            rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
            power *= inv_a2;
        }
        total += ratio * rising * power;
    }
    total
}

/// `Σ_{i > from} i^(-s)` for `s > 1`.
pub fn power_tail(s: f64, from: u64) -> f64 {
    debug_assert!(s > 1.0);
    let start = from.saturating_add(1);
    if start >= EM_START {
        return em_remainder(s, start as f64);
    }
    // add small terms first
    let mut partial = 0.0;
    for i in (start..EM_START).rev() {
        partial += pow(i as f64, -s);
    }
    em_remainder(s, EM_START as f64) + partial
}

/// `Σ_{from < i ≤ upto} i^(-s)`; exact summation for short ranges.
pub fn power_sum_range(s: f64, from: u64, upto: u64) -> f64 {
    if from >= upto {
        return 0.0;
    }
    if upto - from <= 1 << 20 {
        let mut acc = 0.0;
        for i in (from + 1..=upto).rev() {
            acc += pow(i as f64, -s);
        }
        acc
    } else {
        power_tail(s, from) - power_tail(s, upto)
    }
}

/// Integral-test bracket for `Σ_{i > from} i^(-s)`: exact partial sum over
/// `(from, cutoff]` plus `[∫_{cutoff+1}^∞, ∫_{cutoff}^∞] x^(-s) dx`.
pub fn tail_bracket(s: f64, from: u64, cutoff: u64) -> (f64, f64) {
    let cutoff = cutoff.max(from).max(1);
    let head = power_sum_range(s, from, cutoff);
    let integral = |a: f64| pow(a, 1.0 - s) / (s - 1.0);
    (
        head + integral(cutoff as f64 + 1.0),
        head + integral(cutoff as f64),
    )
}
