//! Concentration bounds, entropy, the modified Bessel function `I0`, and the
//! failure-probability budget shared by every estimator.
//!
//! Counts are real-valued throughout: simulated "observations" are expected
//! values and need not be integers. Every bound clamps to `>= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, check_probability, Error, Result};

/// Number of expected/observed conversions the standard finite-key pipeline
/// charges to `eps_0 + eps_1`.
pub const CHERNOFF_APPLICATIONS: u32 = 13;

/// A closed interval `[lower, upper]` produced by a two-sided bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Binary Shannon entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("binary entropy argument", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

fn beta(eps: f64) -> f64 {
    debug_assert!(
        eps > 0.0 && eps < 1.0,
        "failure probability {eps} not in (0,1)"
    );
    (1.0 / eps).ln()
}

/// Bounds on the expected value behind an observed count `x`.
pub fn chernoff_expected_bounds(x: f64, eps: f64) -> Interval {
    let x = x.max(0.0);
    let b = beta(eps);
    let upper = x + b + (2.0 * b * x + b * b).sqrt();
    let lower = (x - b / 2.0 - (2.0 * b * x + b * b / 4.0).sqrt()).max(0.0);
    Interval { lower, upper }
}

/// Bounds on the observed count given its expected value `expected`.
pub fn chernoff_observed_bounds(expected: f64, eps: f64) -> Interval {
    let x = expected.max(0.0);
    let b = beta(eps);
    let upper = x + b / 2.0 + (2.0 * b * x + b * b / 4.0).sqrt();
    let lower = (x - (2.0 * b * x).sqrt()).max(0.0);
    Interval { lower, upper }
}

/// Finite-sample deviation between the error rate `lam` observed on a sample
/// of size `k` and the rate on the complementary population of size `n`
/// (random sampling without replacement).
pub fn random_sampling_gamma(n: f64, k: f64, lam: f64, eps: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::Domain {
            name: "population size n",
            value: n,
            domain: "(0, inf)",
        });
    }
    if !(k > 0.0) {
        return Err(Error::Domain {
            name: "sample size k",
            value: k,
            domain: "(0, inf)",
        });
    }
    check_open_unit("sampled error rate", lam)?;
    check_open_unit("failure probability", eps)?;

    let total = n + k;
    let a = n.max(k);
    let g = total / (n * k)
        * (total / (2.0 * std::f64::consts::PI * n * k * lam * (1.0 - lam) * eps * eps)).ln();
    let ag = a * g / total;
    let numerator = (1.0 - 2.0 * lam) * ag + (ag * ag + 4.0 * lam * (1.0 - lam) * g).sqrt();
    let denominator = 2.0 + 2.0 * a * a * g / (total * total);
    Ok((numerator / denominator).max(0.0))
}

const BESSEL_SERIES_LIMIT: f64 = 15.0;

/// Zero-order modified Bessel function of the first kind.
///
/// Power series below |x| = 15, Hankel asymptotic expansion above; both are
/// accurate to a few ulps times 1e-13 relative.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < BESSEL_SERIES_LIMIT {
        // sum_k (x^2/4)^k / (k!)^2; all terms positive.
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > sum * 1e-17 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        // e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k), truncated at
        // the smallest term.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * k * x);
            if next >= term || next < sum * 1e-17 {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        // Split the exponential to delay overflow.
        let half = (0.5 * x).exp();
        half * (half / (2.0 * std::f64::consts::PI * x).sqrt()) * sum
    }
}

/// `I0(x) - 1` without cancellation for small arguments.
pub fn bessel_i0_minus_one(x: f64) -> f64 {
    let x = x.abs();
    if x >= 1.0 {
        return bessel_i0(x) - 1.0;
    }
    let q = 0.25 * x * x;
    let mut term = q;
    let mut sum = q;
    let mut k = 2.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Failure-probability budget of the finite-key analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBudget {
    pub eps_cor: f64,
    /// Smooth min-entropy chain-rule coefficient.
    pub eps_prime: f64,
    /// Smooth max-entropy chain-rule coefficient.
    pub eps_hat: f64,
    pub eps_e: f64,
    pub eps_beta: f64,
    pub eps_pa: f64,
    /// Failure probability charged per concentration-bound application.
    pub eps_per_use: f64,
    /// `eps_0 + eps_1`: all Chernoff applications for `s_0mub`, `s_11` and `e_11`.
    pub eps_0_plus_1: f64,
    pub chernoff_applications: u32,
    pub eps_sec: f64,
    pub eps_tp: f64,
}

/// Budget with every base failure probability set to `eps_per_use`.
pub fn compose_epsilons(eps_per_use: f64) -> Result<EpsilonBudget> {
    check_open_unit("per-use failure probability", eps_per_use)?;
    let e = eps_per_use;
    let eps_0_plus_1 = f64::from(CHERNOFF_APPLICATIONS) * e;
    // 2(eps' + eps_hat + 2 eps_e) + eps_beta + (eps_0 + eps_1) + eps_pa, all
    // terms equal to e; summed as a multiple so the total is one rounding.
    let multiple = 2 * (1 + 1 + 2) + 1 + CHERNOFF_APPLICATIONS + 1;
    let eps_sec = f64::from(multiple) * e;
    Ok(EpsilonBudget {
        eps_cor: e,
        eps_prime: e,
        eps_hat: e,
        eps_e: e,
        eps_beta: e,
        eps_pa: e,
        eps_per_use: e,
        eps_0_plus_1,
        chernoff_applications: CHERNOFF_APPLICATIONS,
        eps_sec,
        eps_tp: f64::from(multiple + 1) * e,
    })
}
