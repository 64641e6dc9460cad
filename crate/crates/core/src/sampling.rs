//! Fixed-size subset sampling: the deviation bound `ε₀ = 2·exp(−δ²mN/(N+2))`,
//! its inverse `δ(ε)`, and an empirical estimator of the failure probability
//! `Pr_t(|w(q_t) − w(q_{−t})| > δ)` used as an oracle for the bound.
//!
//! The key-rate engine uses the convention `ε₀ = ε²`, so a target `ε` fixes
//! `δ = √((N+2)·ln(2/ε²)/(mN))`. All `ε` arithmetic goes through `ln ε` so
//! `ε = 10⁻³⁶` (and `ε² = 10⁻⁷²`) never underflows an intermediate.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bitcore::BitString;
use crate::rng::{derive_seed, stream};
use crate::{Error, Result};

/// Above this many subsets [`empirical_sampling_failure`] switches to Monte Carlo.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingParams {
    big_n: u64,
    m: u64,
    delta: f64,
}

fn check_sizes(big_n: u64, m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParams("sample size m must be positive"));
    }
    if 2 * m >= big_n {
        return Err(Error::InvalidParams("sample size must satisfy m < N/2"));
    }
    Ok(())
}

impl SamplingParams {
    pub fn new(big_n: u64, m: u64, delta: f64) -> Result<Self> {
        check_sizes(big_n, m)?;
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Domain {
                what: "delta",
                value: delta,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { big_n, m, delta })
    }

    pub fn big_n(&self) -> u64 {
        self.big_n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `δ²·m·N/(N+2)`, the exponent of the bound.
    fn exponent(&self) -> f64 {
        let n = self.big_n as f64;
        self.delta * self.delta * self.m as f64 * n / (n + 2.0)
    }
}

/// `ln ε₀ = ln 2 − δ²mN/(N+2)`, unclamped.
pub fn ln_epsilon_cl_bound(params: &SamplingParams) -> f64 {
    core::f64::consts::LN_2 - params.exponent()
}

/// `ε₀ = 2·exp(−δ²mN/(N+2))`, clamped to at most 1.
pub fn epsilon_cl_bound(params: &SamplingParams) -> f64 {
    libm::exp(ln_epsilon_cl_bound(params)).min(1.0)
}

/// `δ = √((N+2)·(ln 2 − 2 ln ε)/(mN))`, taking `ln ε` directly.
pub fn delta_from_ln_epsilon(big_n: u64, m: u64, ln_epsilon: f64) -> Result<f64> {
    check_sizes(big_n, m)?;
    if !(ln_epsilon < 0.0) {
        return Err(Error::Domain {
            what: "ln epsilon",
            value: ln_epsilon,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        });
    }
    let n = big_n as f64;
    let ln_two_over_eps_sq = core::f64::consts::LN_2 - 2.0 * ln_epsilon;
    Ok(libm::sqrt((n + 2.0) * ln_two_over_eps_sq / (m as f64 * n)))
}

/// The `δ` for which `ε₀ = ε²`.
pub fn delta_from_epsilon(big_n: u64, m: u64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
            lo: 0.0,
            hi: 1.0,
        });
    }
    delta_from_ln_epsilon(big_n, m, libm::log(epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FailureEstimate {
    /// Fraction of subsets on which the sample misrepresents the rest.
    pub failure: f64,
    /// Subsets examined.
    pub samples: u64,
    pub exhaustive: bool,
}

impl FailureEstimate {
    /// Binomial standard error of a Monte Carlo estimate; zero when exhaustive.
    pub fn std_error(&self) -> f64 {
        if self.exhaustive {
            0.0
        } else {
            libm::sqrt(self.failure * (1.0 - self.failure) / self.samples as f64)
        }
    }
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for i in 0..k {
        c = c.checked_mul(n - i)? / (i + 1);
    }
    Some(c)
}

struct Deviation<'a> {
    q: &'a [bool],
    total_weight: usize,
    m: usize,
    delta: f64,
}

impl Deviation<'_> {
    /// `|w(q_t) − w(q_{−t})| > δ` for the subset given by `positions` (0-based).
    fn fails(&self, positions: &[usize]) -> bool {
        let inside = positions.iter().filter(|&&i| self.q[i]).count();
        let outside = self.total_weight - inside;
        let rest = self.q.len() - self.m;
        let diff = inside as f64 / self.m as f64 - outside as f64 / rest as f64;
        libm::fabs(diff) > self.delta
    }
}

/// Failures among `trials` uniformly drawn size-`m` subsets for one seeded
/// stream. Streams with distinct `chunk` indices are independent, so callers
/// may split the work and sum the counts.
pub fn count_sampling_failures(
    q: &BitString,
    m: u64,
    delta: f64,
    trials: u64,
    seed: u64,
    chunk: u64,
) -> Result<u64> {
    check_sizes(q.len() as u64, m)?;
    let dev = Deviation {
        q: q.bits(),
        total_weight: q.weight(),
        m: m as usize,
        delta,
    };
    let mut rng = stream(derive_seed(seed, chunk));
    let mut positions: Vec<usize> = (0..q.len()).collect();
    let mut failures = 0;
    for _ in 0..trials {
        let (chosen, _) = positions.partial_shuffle(&mut rng, dev.m);
        if dev.fails(chosen) {
            failures += 1;
        }
    }
    Ok(failures)
}

/// Estimates `Pr_t(|w(q_t) − w(q_{−t})| > δ)` over uniformly random size-`m`
/// subsets `t`: exactly by enumeration when `C(N, m) ≤ 10⁶`, otherwise from
/// `trials` seeded draws.
pub fn empirical_sampling_failure(
    q: &BitString,
    m: u64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<FailureEstimate> {
    let big_n = q.len() as u64;
    check_sizes(big_n, m)?;
    match binomial(big_n, m) {
        Some(count) if count <= EXHAUSTIVE_LIMIT => {
            let failures = exhaustive_failures(q, m as usize, delta);
            Ok(FailureEstimate {
                failure: failures as f64 / count as f64,
                samples: count,
                exhaustive: true,
            })
        }
        _ => {
            if trials == 0 {
                return Err(Error::InvalidParams("Monte Carlo estimate needs trials ≥ 1"));
            }
            let failures = count_sampling_failures(q, m, delta, trials, seed, 0)?;
            Ok(FailureEstimate {
                failure: failures as f64 / trials as f64,
                samples: trials,
                exhaustive: false,
            })
        }
    }
}

fn exhaustive_failures(q: &BitString, m: usize, delta: f64) -> u64 {
    let dev = Deviation {
        q: q.bits(),
        total_weight: q.weight(),
        m,
        delta,
    };
    let n = q.len();
    // Lexicographic enumeration of m-combinations of 0..n.
    let mut idx: Vec<usize> = (0..m).collect();
    let mut failures = 0;
    loop {
        if dev.fails(&idx) {
            failures += 1;
        }
        let Some(i) = (0..m).rev().find(|&i| idx[i] != i + n - m) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
    failures
}

/// Uniform random word, for oracle sweeps.
pub fn random_word<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitString {
    BitString::from_bits((0..len).map(|_| rng.random()).collect())
}
