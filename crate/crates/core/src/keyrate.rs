//! Finite-key length and rate for the CAD protocol.
//!
//! ```text
//! ℓ = n_a · (1 − h[(n/n_a)(Q_X + δ)]) − leak_EC − 2·log₂(1/ε)
//! rate = max(ℓ, 0) / (2N)
//! ```
//!
//! with `δ` from [`crate::sampling::delta_from_epsilon`] and
//! `leak_EC = n_a · max_j h(e_j) + log₂(2p/ε)`. Every logarithm is base 2.
//! The `h` argument is clamped to `[0, 1/2]`; past `1/2` the Hamming-ball
//! bound is vacuous and the entropy bound is zero.

use alloc::vec::Vec;

use crate::bitcore::entropy_unchecked;
use crate::protosim::{analytic_pa, analytic_qx, PostCadErrorFormula};
use crate::sampling::delta_from_epsilon;
use crate::{Error, NoiseModel, ProtocolParams, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyBound {
    pub n: u64,
    pub n_a: u64,
    pub qx: f64,
    pub delta: f64,
    /// `(n/n_a)(Q_X + δ)` after clamping to `[0, 1/2]`.
    pub argument: f64,
    /// `n_a (1 − h(argument))`.
    pub hmin_rate: f64,
    pub no_accepted_blocks: bool,
}

/// Lower bound on the smooth min-entropy of Alice's post-CAD raw key.
pub fn min_entropy_bound(n: u64, n_a: u64, qx: f64, delta: f64) -> Result<EntropyBound> {
    if n_a > n {
        return Err(Error::InvalidParams("accepted blocks exceed key blocks"));
    }
    if !(qx >= 0.0 && delta >= 0.0) {
        return Err(Error::InvalidParams("Q_X and delta must be non-negative"));
    }
    if n_a == 0 {
        return Ok(EntropyBound {
            n,
            n_a,
            qx,
            delta,
            argument: 0.5,
            hmin_rate: 0.0,
            no_accepted_blocks: true,
        });
    }
    let argument = (n as f64 / n_a as f64 * (qx + delta)).clamp(0.0, 0.5);
    let hmin_rate = if argument >= 0.5 {
        0.0
    } else {
        n_a as f64 * (1.0 - entropy_unchecked(argument))
    };
    Ok(EntropyBound {
        n,
        n_a,
        qx,
        delta,
        argument,
        hmin_rate,
        no_accepted_blocks: false,
    })
}

/// Bits disclosed by error correction: `n_a · max_j h(e_j) + log₂(2p/ε)`.
///
/// `pa` is only consulted by [`PostCadErrorFormula::Conservative`].
pub fn leak_ec(
    n_a: u64,
    p: usize,
    qz: &[f64],
    pa: f64,
    epsilon: f64,
    formula: PostCadErrorFormula,
) -> Result<f64> {
    if !(pa > 0.0) {
        return Err(Error::NoAcceptedBlocks);
    }
    if qz.len() != p {
        return Err(Error::LengthMismatch {
            expected: p,
            got: qz.len(),
        });
    }
    let worst = qz
        .iter()
        .map(|&z| {
            let e = match formula {
                PostCadErrorFormula::Conservative => z * z / pa,
                PostCadErrorFormula::Independent => z * z / (z * z + (1.0 - z) * (1.0 - z)),
            };
            entropy_unchecked(e.clamp(0.0, 0.5))
        })
        .fold(0.0, f64::max);
    Ok(n_a as f64 * worst + libm::log2(2.0 * p as f64 / epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityConstants {
    pub epsilon: f64,
    /// Smoothing parameter `4ε + 2ε^{1/3}`.
    pub epsilon_prime: f64,
    /// `2ε^{1/3}`.
    pub epsilon_fail: f64,
    /// `9ε + 2ε^{1/3}`.
    pub epsilon_pa: f64,
}

pub fn security_constants(epsilon: f64) -> SecurityConstants {
    let cube_root = libm::cbrt(epsilon);
    SecurityConstants {
        epsilon,
        epsilon_prime: 4.0 * epsilon + 2.0 * cube_root,
        epsilon_fail: 2.0 * cube_root,
        epsilon_pa: 9.0 * epsilon + 2.0 * cube_root,
    }
}

/// Trace-distance bound `√(2^{ℓ − H}) + 2ε` of privacy amplification to `ℓ` bits.
pub fn pa_output_length_check(hmin: f64, ell: u64, epsilon: f64) -> f64 {
    libm::exp2((ell as f64 - hmin) / 2.0) + 2.0 * epsilon
}

/// Every intermediate of one key-length evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyRateReport {
    pub p: usize,
    pub signals: u64,
    pub big_n: u64,
    pub m: u64,
    pub n: u64,
    pub q: f64,
    pub qz: Vec<f64>,
    pub error_formula: PostCadErrorFormula,
    pub delta: f64,
    pub qx: f64,
    pub pa: f64,
    pub n_a: u64,
    pub hmin_bound: f64,
    pub leak_ec: f64,
    /// Raw key length, possibly negative.
    pub ell: f64,
    pub rate: f64,
    pub constants: SecurityConstants,
    pub no_accepted_blocks: bool,
    pub no_positive_rate: bool,
}

impl KeyRateReport {
    /// Extractable key length in whole bits.
    pub fn ell_bits(&self) -> u64 {
        if self.ell > 0.0 {
            libm::floor(self.ell) as u64
        } else {
            0
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.constants.epsilon
    }
}

/// Key length for observed (or expected) `n_a` and `Q_X`.
pub fn key_length(
    params: &ProtocolParams,
    noise: &NoiseModel,
    n_a: u64,
    qx: f64,
    formula: PostCadErrorFormula,
) -> Result<KeyRateReport> {
    noise.check_parties(params.p())?;
    let n = params.n();
    let epsilon = params.epsilon();
    let delta = delta_from_epsilon(params.big_n(), params.m(), epsilon)?;
    let pa = analytic_pa(noise.qz())?;
    let bound = min_entropy_bound(n, n_a, qx, delta)?;
    let leak = leak_ec(n_a, params.p(), noise.qz(), pa, epsilon, formula)?;
    let ell = bound.hmin_rate - leak - 2.0 * libm::log2(1.0 / epsilon);
    let rate = if ell > 0.0 {
        ell / params.signals() as f64
    } else {
        0.0
    };
    Ok(KeyRateReport {
        p: params.p(),
        signals: params.signals(),
        big_n: params.big_n(),
        m: params.m(),
        n,
        q: noise.q(),
        qz: noise.qz().to_vec(),
        error_formula: formula,
        delta,
        qx,
        pa,
        n_a,
        hmin_bound: bound.hmin_rate,
        leak_ec: leak,
        ell,
        rate,
        constants: security_constants(epsilon),
        no_accepted_blocks: bound.no_accepted_blocks,
        no_positive_rate: rate <= 0.0,
    })
}

/// Key length at the analytic expectations `n_a = round(p_a·n)`, `Q_X = 2Q(1−Q)`.
pub fn analytic_key_length(
    params: &ProtocolParams,
    noise: &NoiseModel,
    formula: PostCadErrorFormula,
) -> Result<KeyRateReport> {
    let pa = analytic_pa(noise.qz())?;
    let n_a = libm::round(pa * params.n() as f64) as u64;
    key_length(params, noise, n_a, analytic_qx(noise.q())?, formula)
}

/// Points on the coarse geometric grid of [`optimize_m`].
pub const OPTIMIZER_GRID_POINTS: usize = 64;

/// Largest admissible test size, `⌈N/2⌉ − 1`.
pub fn max_test_size(big_n: u64) -> u64 {
    big_n.div_ceil(2).saturating_sub(1)
}

/// Maximises the analytic rate over `m ∈ [1, ⌈N/2⌉ − 1]`: a 64-point geometric
/// grid, then integer golden-section search between the neighbours of the
/// best grid point. If no `m` gives a positive rate the report is taken at
/// the grid midpoint and flagged `no_positive_rate`.
pub fn optimize_m(
    p: usize,
    big_n: u64,
    epsilon: f64,
    noise: &NoiseModel,
    formula: PostCadErrorFormula,
) -> Result<KeyRateReport> {
    let m_max = max_test_size(big_n);
    if m_max == 0 {
        return Err(Error::InvalidParams("N too small to hold a test set"));
    }
    let base = ProtocolParams::new(p, big_n, 1, epsilon, 0)?;
    let eval = |m: u64| -> Result<KeyRateReport> {
        analytic_key_length(&base.with_m(m)?, noise, formula)
    };

    let ln_max = libm::log(m_max as f64);
    let mut grid: Vec<u64> = (0..OPTIMIZER_GRID_POINTS)
        .map(|i| {
            let t = i as f64 / (OPTIMIZER_GRID_POINTS - 1) as f64;
            (libm::round(libm::exp(ln_max * t)) as u64).clamp(1, m_max)
        })
        .collect();
    grid.dedup();

    let mut ells = Vec::with_capacity(grid.len());
    for &m in &grid {
        ells.push(eval(m)?.ell);
    }
    let best_idx = ells
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e > ells[best] { i } else { best });

    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let ell_of = |m: u64| eval(m).map(|r| r.ell);
    let inv_phi = 0.618_033_988_749_894_9;
    while hi - lo > 3 {
        let span = (hi - lo) as f64;
        let step = libm::round(span * inv_phi) as u64;
        let c = hi - step;
        let d = lo + step;
        if c >= d {
            break;
        }
        if ell_of(c)? < ell_of(d)? {
            lo = c;
        } else {
            hi = d;
        }
    }
    let mut best = eval(grid[best_idx])?;
    for m in lo..=hi {
        let r = eval(m)?;
        if r.ell > best.ell {
            best = r;
        }
    }

    if best.ell > 0.0 {
        Ok(best)
    } else {
        eval(grid[grid.len() / 2])
    }
}
