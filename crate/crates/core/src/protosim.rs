//! Classical Monte Carlo simulation of the protocol under i.i.d. noise.
//!
//! A trial draws the published X-test observable for `m` blocks and the
//! Z-basis raw keys for the remaining `n = N − m` two-bit blocks, then runs the
//! CAD parity sieve. Error correction and privacy amplification are not
//! executed; the key-rate formulas only consume the sifted statistics.
//!
//! The initial random permutation of the protocol is skipped: with i.i.d.
//! noise every round is exchangeable, so it does not change any distribution.

use alloc::vec::Vec;

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

use crate::rng::{derive_seed, stream};
use crate::{Error, Result};

/// Public parameters of one protocol run. `2N` signals are split into Left
/// and Right halves of `N`; `m` blocks are tested and `n = N − m` kept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    p: usize,
    big_n: u64,
    m: u64,
    epsilon: f64,
    seed: u64,
}

impl ProtocolParams {
    pub fn new(p: usize, big_n: u64, m: u64, epsilon: f64, seed: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParams("need at least one Bob"));
        }
        if m == 0 || 2 * m >= big_n {
            return Err(Error::InvalidParams("test size must satisfy 0 < m < N/2"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Domain {
                what: "epsilon",
                value: epsilon,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self {
            p,
            big_n,
            m,
            epsilon,
            seed,
        })
    }

    /// Number of Bobs.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Half the signal count.
    pub fn big_n(&self) -> u64 {
        self.big_n
    }

    pub fn signals(&self) -> u64 {
        2 * self.big_n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Key blocks, `N − m`.
    pub fn n(&self) -> u64 {
        self.big_n - self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_m(self, m: u64) -> Result<Self> {
        Self::new(self.p, self.big_n, m, self.epsilon, self.seed)
    }
}

/// Per-round X error rate `Q` and per-Bob Z error rates `QZ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    q: f64,
    qz: Vec<f64>,
}

fn check_rate(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=0.5).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            lo: 0.0,
            hi: 0.5,
        })
    }
}

impl NoiseModel {
    pub fn new(q: f64, qz: Vec<f64>) -> Result<Self> {
        check_rate("Q", q)?;
        if qz.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &z in &qz {
            check_rate("QZ", z)?;
        }
        Ok(Self { q, qz })
    }

    /// `QZ_j = Q` for all `p` Bobs.
    pub fn symmetric(q: f64, p: usize) -> Result<Self> {
        Self::new(q, alloc::vec![q; p])
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn qz(&self) -> &[f64] {
        &self.qz
    }

    pub(crate) fn check_parties(&self, p: usize) -> Result<()> {
        if self.qz.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                got: self.qz.len(),
            });
        }
        Ok(())
    }
}

/// `Q_X = 2Q(1−Q)`: probability that exactly one half of a block has an X error.
pub fn analytic_qx(q: f64) -> Result<f64> {
    check_rate("Q", q)?;
    Ok(2.0 * q * (1.0 - q))
}

/// `p_a = Π_j (QZ_j² + (1−QZ_j)²)`: expected accepted fraction.
pub fn analytic_pa(qz: &[f64]) -> Result<f64> {
    if qz.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pa = 1.0;
    for &z in qz {
        check_rate("QZ", z)?;
        pa *= z * z + (1.0 - z) * (1.0 - z);
    }
    Ok(pa)
}

/// Which expression to use for the post-CAD error between Alice and Bobʲ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PostCadErrorFormula {
    /// `QZ_j² / p_a`.
    #[default]
    Conservative,
    /// `QZ_j² / (QZ_j² + (1−QZ_j)²)`, assuming independent noise per Bob.
    Independent,
}

impl PostCadErrorFormula {
    pub fn name(self) -> &'static str {
        match self {
            Self::Conservative => "conservative",
            Self::Independent => "independent",
        }
    }
}

/// Analytic post-CAD error for every Bob under `formula`.
pub fn analytic_postcad_error(qz: &[f64], formula: PostCadErrorFormula) -> Result<Vec<f64>> {
    let pa = analytic_pa(qz)?;
    Ok(qz
        .iter()
        .map(|&z| match formula {
            PostCadErrorFormula::Conservative => z * z / pa,
            PostCadErrorFormula::Independent => z * z / (z * z + (1.0 - z) * (1.0 - z)),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Relative weight of the all-party X parity over the `m` test blocks.
    pub qx_observed: f64,
    pub n_a: u64,
    pub n_r: u64,
    /// Per-Bob disagreement rate with Alice on kept bits (0 if nothing kept).
    pub postcad_error: Vec<f64>,
    /// Fraction of kept positions where all parties agree (1 if nothing kept).
    pub keys_equal_fraction: f64,
}

impl TrialOutcome {
    pub fn n(&self) -> u64 {
        self.n_a + self.n_r
    }

    pub fn accept_fraction(&self) -> f64 {
        self.n_a as f64 / self.n() as f64
    }
}

/// Simulates one protocol execution with `params.seed()`.
pub fn run_trial(params: &ProtocolParams, noise: &NoiseModel) -> Result<TrialOutcome> {
    noise.check_parties(params.p())?;
    let mut rng = stream(params.seed());

    let x_err = Bernoulli::new(noise.q()).map_err(|_| Error::InvalidParams("Q"))?;
    let mut x_errors = 0u64;
    for _ in 0..params.m() {
        // The block is flagged when exactly one of its halves is hit.
        if x_err.sample(&mut rng) ^ x_err.sample(&mut rng) {
            x_errors += 1;
        }
    }

    let z_err: Vec<Bernoulli> = noise
        .qz()
        .iter()
        .map(|&z| Bernoulli::new(z).map_err(|_| Error::InvalidParams("QZ")))
        .collect::<Result<_>>()?;
    let p = params.p();
    let mut bob_errors = alloc::vec![0u64; p];
    let mut all_equal = 0u64;
    let mut n_a = 0u64;
    let mut left_flip = alloc::vec![false; p];
    for _ in 0..params.n() {
        let alice_left: bool = rng.random();
        let alice_right: bool = rng.random();
        let alice_parity = alice_left ^ alice_right;
        let mut accept = true;
        for (j, dist) in z_err.iter().enumerate() {
            let fl = dist.sample(&mut rng);
            let fr = dist.sample(&mut rng);
            let bob_parity = (alice_left ^ fl) ^ (alice_right ^ fr);
            left_flip[j] = fl;
            accept &= bob_parity == alice_parity;
        }
        if accept {
            n_a += 1;
            let mut agree = true;
            for (count, &fl) in bob_errors.iter_mut().zip(&left_flip) {
                if fl {
                    *count += 1;
                    agree = false;
                }
            }
            if agree {
                all_equal += 1;
            }
        }
    }

    let qx_observed = x_errors as f64 / params.m() as f64;
    let (postcad_error, keys_equal_fraction) = if n_a == 0 {
        (alloc::vec![0.0; p], 1.0)
    } else {
        (
            bob_errors.iter().map(|&e| e as f64 / n_a as f64).collect(),
            all_equal as f64 / n_a as f64,
        )
    };
    Ok(TrialOutcome {
        qx_observed,
        n_a,
        n_r: params.n() - n_a,
        postcad_error,
        keys_equal_fraction,
    })
}

/// Seed used for trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index)
}

/// `count` trials in index order with seeds `trial_seed(params.seed(), i)`.
pub fn run_trials(params: &ProtocolParams, noise: &NoiseModel, count: u64) -> Result<Vec<TrialOutcome>> {
    (0..count)
        .map(|i| run_trial(&params.with_seed(trial_seed(params.seed(), i)), noise))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldStats {
    pub mean: f64,
    /// Sample standard deviation; absent for a single trial.
    pub std_dev: Option<f64>,
    pub std_error: Option<f64>,
}

impl FieldStats {
    /// Summation runs in input order, so results are bitwise reproducible.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        if values.len() == 1 {
            return Ok(Self {
                mean,
                std_dev: None,
                std_error: None,
            });
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        let sd = libm::sqrt(var);
        Ok(Self {
            mean,
            std_dev: Some(sd),
            std_error: Some(sd / libm::sqrt(k)),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    pub qx_observed: FieldStats,
    pub n_a: FieldStats,
    pub n_r: FieldStats,
    pub accept_fraction: FieldStats,
    pub postcad_error: Vec<FieldStats>,
    pub keys_equal_fraction: FieldStats,
}

pub fn aggregate(trials: &[TrialOutcome]) -> Result<TrialSummary> {
    let first = trials.first().ok_or(Error::EmptyInput)?;
    let p = first.postcad_error.len();
    if trials.iter().any(|t| t.postcad_error.len() != p) {
        return Err(Error::InvalidParams("trials disagree on the number of Bobs"));
    }
    let field = |f: &dyn Fn(&TrialOutcome) -> f64| {
        FieldStats::from_values(&trials.iter().map(f).collect::<Vec<_>>())
    };
    Ok(TrialSummary {
        trials: trials.len(),
        qx_observed: field(&|t| t.qx_observed)?,
        n_a: field(&|t| t.n_a as f64)?,
        n_r: field(&|t| t.n_r as f64)?,
        accept_fraction: field(&|t| t.accept_fraction())?,
        postcad_error: (0..p)
            .map(|j| field(&|t| t.postcad_error[j]))
            .collect::<Result<_>>()?,
        keys_equal_fraction: field(&|t| t.keys_equal_fraction)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_qx(0.0).unwrap(), 0.0);
        assert_eq!(analytic_qx(0.5).unwrap(), 0.5);
        assert_abs_diff_eq!(analytic_qx(0.1).unwrap(), 0.18, epsilon = 1e-15);
        assert!(analytic_qx(0.6).is_err());
        assert_eq!(analytic_pa(&[0.0]).unwrap(), 1.0);
        assert_eq!(analytic_pa(&[0.5]).unwrap(), 0.5);
        assert_abs_diff_eq!(analytic_pa(&[0.1, 0.025]).unwrap(), 0.780025, epsilon = 1e-12);
        assert_eq!(analytic_pa(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn postcad_formulas_agree_for_one_bob() {
        for &z in &[0.0, 0.05, 0.1, 0.3, 0.5] {
            let a = analytic_postcad_error(&[z], PostCadErrorFormula::Conservative).unwrap();
            let b = analytic_postcad_error(&[z], PostCadErrorFormula::Independent).unwrap();
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-15);
        }
        let a = analytic_postcad_error(&[0.1, 0.025], PostCadErrorFormula::Conservative).unwrap();
        let b = analytic_postcad_error(&[0.1, 0.025], PostCadErrorFormula::Independent).unwrap();
        assert_abs_diff_eq!(a[0], 0.012820, epsilon = 1e-6);
        assert_abs_diff_eq!(b[0], 0.012195, epsilon = 1e-6);
        assert!(a[0] > b[0] && a[1] > b[1]);
    }

    #[test]
    fn noiseless_trial() {
        let params = ProtocolParams::new(3, 5000, 1000, 1e-9, 1).unwrap();
        let noise = NoiseModel::new(0.0, alloc::vec![0.0; 3]).unwrap();
        let t = run_trial(&params, &noise).unwrap();
        assert_eq!(t.qx_observed, 0.0);
        assert_eq!(t.n_a, params.n());
        assert_eq!(t.n_r, 0);
        assert!(t.postcad_error.iter().all(|&e| e == 0.0));
        assert_eq!(t.keys_equal_fraction, 1.0);
    }

    #[test]
    fn trials_are_deterministic() {
        let params = ProtocolParams::new(2, 2000, 300, 1e-9, 77).unwrap();
        let noise = NoiseModel::new(0.1, alloc::vec![0.1, 0.025]).unwrap();
        assert_eq!(run_trial(&params, &noise).unwrap(), run_trial(&params, &noise).unwrap());
        let other = run_trial(&params.with_seed(78), &noise).unwrap();
        assert_ne!(run_trial(&params, &noise).unwrap(), other);
    }

    #[test]
    fn symmetric_noise_single_bob() {
        let params = ProtocolParams::new(1, 125_000, 25_000, 1e-9, 3).unwrap();
        let noise = NoiseModel::new(0.0, alloc::vec![0.5]).unwrap();
        let t = run_trial(&params, &noise).unwrap();
        let n = params.n() as f64;
        let sigma = (0.25f64 / n).sqrt();
        assert!((t.accept_fraction() - 0.5).abs() <= 3.0 * sigma);
        let sigma_e = (0.25f64 / t.n_a as f64).sqrt();
        assert!((t.postcad_error[0] - 0.5).abs() <= 3.0 * sigma_e);
    }

    #[test]
    fn rejects_mismatched_noise() {
        let params = ProtocolParams::new(2, 100, 10, 1e-9, 0).unwrap();
        let noise = NoiseModel::new(0.1, alloc::vec![0.1]).unwrap();
        assert!(matches!(run_trial(&params, &noise), Err(Error::LengthMismatch { .. })));
        assert!(NoiseModel::new(0.6, alloc::vec![0.1]).is_err());
        assert!(NoiseModel::new(0.1, alloc::vec![-0.1]).is_err());
        assert!(ProtocolParams::new(1, 100, 50, 1e-9, 0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let params = ProtocolParams::new(2, 2000, 300, 1e-9, 5).unwrap();
        let noise = NoiseModel::new(0.1, alloc::vec![0.1, 0.025]).unwrap();
        let t = run_trial(&params, &noise).unwrap();
        let s = aggregate(core::slice::from_ref(&t)).unwrap();
        assert_eq!(s.qx_observed.mean, t.qx_observed);
        assert_eq!(s.qx_observed.std_error, None);

        let same = alloc::vec![t.clone(); 4];
        let s = aggregate(&same).unwrap();
        assert_eq!(s.n_a.std_error, Some(0.0));
        assert_eq!(s.postcad_error.len(), 2);
        assert_eq!(aggregate(&[]), Err(Error::EmptyInput));
    }
}
