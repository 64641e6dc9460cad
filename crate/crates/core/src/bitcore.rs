//! Binary words, index subsets and the entropy helpers shared by the rest of
//! the crate.
//!
//! Positions are 1-based in every public signature: `q.get(1)` is the first
//! character of `q`, and an [`IndexSubset`] over a universe of size `N` holds
//! values in `1..=N`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// A fixed-length binary word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: alloc::vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            bits: alloc::vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The `len` low bits of `value`, most significant first.
    pub fn from_index(value: u64, len: usize) -> Self {
        assert!(len <= 64, "word too long for u64 index");
        let bits = (0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect();
        Self { bits }
    }

    /// Inverse of [`BitString::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len() <= 64, "word too long for u64 index");
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Character at 1-based position `i`.
    pub fn get(&self, i: usize) -> Result<bool> {
        if i == 0 || i > self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(self.bits[i - 1])
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// `wt(q)`: the number of ones.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `w(q) = wt(q) / len(q)`.
    pub fn relative_weight(&self) -> Result<f64> {
        relative_weight(self)
    }

    /// XOR of every character.
    pub fn parity(&self) -> bool {
        self.bits.iter().fold(false, |acc, &b| acc ^ b)
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self {
            bits: self.iter().zip(other.iter()).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::IndexOutOfRange {
                    index: i + 1,
                    len: s.len(),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }
}

/// A subset `t ⊂ {1, …, N}` stored as strictly increasing 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSubset {
    indices: Vec<usize>,
    universe_size: usize,
}

impl IndexSubset {
    pub fn new(indices: Vec<usize>, universe_size: usize) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::UnsortedSubset);
            }
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > universe_size) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: universe_size,
            });
        }
        Ok(Self {
            indices,
            universe_size,
        })
    }

    /// Builds a subset from 0-based positions in any order.
    pub fn from_zero_based(mut positions: Vec<usize>, universe_size: usize) -> Result<Self> {
        positions.sort_unstable();
        Self::new(positions.into_iter().map(|i| i + 1).collect(), universe_size)
    }

    pub fn full(universe_size: usize) -> Self {
        Self {
            indices: (1..=universe_size).collect(),
            universe_size,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.universe_size - self.len());
        let mut it = self.indices.iter().peekable();
        for i in 1..=self.universe_size {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        Self {
            indices: out,
            universe_size: self.universe_size,
        }
    }
}

pub fn relative_weight(q: &BitString) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(q.weight() as f64 / q.len() as f64)
}

/// `q_t`: the characters of `q` at the positions of `t`, in order.
pub fn substring(q: &BitString, t: &IndexSubset) -> Result<BitString> {
    if t.universe_size() != q.len() {
        return Err(Error::UniverseMismatch {
            universe: t.universe_size(),
            len: q.len(),
        });
    }
    t.indices().iter().map(|&i| q.get(i)).collect::<Result<Vec<_>>>().map(BitString::from_bits)
}

/// `q_{-t}`: the characters of `q` outside `t`.
pub fn substring_complement(q: &BitString, t: &IndexSubset) -> Result<BitString> {
    if t.universe_size() != q.len() {
        return Err(Error::UniverseMismatch {
            universe: t.universe_size(),
            len: q.len(),
        });
    }
    substring(q, &t.complement())
}

/// Binary Shannon entropy in bits, with `0 · log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(entropy_unchecked(x))
}

/// `h(x)` for an argument already known to lie in `[0, 1]`.
pub(crate) fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * libm::log2(x) - (1.0 - x) * libm::log2(1.0 - x)
}

/// `log₂ |{z ∈ {0,1}^n : wt(z) ≤ k}|` together with the entropy bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HammingBallVolume {
    /// `log₂ Σ_{i≤k} C(n, i)`.
    pub exact_log2: f64,
    /// `n · h(k/n)`, only defined for `k ≤ n/2`.
    pub entropy_bound: Option<f64>,
}

/// Log-volume of the Hamming ball of radius `k` in `{0,1}^n`.
///
/// The binomial sum is accumulated in log space (running ratio of consecutive
/// coefficients plus log-sum-exp), so it does not overflow for large `n`.
pub fn hamming_ball_log_volume(n: usize, k: usize) -> Result<HammingBallVolume> {
    if n == 0 {
        return Err(Error::InvalidParams("hamming ball dimension must be positive"));
    }
    if k > n {
        return Err(Error::Domain {
            what: "k",
            value: k as f64,
            lo: 0.0,
            hi: n as f64,
        });
    }

    // log2 C(n, i) for i = 0..=k; the largest term is the last one when k ≤ n/2,
    // but take the max explicitly to cover k > n/2.
    let mut logs = Vec::with_capacity(k + 1);
    let mut current = 0.0f64;
    logs.push(current);
    for i in 0..k {
        current += libm::log2((n - i) as f64) - libm::log2((i + 1) as f64);
        logs.push(current);
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|&l| libm::exp2(l - peak)).sum();
    let exact_log2 = peak + libm::log2(sum);

    let entropy_bound = (2 * k <= n).then(|| n as f64 * entropy_unchecked(k as f64 / n as f64));
    Ok(HammingBallVolume {
        exact_log2,
        entropy_bound,
    })
}
