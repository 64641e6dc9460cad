//! Dense statevector checks for the GHZ identities behind the security proof.
//!
//! Qubit `0` is the leftmost ket position and the most significant bit of a
//! basis index, so `|0, x⟩` puts Alice's qubit first. Within a GHZ block of
//! `p + 1` qubits, qubit `0` is Alice and qubits `1..=p` are Bob¹..Bobᵖ.
//!
//! All measurement statistics come from exact marginalisation of `|amplitude|²`;
//! nothing here samples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bitcore::BitString;
use crate::{Error, Result};

pub const DEFAULT_QUBIT_CAP: usize = 14;

/// Absolute tolerance used for amplitude comparisons and normalisation.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    qubit_count: usize,
    cap: usize,
}

/// One branch of a projective Z measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: BitString,
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

fn check_cap(qubits: usize, cap: usize) -> Result<()> {
    if qubits > cap {
        Err(Error::QubitCap { qubits, cap })
    } else {
        Ok(())
    }
}

impl StateVector {
    /// The computational basis state `|index⟩` on `qubit_count` qubits.
    pub fn basis(qubit_count: usize, index: usize) -> Result<Self> {
        Self::basis_with_cap(qubit_count, index, DEFAULT_QUBIT_CAP)
    }

    pub fn basis_with_cap(qubit_count: usize, index: usize, cap: usize) -> Result<Self> {
        check_cap(qubit_count, cap)?;
        let dim = 1usize << qubit_count;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            qubit_count,
            cap,
        })
    }

    pub fn zero(qubit_count: usize) -> Result<Self> {
        Self::basis(qubit_count, 0)
    }

    /// Normalises `amplitudes`; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_amplitudes_with_cap(amplitudes, DEFAULT_QUBIT_CAP)
    }

    pub fn from_amplitudes_with_cap(mut amplitudes: Vec<Complex64>, cap: usize) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Layout("amplitude count must be a power of two"));
        }
        let qubit_count = dim.trailing_zeros() as usize;
        check_cap(qubit_count, cap)?;
        let norm = libm::sqrt(amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>());
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParams("state has zero norm"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self {
            amplitudes,
            qubit_count,
            cap,
        })
    }

    /// Haar-random pure state: independent complex Gaussians, normalised.
    pub fn random<R: Rng + ?Sized>(qubit_count: usize, rng: &mut R) -> Result<Self> {
        check_cap(qubit_count, DEFAULT_QUBIT_CAP)?;
        let amplitudes = (0..1usize << qubit_count)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(amplitudes)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Bit mask of `qubit` inside a basis index.
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.qubit_count - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubit_count {
            Err(Error::IndexOutOfRange {
                index: qubit,
                len: self.qubit_count,
            })
        } else {
            Ok(())
        }
    }

    /// `self ⊗ other`, with `self`'s qubits first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let qubit_count = self.qubit_count + other.qubit_count;
        let cap = self.cap.min(other.cap);
        check_cap(qubit_count, cap)?;
        let mut amplitudes = Vec::with_capacity(1 << qubit_count);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(Self {
            amplitudes,
            qubit_count,
            cap,
        })
    }

    /// Appends `count` qubits in `|0⟩` after the existing ones.
    pub fn with_ancillas(&self, count: usize) -> Result<Self> {
        let qubit_count = self.qubit_count + count;
        check_cap(qubit_count, self.cap)?;
        let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); 1 << qubit_count];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amplitudes[i << count] = *a;
        }
        Ok(Self {
            amplitudes,
            qubit_count,
            cap: self.cap,
        })
    }

    /// `H^{⊗k}` applied to every qubit (fast Walsh–Hadamard transform).
    pub fn hadamard_all(&self) -> Self {
        let mut amps = self.amplitudes.clone();
        let scale = core::f64::consts::FRAC_1_SQRT_2;
        let mut half = 1;
        while half < amps.len() {
            for block in amps.chunks_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = (x + y) * scale;
                    *b = (x - y) * scale;
                }
            }
            half *= 2;
        }
        Self {
            amplitudes: amps,
            qubit_count: self.qubit_count,
            cap: self.cap,
        }
    }

    pub fn cnot(&self, control: usize, target: usize) -> Result<Self> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Layout("cnot control and target coincide"));
        }
        let (c, t) = (self.mask(control), self.mask(target));
        let mut amplitudes = self.amplitudes.clone();
        for i in 0..amplitudes.len() {
            if i & c != 0 && i & t == 0 {
                amplitudes.swap(i, i | t);
            }
        }
        Ok(Self {
            amplitudes,
            qubit_count: self.qubit_count,
            cap: self.cap,
        })
    }

    fn outcome_index(&self, basis_index: usize, qubits: &[usize]) -> u64 {
        qubits.iter().fold(0u64, |acc, &q| {
            (acc << 1) | u64::from(basis_index & self.mask(q) != 0)
        })
    }

    /// Exact Z-basis distribution of `qubits` (the rest traced out). Keys are
    /// outcome words with `qubits[0]` as the most significant bit.
    pub fn marginal_z(&self, qubits: &[usize]) -> Result<BTreeMap<u64, f64>> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        if qubits.iter().collect::<BTreeSet<_>>().len() != qubits.len() {
            return Err(Error::Layout("repeated qubit in measurement"));
        }
        let mut dist = BTreeMap::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                *dist.entry(self.outcome_index(i, qubits)).or_insert(0.0) += p;
            }
        }
        Ok(dist)
    }

    /// Projective Z measurement of `qubits`, one record per outcome with
    /// nonzero probability. Measured qubits stay in the post-state, collapsed.
    pub fn measure_z(&self, qubits: &[usize]) -> Result<Vec<MeasurementRecord>> {
        let dist = self.marginal_z(qubits)?;
        let mut records = Vec::with_capacity(dist.len());
        for (&outcome, &probability) in &dist {
            let projected: Vec<Complex64> = self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    if self.outcome_index(i, qubits) == outcome {
                        *a
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let post_state = Self::from_amplitudes_with_cap(projected, self.cap).ok();
            records.push(MeasurementRecord {
                outcome: BitString::from_index(outcome, qubits.len()),
                probability,
                post_state,
            });
        }
        Ok(records)
    }
}

/// `|g^{p+1}(x;y)⟩ = (|0,x⟩ + (−1)^y |1,x̄⟩)/√2`.
pub fn ghz_state(p: usize, x: &BitString, y: bool) -> Result<StateVector> {
    if p == 0 {
        return Err(Error::InvalidParams("a GHZ block needs at least one Bob"));
    }
    if x.len() != p {
        return Err(Error::LengthMismatch {
            expected: p,
            got: x.len(),
        });
    }
    let k = p + 1;
    check_cap(k, DEFAULT_QUBIT_CAP)?;
    let low = x.to_index() as usize;
    let high = (1usize << p) | (x.complement().to_index() as usize);
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); 1 << k];
    amplitudes[low] = Complex64::new(s, 0.0);
    amplitudes[high] = Complex64::new(if y { -s } else { s }, 0.0);
    Ok(StateVector {
        amplitudes,
        qubit_count: k,
        cap: DEFAULT_QUBIT_CAP,
    })
}

/// Distribution of the XOR of all outcomes when every qubit is measured in
/// the Hadamard basis; index `0`/`1` is the parity bit.
pub fn x_basis_parity_distribution(state: &StateVector) -> [f64; 2] {
    let rotated = state.hadamard_all();
    let mut dist = [0.0; 2];
    for (i, a) in rotated.amplitudes().iter().enumerate() {
        dist[(i.count_ones() & 1) as usize] += a.norm_sqr();
    }
    dist
}

/// True iff `state`, written in the all-Hadamard basis, has amplitude
/// `(−1)^{c·x} 2^{−p/2}` on every `|c₀, c⟩` with `c₀ = y ⊕ c₁ ⊕ … ⊕ c_p` and zero
/// elsewhere.
pub fn hadamard_expansion_matches(state: &StateVector, x: &BitString, y: bool) -> bool {
    let p = x.len();
    if state.qubit_count() != p + 1 {
        return false;
    }
    let magnitude = libm::pow(2.0, -(p as f64) / 2.0);
    let x_mask = x.to_index() as usize;
    let rotated = state.hadamard_all();
    rotated.amplitudes().iter().enumerate().all(|(c, a)| {
        let c0 = (c >> p) & 1 == 1;
        let rest = c & ((1 << p) - 1);
        let allowed = c0 == (y ^ (rest.count_ones() & 1 == 1));
        let expected = if !allowed {
            0.0
        } else if (rest & x_mask).count_ones() & 1 == 1 {
            -magnitude
        } else {
            magnitude
        };
        (a - Complex64::new(expected, 0.0)).norm() <= AMPLITUDE_TOLERANCE
    })
}

pub fn hadamard_expansion_check(p: usize, x: &BitString, y: bool) -> Result<bool> {
    let state = ghz_state(p, x, y)?;
    Ok(hadamard_expansion_matches(&state, x, y))
}

/// Parity announcements plus kept Left bits for one CAD outcome. Kept bits of
/// rejected rounds are zero.
type CadRecord = (BitString, BitString);

struct CadLayout {
    parties: usize,
    rounds: usize,
}

impl CadLayout {
    fn left(&self, round: usize, party: usize) -> usize {
        round * self.parties + party
    }

    fn right(&self, round: usize, party: usize) -> usize {
        (self.rounds + round) * self.parties + party
    }

    fn data_qubits(&self) -> usize {
        2 * self.rounds * self.parties
    }

    fn ancilla(&self, round: usize, party: usize) -> usize {
        self.data_qubits() + round * self.parties + party
    }

    /// Accept flags from parity announcements laid out round-major.
    fn accepted(&self, parities: &BitString) -> Vec<bool> {
        let bits = parities.bits();
        (0..self.rounds)
            .map(|r| {
                let row = &bits[r * self.parties..(r + 1) * self.parties];
                row.iter().all(|&b| b == row[0])
            })
            .collect()
    }
}

/// Total variation distance between the CAD outcome distribution computed in
/// protocol order (measure everything in Z, XOR classically, sieve) and in
/// delayed order (CNOT each party's Left and Right qubit onto a parity
/// ancilla, measure the ancillas, discard rejected rounds, then measure the
/// kept Left qubits).
///
/// `input` holds `rounds` Left GHZ slots followed by `rounds` Right slots, each
/// of `p + 1` qubits ordered Alice, Bob¹, …, Bobᵖ.
pub fn cad_delayed_measurement_equivalence(
    p: usize,
    rounds: usize,
    input: &StateVector,
) -> Result<f64> {
    if p == 0 || rounds == 0 {
        return Err(Error::InvalidParams("need p ≥ 1 and rounds ≥ 1"));
    }
    let layout = CadLayout {
        parties: p + 1,
        rounds,
    };
    if input.qubit_count() != layout.data_qubits() {
        return Err(Error::Layout("input must hold 2·rounds·(p+1) qubits"));
    }
    check_cap(layout.data_qubits() + rounds * layout.parties, input.cap())?;

    let direct = direct_order_distribution(&layout, input);
    let delayed = delayed_order_distribution(&layout, input)?;

    let mut keys: BTreeSet<&CadRecord> = direct.keys().collect();
    keys.extend(delayed.keys());
    let tv = keys
        .into_iter()
        .map(|k| {
            let a = direct.get(k).copied().unwrap_or(0.0);
            let b = delayed.get(k).copied().unwrap_or(0.0);
            libm::fabs(a - b)
        })
        .sum::<f64>()
        / 2.0;
    Ok(tv)
}

fn direct_order_distribution(layout: &CadLayout, input: &StateVector) -> BTreeMap<CadRecord, f64> {
    let k = input.qubit_count();
    let bit = |s: usize, q: usize| (s >> (k - 1 - q)) & 1 == 1;
    let mut dist = BTreeMap::new();
    for (s, a) in input.amplitudes().iter().enumerate() {
        let prob = a.norm_sqr();
        if prob == 0.0 {
            continue;
        }
        let mut parities = Vec::with_capacity(layout.rounds * layout.parties);
        for r in 0..layout.rounds {
            for j in 0..layout.parties {
                parities.push(bit(s, layout.left(r, j)) ^ bit(s, layout.right(r, j)));
            }
        }
        let parities = BitString::from_bits(parities);
        let accepted = layout.accepted(&parities);
        let mut kept = Vec::with_capacity(layout.rounds * layout.parties);
        for (r, &acc) in accepted.iter().enumerate() {
            for j in 0..layout.parties {
                kept.push(acc && bit(s, layout.left(r, j)));
            }
        }
        *dist.entry((parities, BitString::from_bits(kept))).or_insert(0.0) += prob;
    }
    dist
}

fn delayed_order_distribution(
    layout: &CadLayout,
    input: &StateVector,
) -> Result<BTreeMap<CadRecord, f64>> {
    let mut state = input.with_ancillas(layout.rounds * layout.parties)?;
    for r in 0..layout.rounds {
        for j in 0..layout.parties {
            let anc = layout.ancilla(r, j);
            state = state.cnot(layout.left(r, j), anc)?;
            state = state.cnot(layout.right(r, j), anc)?;
        }
    }

    let ancillas: Vec<usize> = (0..layout.rounds)
        .flat_map(|r| (0..layout.parties).map(move |j| (r, j)))
        .map(|(r, j)| layout.ancilla(r, j))
        .collect();

    let mut dist = BTreeMap::new();
    for record in state.measure_z(&ancillas)? {
        let Some(post) = record.post_state else {
            continue;
        };
        let accepted = layout.accepted(&record.outcome);
        // Everything except the Left qubits of accepted rounds is traced out.
        let kept_qubits: Vec<usize> = accepted
            .iter()
            .enumerate()
            .filter(|(_, &acc)| acc)
            .flat_map(|(r, _)| (0..layout.parties).map(move |j| layout.left(r, j)))
            .collect();
        for (outcome, prob) in post.marginal_z(&kept_qubits)? {
            let kept_word = BitString::from_index(outcome, kept_qubits.len());
            let mut kept = Vec::with_capacity(layout.rounds * layout.parties);
            let mut it = kept_word.iter();
            for &acc in &accepted {
                for _ in 0..layout.parties {
                    kept.push(acc && it.next().unwrap_or(false));
                }
            }
            *dist
                .entry((record.outcome.clone(), BitString::from_bits(kept)))
                .or_insert(0.0) += record.probability * prob;
        }
    }
    Ok(dist)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCheck {
    /// `−log₂ max_z Pr(z)` of the measured register.
    pub hmin: f64,
    /// `n − log₂ |J|`.
    pub bound: f64,
}

/// Builds `Σ_x Σ_{y∈J} |g(x₁;y₁)⟩⋯|g(xₙ;yₙ)⟩` (normalised, trivial adversary),
/// measures Alice's qubit of every block in Z and returns the min-entropy of
/// the outcome next to `n − log₂|J|`.
pub fn lemma4_entropy_check(n: usize, p: usize, j_set: &[BitString]) -> Result<EntropyCheck> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParams("need n ≥ 1 and p ≥ 1"));
    }
    if j_set.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(bad) = j_set.iter().find(|y| y.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    let block = p + 1;
    let qubits = n * block;
    check_cap(qubits, DEFAULT_QUBIT_CAP)?;

    let ys: BTreeSet<u64> = j_set.iter().map(BitString::to_index).collect();
    let bob_mask = (1usize << p) - 1;
    let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); 1 << qubits];
    for x in 0..1usize << (p * n) {
        for &y in &ys {
            // Each block contributes |a, x_i ⊕ aᵖ⟩ with sign (−1)^{a·y_i}.
            for a in 0..1usize << n {
                let mut index = 0usize;
                let mut negative = false;
                for i in 0..n {
                    let a_i = (a >> (n - 1 - i)) & 1;
                    let y_i = (y as usize >> (n - 1 - i)) & 1;
                    let x_i = (x >> (p * (n - 1 - i))) & bob_mask;
                    let bobs = if a_i == 1 { x_i ^ bob_mask } else { x_i };
                    index = (index << block) | (a_i << p) | bobs;
                    negative ^= a_i & y_i == 1;
                }
                amplitudes[index] += if negative { -1.0 } else { 1.0 };
            }
        }
    }
    let state = StateVector::from_amplitudes(amplitudes)?;
    let alice: Vec<usize> = (0..n).map(|i| i * block).collect();
    let max_prob = state
        .marginal_z(&alice)?
        .values()
        .copied()
        .fold(0.0, f64::max);
    Ok(EntropyCheck {
        hmin: -libm::log2(max_prob),
        bound: n as f64 - libm::log2(ys.len() as f64),
    })
}
