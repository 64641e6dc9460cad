//! `rate`, `sweep-q` and `sweep-n`.

use anyhow::{bail, Result};
use qcka_core::keyrate::{analytic_key_length, optimize_m, KeyRateReport};
use qcka_core::{NoiseModel, ProtocolParams};
use rayon::prelude::*;

use crate::args::{expand_per_bob, Protocol};
use crate::table::{Cell, Table};

pub const REPORT_HEADER: &[&str] = &[
    "signals",
    "p",
    "big_n",
    "m",
    "n",
    "epsilon",
    "q",
    "qz",
    "error_formula",
    "delta",
    "qx",
    "pa",
    "n_a",
    "hmin_bound",
    "leak_ec",
    "ell",
    "ell_bits",
    "rate",
    "epsilon_pa",
    "epsilon_fail",
    "epsilon_prime",
    "no_accepted_blocks",
    "no_positive_rate",
];

pub fn report_cells(r: &KeyRateReport) -> Vec<Cell> {
    vec![
        Cell::Int(r.signals),
        Cell::Int(r.p as u64),
        Cell::Int(r.big_n),
        Cell::Int(r.m),
        Cell::Int(r.n),
        Cell::Float(r.epsilon()),
        Cell::Float(r.q),
        Cell::FloatList(r.qz.clone()),
        Cell::Text(r.error_formula.name().into()),
        Cell::Float(r.delta),
        Cell::Float(r.qx),
        Cell::Float(r.pa),
        Cell::Int(r.n_a),
        Cell::Float(r.hmin_bound),
        Cell::Float(r.leak_ec),
        Cell::Float(r.ell),
        Cell::Int(r.ell_bits()),
        Cell::Float(r.rate),
        Cell::Float(r.constants.epsilon_pa),
        Cell::Float(r.constants.epsilon_fail),
        Cell::Float(r.constants.epsilon_prime),
        Cell::Bool(r.no_accepted_blocks),
        Cell::Bool(r.no_positive_rate),
    ]
}

pub fn report_table(reports: &[KeyRateReport]) -> Table {
    let mut t = Table::new(REPORT_HEADER.to_vec());
    for r in reports {
        t.push(report_cells(r));
    }
    t
}

/// Report at a fixed `m`, or at the optimal one when `m` is `None`.
pub fn evaluate(proto: &Protocol, noise: &NoiseModel, m: Option<u64>) -> Result<KeyRateReport> {
    let big_n = proto.big_n()?;
    Ok(match m {
        Some(m) => {
            let params = ProtocolParams::new(proto.p, big_n, m, proto.epsilon, 0)?;
            analytic_key_length(&params, noise, proto.formula)?
        }
        None => optimize_m(proto.p, big_n, proto.epsilon, noise, proto.formula)?,
    })
}

pub fn rate(proto: &Protocol, m: Option<u64>) -> Result<KeyRateReport> {
    evaluate(proto, &proto.noise()?, m)
}

/// `from, from + step, …` up to `to` (inclusive, within rounding).
pub fn linear_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || to < from {
        bail!("sweep range must satisfy from ≤ to and step > 0");
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

/// `points` geometrically spaced even signal counts from `from` to `to`.
pub fn signal_grid(from: u64, to: u64, points: usize) -> Result<Vec<u64>> {
    if from < 2 || to < from || points == 0 {
        bail!("sweep range must satisfy 2 ≤ from ≤ to and points ≥ 1");
    }
    if points == 1 {
        return Ok(vec![from + from % 2]);
    }
    let (lo, hi) = ((from as f64).ln(), (to as f64).ln());
    let mut grid: Vec<u64> = (0..points)
        .map(|i| {
            let s = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp().round() as u64;
            s + s % 2
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

pub fn sweep_q(proto: &Protocol, qs: &[f64], qz_ratio: &[f64]) -> Result<Vec<KeyRateReport>> {
    let ratio = expand_per_bob(qz_ratio, proto.p, "--qz-ratio")?;
    qs.par_iter()
        .map(|&q| {
            let noise = NoiseModel::new(q, ratio.iter().map(|r| r * q).collect())?;
            evaluate(proto, &noise, None)
        })
        .collect()
}

pub fn sweep_n(proto: &Protocol, signals: &[u64]) -> Result<Vec<KeyRateReport>> {
    let noise = proto.noise()?;
    signals
        .par_iter()
        .map(|&s| {
            let point = Protocol {
                signals: s,
                ..proto.clone()
            };
            evaluate(&point, &noise, None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcka_core::protosim::PostCadErrorFormula;

    fn proto(p: usize, signals: u64, q: f64, qz: Vec<f64>) -> Protocol {
        Protocol {
            p,
            signals,
            q,
            qz,
            epsilon: 1e-36,
            formula: PostCadErrorFormula::Conservative,
        }
    }

    #[test]
    fn grids() {
        assert_eq!(linear_grid(0.0, 0.1, 0.05).unwrap().len(), 3);
        assert_eq!(linear_grid(0.0, 0.15, 0.01).unwrap().len(), 16);
        assert!(linear_grid(0.1, 0.0, 0.01).is_err());
        let g = signal_grid(10_000, 10_000_000, 4).unwrap();
        assert_eq!(g, vec![10_000, 100_000, 1_000_000, 10_000_000]);
        assert!(g.iter().all(|s| s % 2 == 0));
    }

    #[test]
    fn sweep_q_zero_noise_row_is_best() {
        let p = proto(1, 10_000_000, 0.0, vec![0.0]);
        let qs = linear_grid(0.0, 0.1, 0.02).unwrap();
        let rows = sweep_q(&p, &qs, &[1.0]).unwrap();
        let best = rows.iter().map(|r| r.rate).fold(0.0, f64::max);
        assert_eq!(rows[0].rate, best);
    }

    #[test]
    fn odd_signal_count_is_rejected() {
        assert!(rate(&proto(1, 1001, 0.0, vec![0.0]), None).is_err());
    }
}
