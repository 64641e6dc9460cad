//! `simulate`: Monte Carlo trials with the analytic expectations alongside.

use anyhow::{bail, Result};
use qcka_core::keyrate::{key_length, optimize_m};
use qcka_core::protosim::{
    aggregate, analytic_pa, analytic_postcad_error, analytic_qx, run_trial, trial_seed,
    FieldStats, PostCadErrorFormula, TrialOutcome,
};
use qcka_core::ProtocolParams;
use rayon::prelude::*;

use crate::args::Protocol;
use crate::table::{Cell, Table};

pub const TRIAL_HEADER: &[&str] = &[
    "trial",
    "seed",
    "p",
    "n",
    "m",
    "qx_observed",
    "n_a",
    "n_r",
    "accept_fraction",
    "postcad_error",
    "keys_equal_fraction",
    "analytic_qx",
    "analytic_pa",
    "postcad_error_conservative",
    "postcad_error_independent",
    "ell",
    "rate",
];

pub struct Simulation {
    pub params: ProtocolParams,
    pub trials: Vec<(u64, TrialOutcome)>,
    pub ell: Vec<f64>,
    pub rate: Vec<f64>,
}

pub fn simulate(proto: &Protocol, m: Option<u64>, trials: u64, seed: u64) -> Result<Simulation> {
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let noise = proto.noise()?;
    let big_n = proto.big_n()?;
    let m = match m {
        Some(m) => m,
        None => optimize_m(proto.p, big_n, proto.epsilon, &noise, proto.formula)?.m,
    };
    let params = ProtocolParams::new(proto.p, big_n, m, proto.epsilon, seed)?;
    let trials: Vec<(u64, TrialOutcome)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i);
            Ok((s, run_trial(&params.clone().with_seed(s), &noise)?))
        })
        .collect::<Result<_>>()?;
    let reports = trials
        .iter()
        .map(|(_, t)| key_length(&params, &noise, t.n_a, t.qx_observed, proto.formula))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Simulation {
        params,
        ell: reports.iter().map(|r| r.ell).collect(),
        rate: reports.iter().map(|r| r.rate).collect(),
        trials,
    })
}

pub fn simulation_table(proto: &Protocol, sim: &Simulation) -> Result<Table> {
    let qx = analytic_qx(proto.q)?;
    let pa = analytic_pa(&proto.qz)?;
    let conservative = analytic_postcad_error(&proto.qz, PostCadErrorFormula::Conservative)?;
    let independent = analytic_postcad_error(&proto.qz, PostCadErrorFormula::Independent)?;
    let fixed = |t: &mut Vec<Cell>| {
        t.extend([
            Cell::Float(qx),
            Cell::Float(pa),
            Cell::FloatList(conservative.clone()),
            Cell::FloatList(independent.clone()),
        ])
    };
    let (p, n, m) = (sim.params.p() as u64, sim.params.n(), sim.params.m());

    let mut table = Table::new(TRIAL_HEADER.to_vec());
    for (i, (seed, t)) in sim.trials.iter().enumerate() {
        let mut row = vec![
            Cell::Int(i as u64),
            Cell::Int(*seed),
            Cell::Int(p),
            Cell::Int(n),
            Cell::Int(m),
            Cell::Float(t.qx_observed),
            Cell::Int(t.n_a),
            Cell::Int(t.n_r),
            Cell::Float(t.accept_fraction()),
            Cell::FloatList(t.postcad_error.clone()),
            Cell::Float(t.keys_equal_fraction),
        ];
        fixed(&mut row);
        row.extend([Cell::Float(sim.ell[i]), Cell::Float(sim.rate[i])]);
        table.push(row);
    }

    let outcomes: Vec<TrialOutcome> = sim.trials.iter().map(|(_, t)| t.clone()).collect();
    let summary = aggregate(&outcomes)?;
    let ell = FieldStats::from_values(&sim.ell)?;
    let rate = FieldStats::from_values(&sim.rate)?;
    type Pick = fn(&FieldStats) -> Option<f64>;
    let footers: [(&str, Pick); 2] = [("mean", |s| Some(s.mean)), ("stderr", |s| s.std_error)];
    for (label, pick) in footers {
        let cell = |s: &FieldStats| pick(s).map_or(Cell::Empty, Cell::Float);
        let mut row = vec![
            Cell::Text(label.into()),
            Cell::Empty,
            Cell::Int(p),
            Cell::Int(n),
            Cell::Int(m),
            cell(&summary.qx_observed),
            cell(&summary.n_a),
            cell(&summary.n_r),
            cell(&summary.accept_fraction),
            match summary.postcad_error.iter().map(pick).collect::<Option<Vec<_>>>() {
                Some(v) => Cell::FloatList(v),
                None => Cell::Empty,
            },
            cell(&summary.keys_equal_fraction),
        ];
        fixed(&mut row);
        row.extend([cell(&ell), cell(&rate)]);
        table.push(row);
    }
    Ok(table)
}
