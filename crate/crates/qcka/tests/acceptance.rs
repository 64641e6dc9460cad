//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qcka::args::Protocol;
use qcka::rate::{linear_grid, signal_grid, sweep_n, sweep_q};
use qcka_core::bitcore::BitString;
use qcka_core::ghzsim::{
    cad_delayed_measurement_equivalence, ghz_state, lemma4_entropy_check,
    x_basis_parity_distribution, StateVector,
};
use qcka_core::keyrate::{optimize_m, pa_output_length_check, security_constants, KeyRateReport};
use qcka_core::protosim::{
    aggregate, analytic_pa, analytic_postcad_error, analytic_qx, run_trials, FieldStats,
    PostCadErrorFormula,
};
use qcka_core::rng::stream;
use qcka_core::sampling::{empirical_sampling_failure, epsilon_cl_bound, random_word, SamplingParams};
use qcka_core::{NoiseModel, ProtocolParams};
use rand::Rng;

const EPSILON: f64 = 1e-36;
const SIGNALS: u64 = 10_000_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn lemma1_exactness() -> Verdict {
    let mut worst: f64 = 0.0;
    for p in 1..=3usize {
        for x in 0..1u64 << p {
            for y in [false, true] {
                let d = x_basis_parity_distribution(&ghz_state(p, &BitString::from_index(x, p), y).unwrap());
                worst = worst.max((d[usize::from(y)] - 1.0).abs()).max(d[usize::from(!y)].abs());
            }
        }
    }
    verdict(worst <= 1e-12, format!("max deviation from point mass {worst:.3e} (limit 1e-12)"))
}

fn delayed_measurement() -> Verdict {
    let mut rng = stream(0xDE1A);
    let mut parts = Vec::new();
    let mut pass = true;
    for &(rounds, p) in &[(1usize, 1usize), (1, 2), (2, 1)] {
        let qubits = 2 * rounds * (p + 1);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let input = StateVector::random(qubits, &mut rng).unwrap();
            worst = worst.max(cad_delayed_measurement_equivalence(p, rounds, &input).unwrap());
        }
        pass &= worst <= 1e-9;
        parts.push(format!("rounds={rounds} p={p} max TV {worst:.3e}"));
    }
    verdict(pass, format!("{} (limit 1e-9, 200 inputs each)", parts.join("; ")))
}

fn lemma4_bound() -> Verdict {
    let mut rng = stream(0x1E4);
    let mut parts = Vec::new();
    let mut pass = true;
    for &(n, p) in &[(2usize, 1usize), (3, 1), (2, 2)] {
        let mut slack = f64::INFINITY;
        for _ in 0..100 {
            let j: Vec<BitString> = loop {
                let set: Vec<BitString> = (0..1u64 << n)
                    .filter(|_| rng.random_bool(0.5))
                    .map(|y| BitString::from_index(y, n))
                    .collect();
                if !set.is_empty() {
                    break set;
                }
            };
            let c = lemma4_entropy_check(n, p, &j).unwrap();
            slack = slack.min(c.hmin - c.bound);
        }
        pass &= slack >= -1e-9;
        parts.push(format!("(n={n},p={p}) min hmin-bound {slack:.3e}"));
    }
    verdict(pass, format!("{} over 100 random J each", parts.join("; ")))
}

fn prefix_word(n: usize, w: usize) -> BitString {
    BitString::from_bits((0..n).map(|i| i < w).collect())
}

fn sampling_oracle() -> Verdict {
    const DELTA: f64 = 0.25;
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    for n in 4..=24usize {
        for m in 1..=(n - 1) / 2 {
            let bound = epsilon_cl_bound(&SamplingParams::new(n as u64, m as u64, DELTA).unwrap());
            for w in (0..=n).step_by((n / 6).max(1)).chain([n / 2 + 1]) {
                let est = empirical_sampling_failure(&prefix_word(n, w), m as u64, DELTA, 20_000, 3).unwrap();
                worst = worst.max(est.failure - bound - 3.0 * est.std_error());
                cases += 1;
            }
        }
    }
    let small_ok = worst <= 1e-12;

    let (big_n, m) = (200usize, 50u64);
    let eps0 = epsilon_cl_bound(&SamplingParams::new(big_n as u64, m, DELTA).unwrap());
    let derived = 2.0 * (-DELTA * DELTA * m as f64 * big_n as f64 / (big_n as f64 + 2.0)).exp();
    let mut rng = stream(0x5A5A);
    let mut mc_ok = (eps0 - derived).abs() < 1e-15 && (eps0 - 0.0907).abs() < 5e-4;
    let mut max_failure: f64 = 0.0;
    for q in [random_word(big_n, &mut rng), prefix_word(big_n, big_n / 2), BitString::zeros(big_n)] {
        let est = empirical_sampling_failure(&q, m, DELTA, 50_000, 9).unwrap();
        mc_ok &= !est.exhaustive && est.failure <= eps0 + 3.0 * est.std_error();
        max_failure = max_failure.max(est.failure);
    }
    verdict(
        small_ok && mc_ok,
        format!(
            "N≤24: {cases} cases, max excess over ε₀+3σ {worst:.3e}; N=200 m=50: ε₀={eps0:.6}, max failure {max_failure:.5}"
        ),
    )
}

fn z_score(stats: &FieldStats, target: f64) -> f64 {
    (stats.mean - target) / stats.std_error.unwrap_or(f64::NAN)
}

fn analytic_agreement() -> Verdict {
    let qz = vec![0.1, 0.025];
    let noise = NoiseModel::new(0.1, qz.clone()).unwrap();
    let (n, m) = (100_000u64, 25_000u64);
    let params = ProtocolParams::new(2, n + m, m, EPSILON, 0xACCE).unwrap();
    let trials = run_trials(&params, &noise, 20).unwrap();
    let s = aggregate(&trials).unwrap();
    let qx = analytic_qx(0.1).unwrap();
    let pa = analytic_pa(&qz).unwrap();
    let z_qx = z_score(&s.qx_observed, qx);
    let z_pa = z_score(&s.accept_fraction, pa);
    let conservative = analytic_postcad_error(&qz, PostCadErrorFormula::Conservative).unwrap();
    let independent = analytic_postcad_error(&qz, PostCadErrorFormula::Independent).unwrap();
    let mut records = Vec::new();
    let mut some_formula_matches = true;
    for j in 0..qz.len() {
        let zp = z_score(&s.postcad_error[j], conservative[j]);
        let zi = z_score(&s.postcad_error[j], independent[j]);
        some_formula_matches &= zp.abs() <= 3.0 || zi.abs() <= 3.0;
        records.push(format!(
            "Bob{} observed {:.6} vs QZ²/p_a {:.6} (z={zp:+.1}) vs QZ²/(QZ²+(1-QZ)²) {:.6} (z={zi:+.1})",
            j + 1,
            s.postcad_error[j].mean,
            conservative[j],
            independent[j]
        ));
    }
    verdict(
        z_qx.abs() <= 3.0 && z_pa.abs() <= 3.0 && some_formula_matches,
        format!(
            "QX {:.5} (z={z_qx:+.2} vs 0.18); n_a/n {:.6} (z={z_pa:+.2} vs 0.780025); {}",
            s.qx_observed.mean,
            s.accept_fraction.mean,
            records.join("; ")
        ),
    )
}

fn protocol(p: usize, q: f64, qz: Vec<f64>) -> Protocol {
    Protocol {
        p,
        signals: SIGNALS,
        q,
        qz,
        epsilon: EPSILON,
        formula: PostCadErrorFormula::Conservative,
    }
}

/// The report sets used by criteria 6 and 7.
struct Reproduction {
    symmetric: Vec<KeyRateReport>,
    asym: KeyRateReport,
    asym_sweep: Vec<KeyRateReport>,
}

fn reproduce() -> Reproduction {
    let sym = protocol(1, 0.0, vec![0.0]);
    let symmetric = sweep_q(&sym, &linear_grid(0.0, 0.5, 0.005).unwrap(), &[1.0]).unwrap();
    let asym_proto = protocol(2, 0.1, vec![0.1, 0.025]);
    let noise = asym_proto.noise().unwrap();
    let asym = optimize_m(2, SIGNALS / 2, EPSILON, &noise, PostCadErrorFormula::Conservative).unwrap();
    let asym_sweep = sweep_n(&asym_proto, &signal_grid(10_000, SIGNALS, 40).unwrap()).unwrap();
    Reproduction {
        symmetric,
        asym,
        asym_sweep,
    }
}

fn figure_reproduction(r: &Reproduction) -> Verdict {
    let sym = &r.symmetric;
    let cutoff = sym.iter().find(|x| x.rate == 0.0).map(|x| x.q);
    let small_q_positive = sym.iter().take_while(|x| x.q <= 0.02).all(|x| x.rate > 0.0);
    let stays_zero = match cutoff {
        Some(qs) => sym.iter().filter(|x| x.q >= qs).all(|x| x.rate == 0.0),
        None => false,
    };
    let a = small_q_positive && stays_zero;
    let b = r.asym.rate > 0.0;
    let threshold = r
        .asym_sweep
        .windows(2)
        .find(|w| w[0].rate == 0.0 && w[1].rate > 0.0)
        .map(|w| w[1].signals);
    let c = r.asym_sweep[0].rate == 0.0 && threshold.is_some_and(|t| t < SIGNALS);
    verdict(
        a && b && c,
        format!(
            "(a) rate(Q=0) {:.4}, cutoff Q* = {} [{}]; (b) asymmetric config rate {:.5} [{}]; (c) first positive rate at {} signals [{}]",
            sym[0].rate,
            cutoff.map_or("none".into(), |q| format!("{q:.3}")),
            if a { "ok" } else { "x" },
            r.asym.rate,
            if b { "ok" } else { "x" },
            threshold.map_or("none".into(), |t| t.to_string()),
            if c { "ok" } else { "x" },
        ),
    )
}

fn epsilon_bookkeeping(r: &Reproduction) -> Verdict {
    let c = security_constants(EPSILON);
    let fail_exact = c.epsilon_fail == 2e-12;
    let pa_close = (c.epsilon_pa - 2e-12).abs() <= 1e-20;
    let positive: Vec<&KeyRateReport> = r
        .symmetric
        .iter()
        .chain(r.asym_sweep.iter())
        .chain(std::iter::once(&r.asym))
        .filter(|x| x.rate > 0.0)
        .collect();
    let worst = positive
        .iter()
        .map(|x| pa_output_length_check(x.hmin_bound, x.ell_bits(), EPSILON))
        .fold(0.0, f64::max);
    verdict(
        fail_exact && pa_close && worst <= c.epsilon_pa && !positive.is_empty(),
        format!(
            "ε_fail={:e} (exact: {fail_exact}); ε_PA={:e} (|ε_PA−2e-12|={:.1e}); max PA check {worst:.3e} over {} positive-rate points",
            c.epsilon_fail,
            c.epsilon_pa,
            (c.epsilon_pa - 2e-12).abs(),
            positive.len()
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 7] = [
        &["rate", "--p", "2", "--q", "0.1", "--qz", "0.1,0.025"],
        &["rate", "--q", "0.03", "--m", "100000", "--format", "json"],
        &["sweep-q", "--p", "2", "--qz-ratio", "1,0.25"],
        &["sweep-n", "--p", "2", "--q", "0.1", "--qz", "0.1,0.025"],
        &["simulate", "--p", "2", "--q", "0.1", "--qz", "0.1,0.025", "--trials", "6"],
        &["simulate", "--q", "0.05", "--trials", "3", "--format", "json"],
        &["selftest", "--samples", "50"],
    ];
    let mut mismatched = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let run = |k: usize| {
            let path = dir.path().join(format!("{i}-{k}.out"));
            let status = Command::new(env!("CARGO_BIN_EXE_qcka"))
                .args(*cmd)
                .args(["--seed", "424242", "--output", path.to_str().unwrap()])
                .output()
                .expect("spawn qcka")
                .status;
            (status.code(), std::fs::read(&path).unwrap_or_default())
        };
        let (first, second) = (run(0), run(1));
        if first != second || first.1.is_empty() {
            mismatched.push(cmd[0]);
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{} commands run twice with --seed 424242; mismatched: {:?}", commands.len(), mismatched),
    )
}

fn report(index: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let pass = v.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
    println!(
        "{} criterion {index} {name}: {} [{:.2}s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        took.as_secs_f64()
    );
    pass
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let mut ok = true;
    ok &= report(1, "lemma1-exactness", secs(1), lemma1_exactness);
    ok &= report(2, "delayed-measurement", secs(60), delayed_measurement);
    ok &= report(3, "lemma4-bound", secs(60), lemma4_bound);
    ok &= report(4, "sampling-oracle", secs(60), sampling_oracle);
    ok &= report(5, "analytic-simulation-agreement", secs(120), analytic_agreement);

    let mut repro = None;
    ok &= report(6, "figure-reproduction", secs(30), || {
        let r = reproduce();
        let v = figure_reproduction(&r);
        repro = Some(r);
        v
    });
    let repro = repro.expect("criterion 6 ran");
    ok &= report(7, "epsilon-bookkeeping", None, || epsilon_bookkeeping(&repro));
    ok &= report(8, "determinism", None, determinism);

    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
