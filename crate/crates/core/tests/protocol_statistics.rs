use qcka_core::protosim::{
    aggregate, analytic_pa, analytic_postcad_error, analytic_qx, run_trials, PostCadErrorFormula,
};
use qcka_core::{NoiseModel, ProtocolParams};

const N_KEY: u64 = 100_000;
const M_TEST: u64 = 25_000;
const TRIALS: u64 = 20;

fn params(p: usize, seed: u64) -> ProtocolParams {
    ProtocolParams::new(p, N_KEY + M_TEST, M_TEST, 1e-36, seed).unwrap()
}

/// σ of a mean of `TRIALS` binomial proportions, each over `count` draws.
fn sigma_of_mean(prob: f64, count: f64) -> f64 {
    (prob * (1.0 - prob) / (count * TRIALS as f64)).sqrt()
}

#[test]
fn accept_fraction_and_qx_converge() {
    let configs: &[(f64, &[f64])] = &[
        (0.1, &[0.1]),
        (0.05, &[0.2]),
        (0.1, &[0.1, 0.025]),
        (0.02, &[0.3, 0.05]),
        (0.08, &[0.1, 0.025, 0.025]),
        (0.0, &[0.5, 0.0, 0.15]),
    ];
    for (i, &(q, qz)) in configs.iter().enumerate() {
        let noise = NoiseModel::new(q, qz.to_vec()).unwrap();
        let params = params(qz.len(), 100 + i as u64);
        let s = aggregate(&run_trials(&params, &noise, TRIALS).unwrap()).unwrap();

        let qx = analytic_qx(q).unwrap();
        assert!((s.qx_observed.mean - qx).abs() <= 3.0 * sigma_of_mean(qx, M_TEST as f64) + 1e-15);

        let pa = analytic_pa(qz).unwrap();
        let err = (s.accept_fraction.mean - pa).abs();
        assert!(err <= 3.0 * sigma_of_mean(pa, N_KEY as f64), "cfg {i}: {} vs {pa}", s.accept_fraction.mean);

        let indep = analytic_postcad_error(qz, PostCadErrorFormula::Independent).unwrap();
        let kept = s.n_a.mean;
        for (j, e) in indep.iter().enumerate() {
            let got = s.postcad_error[j].mean;
            assert!((got - e).abs() <= 3.0 * sigma_of_mean(*e, kept) + 1e-15, "cfg {i} bob {j}: {got} vs {e}");
        }
    }
}

#[test]
fn conservative_postcad_formula_is_distinguishable_for_two_bobs() {
    let qz = [0.1, 0.025];
    let noise = NoiseModel::new(0.1, qz.to_vec()).unwrap();
    let s = aggregate(&run_trials(&params(2, 42), &noise, TRIALS).unwrap()).unwrap();
    let conservative = analytic_postcad_error(&qz, PostCadErrorFormula::Conservative).unwrap();
    let indep = analytic_postcad_error(&qz, PostCadErrorFormula::Independent).unwrap();
    let got = s.postcad_error[0].mean;
    let sigma = sigma_of_mean(indep[0], s.n_a.mean);
    assert!((got - indep[0]).abs() <= 3.0 * sigma);
    assert!((got - conservative[0]).abs() > 3.0 * sigma);
}

#[test]
fn two_party_cad_suppresses_errors_quadratically() {
    for (i, &q) in [0.02, 0.05, 0.1, 0.15, 0.2].iter().enumerate() {
        let noise = NoiseModel::symmetric(q, 1).unwrap();
        let trials = run_trials(&params(1, 500 + i as u64), &noise, 4).unwrap();
        let s = aggregate(&trials).unwrap();
        let expected = q * q / (q * q + (1.0 - q) * (1.0 - q));
        let got = s.postcad_error[0].mean;
        let sigma = (expected * (1.0 - expected) / (s.n_a.mean * 4.0)).sqrt();
        assert!((got - expected).abs() <= 3.0 * sigma, "Q={q}: {got} vs {expected}");
        assert!(got < q);
        // error/Q tracks Q/(Q² + (1−Q)²)
        let ratio = got / q;
        assert!((ratio - q / (q * q + (1.0 - q) * (1.0 - q))).abs() <= 3.0 * sigma / q);
    }
}

#[test]
fn noiseless_trials_keep_every_block() {
    let noise = NoiseModel::symmetric(0.0, 3).unwrap();
    for t in run_trials(&params(3, 1), &noise, 3).unwrap() {
        assert_eq!(t.n_a, N_KEY);
        assert_eq!(t.keys_equal_fraction, 1.0);
        assert_eq!(t.qx_observed, 0.0);
    }
}
