//! Frame generator statistics against the pair-model algebra.

use qreading_core::discriminate::{gaussian_likelihood_model, ChannelPair};
use qreading_core::montecarlo::{simulate_set, Sampling, SimConfig, Transmitter};
use qreading_core::stats::{covariance, mean, variance};
use qreading_core::Hypothesis;

fn lab_cfg(tau0: f64, seed: u64) -> SimConfig {
    let pair = ChannelPair::new(tau0, 1.0, 0.78, 0.77, 1e5)
        .unwrap()
        .with_straylight(40.0)
        .unwrap()
        .with_electronic_variance(1e4)
        .unwrap();
    SimConfig::new(Transmitter::Tmsv, pair, 10_000, seed)
}

#[test]
fn joint_moments_match_gaussian_model() {
    for (h, seed) in [(Hypothesis::Tau0, 1), (Hypothesis::Tau1, 2)] {
        let cfg = lab_cfg(0.95, seed);
        let set = simulate_set(&cfg, h).unwrap();
        let model = gaussian_likelihood_model(&cfg.pair, h, true).unwrap();
        let (s, i) = (set.signal(), set.idler());
        let n = s.len() as f64;

        assert!((mean(&s) - model.mean_s).abs() < 3.0 * (model.var_s / n).sqrt());
        assert!((mean(&i) - model.mean_i).abs() < 3.0 * (model.var_i / n).sqrt());
        // normal theory: sd of a sample variance is σ²√(2/n)
        assert!((variance(&s) - model.var_s).abs() < 3.0 * model.var_s * (2.0 / n).sqrt());
        assert!((variance(&i) - model.var_i).abs() < 3.0 * model.var_i * (2.0 / n).sqrt());
        // sd of a sample covariance: √((σ_s²σ_i² + c²)/n)
        let sd_cov = ((model.var_s * model.var_i + model.cov * model.cov) / n).sqrt();
        assert!((covariance(&s, &i) - model.cov).abs() < 3.0 * sd_cov);
    }
}

#[test]
fn gaussian_sampling_agrees_with_exact_sampling() {
    let exact = lab_cfg(0.9, 3);
    let gaussian = SimConfig { sampling: Sampling::Gaussian, ..exact };
    let a = simulate_set(&exact, Hypothesis::Tau0).unwrap();
    let b = simulate_set(&gaussian, Hypothesis::Tau0).unwrap();
    let n = a.len() as f64;
    for (x, y) in [(a.signal(), b.signal()), (a.idler(), b.idler())] {
        let se = ((variance(&x) + variance(&y)) / n).sqrt();
        assert!((mean(&x) - mean(&y)).abs() < 3.0 * se);
    }
}

#[test]
fn serialized_sets_are_reproducible() {
    let cfg = lab_cfg(0.99, 4);
    let first = simulate_set(&cfg, Hypothesis::Tau1).unwrap().to_csv_string();
    let second = simulate_set(&cfg, Hypothesis::Tau1).unwrap().to_csv_string();
    assert_eq!(first, second);
}
