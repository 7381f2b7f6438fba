mod common;

use common::*;
use eit_cool::calibration::{ramsey_fit, ramsey_synthesize, RamseyParams};
use eit_cool::cooling::{fit_cooling_curve, CurveSample};
use eit_cool::liouvillian::TWO_PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn cooling_curve_round_trip() {
    let samples = cooling_curve_samples(11.8, 0.08, 0.15, 1.0, 25);
    let fit = fit_cooling_curve(&samples).unwrap();
    assert!(rel(fit.n_initial, 11.8) < 1e-6);
    assert!(rel(fit.n_final, 0.08) < 1e-6);
    assert!(rel(fit.tau, 0.15) < 1e-6);
    assert!(fit.tau_identifiable());
}

#[test]
fn flat_curve_leaves_tau_undetermined() {
    let samples: Vec<CurveSample> = (0..12)
        .map(|i| CurveSample {
            t: 0.1 * f64::from(i),
            nbar: 0.3,
            sigma: 0.05,
        })
        .collect();
    match fit_cooling_curve(&samples) {
        Ok(fit) => assert!(!fit.tau_identifiable(), "tau sigma {}", fit.sigma(2)),
        Err(e) => panic!("flat data should fit with tau flagged, got {e}"),
    }
}

#[test]
fn noisy_cooling_curve_covers_truth() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut covered = 0;
    let trials = 200;
    for _ in 0..trials {
        let samples: Vec<CurveSample> = cooling_curve_samples(11.8, 0.08, 0.15, 1.0, 25)
            .into_iter()
            .map(|s| {
                let sigma = 0.05 * s.nbar.max(0.2);
                CurveSample {
                    nbar: s.nbar + Normal::new(0.0, sigma).unwrap().sample(&mut rng),
                    sigma,
                    ..s
                }
            })
            .collect();
        let fit = fit_cooling_curve(&samples).unwrap();
        if (fit.tau - 0.15).abs() <= 3.0 * fit.sigma(2) {
            covered += 1;
        }
    }
    assert!(covered >= 190, "{covered}/{trials}");
}

#[test]
fn noiseless_ramsey_recovers_parameters() {
    let truth = RamseyParams {
        a: 0.85,
        delta: TWO_PI * 1.3,
        gamma: 0.4,
        b: 0.05,
    };
    let times: Vec<f64> = (0..120).map(|i| 0.02 * f64::from(i)).collect();
    let fit = ramsey_fit(&ramsey_synthesize(truth, &times, None).unwrap()).unwrap();
    assert!(rel(fit.params.delta, truth.delta) < 1e-8);
    assert!(rel(fit.params.a, truth.a) < 1e-8);
    assert!(rel(fit.params.gamma, truth.gamma) < 1e-8);
    assert!(rel(fit.params.b, truth.b) < 1e-8);
}

#[test]
fn ramsey_shot_noise_coverage() {
    let truth = RamseyParams {
        a: 0.9,
        delta: TWO_PI * 2.5,
        gamma: 0.8,
        b: 0.04,
    };
    let times: Vec<f64> = (0..80).map(|i| 0.0125 * f64::from(i)).collect();
    let (covered, fitted) = ramsey_coverage(truth, &times, 200, 2024, 200, 3.0);
    assert_eq!(fitted, 200);
    assert!(covered >= 190, "{covered}/200");
}
