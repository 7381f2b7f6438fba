// Sideband-ratio thermometry along a cooling curve and the exponential fit
// to the recovered occupations.

use eit_cool::cooling::{fit_cooling_curve, sideband_nbar, CurveSample};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

/// First-order sideband probabilities of a thermal state: the subtracting
/// sideband scales with n, the adding one with n + 1.
fn sidebands(nbar: f64, strength: f64) -> (f64, f64) {
    (strength * (nbar + 1.0), strength * nbar)
}

pub fn run_example() -> eit_cool::Result<()> {
    let (n_i, n_f, tau) = (11.8, 0.08, 0.15);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut samples = Vec::new();
    for k in 0..12 {
        let t = 0.05 + 0.1 * f64::from(k);
        let n = (n_i - n_f) * (-t / tau).exp() + n_f;
        let (p_add, p_sub) = sidebands(n, 0.02);
        let measured = sideband_nbar(p_add, p_sub)?;
        let sigma = 0.05 * measured + 0.005;
        let noisy = measured + Normal::new(0.0, sigma).expect("sigma > 0").sample(&mut rng);
        samples.push(CurveSample {
            t,
            nbar: noisy,
            sigma,
        });
    }
    let fit = fit_cooling_curve(&samples)?;
    println!(
        "n_i = {:.2} +- {:.2}, n_f = {:.3} +- {:.3}, tau = {:.3} +- {:.3} ms",
        fit.n_initial,
        fit.sigma(0),
        fit.n_final,
        fit.sigma(1),
        fit.tau,
        fit.sigma(2)
    );
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
