// A shot-noise-limited Ramsey fringe and the fitted frequency shift.

use eit_cool::calibration::{ramsey_fit, ramsey_synthesize, RamseyParams, ShotNoise};
use eit_cool::liouvillian::TWO_PI;

pub fn run_example() -> eit_cool::Result<()> {
    let truth = RamseyParams {
        a: 0.9,
        delta: TWO_PI * 2.5,
        gamma: 0.8,
        b: 0.04,
    };
    let times: Vec<f64> = (0..80).map(|i| 0.0125 * f64::from(i)).collect();
    let fringe = ramsey_synthesize(
        truth,
        &times,
        Some(ShotNoise {
            shots: 1000,
            seed: 11,
        }),
    )?;
    let fit = ramsey_fit(&fringe)?;

    println!(
        "delta = {:.4} +- {:.4} rad/ms (true {:.4})",
        fit.params.delta,
        fit.delta_sigma(),
        truth.delta
    );
    println!("shift = {:.4} kHz", fit.params.shift_khz());
    println!(
        "A = {:.3}  gamma = {:.3}/ms  B = {:.3}",
        fit.params.a, fit.params.gamma, fit.params.b
    );
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
