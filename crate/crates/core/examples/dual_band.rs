// One spectrum, two motional bands: limits for a 0.2 MHz axial mode and a
// 1.7 MHz radial mode across the probe detuning.

use eit_cool::atomic::{build_basis, NuclearSpin};
use eit_cool::cooling::MotionalMode;
use eit_cool::designer::dual_band_report;
use eit_cool::liouvillian::{mhz, DriveConfig};
use eit_cool::spectrum::{uniform_grid, ProbeRabis, PumpSpec};

pub fn run_example() -> eit_cool::Result<()> {
    let gamma = mhz(20.1);
    let cfg = DriveConfig {
        omega_pi_1: 2.2 * gamma,
        omega_pi_2: 1.5 * gamma,
        ..DriveConfig::default()
    };
    let cfg = ProbeRabis::equal(0.15 * gamma).apply(cfg);
    let cfg = PumpSpec {
        delta_pump: 3.6 * gamma,
        delta_offset: 0.0,
    }
    .apply(cfg);

    let axial = MotionalMode::new("axial", mhz(0.2), 0.0)?;
    let radial = MotionalMode::new("radial", mhz(1.7), 0.0)?;
    let window = uniform_grid(3.3 * gamma, 3.5 * gamma, 41);
    let report = dual_band_report(
        &build_basis(NuclearSpin::three_halves()),
        &cfg,
        &axial,
        &radial,
        &window,
        Some(3.4 * gamma),
    )?;

    println!("{:>10} {:>10} {:>10}", "delta/G", "n_axial", "n_radial");
    for row in report.rows.iter().step_by(4) {
        let show = |r: &Result<f64, _>| r.as_ref().map_or("-".to_string(), |n| format!("{n:.4}"));
        println!(
            "{:>10.4} {:>10} {:>10}",
            row.delta_probe / gamma,
            show(&row.axial),
            show(&row.radial)
        );
    }
    if let Some((d, n)) = report.axial_optimum {
        println!("axial optimum  n = {n:.4} at {:.4} gamma", d / gamma);
    }
    if let Some((d, n)) = report.radial_optimum {
        println!("radial optimum n = {n:.4} at {:.4} gamma", d / gamma);
    }
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
