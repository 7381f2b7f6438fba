// Probe-intensity scan for the x mode. Without heating the limit keeps
// falling as the probe weakens; a heating rate turns that into an optimum.

use eit_cool::atomic::{build_basis, NuclearSpin};
use eit_cool::cooling::MotionalMode;
use eit_cool::designer::{scan_probe_intensity, DetuningPolicy, HeatingModel};
use eit_cool::liouvillian::{mhz, DriveConfig};
use eit_cool::spectrum::{uniform_grid, PumpSpec};

pub fn run_example() -> eit_cool::Result<()> {
    let gamma = mhz(20.1);
    let basis = build_basis(NuclearSpin::three_halves());
    let base = PumpSpec {
        delta_pump: 3.7 * gamma,
        delta_offset: -mhz(2.0),
    }
    .apply(DriveConfig {
        omega_pi_1: 1.5 * gamma,
        omega_pi_2: 3.0 * gamma,
        ..DriveConfig::default()
    });
    let x = MotionalMode::new("x", mhz(1.7), 0.0594)?;
    let probes: Vec<f64> = [0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
        .iter()
        .map(|p| p * gamma)
        .collect();
    let policy = DetuningPolicy::Optimize(uniform_grid(3.3 * gamma, 3.6 * gamma, 31));

    for (title, heating) in [
        ("no heating", HeatingModel::none()),
        (
            "x heated at 0.8/ms",
            HeatingModel::none().with_rate("x", 0.8)?,
        ),
    ] {
        let scan = scan_probe_intensity(
            &basis,
            &base,
            std::slice::from_ref(&x),
            &probes,
            &heating,
            &policy,
        )?;
        println!("{title}:");
        for s in &scan.samples {
            match &s.modes[0] {
                Ok(o) => println!(
                    "  probe {:.2} G  n_f {:.4}  rate {:6.2}/ms  n_eq {:.4}",
                    s.value / gamma,
                    o.report.n_limit,
                    o.report.rate,
                    o.n_eq.unwrap_or(f64::NAN)
                ),
                Err(g) => println!("  probe {:.2} G  gap: {}", s.value / gamma, g.reason),
            }
        }
        if let Some((s, _)) = scan.best(0) {
            println!("  best probe {:.2} gamma", s.value / gamma);
        }
    }
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
