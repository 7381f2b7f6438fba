// Excitation spectrum of 137Ba+ under the two-component pump, with the four
// dark resonances and where each channel actually goes dark.

use eit_cool::atomic::{build_basis, NuclearSpin, Polarization};
use eit_cool::liouvillian::{mhz, DriveConfig};
use eit_cool::spectrum::{
    dark_resonances, excitation_spectrum, uniform_grid, ProbeRabis, PumpSpec,
};

pub fn run_example() -> eit_cool::Result<()> {
    let gamma = mhz(20.1);
    let basis = build_basis(NuclearSpin::three_halves());
    let base = DriveConfig {
        omega_pi_1: 1.5 * gamma,
        omega_pi_2: 3.0 * gamma,
        ..DriveConfig::default()
    };
    let pump = PumpSpec {
        delta_pump: 3.7 * gamma,
        delta_offset: -mhz(2.0),
    };
    let probe = ProbeRabis::equal(0.4 * gamma);

    let grid = uniform_grid(3.2 * gamma, 4.1 * gamma, 181);
    let trace = excitation_spectrum(&basis, &base, pump, probe, &grid)?;

    println!("dark resonances (units of gamma):");
    for r in dark_resonances(pump, base.zeeman_s_upper) {
        println!(
            "  {} {:.4} ({:?})",
            r.label.as_str(),
            r.detuning / gamma,
            r.channel
        );
    }
    for (name, channel) in [
        ("sigma+", Some(Polarization::SigmaPlus)),
        ("sigma-", Some(Polarization::SigmaMinus)),
        ("total", None),
    ] {
        let minima: Vec<String> = trace
            .local_minima(channel)
            .into_iter()
            .map(|i| format!("{:.4}", trace.points[i].delta_probe / gamma))
            .collect();
        println!("{name:>7} minima: {}", minima.join(" "));
    }

    let wide = uniform_grid(-3.0 * gamma, 3.0 * gamma, 61);
    let broad = excitation_spectrum(&basis, &base, pump, probe, &wide)?;
    let peak = &broad.points[broad.argmax_total().expect("non-empty")];
    println!(
        "broad feature peaks at {:.2} gamma with rho_P = {:.4}",
        peak.delta_probe / gamma,
        peak.rho_p_total
    );
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
