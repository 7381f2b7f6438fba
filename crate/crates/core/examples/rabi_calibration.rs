// Stark shifts of the clock and stretched Zeeman qubits for a given probe,
// then back from the shifts to the three Rabi frequencies.

use eit_cool::atomic::NuclearSpin;
use eit_cool::calibration::{
    invert_rabi, stark_shift_pump, stark_shifts_probe, ProbeComponents, Splittings,
};
use eit_cool::liouvillian::{mhz, DriveConfig};

pub fn run_example() -> eit_cool::Result<()> {
    let gamma = mhz(20.1);
    let spin = NuclearSpin::three_halves();
    let splittings = Splittings::from_drive(&DriveConfig::default());
    let delta = 3.7 * gamma;
    let probe = ProbeComponents {
        sigma_plus: 0.40 * gamma,
        sigma_minus: 0.38 * gamma,
        pi: 0.05 * gamma,
    };

    let shifts = stark_shifts_probe(spin, probe, delta, splittings)?;
    println!(
        "shifts (kHz): clock {:.3}  zeeman+ {:.3}  zeeman- {:.3}",
        shifts.clock_probe, shifts.zeeman_plus, shifts.zeeman_minus
    );
    if !shifts.is_perturbative() {
        println!("warning: coupling ratio {:.3}", shifts.coupling_ratio);
    }

    let back = invert_rabi(spin, shifts.probe_shifts(), delta, splittings)?;
    println!(
        "recovered (gamma): sigma+ {:.6}  sigma- {:.6}  pi {:.6}",
        back.sigma_plus / gamma,
        back.sigma_minus / gamma,
        back.pi / gamma
    );

    let pump = stark_shift_pump(spin, 1.5 * gamma, 3.7 * gamma - mhz(2.0))?;
    println!("pump shift on the clock qubit: {pump:.3} kHz");
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
