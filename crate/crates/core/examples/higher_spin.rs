// The same pumping scheme for larger nuclear spins: the pumped dark state is
// still |S, F=I+1/2, m=0>, and the probe opens a cooling window.

use eit_cool::atomic::Polarization;
use eit_cool::atomic::{build_basis, NuclearSpin};
use eit_cool::cooling::{cooling_limit, MotionalMode};
use eit_cool::liouvillian::{
    assemble_liouvillian, build_hamiltonian, build_jump_operators, mhz, steady_state, DriveConfig,
};
use eit_cool::spectrum::{p_population, ProbeRabis, PumpSpec, SpectrumModel};

pub fn run_example() -> eit_cool::Result<()> {
    let gamma = mhz(20.1);
    let base = PumpSpec {
        delta_pump: 3.7 * gamma,
        delta_offset: -mhz(2.0),
    }
    .apply(DriveConfig {
        omega_pi_1: 1.5 * gamma,
        omega_pi_2: 3.0 * gamma,
        ..DriveConfig::default()
    });
    for two_i in [3, 5, 7] {
        let spin = NuclearSpin::new(two_i)?;
        let basis = build_basis(spin);
        let jumps = build_jump_operators(&basis, &base)?;
        let h = build_hamiltonian(&basis, &base, Polarization::SigmaPlus)?;
        let rho = steady_state(&assemble_liouvillian(&h, &jumps)?)?;
        let dark = rho.population(basis.dark_state());

        let model = SpectrumModel::new(basis.clone(), ProbeRabis::equal(0.4 * gamma).apply(base))?;
        let rho_p = |d: f64| model.rho_p(d);
        let mode = MotionalMode::new("x", mhz(1.7), 0.0594)?;
        let limit = cooling_limit(&rho_p, 3.45 * gamma, mode.omega)?;
        println!(
            "I = {}: dim {:2}, probe off: dark {:.10} P {:.1e}; probe on: n_f {:.3}",
            spin.f_upper() - eit_cool::atomic::HalfInt::from_twice(1),
            basis.dim(),
            dark,
            p_population(&rho, &basis)?,
            limit.n_final
        );
    }
    Ok(())
}

fn main() -> eit_cool::Result<()> {
    run_example()
}
