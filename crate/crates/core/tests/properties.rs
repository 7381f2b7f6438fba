mod common;

use common::*;
use eit_cool::atomic::{cg, HalfInt, NuclearSpin, Polarization};
use eit_cool::calibration::{
    invert_rabi, ramsey_fit, ramsey_synthesize, stark_shifts_probe, ProbeComponents, RamseyParams,
    Splittings,
};
use eit_cool::cooling::{limit_from_samples, rate_from_samples, sideband_nbar, SpectralSamples};
use eit_cool::designer::equilibrium_nbar;
use eit_cool::liouvillian::{
    assemble_liouvillian, build_hamiltonian, mhz, steady_state, vectorize, DriveConfig,
};
use eit_cool::spectrum::{p_population, SpectrumModel};
use proptest::prelude::*;

fn light() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(light())]

    #[test]
    fn steady_state_is_a_physical_fixed_point(seed in any::<u64>(), big in any::<bool>()) {
        let case = random_case(seed, if big { 5 } else { 3 });
        let h = build_hamiltonian(&case.basis, &case.cfg, case.pol).unwrap();
        let l = assemble_liouvillian(&h, &case.jumps()).unwrap();
        let rho = steady_state(&l).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.trace().im.abs() < 1e-10);
        prop_assert!(rho.hermiticity_error() < 1e-10);
        prop_assert!(rho.min_eigenvalue() >= -1e-9);
        let residual = (l.matrix() * vectorize(rho.matrix())).norm();
        prop_assert!(residual <= 1e-9 * l.frobenius_norm());
    }

    #[test]
    fn sigma_minus_mirrors_sigma_plus(seed in any::<u64>(), delta in -5.0..5.0f64) {
        let case = random_case(seed, 3);
        let g = gamma();
        let mirrored = DriveConfig {
            zeeman_s_lower: -case.cfg.zeeman_s_lower,
            zeeman_s_upper: -case.cfg.zeeman_s_upper,
            zeeman_p: -case.cfg.zeeman_p,
            omega_sigma_plus: case.cfg.omega_sigma_minus,
            omega_sigma_minus: case.cfg.omega_sigma_plus,
            ..case.cfg
        };
        let a = SpectrumModel::new(case.basis.clone(), case.cfg).unwrap();
        let b = SpectrumModel::new(case.basis.clone(), mirrored).unwrap();
        let pa = p_population(&a.solve_channel(delta * g, Polarization::SigmaMinus).unwrap(), &case.basis).unwrap();
        let pb = p_population(&b.solve_channel(delta * g, Polarization::SigmaPlus).unwrap(), &case.basis).unwrap();
        prop_assert!((pa - pb).abs() < 1e-10, "{} vs {}", pa, pb);
    }

    #[test]
    fn cg_squares_complete_over_total_f(two_f in 1..10i32, m_index in 0usize..10, q in -1..=1i32) {
        let m = -two_f + 2 * (m_index as i32 % (two_f + 1));
        let mp = m + 2 * q;
        let sum: f64 = [two_f - 2, two_f, two_f + 2]
            .into_iter()
            .filter(|&t| t >= 0 && mp.abs() <= t)
            .map(|t| cg(HalfInt::from_twice(two_f), HalfInt::from_twice(m), HalfInt::from_twice(t), HalfInt::from_twice(mp)).unwrap().powi(2))
            .sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cg_reflection_symmetry(two_f in 1..10i32, m_index in 0usize..10, q in -1..=1i32, dj in -1..=1i32) {
        let m = -two_f + 2 * (m_index as i32 % (two_f + 1));
        let mp = m + 2 * q;
        let t = two_f + 2 * dj;
        prop_assume!(t >= 0 && mp.abs() <= t);
        let h = HalfInt::from_twice;
        let up = cg(h(two_f), h(m), h(t), h(mp)).unwrap();
        let down = cg(h(two_f), h(-m), h(t), h(-mp)).unwrap();
        let sign = if (two_f + 2 - t) / 2 % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((down - sign * up).abs() < 1e-12);
    }

    #[test]
    fn shifts_invert_to_rabi_frequencies(
        two_i in prop::sample::select(vec![3u32, 5, 7]),
        sp in 0.01..0.5f64, sm in 0.01..0.5f64, pi in 0.01..0.5f64,
        delta in 2.0..6.0f64,
    ) {
        let g = gamma();
        let spin = NuclearSpin::new(two_i).unwrap();
        let s = Splittings { s_upper: mhz(4.7), p: mhz(1.57) };
        let probe = ProbeComponents { sigma_plus: sp * g, sigma_minus: sm * g, pi: pi * g };
        let shifts = stark_shifts_probe(spin, probe, delta * g, s).unwrap();
        let back = invert_rabi(spin, shifts.probe_shifts(), delta * g, s).unwrap();
        for (x, y) in [(back.sigma_plus, probe.sigma_plus), (back.sigma_minus, probe.sigma_minus), (back.pi, probe.pi)] {
            prop_assert!((x - y).abs() <= 1e-10 * y);
        }
    }

    #[test]
    fn cooling_limit_ignores_spectrum_scale(
        carrier in 1e-4..0.1f64, red in 1e-5..0.05f64, extra in 1e-4..0.1f64,
        scale in 0.01..100.0f64, eta in 0.01..0.2f64,
    ) {
        let s = SpectralSamples { carrier, red, blue: red + extra };
        let t = SpectralSamples { carrier: scale * carrier, red: scale * red, blue: scale * (red + extra) };
        let a = limit_from_samples(&s).unwrap().n_final;
        let b = limit_from_samples(&t).unwrap().n_final;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        let g = gamma();
        let ra = rate_from_samples(&s, eta, g);
        let rb = rate_from_samples(&s, 2.0 * eta, g);
        prop_assert!((rb - 4.0 * ra).abs() <= 1e-12 * rb.abs());
        // n_f = (carrier + red) / (blue - red) together with the rate gives
        // n_f * rate = eta^2 gamma (carrier + red)
        let identity = a * ra - eta * eta * g * (carrier + red) * 1e3;
        prop_assert!(identity.abs() <= 1e-9 * (a * ra).abs());
    }

    #[test]
    fn heating_never_lowers_occupation(n in 0.0..5.0f64, rate in 1e-3..50.0f64, ndot in 0.0..10.0f64) {
        let n_eq = equilibrium_nbar(n, rate, ndot).unwrap();
        prop_assert!(n_eq >= n);
    }

    #[test]
    fn sideband_ratio_inverts_forward_model(nbar in 0.0..20.0f64) {
        let (p_add, p_sub) = thermal_sideband_probabilities(nbar, 1e-3);
        let back = sideband_nbar(p_add, p_sub).unwrap();
        prop_assert!((back - nbar).abs() <= 1e-4 * nbar.max(1.0));
    }

    #[test]
    fn ramsey_fit_commutes_with_time_rescaling(
        a in 0.3..0.9f64, delta in 1.0..6.0f64, gamma_r in 0.0..0.3f64, scale in 0.2..5.0f64,
    ) {
        let b = (1.0 - a) * 0.3;
        let p = RamseyParams { a, delta, gamma: gamma_r, b };
        let times: Vec<f64> = (0..100).map(|i| 0.1 * i as f64).collect();
        let slow = ramsey_fit(&ramsey_synthesize(p, &times, None).unwrap()).unwrap();
        let q = RamseyParams { delta: delta / scale, gamma: gamma_r / scale, ..p };
        let stretched: Vec<f64> = times.iter().map(|t| t * scale).collect();
        let fast = ramsey_fit(&ramsey_synthesize(q, &stretched, None).unwrap()).unwrap();
        prop_assert!((slow.params.delta - delta).abs() <= 1e-8 * delta);
        prop_assert!((fast.params.delta * scale - slow.params.delta).abs() <= 1e-8 * delta);
        prop_assert!((fast.params.gamma * scale - slow.params.gamma).abs() <= 1e-8);
    }
}
