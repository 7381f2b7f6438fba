//! Reference implementations used as test oracles. None of them share code
//! with the library beyond its public data types.
#![allow(dead_code)]

use eit_cool::atomic::{build_basis, LevelBasis, Manifold, NuclearSpin, Polarization};
use eit_cool::liouvillian::{
    build_hamiltonian, build_jump_operators, mhz, DriveConfig, JumpOperatorSet, C64, TWO_PI,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gamma() -> f64 {
    mhz(20.1)
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> by explicit construction
/// of the coupled states: lowering operators from the stretched state of
/// each J, Gram-Schmidt against the higher-J states, and the Condon-Shortley
/// sign <j1 j1; j2 (J-j1) | J J> > 0. Arguments are doubled.
pub fn cg_by_construction(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    let n1 = (tj1 + 1) as usize;
    let n2 = (tj2 + 1) as usize;
    // product index: (j1 - m1)/1 steps, (j2 - m2) steps
    let pidx = |m1: i32, m2: i32| ((tj1 - m1) / 2) as usize * n2 + ((tj2 - m2) / 2) as usize;
    let dim = n1 * n2;
    let lower_coef = |tj: i32, tm: i32| {
        let (j, m) = (tj as f64 / 2.0, tm as f64 / 2.0);
        (j * (j + 1.0) - m * (m - 1.0)).sqrt()
    };
    let lower = |v: &[f64]| {
        let mut out = vec![0.0; dim];
        for m1 in (-tj1..=tj1).step_by(2) {
            for m2 in (-tj2..=tj2).step_by(2) {
                let c = v[pidx(m1, m2)];
                if c == 0.0 {
                    continue;
                }
                if m1 > -tj1 {
                    out[pidx(m1 - 2, m2)] += c * lower_coef(tj1, m1);
                }
                if m2 > -tj2 {
                    out[pidx(m1, m2 - 2)] += c * lower_coef(tj2, m2);
                }
            }
        }
        out
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // states[J] = list of |J M> from M = J down
    let mut built: Vec<(i32, Vec<Vec<f64>>)> = Vec::new();
    let mut tjj = tj1 + tj2;
    while tjj >= (tj1 - tj2).abs() {
        let mut top = None;
        for m1 in (-tj1..=tj1).rev().step_by(2) {
            let m2 = tjj - m1;
            if m2.abs() > tj2 || (m2 - tj2) % 2 != 0 {
                continue;
            }
            let mut v = vec![0.0; dim];
            v[pidx(m1, m2)] = 1.0;
            for (tjp, states) in &built {
                let s = &states[((tjp - tjj) / 2) as usize];
                let o = dot(&v, s);
                for (x, y) in v.iter_mut().zip(s) {
                    *x -= o * y;
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-10 {
                top = Some(v.into_iter().map(|x| x / norm).collect::<Vec<_>>());
                break;
            }
        }
        let mut top = top.expect("a state with M = J exists");
        let sign_m2 = tjj - tj1;
        if sign_m2.abs() <= tj2 && top[pidx(tj1, sign_m2)] < 0.0 {
            top.iter_mut().for_each(|x| *x = -*x);
        }
        let mut states = vec![top];
        let mut m = tjj;
        while m > -tjj {
            let next = lower(states.last().unwrap());
            let c = lower_coef(tjj, m);
            states.push(next.into_iter().map(|x| x / c).collect());
            m -= 2;
        }
        built.push((tjj, states));
        tjj -= 2;
    }
    if tm1 + tm2 != tm || tm.abs() > tj {
        return 0.0;
    }
    let Some((_, states)) = built.iter().find(|(t, _)| *t == tj) else {
        return 0.0;
    };
    states[((tj - tm) / 2) as usize][pidx(tm1, tm2)]
}

/// Lindblad generator from Kronecker products, column stacking:
/// vec(A X B) = (B^T kron A) vec(X).
pub fn kron_liouvillian(h: &DMatrix<C64>, jumps: &JumpOperatorSet) -> DMatrix<C64> {
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let i = C64::i();
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
    for j in &jumps.jumps {
        let mut c = DMatrix::<C64>::zeros(d, d);
        c[(j.to, j.from)] = C64::new(j.rate.sqrt(), 0.0);
        let cdc = c.adjoint() * &c;
        l += c.conjugate().kronecker(&c)
            - id.kronecker(&cdc) * C64::new(0.5, 0.0)
            - cdc.transpose().kronecker(&id) * C64::new(0.5, 0.0);
    }
    l
}

/// Right-hand side of the master equation in matrix form.
pub fn master_rhs(h: &DMatrix<C64>, jumps: &JumpOperatorSet, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let i = C64::i();
    let mut out = (h * rho - rho * h) * (-i);
    for j in &jumps.jumps {
        let g = C64::new(j.rate, 0.0);
        out[(j.to, j.to)] += g * rho[(j.from, j.from)];
        for k in 0..rho.nrows() {
            out[(j.from, k)] -= g * 0.5 * rho[(j.from, k)];
            out[(k, j.from)] -= g * 0.5 * rho[(k, j.from)];
        }
    }
    out
}

/// Long-time limit of fixed-step RK4 integration of the matrix-form master
/// equation from `rho0`.
///
/// The one-step RK4 map of this linear equation is built column by column by
/// applying four stages to each matrix unit; 2^k steps are then taken by
/// repeated squaring, doubling the elapsed time until the state stops
/// changing and at least 200 decay times have passed. Rounding error makes
/// the state drift again if squaring continues past that point, so the first
/// converged state is returned. Returns (rho, elapsed time).
pub fn rk4_long_time(
    h: &DMatrix<C64>,
    jumps: &JumpOperatorSet,
    rho0: &DMatrix<C64>,
    tolerance: f64,
) -> (DMatrix<C64>, f64) {
    let d = h.nrows();
    let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max) * d as f64
        + jumps.jumps.iter().map(|j| j.rate).sum::<f64>();
    let dt = 0.5 / scale;
    let step = |rho: &DMatrix<C64>| {
        let half = C64::new(dt / 2.0, 0.0);
        let full = C64::new(dt, 0.0);
        let k1 = master_rhs(h, jumps, rho);
        let k2 = master_rhs(h, jumps, &(rho + &k1 * half));
        let k3 = master_rhs(h, jumps, &(rho + &k2 * half));
        let k4 = master_rhs(h, jumps, &(rho + &k3 * full));
        rho + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
            * C64::new(dt / 6.0, 0.0)
    };
    let n = d * d;
    let mut p = DMatrix::<C64>::zeros(n, n);
    for col in 0..n {
        let mut e = DMatrix::<C64>::zeros(d, d);
        e[(col % d, col / d)] = C64::new(1.0, 0.0);
        let out = step(&e);
        p.column_mut(col).copy_from_slice(out.as_slice());
    }
    let v0 = nalgebra::DVector::from_column_slice(rho0.as_slice());
    let mut v = &p * &v0;
    let mut elapsed = dt;
    let decay: f64 = jumps
        .jumps
        .iter()
        .filter(|j| j.from == jumps.jumps[0].from)
        .map(|j| j.rate)
        .sum();
    for _ in 0..80 {
        p = &p * &p;
        elapsed *= 2.0;
        let next = &p * &v0;
        let change = (&next - &v).norm();
        v = next;
        if change < tolerance && elapsed * decay > 200.0 {
            break;
        }
    }
    (DMatrix::from_column_slice(d, d, v.as_slice()), elapsed)
}

/// Level shift of |S(F=I+1/2), m> from exact diagonalization of the probe
/// coupling between S(F=I+1/2) and P(F=I+1/2), in 2pi x kHz.
pub fn exact_probe_shift(
    spin: NuclearSpin,
    m_twice: i32,
    omegas: [f64; 3], // sigma+, sigma-, pi
    delta: f64,
    zeeman_s: f64,
    zeeman_p: f64,
) -> f64 {
    let tf = spin.f_upper().twice();
    let n = (tf + 1) as usize;
    let ms: Vec<i32> = (-tf..=tf).step_by(2).collect();
    let mut hm = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (a, &m) in ms.iter().enumerate() {
        hm[(a, a)] = delta + m as f64 / 2.0 * zeeman_s;
        hm[(n + a, n + a)] = m as f64 / 2.0 * zeeman_p;
    }
    for (a, &m) in ms.iter().enumerate() {
        for (q, omega) in [(1, omegas[0]), (-1, omegas[1]), (0, omegas[2])] {
            let mp = m + 2 * q;
            if mp.abs() > tf {
                continue;
            }
            let b = ms.iter().position(|&x| x == mp).unwrap();
            let c = cg_by_construction(tf, m, 2, 2 * q, tf, mp);
            hm[(a, n + b)] = omega / 2.0 * c;
            hm[(n + b, a)] = omega / 2.0 * c;
        }
    }
    let a = ms.iter().position(|&x| x == m_twice).unwrap();
    let bare = hm[(a, a)];
    let eig = hm.symmetric_eigen();
    let k = (0..2 * n)
        .max_by(|&i, &j| {
            eig.eigenvectors[(a, i)]
                .abs()
                .total_cmp(&eig.eigenvectors[(a, j)].abs())
        })
        .unwrap();
    (eig.eigenvalues[k] - bare) / TWO_PI * 1e3
}

/// Shift of |S(F=I-1/2), 0> under the pi pump component, exact two-level
/// diagonalization, in 2pi x kHz.
pub fn exact_pump_shift(spin: NuclearSpin, omega: f64, delta: f64) -> f64 {
    let c = cg_by_construction(spin.f_lower().twice(), 0, 2, 0, spin.f_upper().twice(), 0);
    let g = omega / 2.0 * c;
    // levels delta (S) and 0 (P): upper-branch eigenvalue when delta > 0
    let mean = delta / 2.0;
    let root = (mean * mean + g * g).sqrt();
    let e = if delta > 0.0 {
        mean + root
    } else {
        mean - root
    };
    (e - delta) / TWO_PI * 1e3
}

/// First-order sideband excitation of a thermal state, summed over Fock
/// levels with a weak pulse of area `theta` on the n -> n +- 1 transitions.
pub fn thermal_sideband_probabilities(nbar: f64, theta: f64) -> (f64, f64) {
    let mut p_add = 0.0;
    let mut p_sub = 0.0;
    let ratio = nbar / (nbar + 1.0);
    let mut pn = 1.0 / (nbar + 1.0);
    for n in 0..4000u32 {
        let nf = f64::from(n);
        p_add += pn * (theta * (nf + 1.0).sqrt()).sin().powi(2);
        p_sub += pn * (theta * nf.sqrt()).sin().powi(2);
        pn *= ratio;
        if pn < 1e-300 {
            break;
        }
    }
    (p_add, p_sub)
}

/// A random but well-conditioned laser configuration.
pub struct RandomCase {
    pub basis: LevelBasis,
    pub cfg: DriveConfig,
    pub pol: Polarization,
}

pub fn random_case(seed: u64, two_i: u32) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gamma();
    let cfg = DriveConfig {
        omega_pi_1: rng.random_range(0.8..3.0) * g,
        omega_pi_2: rng.random_range(0.8..3.0) * g,
        omega_sigma_plus: rng.random_range(0.2..1.0) * g,
        omega_sigma_minus: rng.random_range(0.2..1.0) * g,
        delta_pi_1: rng.random_range(-2.0..2.0) * g,
        delta_pi_2: rng.random_range(-2.0..2.0) * g,
        delta_sigma: rng.random_range(-2.0..2.0) * g,
        ..DriveConfig::default()
    };
    let pol = if rng.random_bool(0.5) {
        Polarization::SigmaPlus
    } else {
        Polarization::SigmaMinus
    };
    RandomCase {
        basis: build_basis(NuclearSpin::new(two_i).unwrap()),
        cfg,
        pol,
    }
}

impl RandomCase {
    pub fn hamiltonian(&self) -> DMatrix<C64> {
        build_hamiltonian(&self.basis, &self.cfg, self.pol)
            .unwrap()
            .matrix()
            .clone()
    }

    pub fn jumps(&self) -> JumpOperatorSet {
        build_jump_operators(&self.basis, &self.cfg).unwrap()
    }

    pub fn p_indices(&self) -> Vec<usize> {
        self.basis.indices_in(Manifold::PUpper).collect()
    }
}

/// Seeded shot-noise trials of a Ramsey fit. Returns (trials covered within
/// `k` standard deviations, trials fitted).
pub fn ramsey_coverage(
    truth: eit_cool::calibration::RamseyParams,
    times: &[f64],
    shots: u64,
    root_seed: u64,
    trials: u64,
    k: f64,
) -> (usize, usize) {
    use eit_cool::calibration::{ramsey_fit, ramsey_synthesize, trial_rng, ShotNoise};
    use rand::RngCore;
    let mut covered = 0;
    let mut fitted = 0;
    for trial in 0..trials {
        let seed = trial_rng(root_seed, trial).next_u64();
        let fringe = ramsey_synthesize(truth, times, Some(ShotNoise { shots, seed })).unwrap();
        let Ok(fit) = ramsey_fit(&fringe) else {
            continue;
        };
        fitted += 1;
        if (fit.params.delta - truth.delta).abs() <= k * fit.delta_sigma() {
            covered += 1;
        }
    }
    (covered, fitted)
}

/// Noiseless samples of (n_i - n_f) exp(-t / tau) + n_f.
pub fn cooling_curve_samples(
    n_i: f64,
    n_f: f64,
    tau: f64,
    t_max: f64,
    points: usize,
) -> Vec<eit_cool::cooling::CurveSample> {
    (0..points)
        .map(|i| {
            let t = t_max * i as f64 / (points - 1) as f64;
            eit_cool::cooling::CurveSample {
                t,
                nbar: (n_i - n_f) * (-t / tau).exp() + n_f,
                sigma: 0.05 * n_i,
            }
        })
        .collect()
}
