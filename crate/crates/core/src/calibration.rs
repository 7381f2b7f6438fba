//! AC Stark shifts of the ground hyperfine qubits, inversion to probe Rabi
//! frequencies, and Ramsey fringe synthesis and fitting.
//!
//! Rabi frequencies, detunings and splittings are in 2pi x MHz. Shifts are
//! reported in 2pi x kHz (the number f such that the angular shift is
//! 2pi f kHz). Ramsey times are in ms and the fringe frequency delta in rad/ms.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::atomic::{cg, HalfInt, NuclearSpin};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions, Model};
use crate::liouvillian::{DriveConfig, TWO_PI};

const SINGULAR: f64 = 1e-6;
const NEGATIVE_SQUARE_TOLERANCE: f64 = 1e-9;

fn to_khz(angular_mhz: f64) -> f64 {
    angular_mhz / TWO_PI * 1e3
}

fn from_khz(khz: f64) -> f64 {
    khz * TWO_PI * 1e-3
}

/// Probe Rabi frequencies per polarization component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProbeComponents {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub pi: f64,
}

impl ProbeComponents {
    fn by_q(&self, q: i32) -> f64 {
        match q {
            1 => self.sigma_plus,
            -1 => self.sigma_minus,
            _ => self.pi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splittings {
    /// Zeeman splitting per unit m of S(F=I+1/2).
    pub s_upper: f64,
    /// Zeeman splitting per unit m of P(F=I+1/2).
    pub p: f64,
}

impl Splittings {
    pub fn from_drive(cfg: &DriveConfig) -> Self {
        Splittings {
            s_upper: cfg.zeeman_s_upper,
            p: cfg.zeeman_p,
        }
    }
}

/// Differential shifts of the clock qubit and the two stretched Zeeman qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkShiftSet {
    pub clock_probe: f64,
    pub zeeman_plus: f64,
    pub zeeman_minus: f64,
    pub clock_pump: Option<f64>,
    /// Largest |Omega cg / 2| / |denominator| entering the probe shifts.
    /// Second-order perturbation theory wants this well below 1.
    pub coupling_ratio: f64,
}

impl StarkShiftSet {
    pub fn probe_shifts(&self) -> [f64; 3] {
        [self.clock_probe, self.zeeman_plus, self.zeeman_minus]
    }

    pub fn is_perturbative(&self) -> bool {
        self.coupling_ratio < 0.1
    }
}

/// Per-polarization coefficient of Omega_q^2 in the shift of S(F=I+1/2, m).
struct ShiftTerm {
    q: i32,
    weight: f64,
    denominator: f64,
}

fn shift_terms(
    spin: NuclearSpin,
    m: HalfInt,
    delta_probe: f64,
    s: Splittings,
) -> Result<Vec<ShiftTerm>> {
    let f = spin.f_upper();
    let mut terms = Vec::with_capacity(3);
    for q in [1, -1, 0] {
        let mp = m + HalfInt::from_int(q);
        if mp.twice().abs() > f.twice() {
            continue;
        }
        let c = cg(f, m, f, mp)?;
        if c == 0.0 {
            continue;
        }
        let denominator = delta_probe + m.value() * s.s_upper - mp.value() * s.p;
        if denominator.abs() < SINGULAR {
            return Err(Error::Singularity { denominator });
        }
        terms.push(ShiftTerm {
            q,
            weight: c * c / (4.0 * denominator),
            denominator,
        });
    }
    Ok(terms)
}

/// Rows: clock, zeeman_plus, zeeman_minus. Columns: sigma+, sigma-, pi.
/// Entry (r, c) multiplies Omega_c^2 to give shift r in 2pi x MHz.
fn response_matrix(spin: NuclearSpin, delta_probe: f64, s: Splittings) -> Result<Matrix3<f64>> {
    let f = spin.f_upper();
    let mut m = Matrix3::zeros();
    for (row, level) in [HalfInt::from_int(0), f, -f].into_iter().enumerate() {
        for t in shift_terms(spin, level, delta_probe, s)? {
            let col = match t.q {
                1 => 0,
                -1 => 1,
                _ => 2,
            };
            m[(row, col)] = t.weight;
        }
    }
    Ok(m)
}

/// Second-order probe shifts of the clock qubit (m=0) and the stretched
/// Zeeman qubits (m = +-(I+1/2)) on the upper hyperfine level.
pub fn stark_shifts_probe(
    spin: NuclearSpin,
    probe: ProbeComponents,
    delta_probe: f64,
    splittings: Splittings,
) -> Result<StarkShiftSet> {
    let f = spin.f_upper();
    let mut shifts = [0.0; 3];
    let mut coupling_ratio: f64 = 0.0;
    for (slot, level) in shifts.iter_mut().zip([HalfInt::from_int(0), f, -f]) {
        for t in shift_terms(spin, level, delta_probe, splittings)? {
            let omega = probe.by_q(t.q);
            *slot += t.weight * omega * omega;
            let coupling = omega * (t.weight * t.denominator).sqrt();
            coupling_ratio = coupling_ratio.max(coupling / t.denominator.abs());
        }
    }
    Ok(StarkShiftSet {
        clock_probe: to_khz(shifts[0]),
        zeeman_plus: to_khz(shifts[1]),
        zeeman_minus: to_khz(shifts[2]),
        clock_pump: None,
        coupling_ratio,
    })
}

/// Clock-qubit shift from the pump component driving S(F=I-1/2, m=0) to
/// P(F=I+1/2, m=0), in 2pi x kHz.
pub fn stark_shift_pump(spin: NuclearSpin, omega_pi_1: f64, delta_pump_1: f64) -> Result<f64> {
    if delta_pump_1.abs() < SINGULAR {
        return Err(Error::Singularity {
            denominator: delta_pump_1,
        });
    }
    let zero = HalfInt::from_int(0);
    let c = cg(spin.f_lower(), zero, spin.f_upper(), zero)?;
    Ok(to_khz((c * omega_pi_1).powi(2) / (4.0 * delta_pump_1)))
}

/// Recovers (Omega_sigma+, Omega_sigma-, Omega_pi) from the three measured
/// probe shifts (clock, zeeman_plus, zeeman_minus) in 2pi x kHz.
pub fn invert_rabi(
    spin: NuclearSpin,
    shifts: [f64; 3],
    delta_probe: f64,
    splittings: Splittings,
) -> Result<ProbeComponents> {
    let m = response_matrix(spin, delta_probe, splittings)?;
    let scale = m.abs().max();
    let det = m.determinant();
    if !(det.abs() > 1e-12 * scale.powi(3)) {
        return Err(Error::InconsistentMeasurement(format!(
            "shift equations are singular at delta_probe = {delta_probe} (det = {det:e})"
        )));
    }
    let rhs = Vector3::from_iterator(shifts.iter().map(|&s| from_khz(s)));
    let squares = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InconsistentMeasurement("shift equations are singular".into()))?;
    let names = ["sigma+", "sigma-", "pi"];
    let mut omega = [0.0; 3];
    for ((o, &sq), name) in omega.iter_mut().zip(squares.iter()).zip(names) {
        if sq < -NEGATIVE_SQUARE_TOLERANCE {
            return Err(Error::InconsistentMeasurement(format!(
                "measured shifts imply Omega_{name}^2 = {sq:e} < 0"
            )));
        }
        *o = sq.max(0.0).sqrt();
    }
    Ok(ProbeComponents {
        sigma_plus: omega[0],
        sigma_minus: omega[1],
        pi: omega[2],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyParams {
    pub a: f64,
    /// rad/ms
    pub delta: f64,
    /// 1/ms
    pub gamma: f64,
    pub b: f64,
}

impl RamseyParams {
    pub fn value(&self, t: f64) -> f64 {
        self.a * (self.delta * t).sin().powi(2) * (-self.gamma * t).exp() + self.b
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a >= 0.0
            && self.b >= 0.0
            && self.a + self.b <= 1.0
            && self.gamma >= 0.0
            && self.delta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "unphysical Ramsey parameters {self:?}"
            )))
        }
    }

    /// The fitted frequency as a shift in 2pi x kHz.
    pub fn shift_khz(&self) -> f64 {
        self.delta / TWO_PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyFringe {
    /// (t in ms, probability)
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoise {
    pub shots: u64,
    pub seed: u64,
}

/// Per-trial generator derived from a root seed.
pub fn trial_rng(root_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(trial);
    rng
}

pub fn ramsey_synthesize(
    params: RamseyParams,
    times: &[f64],
    noise: Option<ShotNoise>,
) -> Result<RamseyFringe> {
    params.validate()?;
    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let p = params.value(t).clamp(0.0, 1.0);
        let p = match (noise, rng.as_mut()) {
            (Some(n), Some(rng)) => {
                let k = Binomial::new(n.shots, p)
                    .map_err(|e| Error::InvalidConfig(format!("shot noise: {e}")))?
                    .sample(rng);
                k as f64 / n.shots as f64
            }
            _ => p,
        };
        samples.push((t, p));
    }
    Ok(RamseyFringe { samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyFit {
    pub params: RamseyParams,
    /// Covariance of (A, delta, gamma, B), scaled by the reduced chi-square.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
}

impl RamseyFit {
    pub fn delta_sigma(&self) -> f64 {
        self.covariance[(1, 1)].sqrt()
    }
}

struct RamseyModel;

impl Model for RamseyModel {
    fn n_params(&self) -> usize {
        4
    }
    fn value(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (p[1] * t).sin().powi(2) * (-p[2] * t).exp() + p[3]
    }
    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let (s, c) = (p[1] * t).sin_cos();
        let e = (-p[2] * t).exp();
        g[0] = s * s * e;
        g[1] = p[0] * 2.0 * s * c * t * e;
        g[2] = -p[0] * s * s * e * t;
        g[3] = 1.0;
    }
}

/// Candidate fringe frequencies (rad/ms) from the strongest peaks of a
/// direct periodogram of the mean-subtracted data. The fringe oscillates at
/// 2 delta, so each peak at angular frequency w gives delta = w / 2.
fn periodogram_candidates(ts: &[f64], ps: &[f64], max_candidates: usize) -> Vec<f64> {
    let n = ts.len();
    let span = ts[n - 1] - ts[0];
    let min_dt = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let mean = ps.iter().sum::<f64>() / n as f64;
    let w_min = TWO_PI / span;
    let w_max = std::f64::consts::PI / min_dt;
    let steps = ((w_max - w_min) / (w_min / 8.0))
        .ceil()
        .clamp(16.0, 200_000.0) as usize;
    let power: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let w = w_min + (w_max - w_min) * k as f64 / steps as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (&t, &p) in ts.iter().zip(ps) {
                let (s, c) = (w * t).sin_cos();
                re += (p - mean) * c;
                im += (p - mean) * s;
            }
            (w, re * re + im * im)
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = power
        .windows(3)
        .filter(|w| w[1].1 >= w[0].1 && w[1].1 >= w[2].1)
        .map(|w| w[1])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    peaks
        .into_iter()
        .take(max_candidates)
        .map(|(w, _)| w / 2.0)
        .collect()
}

/// Decay rate from the slope of the log of successive local maxima.
fn envelope_decay(ts: &[f64], ps: &[f64], b: f64) -> f64 {
    let peaks: Vec<(f64, f64)> = (1..ts.len() - 1)
        .filter(|&i| ps[i] >= ps[i - 1] && ps[i] >= ps[i + 1] && ps[i] - b > 1e-6)
        .map(|i| (ts[i], (ps[i] - b).ln()))
        .collect();
    if peaks.len() < 2 {
        return 0.0;
    }
    let n = peaks.len() as f64;
    let tm = peaks.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = peaks.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = peaks.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = peaks.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    if sxx > 0.0 {
        (-sxy / sxx).max(0.0)
    } else {
        0.0
    }
}

pub fn ramsey_fit(fringe: &RamseyFringe) -> Result<RamseyFit> {
    let mut samples = fringe.samples.clone();
    if samples.len() < 8 {
        return Err(Error::Fit(format!(
            "{} samples; need at least 8",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|&(t, p)| !t.is_finite() || !(0.0..=1.0).contains(&p))
    {
        return Err(Error::Fit(
            "samples need finite times and probabilities in [0, 1]".into(),
        ));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    if samples.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Fit("sample times must be distinct".into()));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ps: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let p_min = ps.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b0 = p_min;
    let a0 = (p_max - p_min).max(1e-3);
    let gamma0 = envelope_decay(&ts, &ps, b0);

    let opts = LmOptions {
        scale_covariance: true,
        ..LmOptions::default()
    };
    let mut best: Option<crate::fit::LmFit> = None;
    let mut last_err = None;
    for delta0 in periodogram_candidates(&ts, &ps, 3) {
        match levenberg_marquardt(
            &RamseyModel,
            &ts,
            &ps,
            None,
            &[a0, delta0, gamma0, b0],
            opts,
        ) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.chi2 < b.chi2) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(fit) = best else {
        return Err(last_err.unwrap_or_else(|| Error::Fit("no periodogram peak".into())));
    };

    let mut params = RamseyParams {
        a: fit.params[0],
        delta: fit.params[1],
        gamma: fit.params[2],
        b: fit.params[3],
    };
    let mut covariance = fit.covariance.clone();
    if params.delta < 0.0 {
        params.delta = -params.delta;
        for k in 0..4 {
            if k != 1 {
                covariance[(1, k)] = -covariance[(1, k)];
                covariance[(k, 1)] = -covariance[(k, 1)];
            }
        }
    }
    let span = ts[ts.len() - 1] - ts[0];
    let max_dt = ts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let period = std::f64::consts::PI / params.delta;
    if span < 1.5 * period {
        return Err(Error::Fit(format!(
            "samples span {span} ms, less than 1.5 fringe periods ({period} ms)"
        )));
    }
    if max_dt >= period / 2.0 {
        return Err(Error::Fit(format!(
            "sample spacing {max_dt} ms aliases the fringe period {period} ms"
        )));
    }
    Ok(RamseyFit {
        params,
        covariance,
        chi2: fit.chi2,
    })
}
