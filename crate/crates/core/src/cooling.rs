//! Cooling limit and rate from the excitation spectrum, Lamb-Dicke
//! parameters, sideband-ratio thermometry and cooling-curve fits.
//!
//! Spectral evaluators are plain closures `Fn(f64) -> Result<f64>` mapping a
//! probe detuning (2pi x MHz) to the P population, so callers can pass either
//! fresh steady-state solves ([`crate::spectrum::SpectrumModel::rho_p`]) or an
//! interpolated trace.

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions, Model};
use crate::liouvillian::TWO_PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// 137Ba atomic mass in u.
pub const BA137_MASS_U: f64 = 136.905_827_4;

const MIN_ASYMMETRY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionalMode {
    pub label: String,
    /// Angular frequency, 2pi x MHz.
    pub omega: f64,
    pub eta: f64,
}

impl MotionalMode {
    pub fn new(label: impl Into<String>, omega: f64, eta: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mode frequency {omega} must be > 0"
            )));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Lamb-Dicke parameter {eta} must be >= 0"
            )));
        }
        Ok(MotionalMode {
            label: label.into(),
            omega,
            eta,
        })
    }
}

/// The three spectrum values entering the cooling formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSamples {
    /// rho(delta)
    pub carrier: f64,
    /// rho(delta - omega)
    pub red: f64,
    /// rho(delta + omega)
    pub blue: f64,
}

impl SpectralSamples {
    pub fn asymmetry(&self) -> f64 {
        self.blue - self.red
    }
}

pub fn spectral_samples<F>(rho_at: &F, delta_probe: f64, omega: f64) -> Result<SpectralSamples>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (carrier, (red, blue)) = rayon::join(
        || rho_at(delta_probe),
        || {
            rayon::join(
                || rho_at(delta_probe - omega),
                || rho_at(delta_probe + omega),
            )
        },
    );
    Ok(SpectralSamples {
        carrier: carrier?,
        red: red?,
        blue: blue?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingLimit {
    pub n_final: f64,
    /// Set when the spectrum favours heating (negative asymmetry); `n_final`
    /// is then negative and not a physical occupation.
    pub heating_dominated: bool,
}

/// n_f = [rho(D) + rho(D-w)] / [rho(D+w) - rho(D-w)].
pub fn limit_from_samples(s: &SpectralSamples) -> Result<CoolingLimit> {
    let asym = s.asymmetry();
    if !(asym.abs() >= MIN_ASYMMETRY) {
        return Err(Error::DegenerateAsymmetry { asymmetry: asym });
    }
    let n_final = (s.carrier + s.red) / asym;
    Ok(CoolingLimit {
        n_final,
        heating_dominated: n_final < 0.0,
    })
}

pub fn cooling_limit<F>(rho_at: &F, delta_probe: f64, omega: f64) -> Result<CoolingLimit>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    limit_from_samples(&spectral_samples(rho_at, delta_probe, omega)?)
}

/// eta^2 gamma [rho(D+w) - rho(D-w)] in 1/ms, for `gamma` in 2pi x MHz.
pub fn rate_from_samples(s: &SpectralSamples, eta: f64, gamma: f64) -> f64 {
    eta * eta * gamma * s.asymmetry() * 1e3
}

pub fn cooling_rate<F>(rho_at: &F, delta_probe: f64, mode: &MotionalMode, gamma: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let s = spectral_samples(rho_at, delta_probe, mode.omega)?;
    Ok(rate_from_samples(&s, mode.eta, gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingReport {
    pub mode: MotionalMode,
    pub delta_probe: f64,
    pub n_limit: f64,
    pub heating_dominated: bool,
    /// 1/ms
    pub rate: f64,
    pub samples: SpectralSamples,
}

/// Limit and rate for one mode from a single set of spectral samples.
///
/// `gamma` is the linewidth multiplying the rate; the crate's callers pass
/// the branching-reduced decay rate ([`crate::liouvillian::DriveConfig::gamma_effective`]).
pub fn cooling_report<F>(
    rho_at: &F,
    delta_probe: f64,
    mode: &MotionalMode,
    gamma: f64,
) -> Result<CoolingReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let samples = spectral_samples(rho_at, delta_probe, mode.omega)?;
    let limit = limit_from_samples(&samples)?;
    Ok(CoolingReport {
        mode: mode.clone(),
        delta_probe,
        n_limit: limit.n_final,
        heating_dominated: limit.heating_dominated,
        rate: rate_from_samples(&samples, mode.eta, gamma),
        samples,
    })
}

/// eta = |dk| cos(theta) sqrt(hbar / (2 m w)).
///
/// `delta_k` in 1/m, `mass` in kg, `omega` in 2pi x MHz.
pub fn lamb_dicke(delta_k: f64, projection_cosine: f64, mass: f64, omega: f64) -> Result<f64> {
    if !(delta_k >= 0.0 && mass > 0.0 && omega > 0.0 && projection_cosine.abs() <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "Lamb-Dicke inputs |dk|={delta_k}, cos={projection_cosine}, m={mass}, w={omega}"
        )));
    }
    let omega_si = omega * 1e6;
    Ok(delta_k * projection_cosine * (HBAR / (2.0 * mass * omega_si)).sqrt())
}

/// |dk| for two beams of wavelength `wavelength_nm` crossing at right angles.
pub fn orthogonal_beams_delta_k(wavelength_nm: f64) -> f64 {
    std::f64::consts::SQRT_2 * TWO_PI / (wavelength_nm * 1e-9)
}

/// Thermal occupation from first-order sideband excitation probabilities,
/// n = r / (1 - r) with r = p_sub / p_add.
pub fn sideband_nbar(p_add: f64, p_sub: f64) -> Result<f64> {
    if !(p_add > 0.0 && p_add <= 1.0 && p_sub >= 0.0 && p_sub <= 1.0) {
        return Err(Error::Domain(format!(
            "sideband probabilities p_add={p_add}, p_sub={p_sub}"
        )));
    }
    let ratio = p_sub / p_add;
    if ratio >= 1.0 {
        return Err(Error::UnphysicalRatio { ratio });
    }
    Ok(ratio / (1.0 - ratio))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    /// ms
    pub t: f64,
    pub nbar: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingCurveFit {
    pub n_initial: f64,
    pub n_final: f64,
    /// ms
    pub tau: f64,
    /// Covariance of (n_initial, n_final, tau). Infinite diagonal entries
    /// flag parameters the data cannot determine.
    pub covariance: [[f64; 3]; 3],
    pub chi2: f64,
}

impl CoolingCurveFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[i][i].sqrt()
    }

    pub fn tau_identifiable(&self) -> bool {
        self.covariance[2][2].is_finite()
    }

    pub fn nbar_at(&self, t: f64) -> f64 {
        (self.n_initial - self.n_final) * (-t / self.tau).exp() + self.n_final
    }
}

/// (n_i - n_f) exp(-t / tau) + n_f, fitted in (n_i, n_f, ln tau).
struct ExpDecay;

impl Model for ExpDecay {
    fn n_params(&self) -> usize {
        3
    }
    fn value(&self, t: f64, p: &[f64]) -> f64 {
        (p[0] - p[1]) * (-t * (-p[2]).exp()).exp() + p[1]
    }
    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let rate = (-p[2]).exp();
        let e = (-t * rate).exp();
        g[0] = e;
        g[1] = 1.0 - e;
        g[2] = (p[0] - p[1]) * e * t * rate;
    }
}

/// Weighted least-squares fit of an exponential cooling curve.
pub fn fit_cooling_curve(samples: &[CurveSample]) -> Result<CoolingCurveFit> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!(
            "{} samples; need at least 4",
            samples.len()
        )));
    }
    let mut times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    times.sort_by(f64::total_cmp);
    if times.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("sample times must be distinct".into()));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ns: Vec<f64> = samples.iter().map(|s| s.nbar).collect();
    let sig: Vec<f64> = samples.iter().map(|s| s.sigma).collect();

    let n_max = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_min = ns.iter().copied().fold(f64::INFINITY, f64::min);
    let span = times[times.len() - 1] - times[0];
    let p0 = [n_max, n_min, (span / 3.0).ln()];

    let fit = levenberg_marquardt(&ExpDecay, &ts, &ns, Some(&sig), &p0, LmOptions::default())?;
    let tau = fit.params[2].exp();
    // d tau / d ln tau = tau
    let jac = [1.0, 1.0, tau];
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = fit.covariance[(i, j)] * jac[i] * jac[j];
        }
    }
    Ok(CoolingCurveFit {
        n_initial: fit.params[0],
        n_final: fit.params[1],
        tau,
        covariance,
        chi2: fit.chi2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::mhz;

    fn lorentz(center: f64, width: f64) -> impl Fn(f64) -> Result<f64> + Sync {
        move |x| Ok(1.0 / (1.0 + ((x - center) / width).powi(2)))
    }

    #[test]
    fn symmetric_spectrum_is_degenerate() {
        let rho = lorentz(0.0, 1.0);
        let e = cooling_limit(&rho, 0.0, 0.5).unwrap_err();
        assert!(matches!(e, Error::DegenerateAsymmetry { .. }));
    }

    #[test]
    fn heating_side_is_flagged() {
        // peak below the probe detuning: rho(D-w) > rho(D+w)
        let rho = lorentz(-1.0, 1.0);
        let lim = cooling_limit(&rho, 0.0, 0.5).unwrap();
        assert!(lim.heating_dominated);
        assert!(lim.n_final < 0.0);
        let lim = cooling_limit(&lorentz(1.0, 1.0), 0.0, 0.5).unwrap();
        assert!(!lim.heating_dominated && lim.n_final > 0.0);
    }

    #[test]
    fn limit_is_scale_invariant() {
        let a = cooling_limit(&lorentz(1.0, 0.7), 0.2, 0.3).unwrap().n_final;
        let r = lorentz(1.0, 0.7);
        let scaled = move |x: f64| r(x).map(|v| 3.7 * v);
        let b = cooling_limit(&scaled, 0.2, 0.3).unwrap().n_final;
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn rate_scales_with_eta_squared() {
        let rho = lorentz(1.0, 0.7);
        let g = mhz(20.1);
        let m0 = MotionalMode::new("x", 0.3, 0.0).unwrap();
        assert_eq!(cooling_rate(&rho, 0.2, &m0, g).unwrap(), 0.0);
        let m1 = MotionalMode::new("x", 0.3, 0.05).unwrap();
        let m2 = MotionalMode::new("x", 0.3, 0.10).unwrap();
        let r1 = cooling_rate(&rho, 0.2, &m1, g).unwrap();
        let r2 = cooling_rate(&rho, 0.2, &m2, g).unwrap();
        assert!((r2 / r1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn limit_rate_identity() {
        let rho = lorentz(1.0, 0.7);
        let g = mhz(14.7);
        let mode = MotionalMode::new("x", 0.3, 0.06).unwrap();
        let r = cooling_report(&rho, 0.2, &mode, g).unwrap();
        let rhs = mode.eta.powi(2) * g * (r.samples.carrier + r.samples.red) * 1e3;
        assert!((r.n_limit * r.rate - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn mode_validation() {
        assert!(MotionalMode::new("z", 0.0, 0.1).is_err());
        assert!(MotionalMode::new("z", 1.0, -0.1).is_err());
    }

    #[test]
    fn lamb_dicke_scaling() {
        let m = BA137_MASS_U * ATOMIC_MASS_UNIT;
        let k = orthogonal_beams_delta_k(493.0);
        assert_eq!(lamb_dicke(k, 0.0, m, mhz(1.7)).unwrap(), 0.0);
        let a = lamb_dicke(k, 0.5, m, mhz(1.0)).unwrap();
        let b = lamb_dicke(k, 0.5, m, mhz(4.0)).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(lamb_dicke(k, 1.5, m, mhz(1.0)).is_err());
    }

    #[test]
    fn sideband_ratio_cases() {
        assert_eq!(sideband_nbar(0.4, 0.0).unwrap(), 0.0);
        assert!((sideband_nbar(0.4, 0.2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            sideband_nbar(0.3, 0.3),
            Err(Error::UnphysicalRatio { .. })
        ));
        assert!(sideband_nbar(0.0, 0.0).is_err());
    }

    #[test]
    fn curve_fit_input_checks() {
        let s = |t| CurveSample {
            t,
            nbar: 1.0,
            sigma: 0.1,
        };
        assert!(fit_cooling_curve(&[s(0.0), s(1.0), s(2.0)]).is_err());
        assert!(fit_cooling_curve(&[s(0.0), s(1.0), s(1.0), s(2.0)]).is_err());
    }

    #[test]
    fn constant_curve_flags_tau() {
        let samples: Vec<_> = (0..8)
            .map(|i| CurveSample {
                t: 0.1 * f64::from(i),
                nbar: 0.3,
                sigma: 0.01,
            })
            .collect();
        let fit = fit_cooling_curve(&samples).unwrap();
        assert!((fit.n_final - 0.3).abs() < 1e-12);
        assert!(!fit.tau_identifiable());
    }
}
