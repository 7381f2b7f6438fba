//! Intensity scans, heating-aware optima and the dual-band (axial plus
//! radial) cooling design.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::atomic::LevelBasis;
use crate::cooling::{cooling_limit, cooling_report, CoolingReport, MotionalMode};
use crate::error::{Error, Result};
use crate::liouvillian::DriveConfig;
use crate::spectrum::{ProbeRabis, SpectrumModel};

/// External heating rates per mode label, in quanta/ms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeatingModel {
    rates: BTreeMap<String, f64>,
}

impl HeatingModel {
    pub fn none() -> Self {
        HeatingModel::default()
    }

    pub fn with_rate(mut self, label: impl Into<String>, ndot_ext: f64) -> Result<Self> {
        if !(ndot_ext >= 0.0 && ndot_ext.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "heating rate {ndot_ext} must be >= 0"
            )));
        }
        self.rates.insert(label.into(), ndot_ext);
        Ok(self)
    }

    pub fn rate_for(&self, label: &str) -> f64 {
        self.rates.get(label).copied().unwrap_or(0.0)
    }

    pub fn rates(&self) -> &BTreeMap<String, f64> {
        &self.rates
    }
}

/// Steady state of dn/dt = -rate (n - n_f) + ndot_ext. `None` unless the
/// laser cools (rate > 0).
pub fn equilibrium_nbar(n_limit: f64, rate: f64, ndot_ext: f64) -> Option<f64> {
    (rate > 0.0).then(|| n_limit + ndot_ext / rate)
}

/// How the probe detuning is chosen at each scan point.
#[derive(Debug, Clone, PartialEq)]
pub enum DetuningPolicy {
    Fixed(f64),
    /// Pick the grid detuning minimizing the (heating-aware) occupation.
    Optimize(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeOutcome {
    pub report: CoolingReport,
    /// n_limit plus the heating correction; `None` when the laser heats.
    pub n_eq: Option<f64>,
}

impl ModeOutcome {
    /// Occupation to minimize: n_eq where defined.
    fn objective(&self) -> Option<f64> {
        self.n_eq.filter(|n| n.is_finite())
    }
}

/// A point the model cannot score (no Lambda system, symmetric spectrum).
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub reason: String,
}

pub type PointOutcome = std::result::Result<ModeOutcome, Gap>;

fn as_gap(e: Error) -> Result<Gap> {
    match e.root() {
        Error::DegenerateAsymmetry { .. } | Error::MultipleSteadyStates { .. } => Ok(Gap {
            reason: e.to_string(),
        }),
        _ => Err(e),
    }
}

fn score_at(
    model: &SpectrumModel,
    mode: &MotionalMode,
    ndot: f64,
    delta_probe: f64,
) -> Result<PointOutcome> {
    let rho = |d: f64| model.rho_p(d);
    match cooling_report(&rho, delta_probe, mode, model.config().gamma_effective()) {
        Ok(report) => {
            let n_eq = equilibrium_nbar(report.n_limit, report.rate, ndot);
            Ok(Ok(ModeOutcome { report, n_eq }))
        }
        Err(e) => Ok(Err(as_gap(e)?)),
    }
}

/// Scores one laser configuration for every mode.
pub fn evaluate_point(
    basis: &LevelBasis,
    cfg: &DriveConfig,
    modes: &[MotionalMode],
    heating: &HeatingModel,
    policy: &DetuningPolicy,
) -> Result<Vec<PointOutcome>> {
    let model = match SpectrumModel::new(basis.clone(), *cfg) {
        Ok(m) => m,
        Err(e) => {
            let gap = as_gap(e)?;
            return Ok(vec![Err(gap); modes.len()]);
        }
    };
    modes
        .iter()
        .map(|mode| {
            let ndot = heating.rate_for(&mode.label);
            match policy {
                DetuningPolicy::Fixed(d) => score_at(&model, mode, ndot, *d),
                DetuningPolicy::Optimize(grid) => {
                    let scored = grid
                        .par_iter()
                        .map(|&d| score_at(&model, mode, ndot, d))
                        .collect::<Vec<_>>()
                        .into_iter()
                        .collect::<Result<Vec<_>>>()?;
                    Ok(best_of(scored))
                }
            }
        })
        .collect()
}

fn best_of(scored: Vec<PointOutcome>) -> PointOutcome {
    let mut best: Option<ModeOutcome> = None;
    let mut first_gap = None;
    for s in scored {
        match s {
            Ok(o) => {
                let Some(v) = o.objective() else { continue };
                if best
                    .as_ref()
                    .and_then(|b| b.objective())
                    .is_none_or(|b| v < b)
                {
                    best = Some(o);
                }
            }
            Err(g) => {
                first_gap.get_or_insert(g);
            }
        }
    }
    best.ok_or_else(|| {
        first_gap.unwrap_or(Gap {
            reason: "laser heats at every detuning in the window".into(),
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// Per-component probe Rabi frequency, sigma+ = sigma-.
    Probe,
    /// Omega_pump,2 with Omega_pump,1 = Omega_pump,2 / ratio.
    Pump,
}

impl ScanAxis {
    pub fn label(self) -> &'static str {
        match self {
            ScanAxis::Probe => "omega_probe",
            ScanAxis::Pump => "omega_pump_2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSample {
    pub value: f64,
    pub config: DriveConfig,
    pub modes: Vec<PointOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axis: ScanAxis,
    pub mode_labels: Vec<String>,
    pub samples: Vec<ScanSample>,
    /// Per mode, the sample index with the lowest n_eq.
    pub argmin: Vec<Option<usize>>,
    /// Largest spacing between adjacent scan values; the uncertainty of
    /// the argmin location.
    pub step: f64,
}

impl ScanResult {
    pub fn best(&self, mode: usize) -> Option<(&ScanSample, &ModeOutcome)> {
        let i = self.argmin.get(mode).copied().flatten()?;
        let s = &self.samples[i];
        s.modes[mode].as_ref().ok().map(|o| (s, o))
    }
}

fn sorted_values(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("scan range is empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("scan values must be finite".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn run_scan(
    axis: ScanAxis,
    basis: &LevelBasis,
    configs: Vec<(f64, DriveConfig)>,
    modes: &[MotionalMode],
    heating: &HeatingModel,
    policy: &DetuningPolicy,
) -> Result<ScanResult> {
    if modes.is_empty() {
        return Err(Error::InvalidConfig("no modes to score".into()));
    }
    let samples = configs
        .into_par_iter()
        .map(|(value, config)| {
            evaluate_point(basis, &config, modes, heating, policy).map(|modes| ScanSample {
                value,
                config,
                modes,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let argmin = (0..modes.len())
        .map(|m| {
            let mut best: Option<(usize, f64)> = None;
            for (i, s) in samples.iter().enumerate() {
                if let Some(v) = s.modes[m].as_ref().ok().and_then(|o| o.objective()) {
                    if best.is_none_or(|(_, b)| v < b) {
                        best = Some((i, v));
                    }
                }
            }
            best.map(|(i, _)| i)
        })
        .collect();
    let step = samples
        .windows(2)
        .map(|w| w[1].value - w[0].value)
        .fold(0.0, f64::max);
    Ok(ScanResult {
        axis,
        mode_labels: modes.iter().map(|m| m.label.clone()).collect(),
        samples,
        argmin,
        step,
    })
}

/// Scans the per-component probe Rabi frequency (both circular components
/// set equal) over `values`, which must lie in [0, gamma_natural].
pub fn scan_probe_intensity(
    basis: &LevelBasis,
    base: &DriveConfig,
    modes: &[MotionalMode],
    values: &[f64],
    heating: &HeatingModel,
    policy: &DetuningPolicy,
) -> Result<ScanResult> {
    let values = sorted_values(values)?;
    if values[0] < 0.0 || values[values.len() - 1] > base.gamma_natural {
        return Err(Error::InvalidConfig(
            "probe Rabi scan must stay within [0, gamma]".into(),
        ));
    }
    let configs = values
        .into_iter()
        .map(|v| (v, ProbeRabis::equal(v).apply(*base)))
        .collect();
    run_scan(ScanAxis::Probe, basis, configs, modes, heating, policy)
}

/// Scans Omega_pump,2 with Omega_pump,1 = Omega_pump,2 / `ratio`.
pub fn scan_pump_intensity(
    basis: &LevelBasis,
    base: &DriveConfig,
    modes: &[MotionalMode],
    values: &[f64],
    ratio: f64,
    heating: &HeatingModel,
    policy: &DetuningPolicy,
) -> Result<ScanResult> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "pump ratio {ratio} must be > 0"
        )));
    }
    let values = sorted_values(values)?;
    if values[0] < 0.0 {
        return Err(Error::InvalidConfig(
            "pump Rabi frequencies must be >= 0".into(),
        ));
    }
    let configs = values
        .into_iter()
        .map(|v| {
            let cfg = DriveConfig {
                omega_pi_2: v,
                omega_pi_1: v / ratio,
                ..*base
            };
            (v, cfg)
        })
        .collect();
    run_scan(ScanAxis::Pump, basis, configs, modes, heating, policy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualBandRow {
    pub delta_probe: f64,
    pub axial: std::result::Result<f64, Gap>,
    pub radial: std::result::Result<f64, Gap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualBandReport {
    pub rows: Vec<DualBandRow>,
    /// Both limits at the nominal detuning, when it lies inside the window.
    pub nominal: Option<DualBandRow>,
    /// (detuning, n) of the smallest non-heating limit in the window.
    pub axial_optimum: Option<(f64, f64)>,
    pub radial_optimum: Option<(f64, f64)>,
}

fn limit_or_gap(
    model: &SpectrumModel,
    d: f64,
    omega: f64,
) -> Result<std::result::Result<f64, Gap>> {
    let rho = |x: f64| model.rho_p(x);
    match cooling_limit(&rho, d, omega) {
        Ok(l) if l.heating_dominated => Ok(Err(Gap {
            reason: format!("heating-dominated (n = {})", l.n_final),
        })),
        Ok(l) => Ok(Ok(l.n_final)),
        Err(e) => Ok(Err(as_gap(e)?)),
    }
}

fn dual_row(
    model: &SpectrumModel,
    d: f64,
    axial: &MotionalMode,
    radial: &MotionalMode,
) -> Result<DualBandRow> {
    Ok(DualBandRow {
        delta_probe: d,
        axial: limit_or_gap(model, d, axial.omega)?,
        radial: limit_or_gap(model, d, radial.omega)?,
    })
}

/// Axial and radial cooling limits across a probe-detuning window.
///
/// Equal mode frequencies are allowed and give identical columns.
pub fn dual_band_report(
    basis: &LevelBasis,
    cfg: &DriveConfig,
    axial: &MotionalMode,
    radial: &MotionalMode,
    window: &[f64],
    nominal: Option<f64>,
) -> Result<DualBandReport> {
    let window = sorted_values(window)?;
    let model = SpectrumModel::new(basis.clone(), *cfg)?;
    let rows = window
        .par_iter()
        .map(|&d| dual_row(&model, d, axial, radial))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = (window[0], window[window.len() - 1]);
    let nominal = match nominal {
        Some(d) if d >= lo && d <= hi => Some(dual_row(&model, d, axial, radial)?),
        _ => None,
    };
    let optimum = |pick: fn(&DualBandRow) -> &std::result::Result<f64, Gap>| {
        rows.iter()
            .filter_map(|r| pick(r).as_ref().ok().map(|&n| (r.delta_probe, n)))
            .fold(None, |best: Option<(f64, f64)>, (d, n)| match best {
                Some((_, b)) if b <= n => best,
                _ => Some((d, n)),
            })
    };
    Ok(DualBandReport {
        axial_optimum: optimum(|r| &r.axial),
        radial_optimum: optimum(|r| &r.radial),
        rows,
        nominal,
    })
}
