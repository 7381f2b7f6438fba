//! Excitation spectrum rho_P(probe detuning) with the two circular probe
//! channels solved separately and added incoherently.

use rayon::prelude::*;

use crate::atomic::{LevelBasis, Manifold, Polarization};
use crate::error::{Error, Result};
use crate::liouvillian::{
    assemble_liouvillian, build_hamiltonian, build_jump_operators, steady_state, DensityMatrix,
    DriveConfig, JumpOperatorSet,
};

pub const DEFAULT_GRID_POINTS: usize = 600;

/// Pump detuning and the extra detuning of the F=I-1/2 pump component.
///
/// `delta_pi_2 = delta_pump`, `delta_pi_1 = delta_pump + delta_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    pub delta_pump: f64,
    pub delta_offset: f64,
}

impl PumpSpec {
    pub fn apply(&self, cfg: DriveConfig) -> DriveConfig {
        DriveConfig {
            delta_pi_2: self.delta_pump,
            delta_pi_1: self.delta_pump + self.delta_offset,
            ..cfg
        }
    }

    pub fn from_drive(cfg: &DriveConfig) -> Self {
        PumpSpec {
            delta_pump: cfg.delta_pi_2,
            delta_offset: cfg.delta_pi_1 - cfg.delta_pi_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRabis {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

impl ProbeRabis {
    pub fn equal(omega: f64) -> Self {
        ProbeRabis {
            sigma_plus: omega,
            sigma_minus: omega,
        }
    }

    pub fn apply(&self, cfg: DriveConfig) -> DriveConfig {
        DriveConfig {
            omega_sigma_plus: self.sigma_plus,
            omega_sigma_minus: self.sigma_minus,
            ..cfg
        }
    }
}

/// Total population of the P manifold, clamped to [0, 1].
pub fn p_population(rho: &DensityMatrix, basis: &LevelBasis) -> Result<f64> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: rho.dim(),
        });
    }
    let p: f64 = basis
        .indices_in(Manifold::PUpper)
        .map(|i| rho.population(i))
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPopulations {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

impl ChannelPopulations {
    pub fn total(&self) -> f64 {
        self.sigma_plus + self.sigma_minus
    }

    pub fn channel(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::SigmaPlus => self.sigma_plus,
            Polarization::SigmaMinus => self.sigma_minus,
            Polarization::Pi => 0.0,
        }
    }
}

/// A fixed laser configuration whose probe detuning can be varied.
#[derive(Debug, Clone)]
pub struct SpectrumModel {
    basis: LevelBasis,
    cfg: DriveConfig,
    jumps: JumpOperatorSet,
}

impl SpectrumModel {
    pub fn new(basis: LevelBasis, cfg: DriveConfig) -> Result<Self> {
        cfg.validate()?;
        let jumps = build_jump_operators(&basis, &cfg)?;
        Ok(SpectrumModel { basis, cfg, jumps })
    }

    pub fn basis(&self) -> &LevelBasis {
        &self.basis
    }

    pub fn config(&self) -> &DriveConfig {
        &self.cfg
    }

    /// Steady state of a single probe channel.
    pub fn solve_channel(&self, delta_probe: f64, pol: Polarization) -> Result<DensityMatrix> {
        let cfg = self.cfg.with_probe_detuning(delta_probe);
        let h = build_hamiltonian(&self.basis, &cfg, pol)?;
        steady_state(&assemble_liouvillian(&h, &self.jumps)?)
    }

    pub fn populations_at(&self, delta_probe: f64) -> Result<ChannelPopulations> {
        let run = |pol| {
            self.solve_channel(delta_probe, pol)
                .and_then(|rho| p_population(&rho, &self.basis))
        };
        let out = (|| {
            Ok(ChannelPopulations {
                sigma_plus: run(Polarization::SigmaPlus)?,
                sigma_minus: run(Polarization::SigmaMinus)?,
            })
        })();
        out.map_err(|e| Error::at_grid_point(delta_probe, e))
    }

    /// rho_P summed over both probe channels.
    pub fn rho_p(&self, delta_probe: f64) -> Result<f64> {
        Ok(self.populations_at(delta_probe)?.total())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub delta_probe: f64,
    pub rho_p_total: f64,
    pub rho_p_sigma_plus: f64,
    pub rho_p_sigma_minus: f64,
}

impl SpectrumPoint {
    pub fn channel(&self, pol: Option<Polarization>) -> f64 {
        match pol {
            None => self.rho_p_total,
            Some(Polarization::SigmaPlus) => self.rho_p_sigma_plus,
            Some(Polarization::SigmaMinus) => self.rho_p_sigma_minus,
            Some(Polarization::Pi) => 0.0,
        }
    }
}

/// Sampled spectrum. `config.delta_sigma` is meaningless and set to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub points: Vec<SpectrumPoint>,
    pub config: DriveConfig,
}

impl SpectrumTrace {
    /// Interior strict local minima of the total (`None`) or one channel.
    pub fn local_minima(&self, channel: Option<Polarization>) -> Vec<usize> {
        let y: Vec<f64> = self.points.iter().map(|p| p.channel(channel)).collect();
        (1..y.len().saturating_sub(1))
            .filter(|&i| y[i] < y[i - 1] && y[i] < y[i + 1])
            .collect()
    }

    pub fn argmax_total(&self) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.rho_p_total.total_cmp(&b.1.rho_p_total))
            .map(|(i, _)| i)
    }
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty detuning grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "detuning grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Solves both probe channels at every grid detuning.
///
/// Points are evaluated in parallel on the current rayon pool; each is an
/// independent solve so the result does not depend on scheduling. On failure
/// the error of the first failing grid point is returned.
pub fn excitation_spectrum(
    basis: &LevelBasis,
    base: &DriveConfig,
    pump: PumpSpec,
    probe: ProbeRabis,
    grid: &[f64],
) -> Result<SpectrumTrace> {
    validate_grid(grid)?;
    let cfg = probe.apply(pump.apply(*base)).with_probe_detuning(0.0);
    let model = SpectrumModel::new(basis.clone(), cfg)?;
    let results: Vec<Result<SpectrumPoint>> = grid
        .par_iter()
        .map(|&delta| {
            let pops = model.populations_at(delta)?;
            Ok(SpectrumPoint {
                delta_probe: delta,
                rho_p_total: pops.total(),
                rho_p_sigma_plus: pops.sigma_plus,
                rho_p_sigma_minus: pops.sigma_minus,
            })
        })
        .collect();
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTrace {
        points,
        config: cfg,
    })
}

/// The four Lambda systems formed by |S, F=I+1/2, m=0> with a neighbouring
/// ground level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DarkLabel {
    /// delta_pump - zeeman
    A,
    /// delta_pump + zeeman
    B,
    /// delta_pump + delta - zeeman
    C,
    /// delta_pump + delta + zeeman
    D,
}

impl DarkLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            DarkLabel::A => "a",
            DarkLabel::B => "b",
            DarkLabel::C => "c",
            DarkLabel::D => "d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkResonance {
    pub detuning: f64,
    pub label: DarkLabel,
    /// Probe channel whose spectrum carries this resonance for
    /// `zeeman_s_upper = -zeeman_s_lower = zeeman > 0`.
    pub channel: Polarization,
}

/// Two-photon dark resonances, sorted by detuning (ties by label).
pub fn dark_resonances(pump: PumpSpec, zeeman: f64) -> Vec<DarkResonance> {
    let upper = pump.delta_pump;
    let lower = pump.delta_pump + pump.delta_offset;
    let mut out = vec![
        DarkResonance {
            detuning: upper - zeeman,
            label: DarkLabel::A,
            channel: Polarization::SigmaMinus,
        },
        DarkResonance {
            detuning: upper + zeeman,
            label: DarkLabel::B,
            channel: Polarization::SigmaPlus,
        },
        DarkResonance {
            detuning: lower - zeeman,
            label: DarkLabel::C,
            channel: Polarization::SigmaPlus,
        },
        DarkResonance {
            detuning: lower + zeeman,
            label: DarkLabel::D,
            channel: Polarization::SigmaMinus,
        },
    ];
    out.sort_by(|a, b| {
        a.detuning
            .total_cmp(&b.detuning)
            .then(a.label.cmp(&b.label))
    });
    out
}
