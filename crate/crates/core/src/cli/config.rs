//! TOML run configuration.
//!
//! Every dimensional key carries its unit in the name. Laser quantities take
//! exactly one of `<name>_mhz` or `<name>_gamma_units`; frequencies are
//! ordinary (not angular) MHz and the 2pi is applied when the config is
//! resolved.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::atomic::NuclearSpin;
use crate::cooling::{
    lamb_dicke, orthogonal_beams_delta_k, MotionalMode, ATOMIC_MASS_UNIT, BA137_MASS_U,
};
use crate::designer::HeatingModel;
use crate::error::{Error, Result};
use crate::liouvillian::{mhz, DriveConfig, TWO_PI};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct IonSection {
    #[serde(default = "default_two_i")]
    nuclear_spin_twice: u32,
    #[serde(default = "default_mass")]
    mass_u: f64,
    #[serde(default = "default_wavelength")]
    wavelength_nm: f64,
}

fn default_two_i() -> u32 {
    3
}
fn default_mass() -> f64 {
    BA137_MASS_U
}
fn default_wavelength() -> f64 {
    493.0
}

impl Default for IonSection {
    fn default() -> Self {
        IonSection {
            nuclear_spin_twice: default_two_i(),
            mass_u: default_mass(),
            wavelength_nm: default_wavelength(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSection {
    #[serde(default = "default_s_lower")]
    zeeman_s_lower_mhz: f64,
    #[serde(default = "default_s_upper")]
    zeeman_s_upper_mhz: f64,
    #[serde(default = "default_p")]
    zeeman_p_mhz: f64,
}

fn default_s_lower() -> f64 {
    -4.7
}
fn default_s_upper() -> f64 {
    4.7
}
fn default_p() -> f64 {
    1.57
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            zeeman_s_lower_mhz: default_s_lower(),
            zeeman_s_upper_mhz: default_s_upper(),
            zeeman_p_mhz: default_p(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecaySection {
    #[serde(default = "default_gamma")]
    gamma_mhz: f64,
    #[serde(default = "default_branching")]
    branching: f64,
}

fn default_gamma() -> f64 {
    20.1
}
fn default_branching() -> f64 {
    0.732
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            gamma_mhz: default_gamma(),
            branching: default_branching(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSection {
    label: String,
    frequency_mhz: f64,
    eta: Option<f64>,
    /// Projection of the beam wave-vector difference on the mode axis, for
    /// two beams crossing at right angles.
    projection_cosine: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    ion: IonSection,
    #[serde(default)]
    field: FieldSection,
    #[serde(default)]
    decay: DecaySection,
    #[serde(default)]
    lasers: BTreeMap<String, f64>,
    modes: Option<Vec<ModeSection>>,
    /// quanta/ms per mode label
    heating: Option<BTreeMap<String, f64>>,
}

const LASER_KEYS: [&str; 7] = [
    "omega_pump_1",
    "omega_pump_2",
    "omega_probe_plus",
    "omega_probe_minus",
    "delta_pump",
    "delta_offset",
    "delta_probe",
];

/// Laser-section values, all angular (2pi x MHz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lasers {
    pub omega_pump_1: f64,
    pub omega_pump_2: f64,
    pub omega_probe_plus: f64,
    pub omega_probe_minus: f64,
    pub delta_pump: f64,
    pub delta_offset: f64,
    /// Nominal probe detuning, if the config names one.
    pub delta_probe: Option<f64>,
}

fn parse_lasers(raw: &BTreeMap<String, f64>, gamma: f64) -> Result<Lasers> {
    for key in raw.keys() {
        let known = LASER_KEYS.iter().any(|base| {
            key.strip_prefix(base)
                .is_some_and(|s| s == "_mhz" || s == "_gamma_units")
        });
        if !known {
            return Err(Error::InvalidConfig(format!(
                "unknown key lasers.{key} (laser keys need a _mhz or _gamma_units suffix)"
            )));
        }
    }
    let get = |base: &str| -> Result<Option<f64>> {
        let m = raw.get(&format!("{base}_mhz"));
        let g = raw.get(&format!("{base}_gamma_units"));
        let v = match (m, g) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(format!(
                    "lasers.{base} given in both MHz and gamma units"
                )))
            }
            (Some(&v), None) => Some(mhz(v)),
            (None, Some(&v)) => Some(v * gamma),
            (None, None) => None,
        };
        if v.is_some_and(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!("lasers.{base} is not finite")));
        }
        Ok(v)
    };
    Ok(Lasers {
        omega_pump_1: get("omega_pump_1")?.unwrap_or(0.0),
        omega_pump_2: get("omega_pump_2")?.unwrap_or(0.0),
        omega_probe_plus: get("omega_probe_plus")?.unwrap_or(0.0),
        omega_probe_minus: get("omega_probe_minus")?.unwrap_or(0.0),
        delta_pump: get("delta_pump")?.unwrap_or(0.0),
        delta_offset: get("delta_offset")?.unwrap_or(0.0),
        delta_probe: get("delta_probe")?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spin: NuclearSpin,
    pub mass_u: f64,
    pub wavelength_nm: f64,
    pub drive: DriveConfig,
    pub lasers: Lasers,
    pub modes: Vec<MotionalMode>,
    pub heating: HeatingModel,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        Self::resolve(raw)
    }

    pub fn defaults() -> Self {
        Self::from_toml("").expect("defaults are valid")
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let spin = NuclearSpin::new(raw.ion.nuclear_spin_twice)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(raw.ion.mass_u > 0.0 && raw.ion.wavelength_nm > 0.0) {
            return Err(Error::InvalidConfig(
                "ion mass and wavelength must be > 0".into(),
            ));
        }
        let gamma = mhz(raw.decay.gamma_mhz);
        let lasers = parse_lasers(&raw.lasers, gamma)?;
        let drive = DriveConfig {
            omega_pi_1: lasers.omega_pump_1,
            omega_pi_2: lasers.omega_pump_2,
            omega_sigma_plus: lasers.omega_probe_plus,
            omega_sigma_minus: lasers.omega_probe_minus,
            delta_pi_2: lasers.delta_pump,
            delta_pi_1: lasers.delta_pump + lasers.delta_offset,
            delta_sigma: lasers.delta_probe.unwrap_or(0.0),
            zeeman_s_lower: mhz(raw.field.zeeman_s_lower_mhz),
            zeeman_s_upper: mhz(raw.field.zeeman_s_upper_mhz),
            zeeman_p: mhz(raw.field.zeeman_p_mhz),
            gamma_natural: gamma,
            branching_s: raw.decay.branching,
        };
        drive
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;

        let mass = raw.ion.mass_u * ATOMIC_MASS_UNIT;
        let delta_k = orthogonal_beams_delta_k(raw.ion.wavelength_nm);
        let default_modes = || {
            let c = std::f64::consts::FRAC_1_SQRT_2;
            vec![("x", 1.7, c), ("y", 1.8, c), ("z", 0.2, 0.0)]
                .into_iter()
                .map(|(label, f, cos)| ModeSection {
                    label: label.into(),
                    frequency_mhz: f,
                    eta: None,
                    projection_cosine: Some(cos),
                })
                .collect()
        };
        let mut modes = Vec::new();
        for m in raw.modes.unwrap_or_else(default_modes) {
            let omega = mhz(m.frequency_mhz);
            let eta = match (m.eta, m.projection_cosine) {
                (Some(eta), None) => eta,
                (None, Some(cos)) => lamb_dicke(delta_k, cos, mass, omega)?,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "mode {}: give exactly one of eta or projection_cosine",
                        m.label
                    )))
                }
            };
            if modes.iter().any(|x: &MotionalMode| x.label == m.label) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate mode label {}",
                    m.label
                )));
            }
            modes.push(MotionalMode::new(m.label, omega, eta)?);
        }

        let heating_rates = raw
            .heating
            .unwrap_or_else(|| BTreeMap::from([("x".to_string(), 0.10), ("y".to_string(), 0.8)]));
        let mut heating = HeatingModel::none();
        for (label, rate) in heating_rates {
            heating = heating.with_rate(label, rate)?;
        }
        Ok(RunConfig {
            spin,
            mass_u: raw.ion.mass_u,
            wavelength_nm: raw.ion.wavelength_nm,
            drive,
            lasers,
            modes,
            heating,
        })
    }

    pub fn mode(&self, label: &str) -> Result<&MotionalMode> {
        self.modes.iter().find(|m| m.label == label).ok_or_else(|| {
            let known: Vec<&str> = self.modes.iter().map(|m| m.label.as_str()).collect();
            Error::InvalidConfig(format!("unknown mode {label:?}; config has {known:?}"))
        })
    }

    /// The resolved configuration in ordinary-frequency units, for output
    /// headers.
    pub fn to_json(&self) -> Value {
        let f = |x: f64| x / TWO_PI;
        let d = &self.drive;
        json!({
            "ion": {
                "nuclear_spin_twice": self.spin.two_i(),
                "mass_u": self.mass_u,
                "wavelength_nm": self.wavelength_nm,
            },
            "field": {
                "zeeman_s_lower_mhz": f(d.zeeman_s_lower),
                "zeeman_s_upper_mhz": f(d.zeeman_s_upper),
                "zeeman_p_mhz": f(d.zeeman_p),
            },
            "decay": {
                "gamma_mhz": f(d.gamma_natural),
                "branching": d.branching_s,
            },
            "lasers": {
                "omega_pump_1_mhz": f(d.omega_pi_1),
                "omega_pump_2_mhz": f(d.omega_pi_2),
                "omega_probe_plus_mhz": f(d.omega_sigma_plus),
                "omega_probe_minus_mhz": f(d.omega_sigma_minus),
                "delta_pump_mhz": f(self.lasers.delta_pump),
                "delta_offset_mhz": f(self.lasers.delta_offset),
                "delta_probe_mhz": self.lasers.delta_probe.map(f),
            },
            "modes": self.modes.iter().map(|m| json!({
                "label": m.label,
                "frequency_mhz": f(m.omega),
                "eta": m.eta,
            })).collect::<Vec<_>>(),
            "heating": self.heating.rates(),
        })
    }
}
