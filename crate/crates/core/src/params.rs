//! Physical inputs, derived scalars and the bundled experimental parameter sets.
//!
//! Every rate and frequency is stored as an angular quantity (rad/s). Use
//! [`angular`] to convert an ordinary frequency in Hz.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
pub mod constants {
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Boltzmann constant, J/K.
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Vacuum permeability, N/A^2.
    pub const MU_0: f64 = 1.256_637_062_12e-6;
}

use constants::{BOLTZMANN, HBAR, MU_0};

/// Converts an ordinary frequency (Hz) to an angular frequency (rad/s).
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Which form of the magnon-photon interaction is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Full `(a + a†)(m + m†)` coupling with the modulated strength `g = g0 ℰ`.
    #[serde(rename = "beyond", alias = "beyond_rwa")]
    BeyondRwa,
    /// Beam-splitter coupling `g0 (a† m + a m†)`.
    #[serde(rename = "rwa", alias = "under_rwa")]
    UnderRwa,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::BeyondRwa => "beyond",
            Regime::UnderRwa => "rwa",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beyond" | "beyond_rwa" => Ok(Regime::BeyondRwa),
            "rwa" | "under_rwa" => Ok(Regime::UnderRwa),
            other => Err(Error::InvalidInput(format!(
                "unknown regime '{other}' (expected 'beyond' or 'rwa')"
            ))),
        }
    }
}

/// Raw physical inputs. Angular units throughout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalParams {
    pub omega_a: f64,
    pub omega_m: f64,
    pub kappa_a: f64,
    pub kappa_m: f64,
    /// Bare magnon-photon coupling.
    pub g0: f64,
    /// Dimensionless modulation amplitude ℰ; ignored under the RWA.
    pub modulation_amplitude: f64,
    /// Common detuning of both modes from their drives.
    pub delta: f64,
    /// Kelvin.
    pub temperature: f64,
    pub spin_count: f64,
    pub spin_s: f64,
    /// rad/(s T).
    pub gyromagnetic: f64,
    /// Cavity mode volume, m^3.
    pub mode_volume: Option<f64>,
    /// Cavity drive power, W.
    pub drive_power: Option<f64>,
    /// Magnon drive field amplitude, T.
    pub magnon_drive_field: Option<f64>,
    pub omega_l: Option<f64>,
    pub omega_d: Option<f64>,
    /// Static bias field, T.
    pub bias_field: Option<f64>,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_a", self.omega_a),
            ("omega_m", self.omega_m),
            ("kappa_a", self.kappa_a),
            ("kappa_m", self.kappa_m),
            ("spin_count", self.spin_count),
            ("spin_s", self.spin_s),
            ("gyromagnetic", self.gyromagnetic),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be > 0, got {value}"
                )));
            }
        }
        let non_negative = [
            ("temperature", self.temperature),
            ("modulation_amplitude", self.modulation_amplitude),
            ("g0", self.g0),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be >= 0, got {value}"
                )));
            }
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidInput("delta must be finite".into()));
        }
        let optional = [
            ("mode_volume", self.mode_volume),
            ("drive_power", self.drive_power),
            ("omega_l", self.omega_l),
            ("omega_d", self.omega_d),
        ];
        for (name, value) in optional {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        for (name, value) in [
            ("magnon_drive_field", self.magnon_drive_field),
            ("bias_field", self.bias_field),
        ] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("{name} must be finite")));
                }
            }
        }
        Ok(())
    }

    /// `g0 ℰ` beyond the RWA, `g0` under it.
    pub fn effective_coupling(&self, regime: Regime) -> f64 {
        match regime {
            Regime::BeyondRwa => self.g0 * self.modulation_amplitude,
            Regime::UnderRwa => self.g0,
        }
    }

    /// Replaces `g0` with `B0 η`, the value implied by the mode volume.
    pub fn with_coupling_from_mode_volume(mut self) -> Result<Self> {
        let volume = self
            .mode_volume
            .ok_or_else(|| Error::InvalidInput("mode_volume is required to compute g0".into()))?;
        let b0 = cavity_field_amplitude(self.omega_a, volume);
        self.g0 = b0 * spin_ensemble_coupling(self.gyromagnetic, self.spin_count, self.spin_s);
        Ok(self)
    }

    /// Sets ℰ so that the beyond-RWA cooperativity equals `target`.
    pub fn with_target_cooperativity(mut self, target: f64) -> Self {
        self.modulation_amplitude =
            (target * self.kappa_a * self.kappa_m / (4.0 * self.g0 * self.g0)).sqrt();
        self
    }
}

/// Mean thermal occupancy `[exp(ħω / k_B T) − 1]⁻¹`.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidInput(format!(
            "omega must be > 0, got {omega}"
        )));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "temperature must be >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (BOLTZMANN * temperature);
    Ok(1.0 / x.exp_m1())
}

/// η = (γ/2)·√(2 s N).
pub fn spin_ensemble_coupling(gyromagnetic: f64, spin_count: f64, spin_s: f64) -> f64 {
    0.5 * gyromagnetic * (2.0 * spin_s * spin_count).sqrt()
}

/// B0 = √(ħ ω_a μ0 / V_a).
pub fn cavity_field_amplitude(omega_a: f64, mode_volume: f64) -> f64 {
    (HBAR * omega_a * MU_0 / mode_volume).sqrt()
}

/// C = 4 g² / (κ_a κ_m).
pub fn cooperativity(coupling: f64, kappa_a: f64, kappa_m: f64) -> f64 {
    4.0 * coupling * coupling / (kappa_a * kappa_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityFlag {
    /// The effective coupling is not small against the modulation frequency 2ω_L.
    ModulationRwaMarginal,
    /// g0 is not small against ω_a, so dropping counter-rotating terms is doubtful.
    CouplingNotWeak,
}

impl ValidityFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidityFlag::ModulationRwaMarginal => "modulation_rwa_marginal",
            ValidityFlag::CouplingNotWeak => "coupling_not_weak",
        }
    }
}

/// Fraction of the reference frequency above which a coupling is flagged.
pub const VALIDITY_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub regime: Regime,
    pub eta: f64,
    pub g_eff: f64,
    pub cooperativity: f64,
    pub nbar_a: f64,
    pub nbar_m: f64,
    pub b0: Option<f64>,
    pub epsilon_l: Option<f64>,
    pub epsilon_d: Option<f64>,
    /// √κ_m / η in T/√Hz.
    pub sensitivity_prefactor: f64,
    pub validity_flags: Vec<ValidityFlag>,
}

pub fn derive(params: &PhysicalParams, regime: Regime) -> Result<DerivedParams> {
    params.validate()?;

    let eta = spin_ensemble_coupling(params.gyromagnetic, params.spin_count, params.spin_s);
    let g_eff = params.effective_coupling(regime);
    let cooperativity = cooperativity(g_eff, params.kappa_a, params.kappa_m);
    let nbar_a = thermal_occupancy(params.omega_a, params.temperature)?;
    let nbar_m = thermal_occupancy(params.omega_m, params.temperature)?;

    let b0 = params
        .mode_volume
        .map(|v| cavity_field_amplitude(params.omega_a, v));
    let epsilon_l = match (params.drive_power, params.omega_l) {
        (Some(power), Some(omega_l)) => {
            Some((2.0 * power * params.kappa_a / (HBAR * omega_l)).sqrt())
        }
        _ => None,
    };
    let epsilon_d = params.magnon_drive_field.map(|b_d| 0.5 * eta * b_d);

    let mut validity_flags = Vec::new();
    match regime {
        Regime::BeyondRwa => {
            // Δ = ω_a − ω_L when the drive frequency is not given explicitly.
            let omega_l = params.omega_l.unwrap_or(params.omega_a - params.delta);
            let modulation_frequency = 2.0 * omega_l;
            if g_eff >= VALIDITY_RATIO * modulation_frequency {
                validity_flags.push(ValidityFlag::ModulationRwaMarginal);
            }
        }
        Regime::UnderRwa => {
            if params.g0 >= VALIDITY_RATIO * params.omega_a {
                validity_flags.push(ValidityFlag::CouplingNotWeak);
            }
        }
    }

    Ok(DerivedParams {
        regime,
        eta,
        g_eff,
        cooperativity,
        nbar_a,
        nbar_m,
        b0,
        epsilon_l,
        epsilon_d,
        sensitivity_prefactor: params.kappa_m.sqrt() / eta,
        validity_flags,
    })
}

/// Bundled experimental parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 2.5 mm YIG sphere in a 37.5 GHz cavity, ℰ tuned to C = 1000.
    BeyondRwaPaper,
    /// 0.36 mm YIG sphere in a 7.875 GHz cavity.
    RwaPaper,
    /// YIG:Ga on a superconducting Nb coplanar resonator at millikelvin temperature.
    CoplanarPaper,
}

/// Cooperativity the beyond-RWA preset is tuned to through ℰ.
pub const BEYOND_PRESET_COOPERATIVITY: f64 = 1000.0;

/// YIG gyromagnetic ratio γ/2π in Hz/T.
pub const YIG_GYROMAGNETIC_HZ_PER_T: f64 = 28e9;
pub const YIG_SPIN: f64 = 2.5;

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::BeyondRwaPaper,
        Preset::RwaPaper,
        Preset::CoplanarPaper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::BeyondRwaPaper => "beyond_rwa_paper",
            Preset::RwaPaper => "rwa_paper",
            Preset::CoplanarPaper => "coplanar_paper",
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            Preset::RwaPaper => Regime::UnderRwa,
            Preset::BeyondRwaPaper | Preset::CoplanarPaper => Regime::BeyondRwa,
        }
    }

    pub fn params(self) -> PhysicalParams {
        match self {
            Preset::BeyondRwaPaper => PhysicalParams {
                omega_a: angular(37.5e9),
                omega_m: angular(37.5e9),
                kappa_a: angular(33e6),
                kappa_m: angular(15e6),
                g0: angular(2.5e9),
                modulation_amplitude: 1.0,
                delta: 0.0,
                temperature: 0.0,
                spin_count: 3.5e19,
                spin_s: YIG_SPIN,
                gyromagnetic: angular(YIG_GYROMAGNETIC_HZ_PER_T),
                mode_volume: None,
                drive_power: None,
                magnon_drive_field: None,
                omega_l: None,
                omega_d: None,
                bias_field: Some(1.34),
            }
            .with_target_cooperativity(BEYOND_PRESET_COOPERATIVITY),
            Preset::RwaPaper => PhysicalParams {
                omega_a: angular(7.875e9),
                omega_m: angular(7.875e9),
                kappa_a: angular(2.09e6),
                kappa_m: angular(19e6),
                g0: angular(3.1e6),
                modulation_amplitude: 1.0,
                delta: 0.0,
                temperature: 0.0,
                spin_count: 1.031e17,
                spin_s: YIG_SPIN,
                gyromagnetic: angular(YIG_GYROMAGNETIC_HZ_PER_T),
                mode_volume: None,
                drive_power: None,
                magnon_drive_field: None,
                omega_l: None,
                omega_d: None,
                bias_field: Some(0.281),
            },
            Preset::CoplanarPaper => PhysicalParams {
                omega_a: angular(5.9e9),
                omega_m: angular(5.9e9),
                kappa_a: angular(3e6),
                kappa_m: angular(50e6),
                g0: angular(450e6),
                modulation_amplitude: 1.0,
                delta: 0.0,
                temperature: 0.01,
                spin_count: 4.5e16,
                spin_s: YIG_SPIN,
                gyromagnetic: angular(YIG_GYROMAGNETIC_HZ_PER_T),
                mode_volume: None,
                drive_power: None,
                magnon_drive_field: None,
                omega_l: None,
                omega_d: None,
                bias_field: None,
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}
