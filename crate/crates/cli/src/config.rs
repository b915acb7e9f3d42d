//! JSON configuration file. Field names carry their units.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use snaposc_core::simulator::DEFAULT_TRANSIENT_CYCLES;
use snaposc_core::{
    ActuatorParams, BeamCharacteristics, Environment, Error, OscillatorConfig, RunOptions,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub actuator: ActuatorSection,
    /// Defaults to `actuator` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actuator_2: Option<ActuatorSection>,
    pub beam: BeamSection,
    pub environment: EnvironmentSection,
    pub drive: DriveSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorSection {
    pub resistance_ohm: f64,
    #[serde(rename = "stiffness_N_per_mm")]
    pub stiffness_n_per_mm: f64,
    #[serde(rename = "thermal_coeff_N_per_C")]
    pub thermal_coeff_n_per_c: f64,
    #[serde(rename = "thermal_mass_Ws_per_C")]
    pub thermal_mass_ws_per_c: f64,
    #[serde(rename = "conductivity_W_per_C")]
    pub conductivity_w_per_c: f64,
    pub length_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub w_rise_mm: f64,
    pub w_snap_thru_mm: f64,
    pub w_snap_back_mm: f64,
    #[serde(rename = "F_snap_thru_N")]
    pub f_snap_thru_n: f64,
    /// Defaults to `F_snap_thru_N` when absent.
    #[serde(
        rename = "F_snap_back_N",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub f_snap_back_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    #[serde(rename = "T_env_C")]
    pub t_env_c: f64,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(rename = "current_A")]
    pub current_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub dt_s: f64,
    pub t_end_s: f64,
    pub snap_duration_s: f64,
    pub transient_cycles: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            dt_s: 1e-3,
            t_end_s: 60.0,
            snap_duration_s: 0.0,
            transient_cycles: DEFAULT_TRANSIENT_CYCLES,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), Error> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), Error> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl ActuatorSection {
    fn from_params(a: &ActuatorParams) -> Self {
        ActuatorSection {
            resistance_ohm: a.resistance,
            stiffness_n_per_mm: a.stiffness,
            thermal_coeff_n_per_c: a.thermal_coeff,
            thermal_mass_ws_per_c: a.thermal_mass,
            conductivity_w_per_c: a.conductivity,
            length_mm: a.length,
        }
    }

    fn to_params(self, path: &str) -> Result<ActuatorParams, Error> {
        positive(&format!("{path}.resistance_ohm"), self.resistance_ohm)?;
        finite(
            &format!("{path}.stiffness_N_per_mm"),
            self.stiffness_n_per_mm,
        )?;
        positive(
            &format!("{path}.thermal_coeff_N_per_C"),
            self.thermal_coeff_n_per_c,
        )?;
        positive(
            &format!("{path}.thermal_mass_Ws_per_C"),
            self.thermal_mass_ws_per_c,
        )?;
        positive(
            &format!("{path}.conductivity_W_per_C"),
            self.conductivity_w_per_c,
        )?;
        positive(&format!("{path}.length_mm"), self.length_mm)?;
        Ok(ActuatorParams {
            resistance: self.resistance_ohm,
            stiffness: self.stiffness_n_per_mm,
            thermal_coeff: self.thermal_coeff_n_per_c,
            thermal_mass: self.thermal_mass_ws_per_c,
            conductivity: self.conductivity_w_per_c,
            length: self.length_mm,
        })
    }
}

impl ConfigFile {
    /// The fitted forced-air parameter set of the 69.0 mm actuator at 0.60 A.
    pub fn paper_defaults() -> Self {
        let b = BeamCharacteristics::PAPER;
        let env = Environment::forced_air();
        ConfigFile {
            schema_version: SCHEMA_VERSION,
            actuator: ActuatorSection::from_params(&ActuatorParams::PAPER),
            actuator_2: None,
            beam: BeamSection {
                w_rise_mm: b.w_rise,
                w_snap_thru_mm: b.w_snap_thru,
                w_snap_back_mm: b.w_snap_back,
                f_snap_thru_n: b.f_snap_thru,
                f_snap_back_n: None,
            },
            environment: EnvironmentSection {
                t_env_c: env.ambient,
                label: env.label,
            },
            drive: DriveSection { current_a: 0.6 },
            simulation: SimulationSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ConfigFile = serde_json::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        self.oscillator().map(|_| ())?;
        let s = &self.simulation;
        positive("simulation.dt_s", s.dt_s)?;
        positive("simulation.t_end_s", s.t_end_s)?;
        if !(s.snap_duration_s.is_finite() && s.snap_duration_s >= 0.0) {
            return Err(invalid(
                "simulation.snap_duration_s",
                format!("must be finite and >= 0, got {}", s.snap_duration_s),
            ));
        }
        Ok(())
    }

    pub fn beam(&self) -> Result<BeamCharacteristics, Error> {
        let b = &self.beam;
        let mut beam = BeamCharacteristics::new(
            b.w_rise_mm,
            b.w_snap_thru_mm,
            b.w_snap_back_mm,
            b.f_snap_thru_n,
        );
        if let Some(f) = b.f_snap_back_n {
            beam.f_snap_back = f;
        }
        beam.validate().map_err(|e| match e {
            Error::InvalidCharacteristics(msg) => {
                Error::InvalidCharacteristics(format!("beam: {msg}"))
            }
            other => other,
        })?;
        Ok(beam)
    }

    pub fn actuator(&self) -> Result<ActuatorParams, Error> {
        self.actuator.to_params("actuator")
    }

    /// Core configuration; validated with config-file field paths.
    pub fn oscillator(&self) -> Result<OscillatorConfig, Error> {
        let actuator_1 = self.actuator()?;
        let actuator_2 = match self.actuator_2 {
            Some(a) => a.to_params("actuator_2")?,
            None => actuator_1,
        };
        let beam = self.beam()?;
        finite("environment.T_env_C", self.environment.t_env_c)?;
        let current = self.drive.current_a;
        if !(current.is_finite() && current >= 0.0) {
            return Err(invalid(
                "drive.current_A",
                format!("must be finite and >= 0, got {current}"),
            ));
        }
        Ok(OscillatorConfig {
            actuator_1,
            actuator_2,
            beam,
            env: Environment {
                ambient: self.environment.t_env_c,
                label: self.environment.label.clone(),
            },
            supply_current: current,
            snap_duration: self.simulation.snap_duration_s,
        })
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            dt: self.simulation.dt_s,
            t_end: self.simulation.t_end_s,
            transient_cycles: self.simulation.transient_cycles,
            ..RunOptions::default()
        }
    }
}
