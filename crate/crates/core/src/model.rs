//! Domain types and the closed-form half-period model.
//!
//! Displacements are signed and follow one convention: the beam starts in
//! stable state 1 at `w_rise` and actuator 1 drives it towards
//! `w_snap_thru`. Quantities for the reverse direction are evaluated in the
//! mirrored frame of actuator 2, i.e. with displacement signs negated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal;

/// Electrical, thermal and mechanical constants of one coiled polymer actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    /// Ω
    pub resistance: f64,
    /// N/mm. Signed; the measured value is negative.
    pub stiffness: f64,
    /// Thermal force coefficient, N/°C.
    pub thermal_coeff: f64,
    /// Thermal mass, W·s/°C.
    pub thermal_mass: f64,
    /// Absolute thermal conductivity to the environment, W/°C.
    pub conductivity: f64,
    /// mm
    pub length: f64,
}

impl ActuatorParams {
    /// The 69.0 mm actuator with the fitted forced-air thermal constants.
    pub const PAPER: ActuatorParams = ActuatorParams {
        resistance: 3.8,
        stiffness: -0.28,
        thermal_coeff: 1.6e-2,
        thermal_mass: 2.99e-2,
        conductivity: 2.31e-2,
        length: 69.0,
    };

    pub fn validate(&self) -> Result<()> {
        self.validate_at("actuator")
    }

    pub(crate) fn validate_at(&self, path: &str) -> Result<()> {
        let positive = [
            ("resistance", self.resistance),
            ("thermal_coeff", self.thermal_coeff),
            ("thermal_mass", self.thermal_mass),
            ("conductivity", self.conductivity),
            ("length", self.length),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    format!("{path}.{name}"),
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        if !self.stiffness.is_finite() {
            return Err(Error::invalid(
                format!("{path}.stiffness"),
                "must be finite",
            ));
        }
        Ok(())
    }

    /// Thermal time constant `C_th / λ`, s.
    pub fn time_constant(&self) -> f64 {
        self.thermal_mass / self.conductivity
    }
}

/// Which snap transition is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// State 1 to state 2, driven by actuator 1.
    Thru,
    /// State 2 to state 1, driven by actuator 2.
    Back,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::Thru => Direction::Back,
            Direction::Back => Direction::Thru,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Thru => "thru",
            Direction::Back => "back",
        }
    }
}

/// Critical snap characteristics of the bistable beam, signed displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamCharacteristics {
    /// Stable state-1 position, mm.
    pub w_rise: f64,
    /// Critical displacement for state 1 → 2, mm.
    pub w_snap_thru: f64,
    /// Critical displacement for state 2 → 1, mm.
    pub w_snap_back: f64,
    /// N
    pub f_snap_thru: f64,
    /// N
    pub f_snap_back: f64,
}

/// Critical point of one snap direction expressed in the driving actuator's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub force: f64,
    /// Fold displacement.
    pub w_crit: f64,
    /// Stable starting displacement.
    pub w_start: f64,
}

impl BeamCharacteristics {
    pub const PAPER: BeamCharacteristics = BeamCharacteristics {
        w_rise: -2.12,
        w_snap_thru: -0.89,
        w_snap_back: 0.87,
        f_snap_thru: 0.42,
        f_snap_back: 0.42,
    };

    /// Builds characteristics with `f_snap_back` defaulting to `f_snap_thru`.
    pub fn new(w_rise: f64, w_snap_thru: f64, w_snap_back: f64, f_snap_thru: f64) -> Self {
        BeamCharacteristics {
            w_rise,
            w_snap_thru,
            w_snap_back,
            f_snap_thru,
            f_snap_back: f_snap_thru,
        }
    }

    /// Mirror-symmetric characteristics: `w_snap_back = -w_snap_thru`.
    pub fn mirrored(w_rise: f64, w_snap_thru: f64, force: f64) -> Self {
        Self::new(w_rise, w_snap_thru, -w_snap_thru, force)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("w_rise", self.w_rise),
            ("w_snap_thru", self.w_snap_thru),
            ("w_snap_back", self.w_snap_back),
            ("f_snap_thru", self.f_snap_thru),
            ("f_snap_back", self.f_snap_back),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidCharacteristics(format!(
                    "{name} is not finite"
                )));
            }
        }
        if self.w_rise == 0.0 {
            return Err(Error::InvalidCharacteristics(
                "w_rise must be nonzero".into(),
            ));
        }
        if self.w_snap_thru.signum() != self.w_rise.signum() || self.w_snap_thru == 0.0 {
            return Err(Error::InvalidCharacteristics(
                "w_snap_thru must have the sign of w_rise".into(),
            ));
        }
        if self.w_snap_thru.abs() >= self.w_rise.abs() {
            return Err(Error::InvalidCharacteristics(
                "|w_snap_thru| must be smaller than |w_rise|".into(),
            ));
        }
        if self.w_snap_back.signum() != -self.w_snap_thru.signum() || self.w_snap_back == 0.0 {
            return Err(Error::InvalidCharacteristics(
                "w_snap_back must have the opposite sign of w_snap_thru".into(),
            ));
        }
        if self.w_snap_back.abs() >= self.w_rise.abs() {
            return Err(Error::InvalidCharacteristics(
                "|w_snap_back| must be smaller than |w_rise|".into(),
            ));
        }
        if self.f_snap_thru <= 0.0 || self.f_snap_back <= 0.0 {
            return Err(Error::InvalidCharacteristics(
                "critical forces must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Critical triple of `direction` in the driving actuator's frame.
    pub fn critical(&self, direction: Direction) -> CriticalPoint {
        match direction {
            Direction::Thru => CriticalPoint {
                force: self.f_snap_thru,
                w_crit: self.w_snap_thru,
                w_start: self.w_rise,
            },
            Direction::Back => CriticalPoint {
                force: self.f_snap_back,
                w_crit: -self.w_snap_back,
                w_start: self.w_rise,
            },
        }
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        self.w_snap_back == -self.w_snap_thru && self.f_snap_back == self.f_snap_thru
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Ambient temperature, °C.
    pub ambient: f64,
    pub label: String,
}

impl Environment {
    pub fn forced_air() -> Self {
        Environment {
            ambient: 22.0,
            label: "forced-air".to_string(),
        }
    }
}

impl Default for Environment {
    fn default() -> Self {
        Self::forced_air()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorConfig {
    pub actuator_1: ActuatorParams,
    pub actuator_2: ActuatorParams,
    pub beam: BeamCharacteristics,
    pub env: Environment,
    /// A
    pub supply_current: f64,
    /// Snap transit time, s.
    pub snap_duration: f64,
}

impl OscillatorConfig {
    /// Symmetric oscillator with identical actuators.
    pub fn symmetric(
        actuator: ActuatorParams,
        beam: BeamCharacteristics,
        env: Environment,
        supply_current: f64,
    ) -> Self {
        OscillatorConfig {
            actuator_1: actuator,
            actuator_2: actuator,
            beam,
            env,
            supply_current,
            snap_duration: 0.0,
        }
    }

    /// Paper parameter set at the given supply current, forced air, no snap dwell.
    pub fn paper(supply_current: f64) -> Self {
        Self::symmetric(
            ActuatorParams::PAPER,
            BeamCharacteristics::PAPER,
            Environment::forced_air(),
            supply_current,
        )
    }

    pub fn with_current(mut self, supply_current: f64) -> Self {
        self.supply_current = supply_current;
        self
    }

    pub fn with_snap_duration(mut self, snap_duration: f64) -> Self {
        self.snap_duration = snap_duration;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.actuator_1 == self.actuator_2
    }

    pub fn actuator(&self, direction: Direction) -> &ActuatorParams {
        match direction {
            Direction::Thru => &self.actuator_1,
            Direction::Back => &self.actuator_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.actuator_1.validate_at("actuator_1")?;
        self.actuator_2.validate_at("actuator_2")?;
        self.beam.validate()?;
        if !self.env.ambient.is_finite() {
            return Err(Error::invalid("env.ambient", "must be finite"));
        }
        if !(self.supply_current.is_finite() && self.supply_current >= 0.0) {
            return Err(Error::invalid(
                "supply_current",
                format!("must be finite and >= 0, got {}", self.supply_current),
            ));
        }
        if !(self.snap_duration.is_finite() && self.snap_duration >= 0.0) {
            return Err(Error::invalid(
                "snap_duration",
                format!("must be finite and >= 0, got {}", self.snap_duration),
            ));
        }
        Ok(())
    }
}

/// Force the driving actuator must supply at the fold beyond its own elastic
/// unloading: `F_crit - k (w_crit - w_start)`, N.
pub fn snap_force_budget(
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
    direction: Direction,
) -> f64 {
    let c = beam.critical(direction);
    c.force - act.stiffness * (c.w_crit - c.w_start)
}

/// Actuator temperature rise above ambient at which the beam snaps, °C.
pub fn snap_delta_temperature(
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
    direction: Direction,
) -> f64 {
    snap_force_budget(beam, act, direction) / act.thermal_coeff
}

/// Steady-state temperature rise `I² R / λ` under constant current, °C.
pub fn equilibrium_temperature_rise(current: f64, act: &ActuatorParams) -> f64 {
    current * current * act.resistance / act.conductivity
}

/// Lower bound on the supply current; at or below it the actuator never
/// reaches the snap temperature.
pub fn min_current(beam: &BeamCharacteristics, act: &ActuatorParams, direction: Direction) -> f64 {
    let budget = snap_force_budget(beam, act, direction).max(0.0);
    (act.conductivity * budget / (act.thermal_coeff * act.resistance)).sqrt()
}

/// Time for a cold actuator (at ambient) to heat to the snap temperature, s.
pub fn pull_time(
    current: f64,
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
    direction: Direction,
) -> Result<f64> {
    let i_min = min_current(beam, act, direction);
    let no_osc = || Error::NoOscillation {
        current,
        min_current: i_min,
    };
    if !(current > i_min) {
        return Err(no_osc());
    }
    let rise = snap_delta_temperature(beam, act, direction);
    let fraction = act.conductivity * rise / (current * current * act.resistance);
    if !(fraction < 1.0) {
        return Err(no_osc());
    }
    Ok(-act.time_constant() * (-fraction).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodModel {
    /// Identical actuators: `2 (T_pull + T_snap)`.
    Symmetric,
    /// Distinct actuators: `T_pull,1 + T_pull,2 + 2 T_snap` (extended model).
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    /// s
    pub period: f64,
    pub model: PeriodModel,
}

/// Closed-form oscillation period of `config` at its supply current.
pub fn oscillation_period(config: &OscillatorConfig, include_snap: bool) -> Result<PeriodEstimate> {
    let snap = if include_snap {
        config.snap_duration
    } else {
        0.0
    };
    let current = config.supply_current;
    if config.is_symmetric() {
        let pull = pull_time(current, &config.beam, &config.actuator_1, Direction::Thru)?;
        Ok(PeriodEstimate {
            period: 2.0 * (pull + snap),
            model: PeriodModel::Symmetric,
        })
    } else {
        Ok(PeriodEstimate {
            period: extended_period(config, include_snap)?,
            model: PeriodModel::Extended,
        })
    }
}

/// Sum of both directions' pull times plus two snap dwells, regardless of symmetry.
pub fn extended_period(config: &OscillatorConfig, include_snap: bool) -> Result<f64> {
    let snap = if include_snap {
        config.snap_duration
    } else {
        0.0
    };
    let current = config.supply_current;
    let thru = pull_time(current, &config.beam, &config.actuator_1, Direction::Thru)?;
    let back = pull_time(current, &config.beam, &config.actuator_2, Direction::Back)?;
    Ok(thru + back + 2.0 * snap)
}

/// Default ambient-approach tolerance for the cooling heuristic, °C.
pub const DEFAULT_COOLING_EPSILON: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    /// A
    pub current: f64,
    /// Heuristic time for the opposing actuator to cool near ambient, s.
    pub cooling_time: f64,
    /// Set when half the target period is shorter than `cooling_time`.
    pub cooling_warning: bool,
}

/// Supply current that yields `target_period` (snap dwell neglected).
pub fn design_current(
    target_period: f64,
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
) -> Result<DesignPoint> {
    if !(target_period > 0.0) || target_period.is_nan() {
        return Err(Error::invalid(
            "target_period",
            format!("must be > 0, got {target_period}"),
        ));
    }
    let budget = snap_force_budget(beam, act, Direction::Thru);
    let decay = -(-act.conductivity * target_period / (2.0 * act.thermal_mass)).exp_m1();
    let current =
        (act.conductivity * budget.max(0.0) / (act.thermal_coeff * act.resistance * decay)).sqrt();
    let rise = snap_delta_temperature(beam, act, Direction::Thru);
    let cooling_time = if rise > 0.0 {
        thermal::cooling_time(rise, DEFAULT_COOLING_EPSILON, act)?
    } else {
        0.0
    };
    Ok(DesignPoint {
        current,
        cooling_time,
        cooling_warning: target_period / 2.0 < cooling_time,
    })
}

/// Rescales an actuator to a new length: R, C_th and λ are proportional to
/// length, k is inversely proportional, c_T is a material constant.
pub fn scale_actuator(act: &ActuatorParams, new_length: f64) -> Result<ActuatorParams> {
    if !(new_length.is_finite() && new_length > 0.0) {
        return Err(Error::invalid(
            "length",
            format!("must be finite and > 0, got {new_length}"),
        ));
    }
    let ratio = new_length / act.length;
    Ok(ActuatorParams {
        resistance: act.resistance * ratio,
        stiffness: act.stiffness / ratio,
        thermal_coeff: act.thermal_coeff,
        thermal_mass: act.thermal_mass * ratio,
        conductivity: act.conductivity * ratio,
        length: new_length,
    })
}
