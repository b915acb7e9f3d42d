//! Lumped first-order actuator model: `C_th dT/dt = I² R - λ (T - T_env)`
//! with a linear temperature-to-force law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActuatorParams, BeamCharacteristics, Environment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorThermalState {
    /// °C
    pub temperature: f64,
    pub powered: bool,
}

impl ActuatorThermalState {
    pub fn ambient(env: &Environment) -> Self {
        ActuatorThermalState {
            temperature: env.ambient,
            powered: false,
        }
    }

    /// Advances by `dt` with `current` applied while powered and zero otherwise.
    pub fn advance(&mut self, current: f64, dt: f64, act: &ActuatorParams, env: &Environment) {
        let i = if self.powered { current } else { 0.0 };
        self.temperature = temperature_step(self.temperature, i, dt, act, env);
    }
}

/// Which side of the beam an actuator is attached to. Side 2 is mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    One,
    Two,
}

impl Side {
    /// Maps a global displacement into this side's pulling frame.
    pub fn frame(self, w: f64) -> f64 {
        match self {
            Side::One => w,
            Side::Two => -w,
        }
    }
}

/// Pull of an actuator at the beam attachment,
/// `c_T (T - T_env) + k (w_side - w_start)`, N.
pub fn actuator_force(
    temperature: f64,
    w: f64,
    act: &ActuatorParams,
    env: &Environment,
    side: Side,
    beam: &BeamCharacteristics,
) -> f64 {
    act.thermal_coeff * (temperature - env.ambient) + act.stiffness * (side.frame(w) - beam.w_rise)
}

/// Exact step of the linear thermal ODE for a current held constant over `dt`.
pub fn temperature_step(
    temperature: f64,
    current: f64,
    dt: f64,
    act: &ActuatorParams,
    env: &Environment,
) -> f64 {
    let rise = current * current * act.resistance / act.conductivity;
    let target = env.ambient + rise;
    let decay = (-dt / act.time_constant()).exp();
    target + (temperature - target) * decay
}

/// Time for an unpowered actuator to relax from `dt_from` above ambient to
/// within `epsilon` of ambient, s. Zero when already within `epsilon`.
pub fn cooling_time(dt_from: f64, epsilon: f64, act: &ActuatorParams) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidTolerance(epsilon));
    }
    if dt_from <= epsilon {
        return Ok(0.0);
    }
    Ok(act.time_constant() * (dt_from / epsilon).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{snap_delta_temperature, Direction};
    use proptest::prelude::*;

    const A: ActuatorParams = ActuatorParams::PAPER;
    const B: BeamCharacteristics = BeamCharacteristics::PAPER;

    fn env() -> Environment {
        Environment::forced_air()
    }

    #[test]
    fn force_reference_state_is_zero() {
        assert_eq!(
            actuator_force(22.0, B.w_rise, &A, &env(), Side::One, &B),
            0.0
        );
        assert_eq!(
            actuator_force(22.0, -B.w_rise, &A, &env(), Side::Two, &B),
            0.0
        );
    }

    #[test]
    fn force_at_snap_point_equals_critical_force() {
        let e = env();
        let thru = snap_delta_temperature(&B, &A, Direction::Thru);
        let f1 = actuator_force(e.ambient + thru, B.w_snap_thru, &A, &e, Side::One, &B);
        assert!((f1 - B.f_snap_thru).abs() < 1e-12);
        let back = snap_delta_temperature(&B, &A, Direction::Back);
        let f2 = actuator_force(e.ambient + back, B.w_snap_back, &A, &e, Side::Two, &B);
        assert!((f2 - B.f_snap_back).abs() < 1e-12);
    }

    #[test]
    fn force_at_equilibrium_temperature() {
        let e = env();
        let t = e.ambient + 0.36 * A.resistance / A.conductivity;
        let f = actuator_force(t, B.w_rise, &A, &e, Side::One, &B);
        // 0.016 * 59.22 °C
        assert!((f - 0.9476).abs() < 5e-4);
    }

    #[test]
    fn step_fixed_point_asymptote_and_time_constant() {
        let e = env();
        assert_eq!(temperature_step(22.0, 0.0, 10.0, &A, &e), 22.0);
        let inf = temperature_step(22.0, 0.6, f64::INFINITY, &A, &e);
        assert!((inf - (22.0 + 0.36 * 3.8 / 0.0231)).abs() < 1e-12);
        let one_tau = temperature_step(22.0, 0.6, A.time_constant(), &A, &e);
        assert!((one_tau - 59.4347).abs() < 1e-4);
    }

    #[test]
    fn cooling_time_values() {
        let t = cooling_time(47.775, 2.0, &A).unwrap();
        assert!((t - 4.1075).abs() < 1e-4);
        assert_eq!(cooling_time(2.0, 2.0, &A).unwrap(), 0.0);
        let heavy = ActuatorParams {
            thermal_mass: 2.0 * A.thermal_mass,
            ..A
        };
        assert!((cooling_time(47.775, 2.0, &heavy).unwrap() - 2.0 * t).abs() < 1e-12);
        assert_eq!(
            cooling_time(10.0, 0.0, &A),
            Err(Error::InvalidTolerance(0.0))
        );
    }

    #[test]
    fn thermal_state_routes_current_only_when_powered() {
        let e = env();
        let mut on = ActuatorThermalState {
            temperature: 22.0,
            powered: true,
        };
        let mut off = ActuatorThermalState::ambient(&e);
        on.advance(0.6, 1.0, &A, &e);
        off.advance(0.6, 1.0, &A, &e);
        assert!(on.temperature > 22.0);
        assert_eq!(off.temperature, 22.0);
    }

    proptest! {
        #[test]
        fn step_composition_is_exact(
            t0 in 0.0f64..150.0,
            i in 0.0f64..2.0,
            a in 0.0f64..5.0,
            b in 0.0f64..5.0,
        ) {
            let e = env();
            let whole = temperature_step(t0, i, a + b, &A, &e);
            let split = temperature_step(temperature_step(t0, i, a, &A, &e), i, b, &A, &e);
            prop_assert!((whole - split).abs() <= 1e-12 * whole.abs().max(1.0));
        }

        #[test]
        fn approach_to_equilibrium_is_monotone(
            t0 in -20.0f64..150.0,
            i in 0.0f64..1.5,
            dt in 1e-3f64..1.0,
        ) {
            let e = env();
            let eq = e.ambient + i * i * A.resistance / A.conductivity;
            let mut t = t0;
            let mut gap = (t - eq).abs();
            for _ in 0..20 {
                t = temperature_step(t, i, dt, &A, &e);
                let g = (t - eq).abs();
                prop_assert!(g <= gap);
                if gap > 1e-9 {
                    prop_assert!(g < gap);
                }
                gap = g;
            }
        }

        #[test]
        fn unpowered_cooling_never_undershoots(t0 in 22.001f64..200.0, dt in 1e-3f64..2.0) {
            let e = env();
            let mut t = t0;
            for _ in 0..50 {
                let next = temperature_step(t, 0.0, dt, &A, &e);
                prop_assert!(next >= e.ambient);
                prop_assert!(next < t || t - e.ambient < 1e-12);
                t = next;
            }
        }
    }
}
