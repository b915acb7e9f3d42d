//! Event-driven hybrid simulation of the two-switch oscillator.
//!
//! The beam is quasi-static: at every instant it sits at the force balance of
//! its current branch. Temperatures advance with the exact thermal step, so
//! the only discretization error is in locating the instant at which the
//! balance disappears over the fold, which is refined by bisection in time.
//!
//! Force balance along the driving direction of the current branch:
//! the driving actuator pulls with `c_T ΔT + k (u - w_rise)`, the opposing
//! actuator transmits its thermal tension `c_T ΔT` (never pushes), and the
//! beam resists with its branch curve. The closed switch belongs to the
//! driving actuator and carries the full supply current.

use serde::{Deserialize, Serialize};

use crate::beam::{build_beam_curve, BeamCurve, Branch};
use crate::error::{Error, Result};
use crate::model::{oscillation_period, ActuatorParams, Direction, OscillatorConfig};
use crate::root;
use crate::thermal::{actuator_force, temperature_step};

/// Residual force tolerance of the equilibrium solve, N.
pub const FORCE_TOLERANCE: f64 = 1e-9;
/// Snap events tolerated within a single step before giving up.
const MAX_EVENTS_PER_STEP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equilibrium {
    /// Balance exists at global displacement `w`.
    At(f64),
    /// The driving force still exceeds the beam's critical force at the fold.
    FoldCrossed,
}

/// Beam in transit between folds while a snap dwell is configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapTransit {
    pub started: f64,
    pub ends: f64,
    pub from_w: f64,
    pub to_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorState {
    /// s
    pub t: f64,
    /// °C
    pub t1: f64,
    /// °C
    pub t2: f64,
    pub branch: Branch,
    /// mm
    pub w: f64,
    pub switch_1_closed: bool,
    pub switch_2_closed: bool,
    pub transit: Option<SnapTransit>,
}

impl OscillatorState {
    /// Supply current routed to each actuator, `(I1, I2)`.
    pub fn currents(&self, supply: f64) -> (f64, f64) {
        (
            if self.switch_1_closed { supply } else { 0.0 },
            if self.switch_2_closed { supply } else { 0.0 },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapEvent {
    pub t: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub w: f64,
    pub t1: f64,
    pub t2: f64,
    pub branch: Branch,
    pub switch_1_closed: bool,
    pub switch_2_closed: bool,
    pub i1: f64,
    pub i2: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub events: Vec<SnapEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Retained same-direction snap intervals, s.
    pub periods: Vec<f64>,
    pub mean_period: Option<f64>,
    pub stalled: bool,
    /// Beam displacement at the end of a stalled run, mm.
    pub stall_position: Option<f64>,
    /// Completed snap-through/snap-back pairs.
    pub cycle_count: usize,
    pub snap_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Sample and step interval, s.
    pub dt: f64,
    pub t_end: f64,
    /// Initial cycles excluded from the period estimate.
    pub transient_cycles: usize,
    /// Snap instant localization tolerance, s.
    pub event_tolerance: f64,
    /// Starting state; cold start on branch 1 when `None`.
    pub initial: Option<OscillatorState>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            dt: 1e-3,
            t_end: 60.0,
            transient_cycles: DEFAULT_TRANSIENT_CYCLES,
            event_tolerance: 1e-6,
            initial: None,
        }
    }
}

impl RunOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        RunOptions {
            dt,
            t_end,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("simulation.dt", "must be finite and > 0"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid("simulation.t_end", "must be finite and > 0"));
        }
        if !(self.event_tolerance > 0.0) {
            return Err(Error::InvalidTolerance(self.event_tolerance));
        }
        Ok(())
    }
}

pub const DEFAULT_TRANSIENT_CYCLES: usize = 3;
/// Minimum snap-free window before a run is declared stalled, s.
pub const MIN_STALL_WINDOW: f64 = 30.0;

pub struct Simulator {
    config: OscillatorConfig,
    curve: BeamCurve,
    event_tolerance: f64,
}

impl Simulator {
    pub fn new(config: OscillatorConfig) -> Result<Self> {
        config.validate()?;
        let curve = build_beam_curve(&config.beam)?;
        Ok(Self::with_curve(config, curve))
    }

    /// Uses a caller-supplied beam curve, e.g. a different shape.
    pub fn with_curve(config: OscillatorConfig, curve: BeamCurve) -> Self {
        Simulator {
            config,
            curve,
            event_tolerance: 1e-6,
        }
    }

    pub fn set_event_tolerance(&mut self, tol: f64) {
        self.event_tolerance = tol;
    }

    pub fn config(&self) -> &OscillatorConfig {
        &self.config
    }

    pub fn curve(&self) -> &BeamCurve {
        &self.curve
    }

    /// Cold start: both actuators at ambient, branch 1 at its stable point.
    pub fn initial_state(&self) -> OscillatorState {
        let ambient = self.config.env.ambient;
        OscillatorState {
            t: 0.0,
            t1: ambient,
            t2: ambient,
            branch: Branch::One,
            w: self.curve.stable_point(Branch::One),
            switch_1_closed: true,
            switch_2_closed: false,
            transit: None,
        }
    }

    fn actuators(&self, branch: Branch) -> (&ActuatorParams, &ActuatorParams) {
        match branch {
            Branch::One => (&self.config.actuator_1, &self.config.actuator_2),
            Branch::Two => (&self.config.actuator_2, &self.config.actuator_1),
        }
    }

    /// Net force along the driving direction of `branch` after travel `d`
    /// from its stable point.
    fn net_force(&self, branch: Branch, t1: f64, t2: f64, d: f64) -> f64 {
        let (drive, oppose) = self.actuators(branch);
        let (t_drive, t_oppose) = match branch {
            Branch::One => (t1, t2),
            Branch::Two => (t2, t1),
        };
        let env = &self.config.env;
        let curve = self.curve.branch(branch);
        let side = branch.driving_side();
        let w = side.frame(curve.at_travel(d));
        let pull = actuator_force(t_drive, w, drive, env, side, &self.config.beam);
        let resist = (oppose.thermal_coeff * (t_oppose - env.ambient)).max(0.0);
        pull - resist - curve.force_at_travel(d)
    }

    /// Net driving force remaining at the fold of `branch`; positive means
    /// no equilibrium survives on the branch.
    pub fn fold_margin(&self, branch: Branch, t1: f64, t2: f64) -> f64 {
        let span = self.curve.branch(branch).span();
        self.net_force(branch, t1, t2, span)
    }

    /// Quasi-static beam position on `branch` for the given temperatures.
    pub fn solve_equilibrium(&self, branch: Branch, t1: f64, t2: f64) -> Result<Equilibrium> {
        let curve = self.curve.branch(branch);
        let side = branch.driving_side();
        let span = curve.span();
        let at_start = self.net_force(branch, t1, t2, 0.0);
        if at_start <= 0.0 {
            // held in the well by the opposing side
            return Ok(Equilibrium::At(side.frame(curve.stable)));
        }
        let at_fold = self.net_force(branch, t1, t2, span);
        if at_fold > 0.0 {
            return Ok(Equilibrium::FoldCrossed);
        }
        let f = |d: f64| self.net_force(branch, t1, t2, d);
        let d = root::bisect(f, 0.0, span, FORCE_TOLERANCE * 1e-3, 0.0)?;
        if f(d).abs() > FORCE_TOLERANCE {
            return Err(Error::NoConvergence {
                iterations: root::MAX_BISECTIONS,
            });
        }
        Ok(Equilibrium::At(side.frame(curve.at_travel(d))))
    }

    fn temperatures_after(&self, state: &OscillatorState, elapsed: f64) -> (f64, f64) {
        let (i1, i2) = state.currents(self.config.supply_current);
        let env = &self.config.env;
        (
            temperature_step(state.t1, i1, elapsed, &self.config.actuator_1, env),
            temperature_step(state.t2, i2, elapsed, &self.config.actuator_2, env),
        )
    }

    fn advance_to(&self, state: &mut OscillatorState, t: f64) {
        let (t1, t2) = self.temperatures_after(state, t - state.t);
        state.t1 = t1;
        state.t2 = t2;
        state.t = t;
    }

    /// Switches to the other branch and flips both switches.
    fn complete_snap(&self, state: &mut OscillatorState) -> Result<()> {
        state.branch = state.branch.other();
        state.switch_1_closed = !state.switch_1_closed;
        state.switch_2_closed = !state.switch_2_closed;
        state.transit = None;
        state.w = match self.solve_equilibrium(state.branch, state.t1, state.t2)? {
            Equilibrium::At(w) => w,
            Equilibrium::FoldCrossed => self.curve.fold_point(state.branch),
        };
        Ok(())
    }

    fn begin_snap(&self, state: &mut OscillatorState) -> Result<()> {
        let dwell = self.config.snap_duration;
        if dwell > 0.0 {
            let target = state.branch.other();
            let to_w = match self.solve_equilibrium(target, state.t1, state.t2)? {
                Equilibrium::At(w) => w,
                Equilibrium::FoldCrossed => self.curve.fold_point(target),
            };
            let from_w = self.curve.fold_point(state.branch);
            state.w = from_w;
            state.transit = Some(SnapTransit {
                started: state.t,
                ends: state.t + dwell,
                from_w,
                to_w,
            });
            Ok(())
        } else {
            self.complete_snap(state)
        }
    }

    /// Advances `state` by `dt`, returning the new state and the snap events
    /// that occurred within the step.
    pub fn step(
        &self,
        state: &OscillatorState,
        dt: f64,
    ) -> Result<(OscillatorState, Vec<SnapEvent>)> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        self.step_until(state, state.t + dt)
    }

    fn step_until(
        &self,
        state: &OscillatorState,
        t_target: f64,
    ) -> Result<(OscillatorState, Vec<SnapEvent>)> {
        let mut s = state.clone();
        let mut events = Vec::new();
        while s.t < t_target {
            if let Some(transit) = s.transit {
                let seg_end = transit.ends.min(t_target);
                self.advance_to(&mut s, seg_end);
                if seg_end >= transit.ends {
                    self.complete_snap(&mut s)?;
                } else {
                    let frac = (s.t - transit.started) / (transit.ends - transit.started);
                    s.w = transit.from_w + frac * (transit.to_w - transit.from_w);
                }
                continue;
            }

            let branch = s.branch;
            let margin_at = |t: f64| {
                let (t1, t2) = self.temperatures_after(&s, t - s.t);
                self.fold_margin(branch, t1, t2)
            };
            if margin_at(t_target) <= 0.0 {
                self.advance_to(&mut s, t_target);
                s.w = match self.solve_equilibrium(s.branch, s.t1, s.t2)? {
                    Equilibrium::At(w) => w,
                    Equilibrium::FoldCrossed => unreachable!("fold margin is non-positive"),
                };
                break;
            }

            let t_snap = if self.fold_margin(branch, s.t1, s.t2) > 0.0 {
                s.t
            } else {
                root::first_true(|t| margin_at(t) > 0.0, s.t, t_target, self.event_tolerance)
            };
            self.advance_to(&mut s, t_snap);
            events.push(SnapEvent {
                t: t_snap,
                direction: branch.exit_direction(),
            });
            if events.len() > MAX_EVENTS_PER_STEP {
                return Err(Error::EventStorm { t: t_snap });
            }
            self.begin_snap(&mut s)?;
        }
        s.t = t_target;
        Ok((s, events))
    }

    fn row(&self, s: &OscillatorState) -> TraceRow {
        let (i1, i2) = s.currents(self.config.supply_current);
        TraceRow {
            t: s.t,
            w: s.w,
            t1: s.t1,
            t2: s.t2,
            branch: s.branch,
            switch_1_closed: s.switch_1_closed,
            switch_2_closed: s.switch_2_closed,
            i1,
            i2,
        }
    }

    /// Fixed-step run sampled every `options.dt`.
    pub fn run(&self, options: &RunOptions) -> Result<(Trace, RunSummary)> {
        options.validate()?;
        let mut state = options
            .initial
            .clone()
            .unwrap_or_else(|| self.initial_state());
        let start = state.t;
        let steps = ((options.t_end - start) / options.dt).round().max(1.0) as usize;
        let mut trace = Trace {
            rows: Vec::with_capacity(steps + 1),
            events: Vec::new(),
        };
        trace.rows.push(self.row(&state));
        for n in 1..=steps {
            let t_next = start + n as f64 * options.dt;
            let (next, events) = self.step_until(&state, t_next)?;
            state = next;
            trace.events.extend(events);
            trace.rows.push(self.row(&state));
        }
        let summary = self.summarize(&trace, options.transient_cycles);
        Ok((trace, summary))
    }

    /// Snap-free window after which a run counts as stalled, s.
    pub fn stall_window(&self) -> f64 {
        match oscillation_period(&self.config, false) {
            Ok(p) => (5.0 * p.period).max(MIN_STALL_WINDOW),
            Err(_) => MIN_STALL_WINDOW,
        }
    }

    fn summarize(&self, trace: &Trace, transient_cycles: usize) -> RunSummary {
        let (t0, t_end, w_end) = match (trace.rows.first(), trace.rows.last()) {
            (Some(a), Some(b)) => (a.t, b.t, b.w),
            _ => (0.0, 0.0, 0.0),
        };
        let last_snap = trace.events.last().map_or(t0, |e| e.t);
        let stalled = t_end - last_snap >= self.stall_window();
        let periods = cycle_periods(&trace.events, transient_cycles).unwrap_or_default();
        RunSummary {
            mean_period: mean(&periods),
            periods,
            stalled,
            stall_position: stalled.then_some(w_end),
            cycle_count: trace.events.len() / 2,
            snap_count: trace.events.len(),
        }
    }
}

/// Simulates `config` from a cold start for `t_end` seconds at step `dt`.
pub fn run(config: &OscillatorConfig, t_end: f64, dt: f64) -> Result<(Trace, RunSummary)> {
    Simulator::new(config.clone())?.run(&RunOptions::new(t_end, dt))
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Minimum same-direction snaps needed for a period estimate.
pub const MIN_SAME_DIRECTION_SNAPS: usize = 3;

/// Same-direction snap intervals of both directions, ordered by end time,
/// after dropping up to `transient_cycles` leading intervals per direction
/// (always keeping at least one).
pub fn cycle_periods(events: &[SnapEvent], transient_cycles: usize) -> Result<Vec<f64>> {
    let times = |d: Direction| -> Vec<f64> {
        events
            .iter()
            .filter(|e| e.direction == d)
            .map(|e| e.t)
            .collect()
    };
    let thru = times(Direction::Thru);
    let back = times(Direction::Back);
    let found = thru.len().max(back.len());
    if found < MIN_SAME_DIRECTION_SNAPS {
        return Err(Error::InsufficientCycles {
            found,
            required: MIN_SAME_DIRECTION_SNAPS,
        });
    }
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for ts in [&thru, &back] {
        if ts.len() < 2 {
            continue;
        }
        let n = ts.len() - 1;
        let skip = transient_cycles.min(n - 1);
        intervals.extend(ts.windows(2).skip(skip).map(|w| (w[1], w[1] - w[0])));
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(intervals.into_iter().map(|(_, p)| p).collect())
}

/// Mean same-direction snap interval after the default transient cycles.
pub fn measure_period(trace: &Trace) -> Result<f64> {
    measure_period_with(trace, DEFAULT_TRANSIENT_CYCLES)
}

pub fn measure_period_with(trace: &Trace, transient_cycles: usize) -> Result<f64> {
    let periods = cycle_periods(&trace.events, transient_cycles)?;
    Ok(mean(&periods).expect("at least one interval is retained"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSegment {
    pub start: f64,
    pub end: f64,
    /// Channel A follows switch 1.
    pub a: bool,
    /// Channel B follows switch 2.
    pub b: bool,
}

/// Two-channel on/off step functions of the switch states.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PatternTimeline {
    pub segments: Vec<PatternSegment>,
}

pub fn export_pattern_timeline(trace: &Trace) -> PatternTimeline {
    let mut segments: Vec<PatternSegment> = Vec::new();
    for row in &trace.rows {
        match segments.last_mut() {
            Some(seg) if seg.a == row.switch_1_closed && seg.b == row.switch_2_closed => {
                seg.end = row.t;
            }
            Some(seg) => {
                seg.end = row.t;
                segments.push(PatternSegment {
                    start: row.t,
                    end: row.t,
                    a: row.switch_1_closed,
                    b: row.switch_2_closed,
                });
            }
            None => segments.push(PatternSegment {
                start: row.t,
                end: row.t,
                a: row.switch_1_closed,
                b: row.switch_2_closed,
            }),
        }
    }
    PatternTimeline { segments }
}

impl PatternTimeline {
    pub fn is_complementary(&self) -> bool {
        self.segments.iter().all(|s| s.a != s.b)
    }

    /// Channel values at time `t`.
    pub fn at(&self, t: f64) -> Option<(bool, bool)> {
        self.segments
            .iter()
            .find(|s| s.start <= t && t <= s.end)
            .map(|s| (s.a, s.b))
    }

    /// Total on-time of channels A and B over whole A-cycles that start at
    /// or after `after`: from the first rising edge of A to the last one.
    pub fn on_times(&self, after: f64) -> Option<(f64, f64)> {
        let rising: Vec<usize> = (1..self.segments.len())
            .filter(|&k| self.segments[k].a && !self.segments[k - 1].a)
            .filter(|&k| self.segments[k].start >= after)
            .collect();
        let (&first, &last) = (rising.first()?, rising.last()?);
        if first == last {
            return None;
        }
        let (mut on_a, mut on_b) = (0.0, 0.0);
        for s in &self.segments[first..last] {
            let len = s.end - s.start;
            if s.a {
                on_a += len;
            }
            if s.b {
                on_b += len;
            }
        }
        Some((on_a, on_b))
    }

    /// Fraction of time channel A is on, over whole cycles after `after`.
    pub fn duty_cycle(&self, after: f64) -> Option<f64> {
        let (a, b) = self.on_times(after)?;
        Some(a / (a + b))
    }
}
