use snaposc_core::beam::BeamCurve;
use snaposc_core::simulator::cycle_periods;
use snaposc_core::*;

const PAPER_A: ActuatorParams = ActuatorParams::PAPER;
const PAPER_B: BeamCharacteristics = BeamCharacteristics::PAPER;

/// Snap instants of the quasi-static model from closed-form exponentials.
///
/// Between snaps the driving actuator relaxes towards its powered rise and
/// the opposing one decays to ambient; the fold is crossed when the driver's
/// thermal pull, less the opposer's, covers the direction's force budget.
/// During a snap dwell the old driver stays powered.
fn oracle_snap_times(config: &OscillatorConfig, t_end: f64) -> Vec<f64> {
    let b = config.beam;
    let (a1, a2) = (config.actuator_1, config.actuator_2);
    let i = config.supply_current;
    let budget = [
        b.f_snap_thru - a1.stiffness * (b.w_snap_thru - b.w_rise),
        b.f_snap_back - a2.stiffness * (-b.w_snap_back - b.w_rise),
    ];
    let acts = [a1, a2];
    let tau = |a: &ActuatorParams| a.thermal_mass / a.conductivity;
    let rise = |a: &ActuatorParams| i * i * a.resistance / a.conductivity;
    let heat = |a: &ActuatorParams, x0: f64, h: f64| rise(a) + (x0 - rise(a)) * (-h / tau(a)).exp();
    let cool = |a: &ActuatorParams, y0: f64, h: f64| y0 * (-h / tau(a)).exp();

    let mut temps = [0.0f64, 0.0];
    let mut t = 0.0;
    let mut driver = 0usize;
    let mut out = Vec::new();
    loop {
        let (d, o) = (driver, 1 - driver);
        let (ad, ao) = (&acts[d], &acts[o]);
        let (x0, y0) = (temps[d], temps[o]);
        let margin = |h: f64| {
            ad.thermal_coeff * heat(ad, x0, h)
                - (ao.thermal_coeff * cool(ao, y0, h)).max(0.0)
                - budget[d]
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while margin(hi) < 0.0 {
            hi *= 2.0;
            if t + hi > 2.0 * t_end {
                return out;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if margin(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = hi;
        if t + h > t_end {
            return out;
        }
        t += h;
        out.push(t);
        let s = config.snap_duration;
        temps[d] = heat(ad, x0, h + s);
        temps[o] = cool(ao, y0, h + s);
        t += s;
        driver = o;
    }
}

fn assert_events_match_oracle(config: &OscillatorConfig, tol: f64) {
    let (trace, _) = run(config, 60.0, 1e-3).unwrap();
    let oracle = oracle_snap_times(config, 60.0);
    assert!(
        oracle.len() >= 8,
        "oracle produced only {} snaps",
        oracle.len()
    );
    assert_eq!(trace.events.len(), oracle.len());
    for (k, (e, o)) in trace.events.iter().zip(&oracle).enumerate() {
        assert!(
            (e.t - o).abs() < tol,
            "snap {k}: simulated {} vs oracle {o}",
            e.t
        );
    }
}

fn asymmetric(current: f64) -> OscillatorConfig {
    let mut cfg = OscillatorConfig::paper(current);
    cfg.actuator_2.thermal_mass *= 2.0;
    cfg
}

#[test]
fn symmetric_snap_times_match_closed_form() {
    assert_events_match_oracle(&OscillatorConfig::paper(0.6), 2e-5);
    assert_events_match_oracle(&OscillatorConfig::paper(0.58), 2e-5);
}

#[test]
fn asymmetric_snap_times_match_closed_form() {
    assert_events_match_oracle(&asymmetric(0.6), 2e-5);
}

#[test]
fn snap_dwell_snap_times_match_closed_form() {
    assert_events_match_oracle(&OscillatorConfig::paper(0.6).with_snap_duration(0.11), 2e-5);
}

#[test]
fn steady_period_matches_residual_heat_closed_form() {
    // Both actuators share one time constant, so only their temperature
    // difference matters: it relaxes from minus the previous snap rise
    // towards the powered rise and crosses the current direction's rise.
    let i = 0.6;
    let (_, summary) = run(&OscillatorConfig::paper(i), 60.0, 1e-3).unwrap();
    let rise = equilibrium_temperature_rise(i, &PAPER_A);
    let thru = snap_delta_temperature(&PAPER_B, &PAPER_A, Direction::Thru);
    let back = snap_delta_temperature(&PAPER_B, &PAPER_A, Direction::Back);
    let tau = PAPER_A.time_constant();
    let expected =
        tau * (((rise + back) / (rise - thru)).ln() + ((rise + thru) / (rise - back)).ln());
    let measured = summary.mean_period.unwrap();
    assert!(
        (measured - expected).abs() < 1e-4,
        "{measured} vs {expected}"
    );
}

#[test]
fn asymmetric_duty_follows_simulated_halves() {
    let cfg = asymmetric(0.6);
    let (trace, _) = run(&cfg, 60.0, 1e-3).unwrap();
    let tl = export_pattern_timeline(&trace);
    assert!(tl.is_complementary());
    let (on_a, on_b) = tl.on_times(15.0).unwrap();

    let oracle = oracle_snap_times(&cfg, 60.0);
    // Channel A is on from each snap-back to the next snap-through.
    let (mut sum_a, mut sum_b) = (0.0, 0.0);
    let first = oracle.iter().position(|&t| t >= 15.0).unwrap();
    let first = if first % 2 == 0 { first + 1 } else { first };
    let mut k = first;
    while k + 2 < oracle.len() {
        sum_a += oracle[k + 1] - oracle[k];
        sum_b += oracle[k + 2] - oracle[k + 1];
        k += 2;
    }
    let ratio = on_a / on_b;
    let expected = sum_a / sum_b;
    assert!(
        (ratio - expected).abs() < 2e-3,
        "duty ratio {ratio} vs {expected}"
    );
    // The slower actuator holds its pattern longer.
    assert!(on_b > on_a);
}

#[test]
fn symmetric_duty_is_half() {
    let (trace, _) = run(&OscillatorConfig::paper(0.6), 60.0, 1e-3).unwrap();
    let duty = export_pattern_timeline(&trace).duty_cycle(15.0).unwrap();
    assert!((duty - 0.5).abs() < 0.01, "duty {duty}");
}

#[test]
fn runs_are_bit_identical() {
    let cfg = asymmetric(0.59).with_snap_duration(0.1);
    let (a, sa) = run(&cfg, 30.0, 1e-3).unwrap();
    let (b, sb) = run(&cfg, 30.0, 1e-3).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
}

#[test]
fn temperatures_stay_between_ambient_and_powered_rise() {
    for current in [0.5, 0.6, 1.0] {
        let cfg = asymmetric(current);
        let (trace, _) = run(&cfg, 40.0, 1e-3).unwrap();
        let amb = cfg.env.ambient;
        let top1 = amb + equilibrium_temperature_rise(current, &cfg.actuator_1);
        let top2 = amb + equilibrium_temperature_rise(current, &cfg.actuator_2);
        for r in &trace.rows {
            assert!(
                r.t1 >= amb - 1e-12 && r.t1 <= top1 + 1e-9,
                "T1 {} at {}",
                r.t1,
                r.t
            );
            assert!(
                r.t2 >= amb - 1e-12 && r.t2 <= top2 + 1e-9,
                "T2 {} at {}",
                r.t2,
                r.t
            );
        }
    }
}

#[test]
fn switches_and_snaps_alternate_everywhere() {
    for cfg in [
        OscillatorConfig::paper(0.55),
        OscillatorConfig::paper(2.0),
        asymmetric(0.62).with_snap_duration(0.12),
    ] {
        let (trace, _) = run(&cfg, 30.0, 1e-3).unwrap();
        assert!(trace
            .rows
            .iter()
            .all(|r| r.switch_1_closed != r.switch_2_closed));
        assert!(trace.rows.iter().all(|r| (r.i1 == 0.0) != (r.i2 == 0.0)));
        let mut expect = Direction::Thru;
        for e in &trace.events {
            assert_eq!(e.direction, expect);
            expect = expect.reverse();
        }
    }
}

#[test]
fn snap_timing_ignores_interior_curve_shape() {
    // With a compliant actuator the snap is decided at the fold, so the
    // assumed interior shape changes only the displacement trajectory.
    let cfg = OscillatorConfig::paper(0.6);
    let base = run(&cfg, 40.0, 1e-3).unwrap().0;
    for frac in [0.2, 0.8] {
        let curve = BeamCurve::with_shape(&cfg.beam, frac).unwrap();
        let sim = Simulator::with_curve(cfg.clone(), curve);
        let (trace, _) = sim.run(&RunOptions::new(40.0, 1e-3)).unwrap();
        assert_eq!(trace.events.len(), base.events.len());
        for (a, b) in trace.events.iter().zip(&base.events) {
            assert!((a.t - b.t).abs() < 2e-6);
        }
        let differs = trace
            .rows
            .iter()
            .zip(&base.rows)
            .any(|(a, b)| (a.w - b.w).abs() > 1e-3);
        assert!(differs, "shape {frac} left the displacement unchanged");
    }
}

#[test]
fn summary_agrees_with_trace() {
    let (trace, summary) = run(&OscillatorConfig::paper(0.6), 60.0, 1e-3).unwrap();
    assert_eq!(summary.snap_count, trace.events.len());
    assert_eq!(summary.cycle_count, trace.events.len() / 2);
    assert_eq!(summary.mean_period, Some(measure_period(&trace).unwrap()));
    assert_eq!(summary.periods, cycle_periods(&trace.events, 3).unwrap());
    assert!(!summary.stalled);
}

#[test]
fn below_bound_stalls_short_of_fold() {
    let (trace, summary) = run(&OscillatorConfig::paper(0.5), 60.0, 1e-3).unwrap();
    assert!(trace.events.is_empty());
    assert!(summary.stalled);
    let w = summary.stall_position.unwrap();
    assert!(
        w > PAPER_B.w_rise && w < PAPER_B.w_snap_thru,
        "stall at {w}"
    );
}

#[test]
fn unpowered_beam_rests_at_stable_point() {
    let (trace, summary) = run(&OscillatorConfig::paper(0.0), 35.0, 1e-2).unwrap();
    assert!(trace.events.is_empty());
    assert!(trace.rows.iter().all(|r| r.w == PAPER_B.w_rise));
    assert!(summary.stalled);
}
