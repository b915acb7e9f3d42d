//! Fitting the actuator's thermal mass and conductivity to period-vs-current
//! measurements, and single-point conductivity inversion.
//!
//! The fit is a damped Gauss–Newton (Levenberg–Marquardt) iteration on
//! `(ln C_th, ln λ)` with centrally differenced sensitivities, so both
//! parameters stay positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pull_time, snap_force_budget, ActuatorParams, BeamCharacteristics, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodPoint {
    /// A
    pub current: f64,
    /// s
    pub period: f64,
    pub weight: f64,
}

impl PeriodPoint {
    pub fn new(current: f64, period: f64) -> Self {
        PeriodPoint {
            current,
            period,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodDataset {
    pub points: Vec<PeriodPoint>,
}

impl PeriodDataset {
    pub fn new(points: Vec<PeriodPoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.current.is_finite() && p.current > 0.0) {
                return Err(Error::invalid(
                    format!("rows[{i}].current_A"),
                    "must be > 0",
                ));
            }
            if !(p.period.is_finite() && p.period > 0.0) {
                return Err(Error::invalid(format!("rows[{i}].period_s"), "must be > 0"));
            }
            if !(p.weight.is_finite() && p.weight > 0.0) {
                return Err(Error::invalid(format!("rows[{i}].weight"), "must be > 0"));
            }
        }
        Ok(PeriodDataset { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distinct_currents(&self) -> usize {
        let mut cs: Vec<f64> = self.points.iter().map(|p| p.current).collect();
        cs.sort_by(f64::total_cmp);
        cs.dedup();
        cs.len()
    }

    fn max_period(&self) -> f64 {
        self.points.iter().map(|p| p.period).fold(0.0, f64::max)
    }
}

/// The two fitted thermal constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// W·s/°C
    pub thermal_mass: f64,
    /// W/°C
    pub conductivity: f64,
}

impl ThermalParams {
    pub const PAPER: ThermalParams = ThermalParams {
        thermal_mass: 2.99e-2,
        conductivity: 2.31e-2,
    };

    pub fn new(thermal_mass: f64, conductivity: f64) -> Self {
        ThermalParams {
            thermal_mass,
            conductivity,
        }
    }

    pub fn apply(&self, act: &ActuatorParams) -> ActuatorParams {
        ActuatorParams {
            thermal_mass: self.thermal_mass,
            conductivity: self.conductivity,
            ..*act
        }
    }

    fn to_log(self) -> [f64; 2] {
        [self.thermal_mass.ln(), self.conductivity.ln()]
    }

    fn from_log(p: [f64; 2]) -> Self {
        ThermalParams::new(p[0].exp(), p[1].exp())
    }
}

/// Penalty cap as a multiple of the largest observed period.
pub const PENALTY_FACTOR: f64 = 10.0;

/// Model period `2 (T_pull + T_snap)`, `None` at or below the current bound.
fn model_period(
    current: f64,
    theta: &ThermalParams,
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
    snap_duration: f64,
) -> Option<f64> {
    let a = theta.apply(act);
    pull_time(current, beam, &a, Direction::Thru)
        .ok()
        .map(|t| 2.0 * (t + snap_duration))
}

/// Exact below `cap / 2`, then saturates smoothly (C¹) towards `cap`.
fn capped(excess: Option<f64>, cap: f64) -> f64 {
    let knee = 0.5 * cap;
    match excess {
        None => cap,
        Some(x) if x <= knee => x,
        Some(x) => knee + knee * ((x - knee) / knee).tanh(),
    }
}

/// Weighted residuals `sqrt(w_j) (T_model(I_j) - T_obs,j)`. Points at or below
/// the current bound under `theta` get a finite penalty instead.
/// `snap_duration` of zero leaves the snap dwell out of the forward model.
pub fn model_residuals(
    theta: &ThermalParams,
    dataset: &PeriodDataset,
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
    snap_duration: f64,
) -> Vec<f64> {
    let cap = PENALTY_FACTOR * dataset.max_period();
    dataset
        .points
        .iter()
        .map(|p| {
            let excess =
                model_period(p.current, theta, beam, act, snap_duration).map(|m| m - p.period);
            p.weight.sqrt() * capped(excess, cap)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence on the log-parameter step.
    pub step_tolerance: f64,
    /// Convergence on the gradient of `½ |r|²` in log-parameters.
    pub gradient_tolerance: f64,
    /// Snap dwell added to the forward model, s; zero excludes it.
    pub snap_duration: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
            snap_duration: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// W·s/°C
    pub thermal_mass: f64,
    /// W/°C
    pub conductivity: f64,
    pub rss: f64,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl FitResult {
    pub fn params(&self) -> ThermalParams {
        ThermalParams::new(self.thermal_mass, self.conductivity)
    }
}

struct Problem<'a> {
    dataset: &'a PeriodDataset,
    beam: &'a BeamCharacteristics,
    act: &'a ActuatorParams,
    snap_duration: f64,
}

impl Problem<'_> {
    fn residuals(&self, p: [f64; 2]) -> Vec<f64> {
        model_residuals(
            &ThermalParams::from_log(p),
            self.dataset,
            self.beam,
            self.act,
            self.snap_duration,
        )
    }

    /// Central differences with one Richardson extrapolation step.
    fn jacobian(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let n = self.dataset.len();
        let mut jac = vec![[0.0; 2]; n];
        for k in 0..2 {
            let diff = |h: f64| {
                let (mut up, mut down) = (p, p);
                up[k] += h;
                down[k] -= h;
                let (ru, rd) = (self.residuals(up), self.residuals(down));
                ru.iter()
                    .zip(&rd)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect::<Vec<_>>()
            };
            let h = 1e-4;
            let coarse = diff(h);
            let fine = diff(0.5 * h);
            for j in 0..n {
                jac[j][k] = (4.0 * fine[j] - coarse[j]) / 3.0;
            }
        }
        jac
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn gradient(jac: &[[f64; 2]], r: &[f64]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (row, ri) in jac.iter().zip(r) {
        g[0] += row[0] * ri;
        g[1] += row[1] * ri;
    }
    g
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Coefficient of determination of weighted residuals against the weighted
/// spread of the observations.
pub fn r_squared(dataset: &PeriodDataset, residuals: &[f64]) -> f64 {
    let wsum: f64 = dataset.points.iter().map(|p| p.weight).sum();
    let mean = dataset
        .points
        .iter()
        .map(|p| p.weight * p.period)
        .sum::<f64>()
        / wsum;
    let tss: f64 = dataset
        .points
        .iter()
        .map(|p| p.weight * (p.period - mean).powi(2))
        .sum();
    1.0 - sum_sq(residuals) / tss
}

/// Thermal mass minimizing the residuals over feasible points at fixed `λ`;
/// the pull time is proportional to `C_th`, so this is a linear problem.
fn best_thermal_mass(problem: &Problem<'_>, theta: ThermalParams) -> Option<f64> {
    let unit = ThermalParams::new(1.0, theta.conductivity);
    let (mut num, mut den) = (0.0, 0.0);
    for pt in &problem.dataset.points {
        let Some(a) = model_period(pt.current, &unit, problem.beam, problem.act, 0.0) else {
            continue;
        };
        let target = pt.period - 2.0 * problem.snap_duration;
        num += pt.weight * a * target;
        den += pt.weight * a * a;
    }
    let c = num / den;
    (c.is_finite() && c > 0.0).then_some(c)
}

/// Least-squares fit of `(C_th, λ)` to `dataset`, starting from `init`.
/// Other actuator constants are taken from `act`.
pub fn fit_thermal_params(
    dataset: &PeriodDataset,
    init: ThermalParams,
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
    options: &FitOptions,
) -> Result<FitResult> {
    if !(init.thermal_mass > 0.0 && init.conductivity > 0.0)
        || !init.thermal_mass.is_finite()
        || !init.conductivity.is_finite()
    {
        return Err(Error::invalid(
            "init",
            "initial guesses must be finite and > 0",
        ));
    }
    if dataset.distinct_currents() < 2 {
        return Err(Error::DegenerateDataset(format!(
            "{} distinct current(s); a two-parameter fit needs at least 2",
            dataset.distinct_currents()
        )));
    }
    let budget = snap_force_budget(beam, act, Direction::Thru);
    if !(budget > 0.0) {
        return Err(Error::DegenerateDataset(
            "snap force budget is not positive; the period does not depend on the current".into(),
        ));
    }

    let problem = Problem {
        dataset,
        beam,
        act,
        snap_duration: options.snap_duration,
    };

    let mut theta = init;
    // Move an all-infeasible start just inside the bound of the largest current.
    let i_max = dataset.points.iter().map(|p| p.current).fold(0.0, f64::max);
    let lambda_bound = act.thermal_coeff * act.resistance * i_max * i_max / budget;
    if theta.conductivity >= lambda_bound {
        let scale = 0.5 * lambda_bound / theta.conductivity;
        theta = ThermalParams::new(theta.thermal_mass * scale, theta.conductivity * scale);
    }

    theta.thermal_mass = best_thermal_mass(&problem, theta).unwrap_or(theta.thermal_mass);

    let mut p = theta.to_log();
    let mut r = problem.residuals(p);
    let mut cost = sum_sq(&r);
    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;

    while iterations < options.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(p);
        let g = gradient(&jac, &r);
        grad_norm = norm(g);
        if grad_norm < options.gradient_tolerance {
            converged = true;
            break;
        }
        let mut a = [[0.0; 2]; 2];
        for row in &jac {
            a[0][0] += row[0] * row[0];
            a[0][1] += row[0] * row[1];
            a[1][1] += row[1] * row[1];
        }
        a[1][0] = a[0][1];
        let floor = 1e-12 * a[0][0].max(a[1][1]).max(f64::MIN_POSITIVE);
        let diag = [a[0][0].max(floor), a[1][1].max(floor)];

        let mut accepted = None;
        while damping < 1e16 {
            let m00 = a[0][0] + damping * diag[0];
            let m11 = a[1][1] + damping * diag[1];
            let m01 = a[0][1];
            let det = m00 * m11 - m01 * m01;
            if det.is_finite() && det > 0.0 {
                let step = [
                    -(m11 * g[0] - m01 * g[1]) / det,
                    -(m00 * g[1] - m01 * g[0]) / det,
                ];
                let trial = [p[0] + step[0], p[1] + step[1]];
                let r_trial = problem.residuals(trial);
                let c_trial = sum_sq(&r_trial);
                if c_trial.is_finite() && c_trial <= cost {
                    accepted = Some((step, trial, r_trial, c_trial));
                    damping = (damping * 0.3).max(1e-15);
                    break;
                }
            }
            damping *= 4.0;
        }

        match accepted {
            Some((step, trial, r_trial, c_trial)) => {
                p = trial;
                r = r_trial;
                cost = c_trial;
                if norm(step) < options.step_tolerance {
                    let g = gradient(&problem.jacobian(p), &r);
                    grad_norm = norm(g);
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent direction left at machine precision.
                converged = grad_norm < options.gradient_tolerance.sqrt();
                break;
            }
        }
    }

    let theta = ThermalParams::from_log(p);
    Ok(FitResult {
        thermal_mass: theta.thermal_mass,
        conductivity: theta.conductivity,
        rss: cost,
        r_squared: r_squared(dataset, &r),
        residuals: r,
        converged,
        iterations,
        gradient_norm: grad_norm,
    })
}

/// Conductivity that reproduces a single `(current, period)` observation
/// given the thermal mass (snap dwell neglected).
pub fn infer_conductivity(
    current: f64,
    period: f64,
    thermal_mass: f64,
    beam: &BeamCharacteristics,
    act: &ActuatorParams,
) -> Result<f64> {
    if !(current > 0.0 && period > 0.0 && thermal_mass > 0.0) {
        return Err(Error::invalid(
            "point",
            "current, period and thermal mass must be > 0",
        ));
    }
    let budget = snap_force_budget(beam, act, Direction::Thru);
    if !(budget > 0.0) {
        return Err(Error::Infeasible(
            "snap force budget is not positive".into(),
        ));
    }
    let half = 0.5 * period;
    let heating = current * current * act.resistance;
    let zero_lambda_limit = thermal_mass * budget / (act.thermal_coeff * heating);
    if !(half > zero_lambda_limit) {
        return Err(Error::Infeasible(format!(
            "half period {half} s is not above the zero-conductivity pull time {zero_lambda_limit} s at {current} A"
        )));
    }
    let lambda_max = act.thermal_coeff * heating / budget;
    let pull = |lambda: f64| {
        let a = ThermalParams::new(thermal_mass, lambda).apply(act);
        pull_time(current, beam, &a, Direction::Thru).unwrap_or(f64::INFINITY)
    };

    // Pull time rises monotonically from the zero-λ limit to +∞ at lambda_max.
    let mut lo = 0.0;
    let mut hi = lambda_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if pull(mid) < half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ActuatorParams = ActuatorParams::PAPER;
    const B: BeamCharacteristics = BeamCharacteristics::PAPER;

    pub(crate) fn synthetic(theta: &ThermalParams, currents: &[f64]) -> PeriodDataset {
        let pts = currents
            .iter()
            .map(|&i| PeriodPoint::new(i, model_period(i, theta, &B, &A, 0.0).unwrap()))
            .collect();
        PeriodDataset::new(pts).unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..10)
            .map(|k| 0.545 + (0.63 - 0.545) * k as f64 / 9.0)
            .collect()
    }

    #[test]
    fn residuals_vanish_on_generating_params() {
        let ds = synthetic(&ThermalParams::PAPER, &grid());
        let r = model_residuals(&ThermalParams::PAPER, &ds, &B, &A, 0.0);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn doubled_conductivity_shifts_residuals_consistently() {
        let ds = synthetic(&ThermalParams::PAPER, &grid());
        let theta = ThermalParams::new(0.0299, 2.0 * 0.0231);
        let r = model_residuals(&theta, &ds, &B, &A, 0.0);
        assert!(r.iter().all(|x| *x != 0.0));
        // doubling λ pushes every data current below the new bound
        let cap = PENALTY_FACTOR * ds.max_period();
        assert!(r.iter().all(|x| *x > 0.0 && *x <= cap));
    }

    #[test]
    fn single_point_forward_residual() {
        let ds = PeriodDataset::new(vec![PeriodPoint::new(0.60, 4.254993785631818)]).unwrap();
        let r = model_residuals(&ThermalParams::PAPER, &ds, &B, &A, 0.0);
        assert!(r[0].abs() < 1e-9);
    }

    #[test]
    fn penalty_is_continuous_at_the_knee() {
        let cap = 10.0;
        let below = capped(Some(5.0 - 1e-9), cap);
        let above = capped(Some(5.0 + 1e-9), cap);
        assert!((above - below).abs() < 1e-8);
        assert_eq!(capped(None, cap), cap);
        assert!(capped(Some(1e6), cap) <= cap);
    }

    #[test]
    fn noiseless_fit_recovers_params() {
        let ds = synthetic(&ThermalParams::PAPER, &grid());
        let fit = fit_thermal_params(
            &ds,
            ThermalParams::new(0.01, 0.01),
            &B,
            &A,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged);
        assert!((fit.thermal_mass / 0.0299 - 1.0).abs() < 1e-3);
        assert!((fit.conductivity / 0.0231 - 1.0).abs() < 1e-3);
        assert!(fit.r_squared <= 1.0);
    }

    #[test]
    fn single_current_dataset_is_degenerate() {
        let ds = PeriodDataset::new(vec![PeriodPoint::new(0.40, 5.0); 4]).unwrap();
        let err = fit_thermal_params(
            &ds,
            ThermalParams::new(0.01, 0.01),
            &B,
            &A,
            &FitOptions::default(),
        );
        assert!(matches!(err, Err(Error::DegenerateDataset(_))));
    }

    #[test]
    fn dataset_validation() {
        assert!(PeriodDataset::new(vec![PeriodPoint::new(-0.1, 1.0)]).is_err());
        assert!(PeriodDataset::new(vec![PeriodPoint::new(0.6, 0.0)]).is_err());
    }

    #[test]
    fn conductivity_round_trip() {
        let lambda = infer_conductivity(0.60, 4.254993785631818, 0.0299, &B, &A).unwrap();
        assert!((lambda - 0.0231).abs() < 1e-6);
    }

    #[test]
    fn underwater_conductivity() {
        let lambda = infer_conductivity(1.58, 1.21, 0.0299, &B, &A).unwrap();
        assert!((lambda - 0.19470).abs() < 1e-4, "{lambda}");
        let fwd = 2.0
            * pull_time(
                1.58,
                &B,
                &ThermalParams::new(0.0299, lambda).apply(&A),
                Direction::Thru,
            )
            .unwrap();
        assert!((fwd - 1.21).abs() / 1.21 < 1e-6);
    }

    #[test]
    fn too_short_period_is_infeasible() {
        assert!(matches!(
            infer_conductivity(1.58, 0.10, 0.0299, &B, &A),
            Err(Error::Infeasible(_))
        ));
        // the zero-conductivity bound of the half period is ~0.1506 s
        assert!(infer_conductivity(1.58, 2.0 * 0.1505, 0.0299, &B, &A).is_err());
        assert!(infer_conductivity(1.58, 2.0 * 0.1507, 0.0299, &B, &A).is_ok());
    }
}
