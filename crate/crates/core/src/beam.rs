//! Force-displacement curve of the bistable beam.
//!
//! Only the critical triple of each snap direction is known, so each
//! equilibrium branch is a monotone cubic Hermite curve rising from zero at
//! the stable point to the critical force at the fold, with zero slope at
//! both ends. The unstable region between the folds is not represented.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::MonotoneCubic;
use crate::model::{BeamCharacteristics, Direction};
use crate::thermal::Side;

/// Equilibrium branch of the beam; branch `One` is stable state 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    One,
    Two,
}

impl Branch {
    pub fn other(self) -> Branch {
        match self {
            Branch::One => Branch::Two,
            Branch::Two => Branch::One,
        }
    }

    /// Snap direction that leaves this branch.
    pub fn exit_direction(self) -> Direction {
        match self {
            Branch::One => Direction::Thru,
            Branch::Two => Direction::Back,
        }
    }

    /// Side of the actuator that drives the beam off this branch.
    pub fn driving_side(self) -> Side {
        match self {
            Branch::One => Side::One,
            Branch::Two => Side::Two,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
        }
    }
}

/// Default force at mid-travel as a fraction of the critical force.
pub const DEFAULT_MID_FRACTION: f64 = 0.5;

/// One branch in the driving actuator's frame (`u = w` for branch 1, `u = -w`
/// for branch 2), parameterized by travel from the stable point.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCurve {
    /// Stable point, driving frame.
    pub stable: f64,
    /// Fold point, driving frame.
    pub fold: f64,
    pub critical_force: f64,
    spline: MonotoneCubic,
}

impl BranchCurve {
    fn new(stable: f64, fold: f64, critical_force: f64, mid_fraction: f64) -> Result<Self> {
        let span = (fold - stable).abs();
        let spline = MonotoneCubic::new(
            &[0.0, 0.5 * span, span],
            &[0.0, mid_fraction * critical_force, critical_force],
            Some(0.0),
            Some(0.0),
        )?;
        Ok(BranchCurve {
            stable,
            fold,
            critical_force,
            spline,
        })
    }

    /// +1 when travel towards the fold increases `u`.
    pub fn heading(&self) -> f64 {
        (self.fold - self.stable).signum()
    }

    pub fn span(&self) -> f64 {
        (self.fold - self.stable).abs()
    }

    pub fn travel(&self, u: f64) -> f64 {
        (u - self.stable) * self.heading()
    }

    pub fn at_travel(&self, d: f64) -> f64 {
        self.stable + d * self.heading()
    }

    /// Resisting force after travel `d` from the stable point; no domain check.
    pub fn force_at_travel(&self, d: f64) -> f64 {
        self.spline.eval(d.clamp(0.0, self.span()))
    }

    pub fn slope_at_travel(&self, d: f64) -> f64 {
        self.spline.derivative(d.clamp(0.0, self.span()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamCurve {
    pub characteristics: BeamCharacteristics,
    branch_1: BranchCurve,
    branch_2: BranchCurve,
}

/// Builds the default-shape curve for `beam`.
pub fn build_beam_curve(beam: &BeamCharacteristics) -> Result<BeamCurve> {
    BeamCurve::with_shape(beam, DEFAULT_MID_FRACTION)
}

/// Resisting force on `branch` at global displacement `w`.
pub fn beam_restoring_force(curve: &BeamCurve, branch: Branch, w: f64) -> Result<f64> {
    curve.restoring_force(branch, w)
}

impl BeamCurve {
    /// `mid_fraction` sets the force at mid-travel relative to the critical
    /// force and must lie in (0, 1).
    pub fn with_shape(beam: &BeamCharacteristics, mid_fraction: f64) -> Result<BeamCurve> {
        beam.validate()?;
        if !(mid_fraction > 0.0 && mid_fraction < 1.0) {
            return Err(Error::InvalidCharacteristics(format!(
                "mid-travel force fraction must lie in (0, 1), got {mid_fraction}"
            )));
        }
        let thru = beam.critical(Direction::Thru);
        let back = beam.critical(Direction::Back);
        Ok(BeamCurve {
            characteristics: *beam,
            branch_1: BranchCurve::new(thru.w_start, thru.w_crit, thru.force, mid_fraction)?,
            branch_2: BranchCurve::new(back.w_start, back.w_crit, back.force, mid_fraction)?,
        })
    }

    pub fn branch(&self, branch: Branch) -> &BranchCurve {
        match branch {
            Branch::One => &self.branch_1,
            Branch::Two => &self.branch_2,
        }
    }

    /// Global-frame domain `(min, max)` of `branch`.
    pub fn domain(&self, branch: Branch) -> (f64, f64) {
        let side = branch.driving_side();
        let b = self.branch(branch);
        let (a, z) = (side.frame(b.stable), side.frame(b.fold));
        (a.min(z), a.max(z))
    }

    /// Stable point of `branch` in global coordinates.
    pub fn stable_point(&self, branch: Branch) -> f64 {
        branch.driving_side().frame(self.branch(branch).stable)
    }

    /// Fold displacement of `branch` in global coordinates.
    pub fn fold_point(&self, branch: Branch) -> f64 {
        branch.driving_side().frame(self.branch(branch).fold)
    }

    /// Magnitude of the force resisting departure from the branch's stable
    /// point, N.
    pub fn restoring_force(&self, branch: Branch, w: f64) -> Result<f64> {
        let b = self.branch(branch);
        let d = b.travel(branch.driving_side().frame(w));
        let slack = 1e-12 * b.span().max(1.0);
        if !(d >= -slack && d <= b.span() + slack) {
            return Err(Error::OutOfBranch { w, branch });
        }
        Ok(b.force_at_travel(d))
    }

    /// Restoring force signed along the branch's driving direction in the
    /// global frame: positive on branch 1, negative on branch 2.
    pub fn signed_force(&self, branch: Branch, w: f64) -> Result<f64> {
        let f = self.restoring_force(branch, w)?;
        Ok(match branch {
            Branch::One => f,
            Branch::Two => -f,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper() -> BeamCurve {
        build_beam_curve(&BeamCharacteristics::PAPER).unwrap()
    }

    #[test]
    fn branch_endpoints() {
        let c = paper();
        assert_eq!(c.restoring_force(Branch::One, -2.12).unwrap(), 0.0);
        assert!((c.restoring_force(Branch::One, -0.89).unwrap() - 0.42).abs() < 1e-15);
        assert_eq!(c.restoring_force(Branch::Two, 2.12).unwrap(), 0.0);
        assert!((c.restoring_force(Branch::Two, 0.87).unwrap() - 0.42).abs() < 1e-15);
        assert_eq!(c.domain(Branch::One), (-2.12, -0.89));
        assert_eq!(c.domain(Branch::Two), (0.87, 2.12));
    }

    #[test]
    fn beyond_fold_is_out_of_branch() {
        let c = paper();
        assert!(matches!(
            c.restoring_force(Branch::One, -0.5),
            Err(Error::OutOfBranch { .. })
        ));
        assert!(c.restoring_force(Branch::Two, 0.5).is_err());
    }

    #[test]
    fn fold_has_zero_slope() {
        let c = paper();
        let h = 1e-7;
        let w = -0.89;
        let f0 = c.restoring_force(Branch::One, w).unwrap();
        let f1 = c.restoring_force(Branch::One, w - h).unwrap();
        assert!(((f0 - f1) / h).abs() < 1e-6);
        let w2 = 0.87;
        let g0 = c.restoring_force(Branch::Two, w2).unwrap();
        let g1 = c.restoring_force(Branch::Two, w2 + h).unwrap();
        assert!(((g0 - g1) / h).abs() < 1e-6);
    }

    #[test]
    fn strictly_monotone_on_fine_grid() {
        let c = paper();
        for branch in [Branch::One, Branch::Two] {
            let b = c.branch(branch);
            let mut prev = -1.0;
            for k in 0..=1000 {
                let d = b.span() * k as f64 / 1000.0;
                let f = b.force_at_travel(d);
                assert!(f > prev, "branch {branch:?} not increasing at step {k}");
                prev = f;
            }
        }
    }

    #[test]
    fn invalid_characteristics_rejected() {
        let bad = BeamCharacteristics::new(-2.12, -0.89, -0.87, 0.42);
        assert!(matches!(
            build_beam_curve(&bad),
            Err(Error::InvalidCharacteristics(_))
        ));
        assert!(BeamCurve::with_shape(&BeamCharacteristics::PAPER, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn mirrored_beam_is_odd(
            rise in 0.5f64..5.0,
            frac in 0.05f64..0.95,
            force in 0.01f64..2.0,
            shape in 0.1f64..0.9,
            x in 0.0f64..1.0,
        ) {
            let beam = BeamCharacteristics::mirrored(-rise, -rise * frac, force);
            let c = BeamCurve::with_shape(&beam, shape).unwrap();
            let (lo, hi) = c.domain(Branch::One);
            let w = lo + (hi - lo) * x;
            let s1 = c.signed_force(Branch::One, w).unwrap();
            let s2 = c.signed_force(Branch::Two, -w).unwrap();
            prop_assert_eq!(s2, -s1);
        }
    }
}
