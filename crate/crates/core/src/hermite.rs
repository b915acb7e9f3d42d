//! Monotone piecewise cubic Hermite interpolation (Fritsch–Carlson).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Interpolates `(xs, ys)` with tangents limited so that monotone data
    /// yields a monotone curve. `start_slope` / `end_slope` clamp the end
    /// tangents when given; otherwise one-sided secants are used.
    pub fn new(
        xs: &[f64],
        ys: &[f64],
        start_slope: Option<f64>,
        end_slope: Option<f64>,
    ) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::invalid("knots", "need at least two (x, y) pairs"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "knots",
                "abscissae must be strictly increasing",
            ));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::invalid("knots", "values must be finite"));
        }

        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();

        let mut m = vec![0.0; n];
        m[0] = start_slope.unwrap_or(secants[0]);
        m[n - 1] = end_slope.unwrap_or(secants[n - 2]);
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            m[i] = if a * b <= 0.0 { 0.0 } else { 0.5 * (a + b) };
        }

        // Fritsch–Carlson limiter: keep (alpha, beta) inside the circle of radius 3.
        for i in 0..n - 1 {
            let d = secants[i];
            if d == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let alpha = m[i] / d;
            let beta = m[i + 1] / d;
            if alpha < 0.0 {
                m[i] = 0.0;
            }
            if beta < 0.0 {
                m[i + 1] = 0.0;
            }
            let r2 = alpha * alpha + beta * beta;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                m[i] = tau * alpha * d;
                m[i + 1] = tau * beta * d;
            }
        }

        Ok(MonotoneCubic {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes: m,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn segment(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(last),
        }
    }

    /// Value at `x`; outside the domain the end cubic is extrapolated.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h
            + d10 * self.slopes[i]
            + d11 * self.slopes[i + 1]
    }
}
