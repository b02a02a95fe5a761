//! Clamped cubic spline used by tabulated warping functions.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClampedSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl ClampedSpline {
    /// Build the spline through `(knots[i], values[i])` with prescribed end
    /// slopes. When a slope is `None` it is estimated from the three
    /// nearest samples by a one-sided second-order difference.
    pub fn new(
        knots: Vec<f64>,
        values: Vec<f64>,
        start_slope: Option<f64>,
        end_slope: Option<f64>,
    ) -> Result<Self> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(Error::Config(format!(
                "tabulated warp needs at least 3 knots with matching values, got {} knots and {} values",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("tabulated knots must be strictly increasing".into()));
        }
        if let Some(i) = knots.iter().chain(&values).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i % n });
        }
        let s0 = start_slope.unwrap_or_else(|| one_sided(&knots[..3], &values[..3], 0));
        let sn = end_slope.unwrap_or_else(|| one_sided(&knots[n - 3..], &values[n - 3..], 2));
        let moments = clamped_moments(&knots, &values, s0, sn);
        Ok(Self { knots, values, moments })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and first two derivatives at `t` (which must lie within the knots).
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let f = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let fp = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let fpp = a * m0 + b * m1;
        (f, fp, fpp)
    }
}

/// Derivative of the quadratic through three points, evaluated at point `at`.
fn one_sided(t: &[f64], y: &[f64], at: usize) -> f64 {
    let x = t[at];
    let l0 = ((x - t[1]) + (x - t[2])) / ((t[0] - t[1]) * (t[0] - t[2]));
    let l1 = ((x - t[0]) + (x - t[2])) / ((t[1] - t[0]) * (t[1] - t[2]));
    let l2 = ((x - t[0]) + (x - t[1])) / ((t[2] - t[0]) * (t[2] - t[1]));
    l0 * y[0] + l1 * y[1] + l2 * y[2]
}

/// Solve the clamped-spline tridiagonal system for the knot moments.
fn clamped_moments(t: &[f64], y: &[f64], s0: f64, sn: f64) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sub = alloc::vec![0.0; n];
    let mut diag = alloc::vec![0.0; n];
    let mut sup = alloc::vec![0.0; n];
    let mut rhs = alloc::vec![0.0; n];
    diag[0] = h[0] / 3.0;
    sup[0] = h[0] / 6.0;
    rhs[0] = (y[1] - y[0]) / h[0] - s0;
    for i in 1..n - 1 {
        sub[i] = h[i - 1] / 6.0;
        diag[i] = (h[i - 1] + h[i]) / 3.0;
        sup[i] = h[i] / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1];
    }
    sub[n - 1] = h[n - 2] / 6.0;
    diag[n - 1] = h[n - 2] / 3.0;
    rhs[n - 1] = sn - (y[n - 1] - y[n - 2]) / h[n - 2];
    crate::linalg::solve_tridiagonal(&sub, &diag, &sup, &rhs)
}
