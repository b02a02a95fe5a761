//! Warping functions `f: I → (0, ∞)` and the curvature conditions built
//! from them.

mod conditions;
mod spline;

use alloc::format;
use alloc::vec::Vec;
use serde::Serialize;

use crate::math::{abs, cosh, exp, sinh, tanh};
use crate::{Error, Result};

pub use conditions::{
    classify_hubble_sign, conditions, einstein_check, log_convexity, ncc_margin,
    ncc_margin_for, ConditionReport, EinsteinOracle, EinsteinReport, LogConvexity,
    LogConvexityReport, NccReport, SignClass, SignReport, DEFAULT_SAMPLES,
};
pub use spline::ClampedSpline;

/// An interval of times. Infinite bounds are allowed; finite bounds are
/// treated as attained (polynomial and tabulated warps are smooth up to
/// their bounds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Config(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && self.lo <= t && t <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `count ≥ 2` equally spaced points including both ends.
    pub fn samples(&self, count: usize) -> impl Iterator<Item = f64> + '_ {
        let count = count.max(2);
        let step = (self.hi - self.lo) / (count - 1) as f64;
        (0..count).map(move |k| if k + 1 == count { self.hi } else { self.lo + step * k as f64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WarpKind {
    /// `f ≡ value`.
    Constant { value: f64 },
    /// `f(t) = scale · exp(rate · t)`.
    Exponential { scale: f64, rate: f64 },
    /// `f(t) = cosh t` on the whole line (de Sitter).
    Cosh,
    /// `f(t) = Σ coeffs[k] tᵏ`.
    Polynomial { coeffs: Vec<f64> },
    /// Clamped cubic spline through tabulated samples.
    Tabulated {
        #[serde(skip)]
        spline: ClampedSpline,
    },
}

/// A warping function with its domain and the anchor of its primitive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpSpec {
    kind: WarpKind,
    domain: Interval,
    anchor: f64,
}

/// Number of points used to check positivity of polynomial and tabulated warps.
const POSITIVITY_SAMPLES: usize = 10_000;

impl WarpSpec {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("constant warp must be positive, got {value}")));
        }
        Ok(Self::with_kind(WarpKind::Constant { value }, Interval::REAL_LINE))
    }

    pub fn exponential(scale: f64, rate: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!(
                "exponential warp needs scale > 0 and finite rate, got ({scale}, {rate})"
            )));
        }
        Ok(Self::with_kind(WarpKind::Exponential { scale, rate }, Interval::REAL_LINE))
    }

    pub fn cosh() -> Self {
        Self::with_kind(WarpKind::Cosh, Interval::REAL_LINE)
    }

    /// Polynomial warp on a bounded domain; positivity is checked on a dense sample.
    pub fn polynomial(coeffs: Vec<f64>, domain: Interval) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("polynomial warp needs finite coefficients".into()));
        }
        if !domain.is_bounded() {
            return Err(Error::Config("polynomial warp needs a bounded domain".into()));
        }
        let w = Self::with_kind(WarpKind::Polynomial { coeffs }, domain);
        w.check_positive()?;
        Ok(w)
    }

    /// Tabulated warp on `[knots[0], knots[last]]`.
    pub fn tabulated(
        knots: Vec<f64>,
        values: Vec<f64>,
        start_slope: Option<f64>,
        end_slope: Option<f64>,
    ) -> Result<Self> {
        let spline = ClampedSpline::new(knots, values, start_slope, end_slope)?;
        let k = spline.knots();
        let domain = Interval::new(k[0], k[k.len() - 1])?;
        let w = Self::with_kind(WarpKind::Tabulated { spline }, domain);
        w.check_positive()?;
        Ok(w)
    }

    fn with_kind(kind: WarpKind, domain: Interval) -> Self {
        let anchor = default_anchor(&domain);
        Self { kind, domain, anchor }
    }

    fn check_positive(&self) -> Result<()> {
        for t in self.domain.samples(POSITIVITY_SAMPLES) {
            let (f, fp, fpp) = self.derivs_unchecked(t);
            if !(f > 0.0) || !fp.is_finite() || !fpp.is_finite() {
                return Err(Error::Config(format!("warp is not positive and finite at t = {t} (f = {f})")));
            }
        }
        Ok(())
    }

    /// Override the anchor `t*` of the primitive.
    pub fn with_anchor(mut self, anchor: f64) -> Result<Self> {
        self.check(anchor)?;
        self.anchor = anchor;
        Ok(self)
    }

    pub fn kind(&self) -> &WarpKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            WarpKind::Constant { .. } => "constant",
            WarpKind::Exponential { .. } => "exponential",
            WarpKind::Cosh => "cosh",
            WarpKind::Polynomial { .. } => "polynomial",
            WarpKind::Tabulated { .. } => "tabulated",
        }
    }

    #[inline]
    pub fn check(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain { t, lo: self.domain.lo, hi: self.domain.hi })
        }
    }

    /// `(f, f', f'')` at `t` without the domain check.
    pub fn derivs_unchecked(&self, t: f64) -> (f64, f64, f64) {
        match &self.kind {
            WarpKind::Constant { value } => (*value, 0.0, 0.0),
            WarpKind::Exponential { scale, rate } => {
                let e = scale * exp(rate * t);
                (e, rate * e, rate * rate * e)
            }
            WarpKind::Cosh => {
                let c = cosh(t);
                (c, sinh(t), c)
            }
            WarpKind::Polynomial { coeffs } => horner(coeffs, t),
            WarpKind::Tabulated { spline } => spline.eval(t),
        }
    }

    pub fn derivs(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.check(t)?;
        Ok(self.derivs_unchecked(t))
    }

    pub fn eval_f(&self, t: f64) -> Result<f64> {
        Ok(self.derivs(t)?.0)
    }

    pub fn eval_fp(&self, t: f64) -> Result<f64> {
        Ok(self.derivs(t)?.1)
    }

    pub fn eval_fpp(&self, t: f64) -> Result<f64> {
        Ok(self.derivs(t)?.2)
    }

    /// Hubble function `f'/f`.
    pub fn hubble(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.hubble_unchecked(t))
    }

    #[inline]
    pub fn hubble_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            WarpKind::Constant { .. } => 0.0,
            WarpKind::Exponential { rate, .. } => *rate,
            WarpKind::Cosh => tanh(t),
            _ => {
                let (f, fp, _) = self.derivs_unchecked(t);
                fp / f
            }
        }
    }

    /// `f²(log f)'' = f f'' - f'²`, in closed form for the analytic kinds.
    pub fn ncc_density_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            WarpKind::Constant { .. } | WarpKind::Exponential { .. } => 0.0,
            WarpKind::Cosh => 1.0,
            _ => {
                let (f, fp, fpp) = self.derivs_unchecked(t);
                f * fpp - fp * fp
            }
        }
    }

    /// `(log f)''`.
    pub fn log_second_derivative(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.log_second_unchecked(t))
    }

    pub(crate) fn log_second_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            WarpKind::Constant { .. } | WarpKind::Exponential { .. } => 0.0,
            WarpKind::Cosh => {
                let c = cosh(t);
                1.0 / (c * c)
            }
            _ => {
                let f = self.derivs_unchecked(t).0;
                self.ncc_density_unchecked(t) / (f * f)
            }
        }
    }

    /// Primitive `𝓕(t) = ∫_{t*}^{t} f(s) ds`.
    pub fn primitive(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.primitive_unchecked(t))
    }

    pub fn primitive_unchecked(&self, t: f64) -> f64 {
        let a = self.anchor;
        match &self.kind {
            WarpKind::Constant { value } => value * (t - a),
            WarpKind::Exponential { scale, rate } => {
                if *rate == 0.0 {
                    scale * (t - a)
                } else {
                    scale / rate * (exp(rate * t) - exp(rate * a))
                }
            }
            WarpKind::Cosh => sinh(t) - sinh(a),
            WarpKind::Polynomial { coeffs } => poly_antiderivative(coeffs, t) - poly_antiderivative(coeffs, a),
            WarpKind::Tabulated { spline } => {
                // Simpson is exact on each cubic piece, so integrate knot to knot.
                let (lo, hi, sign) = if t >= a { (a, t, 1.0) } else { (t, a, -1.0) };
                let mut total = crate::sum::CompensatedSum::new();
                let mut left = lo;
                for &k in spline.knots() {
                    if k > left && k < hi {
                        total.add(adaptive_simpson(&|s| spline.eval(s).0, left, k, 1e-13));
                        left = k;
                    }
                }
                total.add(adaptive_simpson(&|s| spline.eval(s).0, left, hi, 1e-13));
                sign * total.value()
            }
        }
    }
}

/// Anchor `t* = 0` when `0 ∈ I`, otherwise the midpoint (or one unit inside
/// a half-line).
fn default_anchor(domain: &Interval) -> f64 {
    if domain.contains(0.0) {
        0.0
    } else if domain.is_bounded() {
        0.5 * (domain.lo + domain.hi)
    } else if domain.lo.is_finite() {
        domain.lo + 1.0
    } else {
        domain.hi - 1.0
    }
}

fn horner(coeffs: &[f64], t: f64) -> (f64, f64, f64) {
    let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        ddp = ddp * t + 2.0 * dp;
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp, ddp)
}

fn poly_antiderivative(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * t + c / (k + 1) as f64;
    }
    acc * t
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || abs(delta) <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
