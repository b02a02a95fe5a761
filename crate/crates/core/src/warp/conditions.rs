//! Curvature conditions of the spacetime `I ×_f F`: Hubble sign, log-convexity,
//! the null convergence condition and the Einstein conditions.

use alloc::string::String;
use serde::Serialize;

use super::{Interval, WarpSpec};
use crate::fiber::FiberMesh;
use crate::math::abs;
use crate::{Error, Result};

/// Default number of dense samples for sign and supremum searches.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Slack under which a sampled quantity counts as zero in a verdict.
const VERDICT_TOL: f64 = 1e-12;
/// Relative tolerance for the Einstein verdicts.
const EINSTEIN_TOL: f64 = 1e-9;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    /// `f' ≡ 0` on every sample; both monotone cases apply.
    Zero,
    NonNegative,
    NonPositive,
    Mixed,
}

impl SignClass {
    pub fn allows_non_negative(self) -> bool {
        matches!(self, SignClass::Zero | SignClass::NonNegative)
    }

    pub fn allows_non_positive(self) -> bool {
        matches!(self, SignClass::Zero | SignClass::NonPositive)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub interval: Interval,
    pub samples: usize,
    pub min_fp: f64,
    pub max_fp: f64,
    pub class: SignClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogConvexity {
    StrictlyConvex,
    Convex,
    NotConvex,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogConvexityReport {
    pub interval: Interval,
    pub samples: usize,
    /// min and max of `(log f)''` over the interval.
    pub min: f64,
    pub max: f64,
    pub verdict: LogConvexity,
}

#[derive(Debug, Clone, Serialize)]
pub struct NccReport {
    pub interval: Interval,
    pub samples: usize,
    pub dim: usize,
    pub ricci_lower: f64,
    /// `sup f²(log f)''` over the interval and where it is attained.
    pub sup_density: f64,
    pub argsup: f64,
    /// `ricci_lower - (n-1) sup f²(log f)''`.
    pub margin: f64,
    pub holds: bool,
    /// Strict NCC: `Ric^F > (n-1) sup f²(log f)''`.
    pub strict: bool,
    /// False for `n = 1`, where the condition is vacuous and outside the theory.
    pub in_theory_dimension: bool,
}

/// Proportionality test of the warped-product Ricci tensor against the
/// metric, assembled in an orthonormal frame `(∂t, V₁…Vₙ)`.
#[derive(Debug, Clone, Serialize)]
pub struct EinsteinOracle {
    /// Range of `n f''/f`, the candidate ambient constant from `Ric(∂t,∂t) = -c̄`.
    pub cbar_min: f64,
    pub cbar_max: f64,
    /// `max |Ric(V,V) - c̄|` over the samples, for unit fiber directions `V`.
    pub max_residual: f64,
    pub einstein: bool,
    pub cbar: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EinsteinReport {
    pub interval: Interval,
    pub samples: usize,
    pub dim: usize,
    /// Fiber Ricci constant `c` with `Ric^F = c·g`.
    pub fiber_ricci: f64,
    /// `max |f''/f - c/n|`.
    pub first_identity_residual: f64,
    /// Range of `c̄ = n (c + (n-1) f'²) / ((n-1) f²)` from the second identity
    /// (`None` for `n = 1`).
    pub second_identity_cbar: Option<(f64, f64)>,
    /// `max |(n-1)(log f)'' - c/f²|`.
    pub log_identity_residual: f64,
    pub first_identity_holds: bool,
    pub second_identity_holds: bool,
    pub log_identity_holds: bool,
    pub oracle: EinsteinOracle,
    /// Whether the `(log f)''` identity and the oracle reach the same verdict.
    pub routes_agree: bool,
    /// Set when the first identity disagrees with the oracle verdict.
    pub discrepancy: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub warp: &'static str,
    pub fiber: &'static str,
    pub hubble_sign: SignReport,
    pub log_convexity: LogConvexityReport,
    pub ncc: NccReport,
    pub einstein: Option<EinsteinReport>,
}

fn check_interval(w: &WarpSpec, interval: &Interval) -> Result<()> {
    if !interval.is_bounded() || !(interval.lo < interval.hi) {
        return Err(Error::Config(alloc::format!(
            "condition interval must be bounded and non-empty, got ({}, {})",
            interval.lo,
            interval.hi
        )));
    }
    w.check(interval.lo)?;
    w.check(interval.hi)
}

/// Dense-sample the sign of `f'`.
pub fn classify_hubble_sign(w: &WarpSpec, interval: Interval, samples: usize) -> Result<SignReport> {
    check_interval(w, &interval)?;
    let (mut min_fp, mut max_fp) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in interval.samples(samples) {
        let fp = w.derivs_unchecked(t).1;
        min_fp = min_fp.min(fp);
        max_fp = max_fp.max(fp);
    }
    let class = match (min_fp >= 0.0, max_fp <= 0.0) {
        (true, true) => SignClass::Zero,
        (true, false) => SignClass::NonNegative,
        (false, true) => SignClass::NonPositive,
        (false, false) => SignClass::Mixed,
    };
    Ok(SignReport { interval, samples: samples.max(2), min_fp, max_fp, class })
}

/// Maximise `g` over the interval: dense sampling, then golden-section
/// refinement around the best sample.
fn sup_on<G: Fn(f64) -> f64>(interval: &Interval, samples: usize, g: G) -> (f64, f64) {
    let samples = samples.max(3);
    let step = (interval.hi - interval.lo) / (samples - 1) as f64;
    let (mut best_t, mut best) = (interval.lo, f64::NEG_INFINITY);
    for t in interval.samples(samples) {
        let v = g(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let mut a = (best_t - step).max(interval.lo);
    let mut b = (best_t + step).min(interval.hi);
    let ratio = 0.618_033_988_749_894_9;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    while b - a > GOLDEN_TOL {
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + ratio * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - ratio * (b - a);
            g1 = g(x1);
        }
    }
    for (t, v) in [(x1, g1), (x2, g2)] {
        if v > best {
            best = v;
            best_t = t;
        }
    }
    (best_t, best)
}

pub fn log_convexity(w: &WarpSpec, interval: Interval, samples: usize) -> Result<LogConvexityReport> {
    check_interval(w, &interval)?;
    let (_, max) = sup_on(&interval, samples, |t| w.log_second_unchecked(t));
    let (_, neg_min) = sup_on(&interval, samples, |t| -w.log_second_unchecked(t));
    let min = -neg_min;
    let verdict = if min > VERDICT_TOL {
        LogConvexity::StrictlyConvex
    } else if min >= -VERDICT_TOL {
        LogConvexity::Convex
    } else {
        LogConvexity::NotConvex
    };
    Ok(LogConvexityReport { interval, samples: samples.max(3), min, max, verdict })
}

/// NCC margin `ricci_lower - (n-1) sup f²(log f)''` for explicit fiber data.
pub fn ncc_margin_for(
    w: &WarpSpec,
    dim: usize,
    ricci_lower: f64,
    interval: Interval,
    samples: usize,
) -> Result<NccReport> {
    check_interval(w, &interval)?;
    let (argsup, sup_density) = sup_on(&interval, samples, |t| w.ncc_density_unchecked(t));
    let margin = ricci_lower - (dim as f64 - 1.0) * sup_density;
    Ok(NccReport {
        interval,
        samples: samples.max(3),
        dim,
        ricci_lower,
        sup_density,
        argsup,
        margin,
        holds: margin >= -VERDICT_TOL,
        strict: margin > VERDICT_TOL,
        in_theory_dimension: dim >= 2,
    })
}

pub fn ncc_margin(w: &WarpSpec, fiber: &FiberMesh, interval: Interval) -> Result<NccReport> {
    ncc_margin_for(w, fiber.dim(), fiber.ricci_lower(), interval, DEFAULT_SAMPLES)
}

/// Einstein conditions: the identities as printed and an independent
/// warped-product Ricci assembly, reported side by side.
pub fn einstein_check(
    w: &WarpSpec,
    fiber: &FiberMesh,
    interval: Interval,
    samples: usize,
) -> Result<EinsteinReport> {
    check_interval(w, &interval)?;
    let c = fiber.ricci_constant().ok_or_else(|| {
        Error::Unsupported("Einstein check needs a fiber with constant Ricci curvature".into())
    })?;
    let n = fiber.dim();
    let nf = n as f64;
    let samples = samples.max(2);

    let mut first_res: f64 = 0.0;
    let mut log_res: f64 = 0.0;
    let (mut c2_min, mut c2_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut cb_min, mut cb_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut scale: f64 = abs(c) / nf;
    let mut oracle_res: f64 = 0.0;

    for t in interval.samples(samples) {
        let (f, fp, fpp) = w.derivs_unchecked(t);
        let f2 = f * f;
        first_res = first_res.max(abs(fpp / f - c / nf));
        scale = scale.max(abs(fpp / f));
        if n >= 2 {
            let cb = nf * (c + (nf - 1.0) * fp * fp) / ((nf - 1.0) * f2);
            c2_min = c2_min.min(cb);
            c2_max = c2_max.max(cb);
        }
        log_res = log_res.max(abs((nf - 1.0) * w.log_second_unchecked(t) - c / f2));

        // Orthonormal frame: Ric(∂t,∂t) = -n f''/f must equal c̄ ḡ(∂t,∂t) = -c̄,
        // and Ric(V,V) = c/f² + f''/f + (n-1) f'²/f² must equal c̄ for unit fiber V.
        let cbar_t = nf * fpp / f;
        let fiber_dir = c / f2 + fpp / f + (nf - 1.0) * fp * fp / f2;
        cb_min = cb_min.min(cbar_t);
        cb_max = cb_max.max(cbar_t);
        oracle_res = oracle_res.max(abs(fiber_dir - cbar_t));
    }
    let tol = EINSTEIN_TOL * (1.0 + scale);
    let oracle_einstein = oracle_res <= tol && (cb_max - cb_min) <= tol;
    let oracle = EinsteinOracle {
        cbar_min: cb_min,
        cbar_max: cb_max,
        max_residual: oracle_res,
        einstein: oracle_einstein,
        cbar: oracle_einstein.then_some(0.5 * (cb_min + cb_max)),
    };
    let first_ok = first_res <= tol;
    let second = (n >= 2).then_some((c2_min, c2_max));
    let second_ok = second.is_none_or(|(lo, hi)| hi - lo <= tol * (1.0 + abs(hi)));
    let log_ok = log_res <= tol;
    let discrepancy = (first_ok != oracle.einstein).then(|| {
        alloc::format!(
            "first identity f''/f = c/n has residual {first_res:e} with c = {c}, \
             while the Ricci assembly reports einstein = {}",
            oracle.einstein
        )
    });
    Ok(EinsteinReport {
        interval,
        samples,
        dim: n,
        fiber_ricci: c,
        first_identity_residual: first_res,
        second_identity_cbar: second,
        log_identity_residual: log_res,
        first_identity_holds: first_ok,
        second_identity_holds: second_ok,
        log_identity_holds: log_ok,
        routes_agree: log_ok == oracle.einstein,
        oracle,
        discrepancy,
    })
}

/// Every condition evaluator over one interval.
pub fn conditions(w: &WarpSpec, fiber: &FiberMesh, interval: Interval) -> Result<ConditionReport> {
    let einstein = match fiber.ricci_constant() {
        Some(_) => Some(einstein_check(w, fiber, interval, DEFAULT_SAMPLES)?),
        None => None,
    };
    Ok(ConditionReport {
        warp: w.name(),
        fiber: fiber.backend().name(),
        hubble_sign: classify_hubble_sign(w, interval, DEFAULT_SAMPLES)?,
        log_convexity: log_convexity(w, interval, DEFAULT_SAMPLES)?,
        ncc: ncc_margin(w, fiber, interval)?,
        einstein,
    })
}
