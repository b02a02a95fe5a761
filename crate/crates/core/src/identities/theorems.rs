//! Hypothesis checks of the uniqueness theorems on a discrete graph.
//!
//! Pointwise hypotheses are evaluated at every vertex with tolerance
//! [`HYPOTHESIS_TOL`]. Curvature conditions on the spacetime are evaluated
//! over the range `u(F)` of the graph, which is where the proofs use them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::fiber::Backend;
use crate::graph::{schwarz_defect, shape_operator, GraphFunction, MeanCurvatureForm};
use crate::math::abs;
use crate::warp::{einstein_check, log_convexity, ncc_margin, Interval, LogConvexity, WarpKind, DEFAULT_SAMPLES};
use crate::Result;

/// Pointwise slack of every hypothesis check.
pub const HYPOTHESIS_TOL: f64 = 1e-9;
/// A graph is observed to be a slice when `osc u ≤ CONSTANCY_RELATIVE·(1 + |mean u|)`.
pub const CONSTANCY_RELATIVE: f64 = 1e-6;
/// A graph is observed to be umbilic when `max(tr A² - nH²)` is below this.
pub const UMBILIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremTag {
    /// Slices are the only hypersurfaces with `H ≤ f'/f`, `f' ≤ 0` (or both reversed).
    Thm3_1,
    /// Non-contracting and `H ≤ 0` (or reversed): totally geodesic slices.
    Prop3_5,
    /// Higher order mean curvature version; needs `n ≥ 3`.
    Thm3_7,
    /// de Sitter with `τ ≤ 0`, `H ≤ tanh τ` (or reversed).
    Prop4_1,
    /// de Sitter with `τ ≥ 0`, `H ≤ 0` (or reversed): the slice `{0} × Sⁿ`.
    Prop4_2,
    /// Einstein spacetime, `H = f'/f`, `c ≥ 0`: umbilic; slice when `c > 0`.
    Thm4_2,
    /// de Sitter with `H = tanh τ`: slices.
    Cor4_3,
    /// NCC and `(log f)'' ≥ 0` with `H = f'/f` (or `H = φ(τ)`, `φ` increasing).
    Thm5_2,
}

impl TheoremTag {
    pub fn label(self) -> &'static str {
        match self {
            TheoremTag::Thm3_1 => "Thm3.1",
            TheoremTag::Prop3_5 => "Prop3.5",
            TheoremTag::Thm3_7 => "Thm3.7",
            TheoremTag::Prop4_1 => "Prop4.1",
            TheoremTag::Prop4_2 => "Prop4.2",
            TheoremTag::Thm4_2 => "Thm4.2",
            TheoremTag::Cor4_3 => "Cor4.3",
            TheoremTag::Thm5_2 => "Thm5.2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    Slice,
    TotallyUmbilic,
    TotallyGeodesicSlice,
    NoPrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    /// Vertex with the largest violation (or the tightest value).
    pub witness_vertex: Option<usize>,
    pub witness_value: Option<f64>,
}

impl HypothesisCheck {
    fn global(name: impl Into<String>, holds: bool, value: Option<f64>) -> Self {
        Self { name: name.into(), holds, witness_vertex: None, witness_value: value }
    }

    /// `g(v) ≤ tol` at every vertex; the witness is the maximiser of `g`.
    fn pointwise_le<G: Fn(usize) -> f64>(name: impl Into<String>, count: usize, g: G) -> Self {
        let mut worst = (0, f64::NEG_INFINITY);
        for v in 0..count {
            let x = g(v);
            if x > worst.1 || x.is_nan() {
                worst = (v, x);
            }
        }
        Self {
            name: name.into(),
            holds: worst.1 <= HYPOTHESIS_TOL,
            witness_vertex: (count > 0).then_some(worst.0),
            witness_value: (count > 0).then_some(worst.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observed {
    pub oscillation: f64,
    pub slice: bool,
    /// `max (tr A² - nH²)`, available on grid backends.
    pub umbilicity_defect: Option<f64>,
    pub umbilic: Option<bool>,
    /// `|f'/f| ≤ UMBILIC_TOL` at the mean level, so a slice there is totally geodesic.
    pub totally_geodesic_level: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub theorem: &'static str,
    #[serde(skip)]
    pub tag: TheoremTag,
    /// Name of the hypothesis branch that was evaluated (`""` for single-branch
    /// results).
    pub branch: &'static str,
    pub hypotheses: Vec<HypothesisCheck>,
    pub hypotheses_hold: bool,
    pub predicted: Prediction,
    pub observed: Observed,
    /// The prediction is a slice (or umbilicity) and the observation disagrees.
    pub contradiction: bool,
    pub note: Option<String>,
}

/// Mean curvature prescription for the NCC theorem: `H = f'/f`, or
/// `H = φ(τ)` for a smooth increasing `φ`.
#[derive(Debug, Clone, Copy)]
pub enum Prescription {
    Hubble,
    Custom { name: &'static str, phi: fn(f64) -> f64, dphi: fn(f64) -> f64 },
}

pub fn classify_theorems(u: &GraphFunction<'_>) -> Result<Vec<TheoremVerdict>> {
    classify_theorems_with(u, &Prescription::Hubble)
}

struct Data {
    t: Vec<f64>,
    fp: Vec<f64>,
    h: Vec<f64>,
    r: Vec<f64>,
    range: Interval,
}

fn verdict(
    tag: TheoremTag,
    branch: &'static str,
    hypotheses: Vec<HypothesisCheck>,
    conclusion: Prediction,
    observed: Observed,
    note: Option<String>,
) -> TheoremVerdict {
    let hold = hypotheses.iter().all(|h| h.holds);
    let predicted = if hold { conclusion } else { Prediction::NoPrediction };
    let contradiction = match predicted {
        Prediction::Slice => !observed.slice,
        Prediction::TotallyGeodesicSlice => !(observed.slice && observed.totally_geodesic_level),
        Prediction::TotallyUmbilic => observed.umbilic == Some(false),
        Prediction::NoPrediction => false,
    };
    TheoremVerdict {
        theorem: tag.label(),
        tag,
        branch,
        hypotheses,
        hypotheses_hold: hold,
        predicted,
        observed,
        contradiction,
        note,
    }
}

/// Evaluate every theorem on `u`.
pub fn classify_theorems_with(u: &GraphFunction<'_>, prescription: &Prescription) -> Result<Vec<TheoremVerdict>> {
    let mesh = u.mesh();
    let warp = u.warp();
    let nv = u.values().len();
    let h = u.mean_curvature(MeanCurvatureForm::Weak)?;
    let fp: Vec<f64> = u.values().iter().map(|&t| warp.derivs_unchecked(t).1).collect();
    let r: Vec<f64> = u.values().iter().zip(&h).map(|(&t, hv)| hv - warp.hubble_unchecked(t)).collect();
    let range = hypersurface_range(u);
    let d = Data { t: u.values().to_vec(), fp, h, r, range };

    let osc = u.oscillation();
    let mean = u.mean();
    let defect = if mesh.backend().is_grid() {
        let shape = shape_operator(u)?;
        Some(shape.iter().map(|s| schwarz_defect(&s.shape, mesh.dim())).fold(0.0, f64::max))
    } else {
        None
    };
    let observed = Observed {
        oscillation: osc,
        slice: osc <= CONSTANCY_RELATIVE * (1.0 + abs(mean)),
        umbilicity_defect: defect,
        umbilic: defect.map(|x| x <= UMBILIC_TOL),
        totally_geodesic_level: abs(warp.hubble_unchecked(mean)) <= UMBILIC_TOL,
    };
    let dim_note = (!mesh.in_theory_dimension())
        .then(|| format!("fiber dimension n = {} is below the n ≥ 2 setting of the results", mesh.dim()));

    let mut out = Vec::new();

    // Thm 3.1, both branches.
    for (branch, sign) in [("H ≤ f'/f, f' ≤ 0", 1.0), ("H ≥ f'/f, f' ≥ 0", -1.0)] {
        let hyp = alloc::vec![
            HypothesisCheck::pointwise_le(if sign > 0.0 { "H - f'/f ≤ 0" } else { "H - f'/f ≥ 0" }, nv, |v| sign * d.r[v]),
            HypothesisCheck::pointwise_le(if sign > 0.0 { "f'(u) ≤ 0" } else { "f'(u) ≥ 0" }, nv, |v| sign * d.fp[v]),
        ];
        out.push(verdict(TheoremTag::Thm3_1, branch, hyp, Prediction::Slice, observed, dim_note.clone()));
    }

    // Prop 3.5.
    for (branch, sign) in [("non-contracting, H ≤ 0", 1.0), ("non-expanding, H ≥ 0", -1.0)] {
        let hyp = alloc::vec![
            HypothesisCheck::pointwise_le(if sign > 0.0 { "f'(u) ≥ 0" } else { "f'(u) ≤ 0" }, nv, |v| -sign * d.fp[v]),
            HypothesisCheck::pointwise_le(if sign > 0.0 { "H ≤ 0" } else { "H ≥ 0" }, nv, |v| sign * d.h[v]),
        ];
        out.push(verdict(
            TheoremTag::Prop3_5,
            branch,
            hyp,
            Prediction::TotallyGeodesicSlice,
            observed,
            dim_note.clone(),
        ));
    }

    // Thm 3.7 needs H_{k+1} > 0 for some 2 ≤ k ≤ n - 1.
    out.push(verdict(
        TheoremTag::Thm3_7,
        "",
        alloc::vec![HypothesisCheck::global("n ≥ 3 (H_{k+1} > 0 for some 2 ≤ k ≤ n - 1)", mesh.dim() >= 3, None)],
        Prediction::Slice,
        observed,
        Some(format!("not evaluated beyond the dimension check at n = {}", mesh.dim())),
    ));

    let de_sitter = matches!(warp.kind(), WarpKind::Cosh) && mesh.backend() == Backend::Sphere;
    let ds_check = HypothesisCheck::global("de Sitter: f = cosh over the unit sphere", de_sitter, None);

    // Prop 4.1.
    for (branch, sign) in [("τ ≤ 0, H ≤ tanh τ", 1.0), ("τ ≥ 0, H ≥ tanh τ", -1.0)] {
        let hyp = alloc::vec![
            ds_check.clone(),
            HypothesisCheck::pointwise_le(if sign > 0.0 { "τ ≤ 0" } else { "τ ≥ 0" }, nv, |v| sign * d.t[v]),
            HypothesisCheck::pointwise_le(
                if sign > 0.0 { "H - tanh τ ≤ 0" } else { "H - tanh τ ≥ 0" },
                nv,
                |v| sign * d.r[v],
            ),
        ];
        out.push(verdict(TheoremTag::Prop4_1, branch, hyp, Prediction::Slice, observed, None));
    }

    // Prop 4.2.
    for (branch, sign) in [("τ ≥ 0, H ≤ 0", 1.0), ("τ ≤ 0, H ≥ 0", -1.0)] {
        let hyp = alloc::vec![
            ds_check.clone(),
            HypothesisCheck::pointwise_le(if sign > 0.0 { "τ ≥ 0" } else { "τ ≤ 0" }, nv, |v| -sign * d.t[v]),
            HypothesisCheck::pointwise_le(if sign > 0.0 { "H ≤ 0" } else { "H ≥ 0" }, nv, |v| sign * d.h[v]),
        ];
        out.push(verdict(TheoremTag::Prop4_2, branch, hyp, Prediction::TotallyGeodesicSlice, observed, None));
    }

    let hubble_eq = HypothesisCheck::pointwise_le("|H - f'/f| = 0", nv, |v| abs(d.r[v]));

    // Thm 4.2.
    {
        let mut hyp = Vec::new();
        let mut conclusion = Prediction::TotallyUmbilic;
        let mut note = None;
        match (mesh.ricci_constant(), einstein_check(warp, mesh, d.range, DEFAULT_SAMPLES)) {
            (Some(c), Ok(rep)) => {
                hyp.push(HypothesisCheck::global("Einstein spacetime (Ricci assembly)", rep.oracle.einstein, rep.oracle.cbar));
                hyp.push(HypothesisCheck::global("fiber Ricci constant c ≥ 0", c >= 0.0, Some(c)));
                if c > 0.0 {
                    conclusion = Prediction::Slice;
                }
                note = rep.discrepancy;
            }
            _ => hyp.push(HypothesisCheck::global("Einstein spacetime", false, None)),
        }
        hyp.push(hubble_eq.clone());
        out.push(verdict(TheoremTag::Thm4_2, "", hyp, conclusion, observed, note));
    }

    // Cor 4.3.
    out.push(verdict(
        TheoremTag::Cor4_3,
        "",
        alloc::vec![ds_check.clone(), hubble_eq.clone()],
        Prediction::Slice,
        observed,
        None,
    ));

    // Thm 5.2 (and its φ-prescription variant).
    {
        let ncc = ncc_margin(warp, mesh, d.range)?;
        let mut hyp =
            alloc::vec![HypothesisCheck::global("NCC on u(F)", ncc.holds && ncc.in_theory_dimension, Some(ncc.margin))];
        let strict = match prescription {
            Prescription::Hubble => {
                let lc = log_convexity(warp, d.range, DEFAULT_SAMPLES)?;
                hyp.push(HypothesisCheck::global(
                    "(log f)'' ≥ 0 on u(F)",
                    lc.verdict != LogConvexity::NotConvex,
                    Some(lc.min),
                ));
                hyp.push(hubble_eq.clone());
                ncc.strict || lc.verdict == LogConvexity::StrictlyConvex
            }
            Prescription::Custom { name, phi, dphi } => {
                let min_dphi = d.range.samples(DEFAULT_SAMPLES).map(dphi).fold(f64::INFINITY, f64::min);
                hyp.push(HypothesisCheck::global(format!("{name} increasing on u(F)"), min_dphi >= -HYPOTHESIS_TOL, Some(min_dphi)));
                hyp.push(HypothesisCheck::pointwise_le(format!("|H - {name}(τ)| = 0"), nv, |v| abs(d.h[v] - phi(d.t[v]))));
                ncc.strict || min_dphi > HYPOTHESIS_TOL
            }
        };
        let conclusion = if strict { Prediction::Slice } else { Prediction::TotallyUmbilic };
        let branch = match prescription {
            Prescription::Hubble => "H = f'/f",
            Prescription::Custom { .. } => "H = φ(τ)",
        };
        out.push(verdict(TheoremTag::Thm5_2, branch, hyp, conclusion, observed, dim_note.clone()));
    }
    Ok(out)
}

/// `[min u, max u]`, widened slightly when the graph is a slice so the
/// interval is non-degenerate, and clipped to the warp domain.
fn hypersurface_range(u: &GraphFunction<'_>) -> Interval {
    let (lo, hi) = u
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let pad = 1e-9 * (1.0 + abs(lo).max(abs(hi)));
    let dom = u.warp().domain();
    let (mut a, mut b) = (lo, hi);
    if b - a < pad {
        a = (lo - pad).max(dom.lo);
        b = (hi + pad).min(dom.hi);
    }
    Interval { lo: a, hi: b }
}
