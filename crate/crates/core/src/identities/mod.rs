//! Numerical checks of the geometric identities satisfied by spacelike
//! graphs, refinement-ladder convergence studies, and a classifier that
//! evaluates the hypotheses of the uniqueness theorems on a discrete graph.
//!
//! Every check produces a residual field per refinement level. A check with
//! an order criterion passes when the least-squares slope of `log max|r|`
//! against `log h` reaches the threshold, or when every level is already at
//! rounding level (`≤ 1e-10`, which is what slices give). Single-level
//! checks use an absolute tolerance.

mod checks;
mod theorems;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::Serialize;

use crate::fiber::{Backend, FiberMesh};
use crate::graph::GraphFunction;
use crate::math::{ln, sqrt};
use crate::testfield::{random_graph, sine_values};
use crate::warp::WarpSpec;
use crate::{Error, Result};

pub use checks::{
    connection_residuals, el_check, integral_formula, laplacian_residuals, lk_residual, max_principle_check,
    ElOutcome, IntegralTerms, MaxPrincipleOutcome,
};
pub use theorems::{
    classify_theorems, classify_theorems_with, HypothesisCheck, Observed, Prediction, Prescription, TheoremTag,
    TheoremVerdict, CONSTANCY_RELATIVE, HYPOTHESIS_TOL,
};

/// Residuals at or below this level count as exact.
pub const EXACT_FLOOR: f64 = 1e-10;
/// Default number of refinement levels.
pub const DEFAULT_LEVELS: usize = 3;

/// The graph evaluated on every level of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Constant { level: f64 },
    /// `base + a φ` for the seeded smooth field `φ`, with `a` reduced if
    /// needed to respect the spacelike margin.
    Random { base: f64, amplitude: f64, seed: u64 },
    /// [`sine_values`] without rescaling; the graph must meet the margin.
    Sine { base: f64, amplitude: f64 },
}

impl Profile {
    pub fn on<'a>(&self, mesh: &'a FiberMesh, warp: &'a WarpSpec, margin: f64) -> Result<GraphFunction<'a>> {
        match *self {
            Profile::Constant { level } => GraphFunction::constant(mesh, warp, level, margin),
            Profile::Random { base, amplitude, seed } => random_graph(mesh, warp, base, amplitude, seed, margin),
            Profile::Sine { base, amplitude } => {
                GraphFunction::new(mesh, warp, sine_values(mesh, base, amplitude), margin)
                    .and_then(|u| u.ensure_margin().map(|_| u))
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Profile::Constant { .. } | Profile::Sine { .. } => None,
            Profile::Random { seed, .. } => Some(*seed),
        }
    }
}

/// Inputs of a refinement study: the coarsest mesh, the warp and the graph.
#[derive(Debug, Clone)]
pub struct LadderSpec<'w> {
    pub mesh: FiberMesh,
    pub warp: &'w WarpSpec,
    pub profile: Profile,
    pub margin: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Connection,
    Laplacian,
    Integral,
    El,
    Lk,
    MaxPrinciple,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Connection, Suite::Laplacian, Suite::Integral, Suite::El, Suite::Lk, Suite::MaxPrinciple];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Connection => "connection",
            Suite::Laplacian => "laplacian",
            Suite::Integral => "integral",
            Suite::El => "el",
            Suite::Lk => "lk",
            Suite::MaxPrinciple => "maxprinciple",
        }
    }

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Whether the suite can run on a backend.
    pub fn supports(self, backend: Backend) -> bool {
        match self {
            Suite::Connection | Suite::Laplacian => backend.is_grid(),
            Suite::Lk => backend == Backend::Torus,
            Suite::Integral | Suite::El | Suite::MaxPrinciple => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Criterion {
    Order { threshold: f64 },
    Absolute { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub max: f64,
    /// `√(Σ m_v r_v²)`, or `|r|` for scalar residuals.
    pub l2: f64,
    pub argmax: usize,
}

impl ResidualSummary {
    pub fn of(residual: &[f64], measure: Option<&[f64]>) -> Self {
        let mut max = 0.0;
        let mut argmax = 0;
        let mut acc = crate::sum::CompensatedSum::new();
        for (i, r) in residual.iter().enumerate() {
            let a = r.abs();
            if a > max || a.is_nan() {
                max = a;
                argmax = i;
            }
            let m = measure.map_or(1.0, |m| m[i]);
            acc.add(m * r * r);
        }
        Self { max, l2: sqrt(acc.value()), argmax }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderLevel {
    pub h: f64,
    pub vertices: usize,
    pub residual: ResidualSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub tag: &'static str,
    pub ladder: Vec<LadderLevel>,
    /// Least-squares slope of `log max|r|` against `log h`.
    pub order: Option<f64>,
    pub criterion: Criterion,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(tag: &'static str, ladder: Vec<LadderLevel>, criterion: Criterion) -> Self {
        let all_exact = ladder.iter().all(|l| l.residual.max <= EXACT_FLOOR);
        // Rounding noise has no convergence order.
        let order = if all_exact { None } else { ladder_order(&ladder) };
        let passed = match criterion {
            Criterion::Order { threshold } => all_exact || order.is_some_and(|o| o >= threshold),
            Criterion::Absolute { tol } => ladder.iter().all(|l| l.residual.max <= tol),
        };
        Self { tag, ladder, order, criterion, passed }
    }

    /// Residual maximum on the finest level.
    pub fn finest_max(&self) -> f64 {
        self.ladder.last().map_or(0.0, |l| l.residual.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub suite: &'static str,
    pub backend: &'static str,
    pub warp: &'static str,
    pub profile: Profile,
    pub seed: Option<u64>,
    /// Regime statement for approximations that only hold near slices.
    pub regime: Option<String>,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

impl IdentityReport {
    pub fn check(&self, tag: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.tag == tag)
    }
}

/// Least-squares slope over the levels with a positive residual; `None` with
/// fewer than two such levels.
pub fn ladder_order(ladder: &[LadderLevel]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ladder
        .iter()
        .filter(|l| l.residual.max > 0.0 && l.residual.max.is_finite())
        .map(|l| (ln(l.h), ln(l.residual.max)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

type LevelFn<'f> = dyn Fn(&GraphFunction<'_>) -> Result<Vec<Vec<f64>>> + 'f;

fn run_ladder(
    suite: Suite,
    spec: &LadderSpec<'_>,
    tags: &[(&'static str, Criterion)],
    scalar: bool,
    regime: Option<String>,
    level_fn: &LevelFn<'_>,
) -> Result<IdentityReport> {
    if !suite.supports(spec.mesh.backend()) {
        return Err(Error::Unsupported(alloc::format!(
            "suite '{}' is not available on the {} backend",
            suite.name(),
            spec.mesh.backend().name()
        )));
    }
    if spec.levels == 0 {
        return Err(Error::Config("a refinement ladder needs at least one level".into()));
    }
    let mut ladders: Vec<Vec<LadderLevel>> = tags.iter().map(|_| Vec::new()).collect();
    let mut mesh = spec.mesh.clone();
    for level in 0..spec.levels {
        if level > 0 {
            mesh = mesh.refine()?;
        }
        let u = spec.profile.on(&mesh, spec.warp, spec.margin)?;
        let fields = level_fn(&u)?;
        for (ladder, field) in ladders.iter_mut().zip(&fields) {
            let measure = (!scalar).then(|| mesh.measure());
            ladder.push(LadderLevel {
                h: mesh.mesh_size(),
                vertices: mesh.vertex_count(),
                residual: ResidualSummary::of(field, measure),
            });
        }
    }
    let checks: Vec<IdentityCheck> =
        tags.iter().zip(ladders).map(|((tag, crit), ladder)| IdentityCheck::new(tag, ladder, *crit)).collect();
    Ok(IdentityReport {
        suite: suite.name(),
        backend: spec.mesh.backend().name(),
        warp: spec.warp.name(),
        profile: spec.profile,
        seed: spec.profile.seed(),
        regime,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Order threshold for second-order discretization identities.
pub const SECOND_ORDER: f64 = 1.9;
/// Order threshold for the integral formula and the `L_1` display.
pub const FIRST_ORDER: f64 = 1.0;
/// Tolerance of identities that hold exactly in the discretization.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Connection identities along the graph: `∇̄_X K = f' X` for tangent `X`,
/// the Weingarten relation `A X = -∇̄_X N`, `∇ḡ(K, N) = -A Kᵀ`, and
/// `∇τ = -∂tᵀ`.
pub fn verify_connection_identities(spec: &LadderSpec<'_>) -> Result<IdentityReport> {
    let order = Criterion::Order { threshold: SECOND_ORDER };
    run_ladder(
        Suite::Connection,
        spec,
        &[
            ("conformal_field", order),
            ("weingarten", order),
            ("normal_component_gradient", order),
            ("time_gradient", Criterion::Absolute { tol: ALGEBRAIC_TOL }),
        ],
        false,
        None,
        &|u| connection_residuals(u).map(|r| r.to_vec()),
    )
}

/// `Δτ` and `ΔF(τ)` of the induced metric against their algebraic forms.
pub fn verify_laplacian_identities(spec: &LadderSpec<'_>) -> Result<IdentityReport> {
    let order = Criterion::Order { threshold: SECOND_ORDER };
    run_ladder(
        Suite::Laplacian,
        spec,
        &[("laplacian_tau", order), ("laplacian_primitive", order)],
        false,
        None,
        &|u| laplacian_residuals(u).map(|r| r.to_vec()),
    )
}

/// Total of the integral formula over the graph.
pub fn verify_integral_formula(spec: &LadderSpec<'_>) -> Result<IdentityReport> {
    let regime = (spec.mesh.backend() == Backend::Sphere).then(|| {
        "near-slice: trace(A²) replaced by the umbilic value nH², valid for |Du| ≤ 0.1 min f".to_string()
    });
    run_ladder(
        Suite::Integral,
        spec,
        &[("integral_total", Criterion::Order { threshold: FIRST_ORDER })],
        true,
        regime,
        &|u| integral_formula(u).map(|t| alloc::vec![alloc::vec![t.total]]),
    )
}

/// `L_j F(τ) = -c_j (f' H_j + f H_{j+1} ν)` with `c_j = (n - j) C(n, j)`.
pub fn verify_lk_display(spec: &LadderSpec<'_>, j: usize) -> Result<IdentityReport> {
    let n = spec.mesh.dim();
    if j == 0 || j >= n {
        return Err(Error::Config(alloc::format!("L_j display needs 1 ≤ j ≤ n - 1 = {}, got j = {j}", n - 1)));
    }
    run_ladder(
        Suite::Lk,
        spec,
        &[("lk_display", Criterion::Order { threshold: FIRST_ORDER })],
        false,
        None,
        &|u| lk_residual(u, j).map(|r| alloc::vec![r]),
    )
}

/// Default finite-difference step of the Euler-Lagrange check.
pub const EL_STEP: f64 = 1e-5;
/// Default number of random directions of the Euler-Lagrange check.
pub const EL_DIRECTIONS: usize = 8;
/// Relative agreement required between `d𝓘[v]` and the weighted residual.
pub const EL_RELATIVE_TOL: f64 = 1e-6;
/// Absolute bound on `d𝓘[v]` at constants.
pub const EL_CONSTANT_TOL: f64 = 1e-8;

/// First variation of the action against the weighted residual on the
/// coarsest mesh of `spec`.
pub fn verify_el_equivalence(spec: &LadderSpec<'_>, directions: usize, step: f64, seed: u64) -> Result<IdentityReport> {
    let u = spec.profile.on(&spec.mesh, spec.warp, spec.margin)?;
    let out = el_check(&u, directions, step, seed)?;
    let single = |tag, field: &[f64], tol| {
        IdentityCheck::new(
            tag,
            alloc::vec![LadderLevel {
                h: spec.mesh.mesh_size(),
                vertices: spec.mesh.vertex_count(),
                residual: ResidualSummary::of(field, None),
            }],
            Criterion::Absolute { tol },
        )
    };
    let checks = if out.constant {
        alloc::vec![single("el_constant", &out.fd, EL_CONSTANT_TOL)]
    } else {
        alloc::vec![single("el_relative", &out.relative_errors, EL_RELATIVE_TOL)]
    };
    Ok(IdentityReport {
        suite: Suite::El.name(),
        backend: spec.mesh.backend().name(),
        warp: spec.warp.name(),
        profile: spec.profile,
        seed: spec.profile.seed(),
        regime: None,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Pointwise maximum-principle inequality on the coarsest mesh of `spec`.
pub fn maximum_principle_sign_check(spec: &LadderSpec<'_>) -> Result<IdentityReport> {
    let u = spec.profile.on(&spec.mesh, spec.warp, spec.margin)?;
    let out = max_principle_check(&u)?;
    let check = IdentityCheck::new(
        "max_principle",
        alloc::vec![LadderLevel {
            h: spec.mesh.mesh_size(),
            vertices: out.checked_vertices,
            residual: ResidualSummary::of(&out.violation, None),
        }],
        Criterion::Absolute { tol: HYPOTHESIS_TOL },
    );
    let regime = Some(alloc::format!(
        "hypotheses hold at {} of {} vertices",
        out.checked_vertices,
        spec.mesh.vertex_count()
    ));
    Ok(IdentityReport {
        suite: Suite::MaxPrinciple.name(),
        backend: spec.mesh.backend().name(),
        warp: spec.warp.name(),
        profile: spec.profile,
        seed: spec.profile.seed(),
        regime,
        passed: check.passed,
        checks: alloc::vec![check],
    })
}

/// Run a suite with its default parameters.
pub fn run_suite(suite: Suite, spec: &LadderSpec<'_>) -> Result<IdentityReport> {
    if !suite.supports(spec.mesh.backend()) {
        return Err(Error::Unsupported(alloc::format!(
            "suite '{}' is not available on the {} backend",
            suite.name(),
            spec.mesh.backend().name()
        )));
    }
    match suite {
        Suite::Connection => verify_connection_identities(spec),
        Suite::Laplacian => verify_laplacian_identities(spec),
        Suite::Integral => verify_integral_formula(spec),
        Suite::Lk => verify_lk_display(spec, 1),
        Suite::El => verify_el_equivalence(spec, EL_DIRECTIONS, EL_STEP, spec.profile.seed().unwrap_or(0)),
        Suite::MaxPrinciple => maximum_principle_sign_check(spec),
    }
}
