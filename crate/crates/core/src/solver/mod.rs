//! Solver for `H(u) = f'(u)/f(u)` over a discrete fiber.
//!
//! The default method is a Jacobian-free damped Newton iteration: Jacobian
//! products are one-sided directional differences of the residual, and each
//! step solves `(J - μI) s = -R` with restarted GMRES to a relative tolerance
//! of `1e-3`. The linearization at a constant is `Δ/(n f²)`, which is
//! negative semidefinite and singular along constants, so the Levenberg
//! shift enters with a minus sign; a large shift turns the step into
//! `s ≈ R/μ`, the direction of the pseudo-time flow `u̇ = R`.
//!
//! Every constant solves the equation, so the solutions form a one-parameter
//! family. Newton steps are taken in the subspace of zero measure-weighted
//! mean, which selects the member whose level is the mean of the initial
//! data and rules out drift along the family (for `f = e^t` the residual of
//! any fixed profile decays like `e^{-2u}` as `u → ∞`).
//!
//! Steps are accepted only if every vertex stays inside the warp domain, the
//! graph keeps the spacelike margin, and `‖R‖∞` decreases. The descent method
//! integrates `u̇ = R` with adaptive explicit steps; `u̇ = R` increases the
//! action, and for `f ≡ 1` it conserves the mean of `u` exactly.

use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::graph::{action_unchecked, feasible, residual_unchecked, spacelike_status, GraphFunction};
use crate::identities::{classify_theorems, TheoremVerdict, CONSTANCY_RELATIVE};
use crate::linalg::{gmres, norm2, norm_inf};
use crate::math::{abs, sqrt};
use crate::testfield::random_graph;
use crate::fiber::FiberMesh;
use crate::warp::WarpSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Newton,
    Descent,
}

/// Initial data for a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    Constant { level: f64 },
    RandomBump { base: f64, amplitude: f64, seed: u64 },
    Custom {
        #[serde(skip)]
        values: Vec<f64>,
    },
}

impl InitialData {
    pub fn build<'a>(&self, mesh: &'a FiberMesh, warp: &'a WarpSpec, margin: f64) -> Result<GraphFunction<'a>> {
        match self {
            InitialData::Constant { level } => GraphFunction::constant(mesh, warp, *level, margin),
            InitialData::RandomBump { base, amplitude, seed } => {
                random_graph(mesh, warp, *base, *amplitude, *seed, margin)
            }
            InitialData::Custom { values } => GraphFunction::new(mesh, warp, values.clone(), margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    pub method: Method,
    /// Absolute tolerance on `‖R‖∞`.
    pub tol: f64,
    pub max_iterations: usize,
    pub margin: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Initial shift relative to the Jacobian diagonal magnitude.
    pub levenberg_initial: f64,
    pub levenberg_increase: f64,
    pub levenberg_decrease: f64,
    /// Initial pseudo-time step relative to the explicit stability limit.
    pub descent_step: f64,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
    /// Smallest step fraction (Newton) or pseudo-time step (descent) tried
    /// before the solve is declared stuck.
    pub min_step: f64,
    pub constancy_relative: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            method: Method::Newton,
            tol: 1e-10,
            max_iterations: 200,
            margin: crate::graph::DEFAULT_MARGIN,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            levenberg_initial: 1e-8,
            levenberg_increase: 10.0,
            levenberg_decrease: 0.1,
            descent_step: 0.5,
            gmres_tol: 1e-3,
            gmres_restart: 60,
            gmres_max_iterations: 600,
            min_step: 1e-14,
            constancy_relative: CONSTANCY_RELATIVE,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("levenberg_initial", self.levenberg_initial),
            ("descent_step", self.descent_step),
            ("gmres_tol", self.gmres_tol),
            ("min_step", self.min_step),
            ("constancy_relative", self.constancy_relative),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(alloc::format!("solver.{name} must be positive, got {v}")));
            }
        }
        if !(self.margin > 0.0 && self.margin <= 0.5) {
            return Err(Error::Config(alloc::format!("solver.margin must lie in (0, 0.5], got {}", self.margin)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config(alloc::format!(
                "solver.backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if !(self.levenberg_increase > 1.0 && self.levenberg_decrease > 0.0 && self.levenberg_decrease < 1.0) {
            return Err(Error::Config("solver Levenberg factors must satisfy increase > 1 > decrease > 0".into()));
        }
        if self.gmres_restart == 0 || self.gmres_max_iterations == 0 {
            return Err(Error::Config("solver GMRES limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Constant,
    NonconstantStationary,
    Diverged,
    MarginStuck,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Constant => "constant",
            Verdict::NonconstantStationary => "nonconstant-stationary",
            Verdict::Diverged => "diverged",
            Verdict::MarginStuck => "margin-stuck",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖R‖∞` before the first step and after every accepted step.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub oscillation: f64,
    pub mean: f64,
    /// `max |Du|/f(u)` over corners.
    pub sup_grad_ratio: f64,
    pub verdict: Verdict,
    /// A theorem whose hypotheses hold predicts a slice (or umbilicity) that
    /// was not observed.
    pub contradiction: bool,
    pub linear_iterations: usize,
    pub descent_steps: usize,
    /// Filled in by callers that can measure time.
    pub wall_time_s: f64,
    pub config: SolveConfig,
    pub theorems: Vec<TheoremVerdict>,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// `R(u) = H(u) - f'(u)/f(u)` at every vertex.
pub fn residual(u: &GraphFunction<'_>) -> Result<Vec<f64>> {
    u.residual()
}

/// The constancy verdict for a stationary candidate together with the
/// theorem checklist of the final iterate.
#[derive(Debug, Clone, Serialize)]
pub struct ConstancyOutcome {
    pub verdict: Verdict,
    pub contradiction: bool,
    pub theorems: Vec<TheoremVerdict>,
}

/// Verdict for an iterate whose residual is `final_residual`. `converged`
/// says whether the residual tolerance was reached; otherwise `fallback` is
/// the verdict to report.
pub fn constancy_verdict(
    u: &GraphFunction<'_>,
    final_residual: f64,
    cfg: &SolveConfig,
    fallback: Verdict,
) -> Result<ConstancyOutcome> {
    let theorems = classify_theorems(u)?;
    let converged = final_residual <= cfg.tol;
    let constant = u.oscillation() <= cfg.constancy_relative * (1.0 + abs(u.mean()));
    let verdict = match (converged, constant) {
        (true, true) => Verdict::Constant,
        (true, false) => Verdict::NonconstantStationary,
        (false, _) => fallback,
    };
    let contradiction =
        verdict == Verdict::NonconstantStationary && theorems.iter().any(|t| t.contradiction);
    Ok(ConstancyOutcome { verdict, contradiction, theorems })
}

struct State<'a> {
    mesh: &'a FiberMesh,
    warp: &'a WarpSpec,
    margin: f64,
    u: Vec<f64>,
    r: Vec<f64>,
    rnorm: f64,
}

/// Remove the measure-weighted mean.
fn project(mesh: &FiberMesh, v: &mut [f64]) {
    let mean = mesh.vertex_inner(v, &vec![1.0; v.len()]) / mesh.total_volume();
    v.iter_mut().for_each(|x| *x -= mean);
}

impl<'a> State<'a> {
    fn try_point(&self, cand: &[f64]) -> Option<(Vec<f64>, f64)> {
        if !feasible(self.mesh, self.warp, cand, self.margin) {
            return None;
        }
        let r = residual_unchecked(self.mesh, self.warp, cand).ok()?;
        let n = norm_inf(&r);
        n.is_finite().then_some((r, n))
    }

    fn accept(&mut self, u: Vec<f64>, r: Vec<f64>, rnorm: f64) {
        self.u = u;
        self.r = r;
        self.rnorm = rnorm;
    }

    /// `J v` by a one-sided directional difference.
    fn jvp(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let vn = norm2(v);
        if vn == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(());
        }
        let sigma = sqrt(f64::EPSILON) * (1.0 + norm2(&self.u) / sqrt(self.u.len() as f64)) / vn
            * sqrt(self.u.len() as f64);
        let shifted: Vec<f64> = self.u.iter().zip(v).map(|(a, b)| a + sigma * b).collect();
        let rs = residual_unchecked(self.mesh, self.warp, &shifted)?;
        for ((o, a), b) in out.iter_mut().zip(&rs).zip(&self.r) {
            *o = (a - b) / sigma;
        }
        Ok(())
    }

    /// Magnitude of the Jacobian diagonal, from `J e_0`.
    fn diagonal_scale(&self) -> Result<f64> {
        let mut e = vec![0.0; self.u.len()];
        e[0] = 1.0;
        let mut out = vec![0.0; self.u.len()];
        self.jvp(&e, &mut out)?;
        Ok(abs(out[0]).max(f64::MIN_POSITIVE))
    }
}

/// Solve `H(u) = f'(u)/f(u)` from `u0`.
pub fn solve(u0: &GraphFunction<'_>, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let mesh = u0.mesh();
    let warp = u0.warp();
    if !feasible(mesh, warp, u0.values(), cfg.margin) {
        let s = spacelike_status(mesh, warp, u0.values(), cfg.margin);
        return Err(Error::Config(alloc::format!(
            "initial data violates the spacelike margin: |Du|/f = {:.4} at vertex {} exceeds {}",
            s.max_ratio,
            s.worst_vertex,
            1.0 - cfg.margin
        )));
    }
    let r0 = residual_unchecked(mesh, warp, u0.values())?;
    let mut st = State { mesh, warp, margin: cfg.margin, u: u0.values().to_vec(), rnorm: norm_inf(&r0), r: r0 };
    let mut history = vec![st.rnorm];
    let diag = st.diagonal_scale()?;
    let mu0 = cfg.levenberg_initial * diag;
    let stable_dt = 1.0 / diag;
    let mut dt = cfg.descent_step * stable_dt;
    let mut shift = 0.0;
    let mut linear_iterations = 0;
    let mut descent_steps = 0;
    let mut iterations = 0;
    let mut stuck = false;

    while st.rnorm > cfg.tol && iterations < cfg.max_iterations {
        let accepted = match cfg.method {
            Method::Newton => newton_step(&mut st, cfg, mu0, &mut shift, &mut linear_iterations)?
                || descent_step(&mut st, cfg, &mut dt, true),
            Method::Descent => descent_step(&mut st, cfg, &mut dt, false),
        };
        if !accepted {
            stuck = true;
            break;
        }
        if cfg.method == Method::Descent || shift > 1e6 * diag {
            descent_steps += 1;
        }
        iterations += 1;
        history.push(st.rnorm);
    }

    let u = u0.with_values(st.u.clone())?;
    let fallback = if stuck { Verdict::MarginStuck } else { Verdict::Diverged };
    let outcome = constancy_verdict(&u, st.rnorm, cfg, fallback)?;
    Ok(SolveReport {
        iterations,
        residual_history: history,
        final_residual: st.rnorm,
        oscillation: u.oscillation(),
        mean: u.mean(),
        sup_grad_ratio: u.spacelike().max_ratio,
        verdict: outcome.verdict,
        contradiction: outcome.contradiction,
        linear_iterations,
        descent_steps,
        wall_time_s: 0.0,
        config: cfg.clone(),
        theorems: outcome.theorems,
        values: st.u,
    })
}

/// One damped Newton step. Returns whether a step was accepted.
fn newton_step(st: &mut State<'_>, cfg: &SolveConfig, mu0: f64, shift: &mut f64, lin: &mut usize) -> Result<bool> {
    let mut rhs: Vec<f64> = st.r.iter().map(|x| -x).collect();
    project(st.mesh, &mut rhs);
    // Escalate the shift until a feasible decrease is found; past a point the
    // shifted step is a tiny multiple of R and the descent fallback takes over.
    for _ in 0..16 {
        let mut s = vec![0.0; st.u.len()];
        let mu = *shift;
        let out = gmres(
            |v, out| {
                let mut pv = v.to_vec();
                project(st.mesh, &mut pv);
                st.jvp(&pv, out)?;
                project(st.mesh, out);
                for (o, x) in out.iter_mut().zip(&pv) {
                    *o -= mu * x;
                }
                Ok(())
            },
            &rhs,
            &mut s,
            cfg.gmres_restart,
            cfg.gmres_max_iterations,
            cfg.gmres_tol,
        );
        let out = match out {
            Ok(o) => o,
            Err(Error::Geometry { .. }) | Err(Error::NonFinite { .. }) => {
                *shift = (*shift * cfg.levenberg_increase).max(mu0);
                continue;
            }
            Err(e) => return Err(e),
        };
        *lin += out.iterations;
        project(st.mesh, &mut s);
        if !out.converged || s.iter().any(|x| !x.is_finite()) {
            *shift = (*shift * cfg.levenberg_increase).max(mu0);
            continue;
        }
        let mut alpha = 1.0;
        for _ in 0..=cfg.max_backtracks {
            if alpha < cfg.min_step {
                break;
            }
            let cand: Vec<f64> = st.u.iter().zip(&s).map(|(a, b)| a + alpha * b).collect();
            if let Some((r, n)) = st.try_point(&cand) {
                if n < st.rnorm {
                    st.accept(cand, r, n);
                    *shift *= cfg.levenberg_decrease;
                    if *shift < mu0 {
                        *shift = 0.0;
                    }
                    return Ok(true);
                }
            }
            alpha *= cfg.backtrack_factor;
        }
        *shift = (*shift * cfg.levenberg_increase).max(mu0);
    }
    Ok(false)
}

/// One explicit step of `u̇ = R` with adaptive `dt`. As a Newton fallback the
/// direction is mean-projected and the step must decrease `‖R‖∞`; as a
/// standalone method it must not decrease the action.
fn descent_step(st: &mut State<'_>, cfg: &SolveConfig, dt: &mut f64, monotone_residual: bool) -> bool {
    let mut dir = st.r.clone();
    if monotone_residual {
        project(st.mesh, &mut dir);
    }
    let action0 = if monotone_residual { 0.0 } else { action_unchecked(st.mesh, st.warp, &st.u).unwrap_or(f64::NAN) };
    for _ in 0..=cfg.max_backtracks.max(60) {
        if *dt < cfg.min_step {
            return false;
        }
        let cand: Vec<f64> = st.u.iter().zip(&dir).map(|(a, r)| a + *dt * r).collect();
        if let Some((r, n)) = st.try_point(&cand) {
            let ok = if monotone_residual {
                n < st.rnorm
            } else {
                let a = action_unchecked(st.mesh, st.warp, &cand).unwrap_or(f64::NAN);
                a >= action0 - 1e-15 * abs(action0) && n.is_finite()
            };
            if ok {
                st.accept(cand, r, n);
                *dt *= 1.2;
                return true;
            }
        }
        *dt *= 0.5;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn constant_start_needs_no_iterations() {
        let mesh = FiberMesh::torus([16, 16], [2.0 * PI, 2.0 * PI]).unwrap();
        let warp = WarpSpec::exponential(1.0, 1.0).unwrap();
        let u = GraphFunction::constant(&mesh, &warp, 0.3, 0.05).unwrap();
        let rep = solve(&u, &SolveConfig::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.verdict, Verdict::Constant);
        assert!(!rep.contradiction);
    }

    #[test]
    fn infeasible_start_is_a_config_error() {
        let mesh = FiberMesh::circle(32, 2.0 * PI).unwrap();
        let warp = WarpSpec::constant(1.0).unwrap();
        let u = GraphFunction::new(&mesh, &warp, mesh.sample(|p| 0.99 * p[0].sin()), 0.05).unwrap();
        assert!(matches!(solve(&u, &SolveConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn newton_reaches_a_constant_on_the_torus() {
        let mesh = FiberMesh::torus([16, 16], [2.0 * PI, 2.0 * PI]).unwrap();
        let warp = WarpSpec::exponential(1.0, 1.0).unwrap();
        let u = GraphFunction::new(&mesh, &warp, mesh.sample(|p| 0.5 + 0.3 * p[0].sin() * p[1].sin()), 0.05).unwrap();
        let rep = solve(&u, &SolveConfig::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Constant, "{:?} osc {} lin {} desc {}", rep.residual_history, rep.oscillation, rep.linear_iterations, rep.descent_steps);
        for w in rep.residual_history.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn descent_conserves_the_mean_for_unit_warp() {
        let mesh = FiberMesh::torus([8, 8], [2.0 * PI, 2.0 * PI]).unwrap();
        let warp = WarpSpec::constant(1.0).unwrap();
        let u = random_graph(&mesh, &warp, 0.2, 0.3, 4, 0.05).unwrap();
        let cfg = SolveConfig { method: Method::Descent, max_iterations: 20_000, ..SolveConfig::default() };
        let rep = solve(&u, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Constant, "{}", rep.final_residual);
        assert!((rep.mean - u.mean()).abs() < 1e-12);
    }

    #[test]
    fn verdict_flags() {
        let mesh = FiberMesh::torus([16, 16], [2.0 * PI, 2.0 * PI]).unwrap();
        let warp = WarpSpec::exponential(1.0, 1.0).unwrap();
        let cfg = SolveConfig::default();
        let flat = GraphFunction::constant(&mesh, &warp, 0.0, 0.05).unwrap();
        let o = constancy_verdict(&flat, 1e-12, &cfg, Verdict::Diverged).unwrap();
        assert_eq!(o.verdict, Verdict::Constant);
        let bumpy = GraphFunction::new(&mesh, &warp, mesh.sample(|p| 0.15 * p[0].sin()), 0.05).unwrap();
        // Pretend the bumpy graph were stationary: f' ≥ 0 makes this a contradiction.
        let o = constancy_verdict(&bumpy, 1e-12, &cfg, Verdict::Diverged).unwrap();
        assert_eq!(o.verdict, Verdict::NonconstantStationary);
        let o = constancy_verdict(&bumpy, 1e-3, &cfg, Verdict::Diverged).unwrap();
        assert_eq!(o.verdict, Verdict::Diverged);
        assert!(!o.contradiction);
    }
}
