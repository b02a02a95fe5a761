//! Spacelike graphs `Σ_u = {(u(p), p) : p ∈ F}`.
//!
//! With `λ = √(f(u)² - |Du|²)` the induced metric is `g_u = -du² + f(u)² g`,
//! the future-pointing unit normal is `N = (f², Du) / (f λ)` and
//! `ν = ḡ(N, ∂t) = -f/λ ≤ -1`.
//!
//! The discrete action is a corner quadrature of
//! `𝓘(u) = ∫ f(u)^{n-1} λ - f(u)^n dV^F`, and the discrete mean curvature is
//! defined through its exact gradient:
//!
//! ```text
//! ∂𝓘/∂u_v = n f(u_v)^n m_v (H_v - f'(u_v)/f(u_v)),
//! ```
//!
//! the lumped weak form of `H(u) = div(Du/(n f λ)) + f'/(n λ) (n + |Du|²/f²)`.
//! On the grid backends this is a conservative second-order difference
//! scheme for the same operator; on the sphere it is the mass-lumped
//! piecewise-linear weak form. Either way constants give `H = f'/f` up to
//! rounding and the first variation of the discrete action is exactly the
//! weighted residual.

mod shape;

use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::fiber::FiberMesh;
use crate::math::{dot3, powi, sqrt};
use crate::sum::CompensatedSum;
use crate::warp::WarpSpec;
use crate::{Error, Result};

pub use shape::{
    higher_curvatures, newton_data, schwarz_defect, shape_from_jet, shape_operator,
    shape_operator_tangent, HigherCurvatures, ShapeJet,
};

/// Default spacelike margin `ε`.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// A candidate solution: vertex values of `u` over a fiber, for a warp.
#[derive(Debug, Clone)]
pub struct GraphFunction<'a> {
    mesh: &'a FiberMesh,
    warp: &'a WarpSpec,
    values: Vec<f64>,
    margin: f64,
}

/// Spacelikeness of a graph, measured by `|Du|/f(u)` over all corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacelikeStatus {
    pub worst_vertex: usize,
    pub max_ratio: f64,
    pub strictly_spacelike: bool,
    pub within_margin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanCurvatureForm {
    /// Divergence-form difference scheme (grid backends).
    Strong,
    /// Mass-lumped weak form (any backend).
    Weak,
}

impl<'a> GraphFunction<'a> {
    /// Values must be finite and inside the warp domain; spacelikeness is
    /// not required here (see [`spacelike`](Self::spacelike)).
    pub fn new(mesh: &'a FiberMesh, warp: &'a WarpSpec, values: Vec<f64>, margin: f64) -> Result<Self> {
        mesh.check_field(&values)?;
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::Config(alloc::format!("spacelike margin must lie in (0, 1), got {margin}")));
        }
        for &t in &values {
            warp.check(t)?;
        }
        Ok(Self { mesh, warp, values, margin })
    }

    pub fn constant(mesh: &'a FiberMesh, warp: &'a WarpSpec, level: f64, margin: f64) -> Result<Self> {
        Self::new(mesh, warp, vec![level; mesh.vertex_count()], margin)
    }

    /// Same mesh, warp and margin with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.mesh, self.warp, values, self.margin)
    }

    pub fn mesh(&self) -> &'a FiberMesh {
        self.mesh
    }

    pub fn warp(&self) -> &'a WarpSpec {
        self.warp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// `max u - min u`.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    }

    /// Measure-weighted mean of `u`.
    pub fn mean(&self) -> f64 {
        self.mesh.vertex_inner(&self.values, &vec![1.0; self.values.len()]) / self.mesh.total_volume()
    }

    pub fn spacelike(&self) -> SpacelikeStatus {
        spacelike_status(self.mesh, self.warp, &self.values, self.margin)
    }

    /// Hard failure unless every corner satisfies `|Du| ≤ (1 - ε) f(u)`.
    pub fn ensure_margin(&self) -> Result<()> {
        let s = self.spacelike();
        if s.within_margin {
            Ok(())
        } else {
            Err(Error::Geometry { vertex: s.worst_vertex, ratio: s.max_ratio, bound: 1.0 - self.margin })
        }
    }

    /// Discrete mean curvature `H(u)` per vertex.
    pub fn mean_curvature(&self, form: MeanCurvatureForm) -> Result<Vec<f64>> {
        if form == MeanCurvatureForm::Strong && !self.mesh.backend().is_grid() {
            return Err(Error::Unsupported("strong-form mean curvature needs a grid backend".into()));
        }
        self.ensure_margin()?;
        let r = residual_unchecked(self.mesh, self.warp, &self.values)?;
        Ok(r.iter().zip(&self.values).map(|(ri, &u)| ri + self.warp.hubble_unchecked(u)).collect())
    }

    /// `R(u) = H(u) - f'(u)/f(u)` per vertex.
    pub fn residual(&self) -> Result<Vec<f64>> {
        self.ensure_margin()?;
        residual_unchecked(self.mesh, self.warp, &self.values)
    }

    /// `Vol(Σ_u) = ∫ f(u)^{n-1} λ dV^F`.
    pub fn volume(&self) -> Result<f64> {
        self.ensure_margin()?;
        corner_quadrature(self.mesh, self.warp, &self.values, |_, fn1, lam, _| fn1 * lam)
    }

    /// `𝓘(u) = ∫ f(u)^{n-1} λ - f(u)^n dV^F`.
    pub fn action(&self) -> Result<f64> {
        self.ensure_margin()?;
        action_unchecked(self.mesh, self.warp, &self.values)
    }

    /// All per-vertex derived quantities.
    pub fn geometry(&self) -> Result<GraphGeometry> {
        self.ensure_margin()?;
        let h = self.mean_curvature(MeanCurvatureForm::Weak)?;
        let grad = self.mesh.vertex_gradient(&self.values);
        let n = self.mesh.dim();
        let mut out = GraphGeometry {
            dim: n,
            f: Vec::with_capacity(h.len()),
            fp: Vec::with_capacity(h.len()),
            grad,
            grad_sq: Vec::with_capacity(h.len()),
            lambda: Vec::with_capacity(h.len()),
            nu: Vec::with_capacity(h.len()),
            mean_curvature: h,
        };
        for (v, &u) in self.values.iter().enumerate() {
            let (f, fp, _) = self.warp.derivs_unchecked(u);
            let s = dot3(&out.grad[v], &out.grad[v]);
            let lam = sqrt(f * f - s);
            out.f.push(f);
            out.fp.push(fp);
            out.grad_sq.push(s);
            out.lambda.push(lam);
            out.nu.push(-f / lam);
        }
        Ok(out)
    }

    /// Per-vertex right-hand sides of the Laplacian identities for `τ` and `𝓕(τ)`.
    pub fn algebraic_laplacians(&self) -> Result<Vec<AlgebraicLaplacians>> {
        let geo = self.geometry()?;
        let n = geo.dim as f64;
        Ok((0..geo.f.len())
            .map(|v| {
                let (f, fp, h, nu) = (geo.f[v], geo.fp[v], geo.mean_curvature[v], geo.nu[v]);
                let lam = geo.lambda[v];
                let grad_tau_sq = geo.grad_sq[v] / (lam * lam);
                AlgebraicLaplacians {
                    tau: -(fp / f) * (n + grad_tau_sq) - n * h * nu,
                    primitive: -n * fp - n * f * h * nu,
                }
            })
            .collect())
    }
}

/// Derived per-vertex fields of a spacelike graph.
#[derive(Debug, Clone, Serialize)]
pub struct GraphGeometry {
    pub dim: usize,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    /// Vertex gradient `Du` in fiber (ambient chart) coordinates.
    pub grad: Vec<[f64; 3]>,
    pub grad_sq: Vec<f64>,
    /// `λ = √(f² - |Du|²)`.
    pub lambda: Vec<f64>,
    /// `ν = ḡ(N, ∂t) = -f/λ`.
    pub nu: Vec<f64>,
    pub mean_curvature: Vec<f64>,
}

impl GraphGeometry {
    /// Normal components `(Nᵗ, N^F)` with `N^F = Du/(f λ)` in chart coordinates.
    pub fn normal(&self, v: usize) -> (f64, [f64; 3]) {
        let (f, lam) = (self.f[v], self.lambda[v]);
        let g = self.grad[v];
        let s = 1.0 / (f * lam);
        (f / lam, [g[0] * s, g[1] * s, g[2] * s])
    }

    /// `ḡ(N, N) + 1`, which vanishes for a unit timelike normal.
    pub fn normal_defect(&self, v: usize) -> f64 {
        let (nt, nf) = self.normal(v);
        let f = self.f[v];
        -nt * nt + f * f * dot3(&nf, &nf) + 1.0
    }

    /// `(g_u)_ij = -∂_i u ∂_j u + f² δ_ij` in grid coordinates.
    pub fn induced_metric(&self, v: usize) -> [[f64; 2]; 2] {
        let g = self.grad[v];
        let f2 = self.f[v] * self.f[v];
        let mut m = [[0.0; 2]; 2];
        for i in 0..self.dim.min(2) {
            for j in 0..self.dim.min(2) {
                m[i][j] = -g[i] * g[j] + if i == j { f2 } else { 0.0 };
            }
        }
        m
    }

    /// Leading principal minors of the induced metric are positive.
    pub fn induced_metric_positive(&self, v: usize) -> bool {
        let m = self.induced_metric(v);
        if self.dim == 1 {
            m[0][0] > 0.0
        } else {
            m[0][0] > 0.0 && crate::linalg::mat2_det(&m) > 0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgebraicLaplacians {
    /// `-(f'/f)(n + |∇τ|²) - n H ν`.
    pub tau: f64,
    /// `-n f' - n f H ν`.
    pub primitive: f64,
}

pub(crate) fn spacelike_status(mesh: &FiberMesh, warp: &WarpSpec, u: &[f64], margin: f64) -> SpacelikeStatus {
    let mut worst_vertex = 0;
    let mut max_ratio: f64 = 0.0;
    for c in mesh.corners() {
        let g = c.gradient(u);
        let f = warp.derivs_unchecked(u[c.owner]).0;
        let ratio = sqrt(dot3(&g, &g)) / f;
        if ratio > max_ratio || ratio.is_nan() {
            max_ratio = ratio;
            worst_vertex = c.owner;
        }
    }
    SpacelikeStatus {
        worst_vertex,
        max_ratio,
        strictly_spacelike: max_ratio < 1.0,
        within_margin: max_ratio <= 1.0 - margin,
    }
}

/// Whether every value lies in the warp domain and the graph is within margin.
pub(crate) fn feasible(mesh: &FiberMesh, warp: &WarpSpec, u: &[f64], margin: f64) -> bool {
    u.iter().all(|&t| warp.domain().contains(t)) && spacelike_status(mesh, warp, u, margin).within_margin
}

#[inline]
fn lambda_checked(f: f64, s: f64, vertex: usize) -> Result<f64> {
    let l2 = f * f - s;
    if l2 > 0.0 && l2.is_finite() {
        Ok(sqrt(l2))
    } else {
        Err(Error::Geometry { vertex, ratio: sqrt(s) / f, bound: 1.0 })
    }
}

fn corner_quadrature<G: Fn(f64, f64, f64, f64) -> f64>(
    mesh: &FiberMesh,
    warp: &WarpSpec,
    u: &[f64],
    integrand: G,
) -> Result<f64> {
    let n = mesh.dim();
    let mut acc = CompensatedSum::new();
    for c in mesh.corners() {
        let f = warp.derivs_unchecked(u[c.owner]).0;
        let g = c.gradient(u);
        let s = dot3(&g, &g);
        let lam = lambda_checked(f, s, c.owner)?;
        acc.add(c.weight * integrand(f, powi(f, n - 1), lam, s));
    }
    Ok(acc.value())
}

/// Discrete action without the margin check (strict spacelikeness only).
pub(crate) fn action_unchecked(mesh: &FiberMesh, warp: &WarpSpec, u: &[f64]) -> Result<f64> {
    // f^{n-1}(λ - f) with λ - f = -s/(λ + f).
    corner_quadrature(mesh, warp, u, |f, fn1, lam, s| -fn1 * s / (lam + f))
}

/// Exact gradient `∂𝓘/∂u_v` of the discrete action.
pub(crate) fn action_gradient_unchecked(mesh: &FiberMesh, warp: &WarpSpec, u: &[f64]) -> Result<Vec<f64>> {
    let n = mesh.dim();
    let nf = n as f64;
    let mut grad = vec![0.0; u.len()];
    for c in mesh.corners() {
        let (f, fp, _) = warp.derivs_unchecked(u[c.owner]);
        let g = c.gradient(u);
        let s = dot3(&g, &g);
        let lam = lambda_checked(f, s, c.owner)?;
        let fn1 = powi(f, n - 1);
        // ∂_u F = f' f^{n-2} (λ - f) ((n - 1) - f/λ)
        let lam_minus_f = -s / (lam + f);
        let f_u = fp * fn1 / f * lam_minus_f * ((nf - 1.0) - f / lam);
        grad[c.owner] += c.weight * f_u;
        // ∂_g F = -f^{n-1} g / λ
        let k = -c.weight * fn1 / lam;
        for (idx, coeff) in &c.stencil {
            grad[*idx] += k * dot3(&g, coeff);
        }
    }
    Ok(grad)
}

/// `R(u) = H(u) - f'(u)/f(u)` without the margin check.
pub(crate) fn residual_unchecked(mesh: &FiberMesh, warp: &WarpSpec, u: &[f64]) -> Result<Vec<f64>> {
    let n = mesh.dim();
    let mut r = action_gradient_unchecked(mesh, warp, u)?;
    for ((rv, &uv), m) in r.iter_mut().zip(u).zip(mesh.measure()) {
        let f = warp.derivs_unchecked(uv).0;
        *rv /= n as f64 * powi(f, n) * m;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn torus(n: usize) -> FiberMesh {
        FiberMesh::torus([n, n], [2.0 * PI, 2.0 * PI]).unwrap()
    }

    #[test]
    fn constants_give_hubble_mean_curvature() {
        let warp = WarpSpec::cosh();
        for mesh in [torus(16), FiberMesh::sphere(2).unwrap(), FiberMesh::circle(16, 3.0).unwrap()] {
            let u = GraphFunction::constant(&mesh, &warp, 0.4, DEFAULT_MARGIN).unwrap();
            let h = u.mean_curvature(MeanCurvatureForm::Weak).unwrap();
            for x in h {
                assert!((x - 0.4f64.tanh()).abs() < 1e-13);
            }
            assert!(u.action().unwrap().abs() < 1e-25);
            let vol = u.volume().unwrap();
            let expect = 0.4f64.cosh().powi(mesh.dim() as i32) * mesh.total_volume();
            assert!((vol - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn slice_at_zero_in_de_sitter_is_maximal() {
        let mesh = FiberMesh::sphere(1).unwrap();
        let warp = WarpSpec::cosh();
        let u = GraphFunction::constant(&mesh, &warp, 0.0, DEFAULT_MARGIN).unwrap();
        assert!(u.mean_curvature(MeanCurvatureForm::Weak).unwrap().iter().all(|h| h.abs() < 1e-15));
    }

    #[test]
    fn strong_form_needs_grid() {
        let mesh = FiberMesh::sphere(1).unwrap();
        let warp = WarpSpec::cosh();
        let u = GraphFunction::constant(&mesh, &warp, 0.0, DEFAULT_MARGIN).unwrap();
        assert!(matches!(u.mean_curvature(MeanCurvatureForm::Strong), Err(Error::Unsupported(_))));
    }

    #[test]
    fn margin_violation_is_a_geometry_error() {
        let mesh = FiberMesh::circle(32, 2.0 * PI).unwrap();
        let warp = WarpSpec::constant(1.0).unwrap();
        let vals = mesh.sample(|p| 1.2 * p[0].sin());
        let u = GraphFunction::new(&mesh, &warp, vals, DEFAULT_MARGIN).unwrap();
        assert!(!u.spacelike().strictly_spacelike);
        assert!(matches!(u.residual(), Err(Error::Geometry { .. })));
        assert!(matches!(u.volume(), Err(Error::Geometry { .. })));
    }

    #[test]
    fn out_of_domain_values_rejected() {
        let mesh = FiberMesh::circle(8, 1.0).unwrap();
        let warp = WarpSpec::polynomial(vec![1.0], crate::Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert!(matches!(GraphFunction::constant(&mesh, &warp, 2.0, 0.05), Err(Error::Domain { .. })));
    }

    #[test]
    fn circle_maximal_curve_matches_closed_form() {
        // n = 1, f ≡ 1: H = u''/(1 - u'²)^{3/2}. The oracle uses analytic
        // derivatives of u = 0.3 sin θ.
        let warp = WarpSpec::constant(1.0).unwrap();
        let exact = |x: f64| {
            let (d1, d2) = (0.3 * x.cos(), -0.3 * x.sin());
            d2 / (1.0 - d1 * d1).powf(1.5)
        };
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let mesh = FiberMesh::circle(n, 2.0 * PI).unwrap();
            let u = GraphFunction::new(&mesh, &warp, mesh.sample(|p| 0.3 * p[0].sin()), 0.05).unwrap();
            let h = u.mean_curvature(MeanCurvatureForm::Strong).unwrap();
            let e = mesh
                .positions()
                .iter()
                .zip(&h)
                .map(|(p, hv)| (hv - exact(p[0])).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn nonconstant_graph_has_negative_action_and_unit_normal() {
        let mesh = torus(24);
        let warp = WarpSpec::exponential(1.0, 1.0).unwrap();
        let vals = mesh.sample(|p| 0.5 + 0.1 * p[0].sin() * p[1].cos());
        let u = GraphFunction::new(&mesh, &warp, vals, 0.05).unwrap();
        assert!(u.action().unwrap() < 0.0);
        let geo = u.geometry().unwrap();
        for v in 0..mesh.vertex_count() {
            assert!(geo.normal_defect(v).abs() < 1e-12);
            assert!(geo.nu[v] <= -1.0);
            assert!(geo.induced_metric_positive(v));
            let f = geo.f[v];
            assert!((geo.lambda[v].powi(2) + geo.grad_sq[v] - f * f).abs() < 1e-13 * f * f);
        }
    }

    #[test]
    fn slice_laplacians_vanish() {
        let mesh = torus(16);
        let warp = WarpSpec::cosh();
        let u = GraphFunction::constant(&mesh, &warp, 0.7, 0.05).unwrap();
        for l in u.algebraic_laplacians().unwrap() {
            assert!(l.tau.abs() < 1e-13 && l.primitive.abs() < 1e-13);
        }
    }
}
