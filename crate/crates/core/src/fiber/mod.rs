//! Discrete compact Riemannian fibers.
//!
//! Every backend is described by the same data: vertices with a lumped
//! measure, and *corners*. A corner belongs to one vertex, carries a quadrature
//! weight and a linear stencil that evaluates a one-sided (grid) or
//! piecewise-linear (mesh) gradient from at most three vertex values.
//!
//! * circle: two corners per vertex (left and right differences), weight `h/2`;
//! * torus: four corners per vertex (the four quadrants), weight `h₁h₂/4`;
//! * sphere: one corner per (vertex, incident triangle), weight `area/3`.
//!
//! The corner weights owned by a vertex sum to its lumped measure. The
//! gradient maps vertex fields to corner vector fields, and the divergence is
//! defined as its negative adjoint, so `⟨div V, u⟩ = -⟨V, grad u⟩` holds up to
//! rounding on every backend. The Laplacian `div ∘ grad` is the compact
//! five-point (three-point) stencil on grids and the lumped cotangent
//! Laplacian on the sphere.

mod grid;
mod sphere;

use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::math::dot3;
use crate::sum::CompensatedSum;
use crate::{Error, Result};

pub use grid::{GridShape, Jet};

/// Smallest grid resolution accepted per axis.
pub const MIN_GRID_RESOLUTION: usize = 8;
/// Largest icosphere subdivision level accepted.
pub const MAX_SPHERE_SUBDIVISIONS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Circle,
    Torus,
    Sphere,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Circle => "circle",
            Backend::Torus => "torus",
            Backend::Sphere => "sphere",
        }
    }

    /// Grid backends carry explicit coordinates and ambient Christoffel
    /// symbols, which the shape-operator code relies on.
    pub fn is_grid(self) -> bool {
        matches!(self, Backend::Circle | Backend::Torus)
    }
}

/// A quadrature point attached to a vertex together with its gradient stencil.
#[derive(Debug, Clone, Copy)]
pub struct Corner {
    pub owner: usize,
    pub weight: f64,
    /// `(vertex, coefficient)` pairs; the corner gradient is
    /// `Σ coefficient · u[vertex]`. Unused slots have zero coefficients.
    pub stencil: [(usize, [f64; 3]); 3],
}

impl Corner {
    #[inline]
    pub fn gradient(&self, u: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (idx, c) in &self.stencil {
            let val = u[*idx];
            g[0] += c[0] * val;
            g[1] += c[1] * val;
            g[2] += c[2] * val;
        }
        g
    }
}

/// A discrete compact fiber `(F, g)`.
#[derive(Debug, Clone)]
pub struct FiberMesh {
    backend: Backend,
    dim: usize,
    positions: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    grid: Option<GridShape>,
    subdivisions: Option<usize>,
    corners: Vec<Corner>,
    /// Corners owned by vertex `v` are `corners[corner_start[v]..corner_start[v + 1]]`.
    corner_start: Vec<usize>,
    measure: Vec<f64>,
    total_volume: f64,
    ricci_lower: f64,
    ricci_constant: Option<f64>,
}

impl FiberMesh {
    /// Uniform periodic grid on a circle of the given length (`n = 1`).
    ///
    /// The circle lies outside the `n ≥ 2` setting of the uniqueness results;
    /// it is kept as a cheap oracle backend and reports flag it.
    pub fn circle(resolution: usize, length: f64) -> Result<Self> {
        grid::build_circle(resolution, length)
    }

    /// Flat periodic torus `[0, L₁) × [0, L₂)` (`n = 2`, `Ric = 0`).
    pub fn torus(resolution: [usize; 2], lengths: [f64; 2]) -> Result<Self> {
        grid::build_torus(resolution, lengths)
    }

    /// Icosphere approximation of the unit round 2-sphere.
    pub fn sphere(subdivisions: usize) -> Result<Self> {
        sphere::build_sphere(subdivisions)
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Fiber dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Triangles of the sphere mesh (empty for grid backends).
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn grid(&self) -> Option<&GridShape> {
        self.grid.as_ref()
    }

    pub fn subdivisions(&self) -> Option<usize> {
        self.subdivisions
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    /// Corners owned by vertex `v`.
    pub fn corners_of(&self, v: usize) -> &[Corner] {
        &self.corners[self.corner_start[v]..self.corner_start[v + 1]]
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    /// Infimum of the Ricci eigenvalues of the fiber metric.
    pub fn ricci_lower(&self) -> f64 {
        self.ricci_lower
    }

    /// `Some(c)` when `Ric^F = c·g`.
    pub fn ricci_constant(&self) -> Option<f64> {
        self.ricci_constant
    }

    /// Whether the fiber dimension is covered by the `n ≥ 2` theory.
    pub fn in_theory_dimension(&self) -> bool {
        self.dim >= 2
    }

    /// A representative mesh size: grid spacing, or the mean edge length on
    /// the sphere.
    pub fn mesh_size(&self) -> f64 {
        match &self.grid {
            Some(g) => {
                let mut h: f64 = 0.0;
                for a in 0..g.axes {
                    h = h.max(g.spacing(a));
                }
                h
            }
            None => {
                let mut acc = CompensatedSum::new();
                for t in &self.triangles {
                    for k in 0..3 {
                        let a = &self.positions[t[k]];
                        let b = &self.positions[t[(k + 1) % 3]];
                        acc.add(crate::math::norm3(&crate::math::sub3(a, b)));
                    }
                }
                acc.value() / (3 * self.triangles.len()) as f64
            }
        }
    }

    /// The next level of the refinement ladder: grid resolution doubled, or
    /// one more icosphere subdivision.
    pub fn refine(&self) -> Result<Self> {
        match self.backend {
            Backend::Circle => {
                let g = self.grid.as_ref().expect("grid backend");
                Self::circle(2 * g.counts[0], g.lengths[0])
            }
            Backend::Torus => {
                let g = self.grid.as_ref().expect("grid backend");
                Self::torus([2 * g.counts[0], 2 * g.counts[1]], g.lengths)
            }
            Backend::Sphere => Self::sphere(self.subdivisions.unwrap_or(0) + 1),
        }
    }

    /// `Σ field(v)·measure(v)` in vertex order with compensated summation.
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        self.check_field(field)?;
        let mut acc = CompensatedSum::new();
        for (x, m) in field.iter().zip(&self.measure) {
            acc.add(x * m);
        }
        Ok(acc.value())
    }

    /// Discrete `L²` inner product of vertex fields.
    pub fn vertex_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for ((x, y), m) in a.iter().zip(b).zip(&self.measure) {
            acc.add(x * y * m);
        }
        acc.value()
    }

    /// Discrete `L²` inner product of corner vector fields.
    pub fn corner_inner(&self, a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
        let mut acc = CompensatedSum::new();
        for ((x, y), c) in a.iter().zip(b).zip(&self.corners) {
            acc.add(c.weight * dot3(x, y));
        }
        acc.value()
    }

    /// Corner gradient of a vertex field.
    pub fn gradient(&self, field: &[f64]) -> Vec<[f64; 3]> {
        assert_eq!(field.len(), self.vertex_count());
        self.corners.iter().map(|c| c.gradient(field)).collect()
    }

    /// Divergence of a corner vector field: the negative adjoint of
    /// [`gradient`](Self::gradient) with respect to the lumped measure.
    pub fn divergence(&self, vectors: &[[f64; 3]]) -> Vec<f64> {
        assert_eq!(vectors.len(), self.corners.len());
        let mut acc = vec![0.0; self.vertex_count()];
        self.scatter_transpose(vectors, &mut acc);
        for (a, m) in acc.iter_mut().zip(&self.measure) {
            *a = -*a / m;
        }
        acc
    }

    /// `acc[v] += Σ_c w_c V_c · coeff_{c,v}`, the unscaled transpose of the
    /// gradient.
    pub(crate) fn scatter_transpose(&self, vectors: &[[f64; 3]], acc: &mut [f64]) {
        for (c, vec) in self.corners.iter().zip(vectors) {
            for (idx, coeff) in &c.stencil {
                acc[*idx] += c.weight * dot3(vec, coeff);
            }
        }
    }

    /// Laplace-Beltrami operator `div ∘ grad`.
    pub fn laplacian(&self, field: &[f64]) -> Vec<f64> {
        self.divergence(&self.gradient(field))
    }

    /// Per-vertex gradient: the weight-averaged corner gradients (central
    /// differences on grids, area-weighted triangle gradients on the sphere).
    pub fn vertex_gradient(&self, field: &[f64]) -> Vec<[f64; 3]> {
        (0..self.vertex_count())
            .map(|v| {
                let mut g = [0.0; 3];
                for c in self.corners_of(v) {
                    let cg = c.gradient(field);
                    for k in 0..3 {
                        g[k] += c.weight * cg[k];
                    }
                }
                let m = self.measure[v];
                [g[0] / m, g[1] / m, g[2] / m]
            })
            .collect()
    }

    /// Evaluate a function of the vertex position.
    pub fn sample<F: FnMut(&[f64; 3]) -> f64>(&self, mut f: F) -> Vec<f64> {
        self.positions.iter().map(&mut f).collect()
    }

    pub(crate) fn check_field(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.vertex_count() {
            return Err(Error::Config(alloc::format!(
                "field has {} values, mesh has {} vertices",
                field.len(),
                self.vertex_count()
            )));
        }
        match field.iter().position(|x| !x.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    fn finish(
        backend: Backend,
        dim: usize,
        positions: Vec<[f64; 3]>,
        mut corners: Vec<Corner>,
        ricci_constant: f64,
    ) -> Self {
        let nv = positions.len();
        corners.sort_by_key(|c| c.owner);
        let mut corner_start = vec![0usize; nv + 1];
        for c in &corners {
            corner_start[c.owner + 1] += 1;
        }
        for v in 0..nv {
            corner_start[v + 1] += corner_start[v];
        }
        let mut measure = vec![0.0; nv];
        for c in &corners {
            measure[c.owner] += c.weight;
        }
        let total_volume = crate::sum::sum(measure.iter().copied());
        Self {
            backend,
            dim,
            positions,
            triangles: Vec::new(),
            grid: None,
            subdivisions: None,
            corners,
            corner_start,
            measure,
            total_volume,
            ricci_lower: ricci_constant,
            ricci_constant: Some(ricci_constant),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn circle_basic_counts() {
        let m = FiberMesh::circle(8, 1.0).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.grid().unwrap().spacing(0), 0.125);
        assert_eq!(m.dim(), 1);
        assert!(!m.in_theory_dimension());
        assert!(FiberMesh::circle(7, 1.0).is_err());
        assert!(FiberMesh::circle(8, -1.0).is_err());
    }

    #[test]
    fn circle_volume_is_length() {
        let m = FiberMesh::circle(64, 2.0 * PI).unwrap();
        assert_eq!(m.total_volume(), 2.0 * PI);
        let s = crate::sum::sum(m.measure().iter().copied());
        assert!(rel(s, 2.0 * PI) < 1e-12);
    }

    #[test]
    fn torus_volume_exact() {
        let m = FiberMesh::torus([32, 32], [2.0 * PI, 2.0 * PI]).unwrap();
        assert_eq!(m.total_volume(), 4.0 * PI * PI);
        let one = vec![1.0; m.vertex_count()];
        assert!(rel(m.integrate(&one).unwrap(), 4.0 * PI * PI) < 1e-12);
        assert!(FiberMesh::torus([32, 32], [0.0, 1.0]).is_err());
        assert!(FiberMesh::torus([4, 32], [1.0, 1.0]).is_err());
    }

    #[test]
    fn torus_sine_integrates_to_zero() {
        let m = FiberMesh::torus([32, 32], [2.0 * PI, 2.0 * PI]).unwrap();
        let s = m.sample(|p| p[0].sin());
        assert!(m.integrate(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let m = FiberMesh::circle(8, 1.0).unwrap();
        let mut f = vec![1.0; 8];
        f[3] = f64::NAN;
        assert_eq!(m.integrate(&f), Err(Error::NonFinite { index: 3 }));
    }

    #[test]
    fn gradient_of_constant_is_exactly_zero() {
        for m in [
            FiberMesh::circle(16, 3.0).unwrap(),
            FiberMesh::torus([8, 12], [1.0, 2.0]).unwrap(),
            FiberMesh::sphere(2).unwrap(),
        ] {
            let c = vec![0.731; m.vertex_count()];
            for g in m.gradient(&c) {
                assert!(g.iter().all(|x| x.abs() < 1e-13), "{:?}", g);
            }
        }
    }

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        for m in [
            FiberMesh::circle(16, 3.0).unwrap(),
            FiberMesh::torus([8, 12], [1.0, 2.0]).unwrap(),
            FiberMesh::sphere(2).unwrap(),
        ] {
            let u = pseudo_random(m.vertex_count(), 7);
            let raw = pseudo_random(3 * m.corners().len(), 11);
            let vf: Vec<[f64; 3]> = raw.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let lhs = m.vertex_inner(&m.divergence(&vf), &u);
            let rhs = -m.corner_inner(&vf, &m.gradient(&u));
            assert!(rel(lhs, rhs) < 1e-12, "{:?}: {lhs} vs {rhs}", m.backend());
        }
    }

    #[test]
    fn circle_laplacian_of_sine_second_order() {
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let m = FiberMesh::circle(n, 2.0 * PI).unwrap();
            let u = m.sample(|p| p[0].sin());
            let l = m.laplacian(&u);
            let e = l.iter().zip(&u).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
            let h = 2.0 * PI / n as f64;
            assert!(e <= h * h / 12.0 * 1.01, "error {e} above h²/12");
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9);
        }
    }

    #[test]
    fn torus_laplacian_of_cosine_second_order() {
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let m = FiberMesh::torus([n, n], [2.0 * PI, 2.0 * PI]).unwrap();
            let u = m.sample(|p| p[0].cos());
            let l = m.laplacian(&u);
            errs.push(l.iter().zip(&u).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn torus_gradient_energy_of_sine() {
        // ∫|∇ sin x₁|² = ∫cos² x₁ = 2π² on the (2π, 2π) torus.
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let m = FiberMesh::torus([n, n], [2.0 * PI, 2.0 * PI]).unwrap();
            let u = m.sample(|p| p[0].sin());
            let g = m.gradient(&u);
            errs.push((m.corner_inner(&g, &g) - 2.0 * PI * PI).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn sphere_counts_and_area() {
        assert_eq!(FiberMesh::sphere(0).unwrap().vertex_count(), 12);
        let m = FiberMesh::sphere(3).unwrap();
        assert_eq!(m.vertex_count(), 642);
        assert!(rel(m.total_volume(), 4.0 * PI) < 0.01);
        assert_eq!(m.ricci_lower(), 1.0);
        assert!(FiberMesh::sphere(8).is_err());
    }

    #[test]
    fn sphere_laplacian_of_height_converges_in_l2() {
        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let m = FiberMesh::sphere(k).unwrap();
            let z = m.sample(|p| p[2]);
            let l = m.laplacian(&z);
            let err: Vec<f64> = l.iter().zip(&z).map(|(a, b)| a + 2.0 * b).collect();
            let e = m.vertex_inner(&err, &err).sqrt();
            assert!(e < 0.7 * prev, "level {k}: {e} !< {prev}");
            prev = e;
        }
    }

    #[test]
    fn refine_preserves_metadata() {
        let t = FiberMesh::torus([8, 8], [2.0, 3.0]).unwrap();
        let r = t.refine().unwrap();
        assert_eq!(r.backend(), Backend::Torus);
        assert_eq!(r.dim(), 2);
        assert_eq!(r.total_volume(), t.total_volume());
        assert_eq!(r.ricci_constant(), t.ricci_constant());
        let s = FiberMesh::sphere(1).unwrap();
        let s2 = s.refine().unwrap();
        assert_eq!(s2.ricci_lower(), 1.0);
        assert!((s2.total_volume() - 4.0 * PI).abs() < (s.total_volume() - 4.0 * PI).abs());
    }
}
