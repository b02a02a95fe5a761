//! Seeded smooth test fields for refinement studies and initial data.
//!
//! A field is defined analytically on the continuous fiber, so sampling it on
//! every level of a refinement ladder gives the same underlying function.
//! Grid fibers use low Fourier modes, the sphere uses a sum of von Mises
//! bumps `w exp(κ(p·c - 1))` with random centers.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fiber::{Backend, FiberMesh};
use crate::graph::GraphFunction;
use crate::math::{abs, cos, dot3, exp, sin, sqrt};
use crate::warp::{Interval, WarpSpec};
use crate::{Error, Result};

const BUMPS: usize = 4;
const BUMP_CONCENTRATION: f64 = 2.0;
/// Fraction of the spacelike budget a rescaled random graph may use.
const SAFETY: f64 = 0.9;

#[derive(Debug, Clone, Serialize)]
pub enum FieldShape {
    /// `Σ a cos(k·x) + b sin(k·x)` with angular wave vectors `k`.
    Fourier { modes: Vec<([f64; 2], f64, f64)> },
    /// `Σ w exp(κ(p·c - 1))` on the unit sphere.
    Bumps { centers: Vec<([f64; 3], f64)>, concentration: f64 },
}

/// A smooth function on a fiber normalized to `sup |φ| = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothField {
    pub seed: u64,
    shape: FieldShape,
    offset: f64,
    scale: f64,
    sup_gradient: f64,
}

impl SmoothField {
    /// Random field for the backend and periods of `mesh`.
    pub fn random(mesh: &FiberMesh, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = match mesh.backend() {
            Backend::Circle | Backend::Torus => {
                let g = mesh.grid().expect("grid backend");
                let w = [
                    2.0 * core::f64::consts::PI / g.lengths[0],
                    2.0 * core::f64::consts::PI / g.lengths[1],
                ];
                let mut modes = Vec::new();
                if g.axes == 1 {
                    for k in 1..=3 {
                        modes.push(([k as f64 * w[0], 0.0], rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                    }
                } else {
                    for k1 in -2i32..=2 {
                        for k2 in 0i32..=2 {
                            let half = k2 > 0 || k1 > 0;
                            if half && k1.abs() + k2 <= 2 {
                                modes.push((
                                    [k1 as f64 * w[0], k2 as f64 * w[1]],
                                    rng.random_range(-1.0..1.0),
                                    rng.random_range(-1.0..1.0),
                                ));
                            }
                        }
                    }
                }
                FieldShape::Fourier { modes }
            }
            Backend::Sphere => {
                let centers = (0..BUMPS)
                    .map(|_| {
                        let z: f64 = rng.random_range(-1.0..1.0);
                        let phi: f64 = rng.random_range(0.0..2.0 * core::f64::consts::PI);
                        let r = sqrt(1.0 - z * z);
                        ([r * cos(phi), r * sin(phi), z], rng.random_range(-1.0..1.0))
                    })
                    .collect();
                FieldShape::Bumps { centers, concentration: BUMP_CONCENTRATION }
            }
        };
        let mut field = Self { seed, shape, offset: 0.0, scale: 1.0, sup_gradient: 0.0 };
        field.normalize(mesh);
        field
    }

    fn raw(&self, p: &[f64; 3]) -> (f64, [f64; 3]) {
        match &self.shape {
            FieldShape::Fourier { modes } => {
                let mut v = 0.0;
                let mut g = [0.0; 3];
                for (k, a, b) in modes {
                    let arg = k[0] * p[0] + k[1] * p[1];
                    let (s, c) = (sin(arg), cos(arg));
                    v += a * c + b * s;
                    let d = -a * s + b * c;
                    g[0] += d * k[0];
                    g[1] += d * k[1];
                }
                (v, g)
            }
            FieldShape::Bumps { centers, concentration } => {
                let mut v = 0.0;
                let mut g = [0.0; 3];
                for (c, w) in centers {
                    let pc = dot3(p, c);
                    let e = w * exp(concentration * (pc - 1.0));
                    v += e;
                    // tangential part of κ e c
                    for k in 0..3 {
                        g[k] += concentration * e * (c[k] - pc * p[k]);
                    }
                }
                (v, g)
            }
        }
    }

    fn normalize(&mut self, mesh: &FiberMesh) {
        let points = reference_points(mesh);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &points {
            let v = self.raw(p).0;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // The sphere field is shifted to zero mid-range so that it changes sign.
        self.offset = if matches!(self.shape, FieldShape::Bumps { .. }) { 0.5 * (lo + hi) } else { 0.0 };
        let sup = (hi - self.offset).max(self.offset - lo);
        self.scale = if sup > 0.0 { 1.0 / sup } else { 1.0 };
        self.sup_gradient = points
            .iter()
            .map(|p| {
                let g = self.raw(p).1;
                sqrt(dot3(&g, &g)) * self.scale
            })
            .fold(0.0, f64::max);
    }

    pub fn eval(&self, p: &[f64; 3]) -> f64 {
        (self.raw(p).0 - self.offset) * self.scale
    }

    pub fn gradient(&self, p: &[f64; 3]) -> [f64; 3] {
        let g = self.raw(p).1;
        [g[0] * self.scale, g[1] * self.scale, g[2] * self.scale]
    }

    /// Supremum of `|∇φ|` estimated on a fixed fine reference sample.
    pub fn sup_gradient(&self) -> f64 {
        self.sup_gradient
    }

    pub fn sample(&self, mesh: &FiberMesh) -> Vec<f64> {
        mesh.sample(|p| self.eval(p))
    }

    pub fn shape(&self) -> &FieldShape {
        &self.shape
    }
}

/// Mesh-independent sample used for normalization: a fine uniform grid on
/// the torus and circle, a Fibonacci lattice on the sphere.
fn reference_points(mesh: &FiberMesh) -> Vec<[f64; 3]> {
    match mesh.grid() {
        Some(g) if g.axes == 1 => (0..1024).map(|i| [i as f64 * g.lengths[0] / 1024.0, 0.0, 0.0]).collect(),
        Some(g) => {
            let m = 160;
            let mut pts = Vec::with_capacity(m * m);
            for j in 0..m {
                for i in 0..m {
                    pts.push([i as f64 * g.lengths[0] / m as f64, j as f64 * g.lengths[1] / m as f64, 0.0]);
                }
            }
            pts
        }
        None => {
            let m = 20_000;
            let golden = core::f64::consts::PI * (3.0 - sqrt(5.0));
            (0..m)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                    let r = sqrt(1.0 - z * z);
                    let phi = golden * i as f64;
                    [r * cos(phi), r * sin(phi), z]
                })
                .collect()
        }
    }
}

/// The largest amplitude `a ≤ requested` for which `base + a φ` stays inside
/// the warp domain and satisfies `a sup|∇φ| ≤ 0.9 (1 - ε) min f`.
pub fn spacelike_amplitude(field: &SmoothField, warp: &WarpSpec, base: f64, requested: f64, margin: f64) -> Result<f64> {
    let requested = abs(requested);
    if requested == 0.0 {
        warp.check(base)?;
        return Ok(0.0);
    }
    let range = Interval::new(base - requested, base + requested)?;
    if !warp.domain().contains_interval(&range) {
        return Err(Error::Domain { t: base, lo: warp.domain().lo, hi: warp.domain().hi });
    }
    let fmin = range.samples(257).map(|t| warp.derivs_unchecked(t).0).fold(f64::INFINITY, f64::min);
    let budget = SAFETY * (1.0 - margin) * fmin;
    let sg = field.sup_gradient();
    Ok(if requested * sg > budget { budget / sg } else { requested })
}

/// `u = base + a φ` for the seeded field `φ`, with `a` from
/// [`spacelike_amplitude`].
pub fn random_graph<'a>(
    mesh: &'a FiberMesh,
    warp: &'a WarpSpec,
    base: f64,
    amplitude: f64,
    seed: u64,
    margin: f64,
) -> Result<GraphFunction<'a>> {
    let field = SmoothField::random(mesh, seed);
    let a = spacelike_amplitude(&field, warp, base, amplitude, margin)?;
    let values = mesh.sample(|p| base + a * field.eval(p));
    GraphFunction::new(mesh, warp, values, margin)
}

/// `base + a·Π sin(2π x_i / L_i)` on grids and `base + a·z` on the sphere,
/// sampled exactly (no margin rescaling).
pub fn sine_values(mesh: &FiberMesh, base: f64, amplitude: f64) -> Vec<f64> {
    match mesh.grid() {
        Some(g) => {
            let (axes, lengths) = (g.axes, g.lengths);
            mesh.sample(|p| {
                base + amplitude * (0..axes).map(|a| sin(2.0 * core::f64::consts::PI * p[a] / lengths[a])).product::<f64>()
            })
        }
        None => mesh.sample(|p| base + amplitude * p[2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn fields_are_seeded_and_normalized() {
        let mesh = FiberMesh::torus([32, 32], [2.0 * PI, 2.0 * PI]).unwrap();
        let a = SmoothField::random(&mesh, 7).sample(&mesh);
        let b = SmoothField::random(&mesh, 7).sample(&mesh);
        let c = SmoothField::random(&mesh, 8).sample(&mesh);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let sup = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(sup <= 1.0 + 1e-9 && sup > 0.9);
    }

    #[test]
    fn sphere_field_changes_sign() {
        let mesh = FiberMesh::sphere(3).unwrap();
        let v = SmoothField::random(&mesh, 3).sample(&mesh);
        assert!(v.iter().any(|x| *x > 0.1) && v.iter().any(|x| *x < -0.1));
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let mesh = FiberMesh::torus([16, 16], [3.0, 5.0]).unwrap();
        let field = SmoothField::random(&mesh, 11);
        let p = [0.4, 1.3, 0.0];
        let g = field.gradient(&p);
        let d = 1e-6;
        let fx = (field.eval(&[p[0] + d, p[1], 0.0]) - field.eval(&[p[0] - d, p[1], 0.0])) / (2.0 * d);
        let fy = (field.eval(&[p[0], p[1] + d, 0.0]) - field.eval(&[p[0], p[1] - d, 0.0])) / (2.0 * d);
        assert!((g[0] - fx).abs() < 1e-7 && (g[1] - fy).abs() < 1e-7);
    }

    #[test]
    fn random_graphs_respect_the_margin() {
        let warp = WarpSpec::constant(1.0).unwrap();
        for mesh in [
            FiberMesh::torus([32, 32], [2.0 * PI, 2.0 * PI]).unwrap(),
            FiberMesh::sphere(3).unwrap(),
            FiberMesh::circle(64, 2.0 * PI).unwrap(),
        ] {
            for seed in 0..5 {
                let u = random_graph(&mesh, &warp, 0.0, 5.0, seed, 0.05).unwrap();
                assert!(u.spacelike().within_margin);
                assert!(u.oscillation() > 0.0);
            }
        }
    }
}
