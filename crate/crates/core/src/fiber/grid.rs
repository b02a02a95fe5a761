//! Periodic structured grids: the circle (`n = 1`) and the flat torus (`n = 2`).

use alloc::format;
use alloc::vec::Vec;

use super::{Backend, Corner, FiberMesh, MIN_GRID_RESOLUTION};
use crate::{Error, Result};

/// Shape of a periodic grid. The circle is stored with `axes = 1` and
/// `counts[1] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub axes: usize,
    pub counts: [usize; 2],
    pub lengths: [f64; 2],
}

/// Central-difference first and second derivatives at a grid vertex.
/// Entries for axes beyond `GridShape::axes` are zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub p: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl GridShape {
    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.counts[axis] as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.counts[0] * j
    }

    #[inline]
    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.counts[0], v / self.counts[0])
    }

    /// Index of the vertex displaced by `(di, dj)` with periodic wrap.
    #[inline]
    pub fn offset(&self, v: usize, di: isize, dj: isize) -> usize {
        let (i, j) = self.coords(v);
        let nx = self.counts[0] as isize;
        let ny = self.counts[1] as isize;
        let ii = (i as isize + di).rem_euclid(nx) as usize;
        let jj = (j as isize + dj).rem_euclid(ny) as usize;
        self.index(ii, jj)
    }

    #[inline]
    fn step(&self, axis: usize, s: isize) -> (isize, isize) {
        if axis == 0 {
            (s, 0)
        } else {
            (0, s)
        }
    }

    /// Second-order central first derivative along `axis`.
    pub fn d1(&self, field: &[f64], v: usize, axis: usize) -> f64 {
        let (a, b) = self.step(axis, 1);
        let fwd = field[self.offset(v, a, b)];
        let bwd = field[self.offset(v, -a, -b)];
        (fwd - bwd) / (2.0 * self.spacing(axis))
    }

    /// Central first derivatives of `field` along every axis, per vertex.
    pub fn central_gradient(&self, field: &[f64]) -> Vec<[f64; 2]> {
        (0..field.len())
            .map(|v| {
                let mut g = [0.0; 2];
                for (a, gk) in g.iter_mut().enumerate().take(self.axes) {
                    *gk = self.d1(field, v, a);
                }
                g
            })
            .collect()
    }

    /// Central first and second derivatives of `field` at every vertex.
    pub fn jets(&self, field: &[f64]) -> Vec<Jet> {
        (0..field.len()).map(|v| self.jet(field, v)).collect()
    }

    pub fn jet(&self, field: &[f64], v: usize) -> Jet {
        let mut jet = Jet::default();
        let u0 = field[v];
        for a in 0..self.axes {
            let h = self.spacing(a);
            let (da, db) = self.step(a, 1);
            let fwd = field[self.offset(v, da, db)];
            let bwd = field[self.offset(v, -da, -db)];
            jet.p[a] = (fwd - bwd) / (2.0 * h);
            jet.h[a][a] = (fwd - 2.0 * u0 + bwd) / (h * h);
        }
        if self.axes == 2 {
            let pp = field[self.offset(v, 1, 1)];
            let pm = field[self.offset(v, 1, -1)];
            let mp = field[self.offset(v, -1, 1)];
            let mm = field[self.offset(v, -1, -1)];
            let cross = (pp - pm - mp + mm) / (4.0 * self.spacing(0) * self.spacing(1));
            jet.h[0][1] = cross;
            jet.h[1][0] = cross;
        }
        jet
    }

    /// Conservative central-difference divergence of a per-vertex vector
    /// field in the flat coordinates of the grid.
    pub fn central_divergence(&self, flux: &[[f64; 2]]) -> Vec<f64> {
        (0..flux.len())
            .map(|v| {
                let mut d = 0.0;
                for a in 0..self.axes {
                    let (da, db) = self.step(a, 1);
                    let fwd = flux[self.offset(v, da, db)][a];
                    let bwd = flux[self.offset(v, -da, -db)][a];
                    d += (fwd - bwd) / (2.0 * self.spacing(a));
                }
                d
            })
            .collect()
    }
}

fn check_length(len: f64) -> Result<()> {
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::Config(format!("grid length must be positive, got {len}")));
    }
    Ok(())
}

fn check_resolution(n: usize) -> Result<()> {
    if n < MIN_GRID_RESOLUTION {
        return Err(Error::Config(format!(
            "grid resolution {n} below minimum {MIN_GRID_RESOLUTION}"
        )));
    }
    Ok(())
}

pub(super) fn build_circle(resolution: usize, length: f64) -> Result<FiberMesh> {
    check_resolution(resolution)?;
    check_length(length)?;
    let shape = GridShape { axes: 1, counts: [resolution, 1], lengths: [length, 1.0] };
    let h = shape.spacing(0);
    let positions = (0..resolution).map(|i| [i as f64 * h, 0.0, 0.0]).collect();
    let mut corners = Vec::with_capacity(2 * resolution);
    for v in 0..resolution {
        for s in [1.0f64, -1.0] {
            let nb = shape.offset(v, s as isize, 0);
            corners.push(Corner {
                owner: v,
                weight: 0.5 * h,
                stencil: [(v, [-s / h, 0.0, 0.0]), (nb, [s / h, 0.0, 0.0]), (v, [0.0; 3])],
            });
        }
    }
    let mut mesh = FiberMesh::finish(Backend::Circle, 1, positions, corners, 0.0);
    mesh.grid = Some(shape);
    mesh.total_volume = length;
    Ok(mesh)
}

pub(super) fn build_torus(resolution: [usize; 2], lengths: [f64; 2]) -> Result<FiberMesh> {
    for (&n, &l) in resolution.iter().zip(&lengths) {
        check_resolution(n)?;
        check_length(l)?;
    }
    let shape = GridShape { axes: 2, counts: resolution, lengths };
    let (h1, h2) = (shape.spacing(0), shape.spacing(1));
    let nv = resolution[0] * resolution[1];
    let mut positions = Vec::with_capacity(nv);
    for v in 0..nv {
        let (i, j) = shape.coords(v);
        positions.push([i as f64 * h1, j as f64 * h2, 0.0]);
    }
    let weight = 0.25 * h1 * h2;
    let mut corners = Vec::with_capacity(4 * nv);
    for v in 0..nv {
        for sx in [1.0f64, -1.0] {
            for sy in [1.0f64, -1.0] {
                let nx = shape.offset(v, sx as isize, 0);
                let ny = shape.offset(v, 0, sy as isize);
                corners.push(Corner {
                    owner: v,
                    weight,
                    stencil: [
                        (v, [-sx / h1, -sy / h2, 0.0]),
                        (nx, [sx / h1, 0.0, 0.0]),
                        (ny, [0.0, sy / h2, 0.0]),
                    ],
                });
            }
        }
    }
    let mut mesh = FiberMesh::finish(Backend::Torus, 2, positions, corners, 0.0);
    mesh.grid = Some(shape);
    mesh.total_volume = lengths[0] * lengths[1];
    Ok(mesh)
}
