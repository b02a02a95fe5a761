//! Icosphere approximation of the unit round 2-sphere.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::{Backend, Corner, FiberMesh, MAX_SPHERE_SUBDIVISIONS};
use crate::math::{cross3, dot3, norm3, sqrt, sub3};
use crate::{Error, Result};

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let r = norm3(&p);
    [p[0] / r, p[1] / r, p[2] / r]
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + sqrt(5.0)) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let faces = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (raw.iter().map(|p| normalize(*p)).collect(), faces.to_vec())
}

fn subdivide(positions: &mut Vec<[f64; 3]>, faces: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, positions: &mut Vec<[f64; 3]>| -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        *midpoints.entry(key).or_insert_with(|| {
            let (pa, pb) = (positions[a], positions[b]);
            positions.push(normalize([
                0.5 * (pa[0] + pb[0]),
                0.5 * (pa[1] + pb[1]),
                0.5 * (pa[2] + pb[2]),
            ]));
            positions.len() - 1
        })
    };
    let mut out = Vec::with_capacity(4 * faces.len());
    for &[a, b, c] in faces {
        let ab = mid(a, b, positions);
        let bc = mid(b, c, positions);
        let ca = mid(c, a, positions);
        out.push([a, ab, ca]);
        out.push([b, bc, ab]);
        out.push([c, ca, bc]);
        out.push([ab, bc, ca]);
    }
    out
}

/// Gradients of the three linear hat functions on a flat triangle, and its area.
pub(crate) fn hat_gradients(p: [[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let e1 = sub3(&p[1], &p[0]);
    let e2 = sub3(&p[2], &p[0]);
    let nrm = cross3(&e1, &e2);
    let twice_area = norm3(&nrm);
    let unit = [nrm[0] / twice_area, nrm[1] / twice_area, nrm[2] / twice_area];
    let mut grads = [[0.0; 3]; 3];
    for (k, g) in grads.iter_mut().enumerate() {
        // Opposite edge, oriented counter-clockwise about the normal.
        let edge = sub3(&p[(k + 2) % 3], &p[(k + 1) % 3]);
        let r = cross3(&unit, &edge);
        *g = [r[0] / twice_area, r[1] / twice_area, r[2] / twice_area];
    }
    (grads, 0.5 * twice_area)
}

pub(super) fn build_sphere(subdivisions: usize) -> Result<FiberMesh> {
    if subdivisions > MAX_SPHERE_SUBDIVISIONS {
        return Err(Error::Config(format!(
            "sphere subdivisions {subdivisions} above maximum {MAX_SPHERE_SUBDIVISIONS}"
        )));
    }
    let (mut positions, mut faces) = icosahedron();
    for _ in 0..subdivisions {
        faces = subdivide(&mut positions, &faces);
    }
    // Outward orientation.
    for f in faces.iter_mut() {
        let (a, b, c) = (positions[f[0]], positions[f[1]], positions[f[2]]);
        let n = cross3(&sub3(&b, &a), &sub3(&c, &a));
        if dot3(&n, &a) < 0.0 {
            f.swap(1, 2);
        }
    }
    let mut corners = Vec::with_capacity(3 * faces.len());
    for f in &faces {
        let (grads, area) = hat_gradients([positions[f[0]], positions[f[1]], positions[f[2]]]);
        let stencil = [(f[0], grads[0]), (f[1], grads[1]), (f[2], grads[2])];
        for &owner in f {
            corners.push(Corner { owner, weight: area / 3.0, stencil });
        }
    }
    // Unit round sphere: Ric = (n - 1) g = g.
    let mut mesh = FiberMesh::finish(Backend::Sphere, 2, positions, corners, 1.0);
    mesh.triangles = faces;
    mesh.subdivisions = Some(subdivisions);
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_gradients_reproduce_linear_functions() {
        let p = [[0.1, 0.0, 0.9], [1.0, 0.2, 0.8], [0.3, 1.1, 0.7]];
        let (g, area) = hat_gradients(p);
        assert!(area > 0.0);
        // Partition of unity: gradients sum to zero.
        for k in 0..3 {
            assert!((g[0][k] + g[1][k] + g[2][k]).abs() < 1e-14);
        }
        // ∇φ_i · (p_j - p_i) = -1 for j ≠ i.
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let d = dot3(&g[i], &sub3(&p[j], &p[i]));
                    assert!((d + 1.0).abs() < 1e-12, "{i}{j}: {d}");
                }
            }
        }
    }

    #[test]
    fn vertex_count_formula() {
        for k in 0..4 {
            let m = build_sphere(k).unwrap();
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(k as u32) + 2);
            assert_eq!(m.triangles().len(), 20 * 4usize.pow(k as u32));
            for p in m.positions() {
                assert!((norm3(p) - 1.0).abs() < 1e-14);
            }
        }
    }
}
