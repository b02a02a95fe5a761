//! Shape operator of a graph over a grid fiber, computed from central jets.
//!
//! Along the graph the tangent frame is `X_i = ∂_i + p_i ∂_t` and the shape
//! operator `A = -∇̄N` has components `A X_i = A^m_i X_m`. With the warped
//! product Christoffel symbols `Γ^t_ij = f f' δ_ij`, `Γ^i_tj = (f'/f) δ_ij`:
//!
//! ```text
//! A^m_i = -(∂_i N^m + (f'/f)(p_i N^m + δ_im N^t)).
//! ```

use alloc::vec::Vec;
use serde::Serialize;

use super::GraphFunction;
use crate::fiber::Jet;
use crate::linalg::{identity_n, mat2_det, mat2_mul, mat2_scale, mat2_sub, mat2_trace, Mat2};
use crate::math::{binomial, sqrt};
use crate::{Error, Result};

/// Pointwise differential data of a graph at one grid vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeJet {
    pub f: f64,
    pub fp: f64,
    pub lambda: f64,
    pub p: [f64; 2],
    pub h: [[f64; 2]; 2],
    /// `A[m][i] = A^m_i`.
    pub shape: Mat2,
    /// `-tr A / n`.
    pub mean_curvature: f64,
    /// `t`-component of `-∇̄_{X_i} N` minus `A^m_i p_m`; zero when `-∇̄N`
    /// is tangent to the graph.
    pub tangency_defect: [f64; 2],
}

/// Shape operator data from a jet `(p, h)` of `u` and `(f, f')` at `u`.
pub fn shape_from_jet(f: f64, fp: f64, jet: &Jet, dim: usize) -> ShapeJet {
    let p = jet.p;
    let h = jet.h;
    let s: f64 = (0..dim).map(|k| p[k] * p[k]).sum();
    let lam = sqrt(f * f - s);
    let nt = f / lam;
    let nm = [p[0] / (f * lam), p[1] / (f * lam)];
    let mut shape = [[0.0; 2]; 2];
    let mut tangency_defect = [0.0; 2];
    for i in 0..dim {
        let hp: f64 = (0..dim).map(|k| p[k] * h[k][i]).sum();
        let dlam = (f * fp * p[i] - hp) / lam;
        let dflam = fp * p[i] * lam + f * dlam;
        for m in 0..dim {
            let dn = h[m][i] / (f * lam) - p[m] * dflam / ((f * lam) * (f * lam));
            let delta = if i == m { 1.0 } else { 0.0 };
            shape[m][i] = -(dn + (fp / f) * (p[i] * nm[m] + delta * nt));
        }
        let dnt = fp * p[i] / lam - f * dlam / (lam * lam);
        let t_comp = -(dnt + f * fp * nm[i]);
        let ap: f64 = (0..dim).map(|m| shape[m][i] * p[m]).sum();
        tangency_defect[i] = t_comp - ap;
    }
    ShapeJet {
        f,
        fp,
        lambda: lam,
        p,
        h,
        shape,
        mean_curvature: -mat2_trace(&shape) / dim as f64,
        tangency_defect,
    }
}

/// Shape data at every vertex of a graph over a grid backend.
pub fn shape_operator(u: &GraphFunction<'_>) -> Result<Vec<ShapeJet>> {
    let mesh = u.mesh();
    let grid = mesh
        .grid()
        .ok_or_else(|| Error::Unsupported("the shape operator needs a grid backend".into()))?;
    u.ensure_margin()?;
    let dim = mesh.dim();
    Ok(u.values()
        .iter()
        .enumerate()
        .map(|(v, &t)| {
            let (f, fp, _) = u.warp().derivs_unchecked(t);
            shape_from_jet(f, fp, &grid.jet(u.values(), v), dim)
        })
        .collect())
}

/// Shape operator of a graph restricted to the tangent frame, expressed
/// against the induced metric: returns `g_u A` (the second fundamental
/// form `II(X_i, X_j)`), which is symmetric for a smooth graph.
pub fn shape_operator_tangent(jet: &ShapeJet, dim: usize) -> Mat2 {
    let f2 = jet.f * jet.f;
    let mut g = [[0.0; 2]; 2];
    for i in 0..dim {
        for j in 0..dim {
            g[i][j] = -jet.p[i] * jet.p[j] + if i == j { f2 } else { 0.0 };
        }
    }
    let mut ii = [[0.0; 2]; 2];
    for i in 0..dim {
        for j in 0..dim {
            ii[i][j] = (0..dim).map(|m| g[i][m] * jet.shape[m][j]).sum();
        }
    }
    ii
}

/// Elementary symmetric functions of the principal curvatures of `B = -A`
/// and the normalized curvatures `H_k = σ_k / C(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HigherCurvatures {
    pub sigma: [f64; 3],
    pub h: [f64; 3],
    /// Whether `P_1` is positive definite (all principal curvatures of
    /// the same strict sign, `n = 2`) or `n = 1`.
    pub elliptic: bool,
}

pub fn higher_curvatures(a: &Mat2, dim: usize) -> HigherCurvatures {
    let b = mat2_scale(a, -1.0);
    let (s1, s2) = if dim == 1 { (b[0][0], 0.0) } else { (mat2_trace(&b), mat2_det(&b)) };
    let sigma = [1.0, s1, s2];
    let mut h = [1.0, 0.0, 0.0];
    for k in 1..=dim {
        h[k] = sigma[k] / binomial(dim, k);
    }
    HigherCurvatures { sigma, h, elliptic: dim == 1 || s2 > 0.0 }
}

/// Newton transformations `P_0 = I`, `P_k = σ_k I - B P_{k-1}` of `B = -A`.
pub fn newton_data(a: &Mat2, dim: usize) -> [Mat2; 3] {
    let b = mat2_scale(a, -1.0);
    let hc = higher_curvatures(a, dim);
    let id = identity_n(dim);
    let p0 = id;
    let p1 = mat2_sub(&mat2_scale(&id, hc.sigma[1]), &mat2_mul(&b, &p0));
    let p2 = mat2_sub(&mat2_scale(&id, hc.sigma[2]), &mat2_mul(&b, &p1));
    [p0, p1, p2]
}

/// `tr A² - n H²`, which is nonnegative and vanishes exactly at umbilic points.
pub fn schwarz_defect(a: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        return 0.0;
    }
    let tr = mat2_trace(a);
    let det = mat2_det(a);
    0.5 * (tr * tr - 4.0 * det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::FiberMesh;
    use crate::graph::{GraphFunction, MeanCurvatureForm};
    use crate::warp::WarpSpec;
    use core::f64::consts::PI;

    #[test]
    fn slice_shape_operator_is_umbilic() {
        let jet = Jet::default();
        let s = shape_from_jet(2.0f64.cosh(), 2.0f64.sinh(), &jet, 2);
        let k = 2.0f64.tanh();
        assert!((s.shape[0][0] + k).abs() < 1e-15 && (s.shape[1][1] + k).abs() < 1e-15);
        assert!((s.mean_curvature - k).abs() < 1e-15);
        assert_eq!(schwarz_defect(&s.shape, 2), 0.0);
    }

    #[test]
    fn shape_operator_is_tangent_and_self_adjoint() {
        let jet = Jet { p: [0.2, -0.1], h: [[0.3, 0.05], [0.05, -0.4]] };
        let s = shape_from_jet(1.3, 0.7, &jet, 2);
        assert!(s.tangency_defect.iter().all(|d| d.abs() < 1e-14));
        let ii = shape_operator_tangent(&s, 2);
        assert!((ii[0][1] - ii[1][0]).abs() < 1e-14);
    }

    #[test]
    fn newton_traces() {
        let a = [[0.3, -0.2], [0.1, -0.7]];
        let hc = higher_curvatures(&a, 2);
        let p = newton_data(&a, 2);
        // tr P_k = (n - k) C(n, k) H_k
        assert!((mat2_trace(&p[0]) - 2.0).abs() < 1e-15);
        assert!((mat2_trace(&p[1]) - 2.0 * hc.h[1]).abs() < 1e-15);
        // Cayley-Hamilton
        assert!(p[2].iter().flatten().all(|x| x.abs() < 1e-15));
        // tr(A P_1) = -2 H_2
        assert!((mat2_trace(&mat2_mul(&a, &p[1])) + 2.0 * hc.h[2]).abs() < 1e-15);
        assert!(schwarz_defect(&a, 2) >= 0.0);
    }

    #[test]
    fn mean_curvature_routes_agree_at_second_order() {
        let warp = WarpSpec::cosh();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let mesh = FiberMesh::torus([n, n], [2.0 * PI, 2.0 * PI]).unwrap();
            let vals = mesh.sample(|x| 0.3 + 0.2 * x[0].sin() * (2.0 * x[1]).cos());
            let u = GraphFunction::new(&mesh, &warp, vals, 0.05).unwrap();
            let h = u.mean_curvature(MeanCurvatureForm::Strong).unwrap();
            let sj = shape_operator(&u).unwrap();
            errs.push(h.iter().zip(&sj).map(|(a, b)| (a - b.mean_curvature).abs()).fold(0.0, f64::max));
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
        }
    }
}
