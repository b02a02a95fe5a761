//! Pointwise residual fields of the identities on a single mesh.

use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::fiber::{Backend, GridShape};
use crate::graph::{
    action_unchecked, higher_curvatures, newton_data, schwarz_defect, shape_operator, spacelike_status,
    GraphFunction, MeanCurvatureForm,
};
use crate::linalg::mat2_mul;
use crate::math::{abs, binomial, dot3, powi, sqrt};
use crate::sum::CompensatedSum;
use crate::testfield::SmoothField;
use crate::{Error, Result};

fn grid_of<'a>(u: &GraphFunction<'a>, what: &str) -> Result<&'a GridShape> {
    u.mesh()
        .grid()
        .ok_or_else(|| Error::Unsupported(alloc::format!("{what} needs a grid backend")))
}

/// `(f, f', f'')` at every vertex.
fn warp_fields(u: &GraphFunction<'_>) -> Vec<(f64, f64, f64)> {
    u.values().iter().map(|&t| u.warp().derivs_unchecked(t)).collect()
}

/// `G⁻¹ a` for the induced metric `G = f² I - p pᵀ`:
/// `G⁻¹ = (I + p pᵀ/λ²)/f²`.
#[inline]
fn inverse_metric_apply(f: f64, p: &[f64; 2], lam2: f64, a: &[f64; 2]) -> [f64; 2] {
    let pa = p[0] * a[0] + p[1] * a[1];
    let f2 = f * f;
    [(a[0] + p[0] * pa / lam2) / f2, (a[1] + p[1] * pa / lam2) / f2]
}

/// Residual fields (max over components, per vertex) of
/// `[conformal_field, weingarten, normal_component_gradient, time_gradient]`.
///
/// * `∇̄_{X_i} K - f'(τ) X_i` for `K = f(t)∂t` along the frame
///   `X_i = ∂_i + p_i ∂t`, whose only nontrivial component is
///   `∂_i(f∘u) - f'(u) ∂_i u`;
/// * `∇̄_{X_i} N + A X_i` with `∇̄N` from central differences of the
///   normal field and `A` from the closed-form shape operator;
/// * `∇ḡ(K, N) + A Kᵀ`, with `ḡ(K, N) = -f²/λ` and `Kᵀ = -(f/λ²) Σ p_m X_m`;
/// * `∇τ + ∂tᵀ`, i.e. `G⁻¹ Du - Du/λ²`.
pub fn connection_residuals(u: &GraphFunction<'_>) -> Result<[Vec<f64>; 4]> {
    let grid = grid_of(u, "the connection identities")?;
    let shape = shape_operator(u)?;
    let n = u.mesh().dim();
    let nv = u.values().len();
    let wf = warp_fields(u);
    let fu: Vec<f64> = wf.iter().map(|w| w.0).collect();
    let nt: Vec<f64> = shape.iter().map(|s| s.f / s.lambda).collect();
    let nm: [Vec<f64>; 2] = core::array::from_fn(|m| shape.iter().map(|s| s.p[m] / (s.f * s.lambda)).collect());
    let gk: Vec<f64> = shape.iter().map(|s| -s.f * s.f / s.lambda).collect();

    let mut out: [Vec<f64>; 4] = core::array::from_fn(|_| vec![0.0; nv]);
    for v in 0..nv {
        let s = &shape[v];
        let (f, fp) = (s.f, s.fp);
        let lam2 = s.lambda * s.lambda;
        let mut conformal: f64 = 0.0;
        let mut weingarten: f64 = 0.0;
        let mut dgk = [0.0; 2];
        for i in 0..n {
            conformal = conformal.max(abs(grid.d1(&fu, v, i) - fp * s.p[i]));
            for m in 0..n {
                let delta = if i == m { 1.0 } else { 0.0 };
                let cov = grid.d1(&nm[m], v, i) + (fp / f) * (s.p[i] * nm[m][v] + delta * nt[v]);
                weingarten = weingarten.max(abs(cov + s.shape[m][i]));
            }
            let ap: f64 = (0..n).map(|m| s.shape[m][i] * s.p[m]).sum();
            let cov_t = grid.d1(&nt, v, i) + f * fp * nm[i][v];
            weingarten = weingarten.max(abs(cov_t + ap));
            dgk[i] = grid.d1(&gk, v, i);
        }
        let grad_gk = inverse_metric_apply(f, &s.p, lam2, &dgk);
        let grad_tau = inverse_metric_apply(f, &s.p, lam2, &s.p);
        let mut normal_grad: f64 = 0.0;
        let mut time_grad: f64 = 0.0;
        for m in 0..n {
            let akt: f64 = (0..n).map(|i| s.shape[m][i] * s.p[i]).sum::<f64>() * f / lam2;
            normal_grad = normal_grad.max(abs(grad_gk[m] - akt));
            time_grad = time_grad.max(abs(grad_tau[m] - s.p[m] / lam2));
        }
        out[0][v] = conformal;
        out[1][v] = weingarten;
        out[2][v] = normal_grad;
        out[3][v] = time_grad;
    }
    Ok(out)
}

/// Laplace-Beltrami operator of the induced metric on a grid, in divergence
/// form `(1/√G) ∂_i(√G G^{ij} ∂_j φ)` with `√G = f^{n-1} λ`.
fn induced_laplacian(grid: &GridShape, n: usize, f: &[f64], p: &[[f64; 2]], phi: &[f64]) -> Vec<f64> {
    let dphi = grid.central_gradient(phi);
    let mut sqrt_g = Vec::with_capacity(phi.len());
    let flux: Vec<[f64; 2]> = (0..phi.len())
        .map(|v| {
            let lam2 = f[v] * f[v] - (p[v][0] * p[v][0] + p[v][1] * p[v][1]);
            let sg = powi(f[v], n - 1) * sqrt(lam2);
            sqrt_g.push(sg);
            let q = inverse_metric_apply(f[v], &p[v], lam2, &dphi[v]);
            [sg * q[0], sg * q[1]]
        })
        .collect();
    grid.central_divergence(&flux).into_iter().zip(sqrt_g).map(|(d, sg)| d / sg).collect()
}

/// Residual fields `[Δτ - Δτ_alg, ΔF(τ) - ΔF_alg]` with the discrete
/// Laplace-Beltrami operator of `g_u`.
pub fn laplacian_residuals(u: &GraphFunction<'_>) -> Result<[Vec<f64>; 2]> {
    let grid = grid_of(u, "the Laplacian identities")?;
    let alg = u.algebraic_laplacians()?;
    let n = u.mesh().dim();
    let f: Vec<f64> = u.values().iter().map(|&t| u.warp().derivs_unchecked(t).0).collect();
    let p = grid.central_gradient(u.values());
    let prim: Vec<f64> = u.values().iter().map(|&t| u.warp().primitive_unchecked(t)).collect();
    let lap_tau = induced_laplacian(grid, n, &f, &p, u.values());
    let lap_prim = induced_laplacian(grid, n, &f, &p, &prim);
    Ok([
        lap_tau.iter().zip(&alg).map(|(l, a)| l - a.tau).collect(),
        lap_prim.iter().zip(&alg).map(|(l, a)| l - a.primitive).collect(),
    ])
}

/// The three integrated terms of the integral formula and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralTerms {
    /// `∫ (n-1) f ḡ(∇H, ∂t) dV`.
    pub gradient_term: f64,
    /// `∫ f Ric̄(∂tᵀ, N) dV`.
    pub ricci_term: f64,
    /// `∫ f ν (tr A² - n H²) dV`.
    pub umbilicity_term: f64,
    pub total: f64,
}

/// Near-slice bound for the sphere approximation of `tr A²`.
pub const NEAR_SLICE_RATIO: f64 = 0.1;

/// Evaluate the integral formula on the graph.
///
/// `ḡ(∇H, ∂t) = -g_u(∇H, ∇τ) = -(DH·Du)/λ²`, and with `N = N^F - ν∂t`,
/// `ḡ(N^F, N^F) = ν² - 1`:
///
/// ```text
/// Ric̄(∂tᵀ, N) = ν { Ric^F(N^F, N^F) + (ν² - 1)(f''/f + (n-1) f'²/f²) + (1 - ν²) n f''/f },
/// ```
///
/// with `Ric^F(N^F, N^F) = c |Du|²/(f²λ²)` for a fiber with `Ric^F = c g`.
/// On the torus `H`, `A` come from the closed-form shape operator; on the
/// sphere `H` is the weak-form mean curvature and `tr A² - nH²` is taken as
/// zero, which is only admissible near slices.
pub fn integral_formula(u: &GraphFunction<'_>) -> Result<IntegralTerms> {
    let mesh = u.mesh();
    let n = mesh.dim();
    let nf = n as f64;
    let c = mesh
        .ricci_constant()
        .ok_or_else(|| Error::Unsupported("the integral formula needs a fiber with constant Ricci curvature".into()))?;
    let wf = warp_fields(u);
    let nv = u.values().len();
    let (grad_h, grad_u, defect): (Vec<[f64; 3]>, Vec<[f64; 3]>, Vec<f64>) = match mesh.backend() {
        Backend::Torus | Backend::Circle => {
            let grid = grid_of(u, "the integral formula")?;
            let shape = shape_operator(u)?;
            let h: Vec<f64> = shape.iter().map(|s| s.mean_curvature).collect();
            let gh: Vec<[f64; 3]> = grid.central_gradient(&h).into_iter().map(|g| [g[0], g[1], 0.0]).collect();
            let gu = shape.iter().map(|s| [s.p[0], s.p[1], 0.0]).collect();
            let defect = shape.iter().map(|s| schwarz_defect(&s.shape, n)).collect();
            (gh, gu, defect)
        }
        Backend::Sphere => {
            let gu = mesh.vertex_gradient(u.values());
            let fmin = wf.iter().map(|w| w.0).fold(f64::INFINITY, f64::min);
            let sup = gu.iter().map(|g| sqrt(dot3(g, g))).fold(0.0, f64::max);
            if sup > NEAR_SLICE_RATIO * fmin {
                return Err(Error::UnsupportedRegime(alloc::format!(
                    "sup |Du| = {sup:.3e} exceeds {NEAR_SLICE_RATIO}·min f = {:.3e}; \
                     the sphere evaluation of tr A² is restricted to near-slice graphs",
                    NEAR_SLICE_RATIO * fmin
                )));
            }
            let h = u.mean_curvature(MeanCurvatureForm::Weak)?;
            let gh = mesh.vertex_gradient(&h);
            let defect = sphere_traceless_defect(u, &gu);
            (gh, gu, defect)
        }
    };
    let (mut t1, mut t2, mut t3) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for v in 0..nv {
        let (f, fp, fpp) = wf[v];
        let s = dot3(&grad_u[v], &grad_u[v]);
        let lam2 = f * f - s;
        let lam = sqrt(lam2);
        let nu = -f / lam;
        let dv = powi(f, n - 1) * lam * mesh.measure()[v];
        let gh_dot_t = -dot3(&grad_h[v], &grad_u[v]) / lam2;
        let ric_fiber = c * s / (f * f * lam2);
        let ric = nu
            * (ric_fiber + (nu * nu - 1.0) * (fpp / f + (nf - 1.0) * fp * fp / (f * f))
                + (1.0 - nu * nu) * nf * fpp / f);
        t1.add((nf - 1.0) * f * gh_dot_t * dv);
        t2.add(f * ric * dv);
        t3.add(f * nu * defect[v] * dv);
    }
    let (gradient_term, ricci_term, umbilicity_term) = (t1.value(), t2.value(), t3.value());
    Ok(IntegralTerms { gradient_term, ricci_term, umbilicity_term, total: gradient_term + ricci_term + umbilicity_term })
}

/// `tr A² - (tr A)²/n` on the sphere from the covariant form of the shape
/// operator, `A = -[∇W + (f'/f)(W ⊗ Du + (f/λ) I)]` with `W = Du/(fλ)`,
/// where `∇W` is the tangential projection of the vertex gradients of the
/// ambient components of `W`. Second derivatives are only estimated to
/// first order on the mesh, which is why the caller restricts this to
/// near-slice graphs.
fn sphere_traceless_defect(u: &GraphFunction<'_>, grad_u: &[[f64; 3]]) -> Vec<f64> {
    let mesh = u.mesh();
    let nv = grad_u.len();
    let mut w: [Vec<f64>; 3] = core::array::from_fn(|_| vec![0.0; nv]);
    let mut coef = Vec::with_capacity(nv);
    for (v, &t) in u.values().iter().enumerate() {
        let (f, fp, _) = u.warp().derivs_unchecked(t);
        let g = grad_u[v];
        let lam = sqrt(f * f - dot3(&g, &g));
        for k in 0..3 {
            w[k][v] = g[k] / (f * lam);
        }
        coef.push((fp / f, f / lam));
    }
    let jac: [Vec<[f64; 3]>; 3] = core::array::from_fn(|k| mesh.vertex_gradient(&w[k]));
    (0..nv)
        .map(|v| {
            let x = mesh.positions()[v];
            let proj = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 } - x[a] * x[b];
            let (hub, nt) = coef[v];
            let mut m = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] = jac[a][v][b];
                }
            }
            let mut op = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let mut pmp = 0.0;
                    for c in 0..3 {
                        for d in 0..3 {
                            pmp += proj(a, c) * m[c][d] * proj(d, b);
                        }
                    }
                    op[a][b] = -(pmp + hub * (w[a][v] * grad_u[v][b] + nt * proj(a, b)));
                }
            }
            let tr: f64 = (0..3).map(|a| op[a][a]).sum();
            let tr2: f64 = (0..3).map(|a| (0..3).map(|b| op[a][b] * op[b][a]).sum::<f64>()).sum();
            tr2 - tr * tr / 2.0
        })
        .collect()
}

/// Residual field of `L_j F(τ) = -c_j (f' H_j + f H_{j+1} ν)` where
/// `L_j φ = tr(P_j ∘ Hess φ)` with the Hessian of the induced metric.
pub fn lk_residual(u: &GraphFunction<'_>, j: usize) -> Result<Vec<f64>> {
    let grid = grid_of(u, "the L_j display")?;
    let n = u.mesh().dim();
    if j == 0 || j >= n {
        return Err(Error::Config(alloc::format!("L_j display needs 1 ≤ j ≤ n - 1, got j = {j} with n = {n}")));
    }
    let shape = shape_operator(u)?;
    let prim: Vec<f64> = u.values().iter().map(|&t| u.warp().primitive_unchecked(t)).collect();
    let cj = (n - j) as f64 * binomial(n, j);
    Ok((0..prim.len())
        .map(|v| {
            let s = &shape[v];
            let (f, fp) = (s.f, s.fp);
            let (p, hu) = (s.p, s.h);
            let lam2 = s.lambda * s.lambda;
            let phi = grid.jet(&prim, v);
            // ∂_k G_ij = 2 f f' p_k δ_ij - h_ik p_j - p_i h_jk
            let dg = |k: usize, i: usize, jj: usize| {
                let d = if i == jj { 2.0 * f * fp * p[k] } else { 0.0 };
                d - hu[i][k] * p[jj] - p[i] * hu[jj][k]
            };
            // Γ_{l,ij} = ½(∂_i G_jl + ∂_j G_il - ∂_l G_ij), contracted with G⁻¹ ∂φ.
            let grad_phi = inverse_metric_apply(f, &p, lam2, &phi.p);
            let mut hess = [[0.0; 2]; 2];
            for i in 0..n {
                for jj in 0..n {
                    let gamma_dphi: f64 =
                        (0..n).map(|l| 0.5 * (dg(i, jj, l) + dg(jj, i, l) - dg(l, i, jj)) * grad_phi[l]).sum();
                    hess[i][jj] = phi.h[i][jj] - gamma_dphi;
                }
            }
            // Mixed Hessian Hess^m_i = G^{mk} Hess_ki.
            let mut mixed = [[0.0; 2]; 2];
            for i in 0..n {
                let col = inverse_metric_apply(f, &p, lam2, &[hess[0][i], hess[1][i]]);
                for m in 0..n {
                    mixed[m][i] = col[m];
                }
            }
            let pj = newton_data(&s.shape, n)[j];
            let prod = mat2_mul(&pj, &mixed);
            let lhs: f64 = (0..n).map(|k| prod[k][k]).sum();
            let hc = higher_curvatures(&s.shape, n);
            let nu = -f / s.lambda;
            let rhs = -cj * (fp * hc.h[j] + f * hc.h[j + 1] * nu);
            lhs - rhs
        })
        .collect())
}

/// Finite-difference first variation of the action against the weighted
/// residual `Σ_v n f(u_v)^n m_v R_v v_v`, which is the lumped form of
/// `-∫ n f^{n-1} λ (H - f'/f) w v dV` with weight `w = -f/λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElOutcome {
    pub constant: bool,
    pub step: f64,
    pub direction_seeds: Vec<u64>,
    pub fd: Vec<f64>,
    pub assembled: Vec<f64>,
    pub relative_errors: Vec<f64>,
}

pub fn el_check(u: &GraphFunction<'_>, directions: usize, step: f64, seed: u64) -> Result<ElOutcome> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(alloc::format!("finite-difference step must be positive, got {step}")));
    }
    let mesh = u.mesh();
    let warp = u.warp();
    let n = mesh.dim();
    let r = u.residual()?;
    let weights: Vec<f64> = u
        .values()
        .iter()
        .zip(mesh.measure())
        .map(|(&t, m)| n as f64 * powi(warp.derivs_unchecked(t).0, n) * m)
        .collect();
    let constant = u.oscillation() == 0.0;
    let mut out = ElOutcome {
        constant,
        step,
        direction_seeds: Vec::with_capacity(directions),
        fd: Vec::with_capacity(directions),
        assembled: Vec::with_capacity(directions),
        relative_errors: Vec::with_capacity(directions),
    };
    for k in 0..directions {
        let dseed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k as u64 + 1);
        let dir = SmoothField::random(mesh, dseed).sample(mesh);
        let shifted = |sign: f64| -> Result<f64> {
            let w: Vec<f64> = u.values().iter().zip(&dir).map(|(a, d)| a + sign * step * d).collect();
            let st = spacelike_status(mesh, warp, &w, u.margin());
            if !st.strictly_spacelike || !w.iter().all(|&t| warp.domain().contains(t)) {
                return Err(Error::Config(alloc::format!(
                    "finite-difference step {step} leaves the spacelike region (ratio {:.3})",
                    st.max_ratio
                )));
            }
            action_unchecked(mesh, warp, &w)
        };
        let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * step);
        let mut acc = CompensatedSum::new();
        for ((w, rv), d) in weights.iter().zip(&r).zip(&dir) {
            acc.add(w * rv * d);
        }
        let assembled = acc.value();
        let scale = abs(assembled).max(abs(fd));
        out.direction_seeds.push(dseed);
        out.fd.push(fd);
        out.assembled.push(assembled);
        out.relative_errors.push(if scale > 0.0 { abs(fd - assembled) / scale } else { 0.0 });
    }
    Ok(out)
}

/// Pointwise inequality `ΔF(τ) ≤ -n f'(τ)(1 + ν) ≤ 0` where `H ≤ f'/f` and
/// `f' ≤ 0`, and the mirrored inequality where `H ≥ f'/f` and `f' ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPrincipleOutcome {
    pub checked_vertices: usize,
    pub vertices: Vec<usize>,
    /// Amount by which either inequality fails at each checked vertex.
    pub violation: Vec<f64>,
}

pub fn max_principle_check(u: &GraphFunction<'_>) -> Result<MaxPrincipleOutcome> {
    let n = u.mesh().dim() as f64;
    let geo = u.geometry()?;
    let alg = u.algebraic_laplacians()?;
    let mut out = MaxPrincipleOutcome { checked_vertices: 0, vertices: Vec::new(), violation: Vec::new() };
    for v in 0..u.values().len() {
        let (f, fp, h, nu) = (geo.f[v], geo.fp[v], geo.mean_curvature[v], geo.nu[v]);
        let r = h - fp / f;
        let lhs = alg[v].primitive;
        let bound = -n * fp * (1.0 + nu);
        let violation = if r <= 0.0 && fp <= 0.0 {
            (lhs - bound).max(bound).max(0.0)
        } else if r >= 0.0 && fp >= 0.0 {
            (bound - lhs).max(-bound).max(0.0)
        } else {
            continue;
        };
        out.checked_vertices += 1;
        out.vertices.push(v);
        out.violation.push(violation);
    }
    Ok(out)
}
