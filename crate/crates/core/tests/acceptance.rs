//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use grwlab_core::graph::{higher_curvatures, newton_data, schwarz_defect, shape_operator, MeanCurvatureForm};
use grwlab_core::identities::{
    run_suite, verify_el_equivalence, verify_integral_formula, verify_laplacian_identities, LadderSpec, Profile,
    Suite, EL_STEP,
};
use grwlab_core::solver::{solve, SolveConfig, Verdict};
use grwlab_core::testfield::random_graph;
use grwlab_core::warp::{conditions, SignClass};
use grwlab_core::warp::Interval;
use grwlab_core::{FiberMesh, GraphFunction, WarpSpec};

type Outcome = Result<String, String>;

fn torus(n: usize) -> FiberMesh {
    FiberMesh::torus([n, n], [2.0 * PI, 2.0 * PI]).unwrap()
}

fn exp_warp() -> WarpSpec {
    WarpSpec::exponential(1.0, 1.0).unwrap()
}

fn catalog() -> Vec<(&'static str, WarpSpec, Vec<f64>)> {
    let poly = WarpSpec::polynomial(vec![2.0, 0.5, 0.25], Interval::new(-1.0, 1.0).unwrap()).unwrap();
    let knots: Vec<f64> = (0..9).map(|k| -1.0 + 0.25 * k as f64).collect();
    let values: Vec<f64> = knots.iter().map(|t: &f64| 1.5 + 0.3 * t.sin()).collect();
    let tab = WarpSpec::tabulated(knots, values, None, None).unwrap();
    let levels = vec![-0.7, -0.2, 0.0, 0.35, 0.8];
    vec![
        ("constant", WarpSpec::constant(1.3).unwrap(), levels.clone()),
        ("exponential", WarpSpec::exponential(0.7, 1.4).unwrap(), levels.clone()),
        ("cosh", WarpSpec::cosh(), levels.clone()),
        ("polynomial", poly, levels.clone()),
        ("tabulated", tab, levels),
    ]
}

fn meshes() -> Vec<FiberMesh> {
    vec![FiberMesh::circle(64, 2.0 * PI).unwrap(), torus(32), FiberMesh::sphere(3).unwrap()]
}

/// Least-squares slope of `log e` against `log h`.
fn slope(h: &[f64], e: &[f64]) -> f64 {
    let k = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for mesh in meshes() {
        for (_, warp, levels) in catalog() {
            for &c in &levels {
                let u = GraphFunction::constant(&mesh, &warp, c, 0.05).map_err(|e| e.to_string())?;
                let (f, fp, _) = warp.derivs(c).unwrap();
                let mut forms = vec![MeanCurvatureForm::Weak];
                if mesh.backend().is_grid() {
                    forms.push(MeanCurvatureForm::Strong);
                }
                for form in forms {
                    let h = u.mean_curvature(form).map_err(|e| e.to_string())?;
                    worst = worst.max(sup(h.iter().map(|x| x - fp / f)));
                }
            }
        }
    }
    let msg = format!("max |H - f'/f| = {worst:.2e} over 3 backends x 5 warps x 5 levels");
    if worst <= 1e-10 { Ok(msg) } else { Err(msg) }
}

fn criterion_2() -> Outcome {
    let warp = exp_warp();
    let (mut hs, mut es) = (Vec::new(), Vec::new());
    for n in [32, 64, 128] {
        let mesh = torus(n);
        let u = random_graph(&mesh, &warp, 0.3, 0.3, 7, 0.05).map_err(|e| e.to_string())?;
        let strong = u.mean_curvature(MeanCurvatureForm::Strong).map_err(|e| e.to_string())?;
        let shape = shape_operator(&u).map_err(|e| e.to_string())?;
        let trace_route: Vec<f64> = shape.iter().map(|s| -(s.shape[0][0] + s.shape[1][1]) / 2.0).collect();
        hs.push(mesh.mesh_size());
        es.push(sup(strong.iter().zip(&trace_route).map(|(a, b)| a - b)));
    }
    let order = slope(&hs, &es);
    let msg = format!("errors {:?}, order {order:.3}", es.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>());
    if order >= 1.9 { Ok(msg) } else { Err(msg) }
}

fn criterion_3() -> Outcome {
    let warps = [exp_warp(), WarpSpec::cosh(), WarpSpec::constant(1.0).unwrap()];
    let mut orders = Vec::new();
    let mut slice_worst: f64 = 0.0;
    for warp in &warps {
        let spec = LadderSpec {
            mesh: torus(32),
            warp,
            profile: Profile::Random { base: 0.3, amplitude: 0.3, seed: 11 },
            margin: 0.05,
            levels: 3,
        };
        let rep = verify_laplacian_identities(&spec).map_err(|e| e.to_string())?;
        for c in &rep.checks {
            orders.push(c.order.unwrap_or(f64::NAN));
        }
        for mesh in [torus(32), FiberMesh::circle(64, 2.0 * PI).unwrap()] {
            let spec = LadderSpec { mesh, warp, profile: Profile::Constant { level: 0.4 }, margin: 0.05, levels: 2 };
            let rep = verify_laplacian_identities(&spec).map_err(|e| e.to_string())?;
            for c in &rep.checks {
                slice_worst = slice_worst.max(c.ladder.iter().map(|l| l.residual.max).fold(0.0, f64::max));
            }
        }
    }
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let msg = format!("min order {min_order:.3} over {} ladders, slice residual {slice_worst:.2e}", orders.len());
    if min_order >= 1.9 && slice_worst <= 1e-10 { Ok(msg) } else { Err(msg) }
}

fn criterion_4() -> Outcome {
    let mut slice_worst: f64 = 0.0;
    for mesh in meshes() {
        for (_, warp, levels) in catalog() {
            for &c in &levels {
                let u = GraphFunction::constant(&mesh, &warp, c, 0.05).unwrap();
                let t = grwlab_core::identities::integral_formula(&u).map_err(|e| e.to_string())?;
                slice_worst = slice_worst.max(t.total.abs());
            }
        }
    }
    let warp = exp_warp();
    let mut orders = Vec::new();
    for seed in [1, 2, 3] {
        let spec = LadderSpec {
            mesh: torus(32),
            warp: &warp,
            profile: Profile::Random { base: 0.0, amplitude: 0.3, seed },
            margin: 0.05,
            levels: 3,
        };
        let rep = verify_integral_formula(&spec).map_err(|e| e.to_string())?;
        orders.push(rep.checks[0].order.unwrap_or(f64::NAN));
    }
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let msg = format!("slice |I| max {slice_worst:.2e}, torus e^t orders {orders:.3?}");
    if slice_worst <= 1e-10 && min_order >= 1.0 { Ok(msg) } else { Err(msg) }
}

fn uniqueness_runs(mesh: &FiberMesh, warp: &WarpSpec, seeds: u64, zero_h: bool) -> Outcome {
    let start = Instant::now();
    let cfg = SolveConfig::default();
    let mut constant = 0;
    let mut worst_res: f64 = 0.0;
    let mut worst_osc: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for seed in 0..seeds {
        let u0 = random_graph(mesh, warp, 0.0, 0.3, seed, cfg.margin).map_err(|e| e.to_string())?;
        let rep = solve(&u0, &cfg).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(rep.final_residual);
        worst_osc = worst_osc.max(rep.oscillation);
        if zero_h {
            let u = u0.with_values(rep.values.clone()).unwrap();
            worst_h = worst_h.max(sup(u.mean_curvature(MeanCurvatureForm::Weak).unwrap()));
        }
        if rep.verdict == Verdict::Constant && rep.oscillation <= 1e-6 && rep.final_residual <= 1e-10 {
            constant += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut msg = format!(
        "{constant}/{seeds} constant, max residual {worst_res:.2e}, max osc {worst_osc:.2e}, {secs:.1}s"
    );
    if zero_h {
        msg.push_str(&format!(", max |H| {worst_h:.2e}"));
    }
    let ok = constant == seeds && secs < 300.0 && (!zero_h || worst_h <= 1e-10);
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_5() -> Outcome {
    uniqueness_runs(&torus(64), &exp_warp(), 10, false)
}

fn criterion_6() -> Outcome {
    uniqueness_runs(&FiberMesh::sphere(3).unwrap(), &WarpSpec::cosh(), 10, false)
}

fn criterion_7() -> Outcome {
    uniqueness_runs(&torus(64), &WarpSpec::constant(1.0).unwrap(), 5, true)
}

fn criterion_8() -> Outcome {
    let warps = [exp_warp(), WarpSpec::cosh(), WarpSpec::constant(1.0).unwrap()];
    let mut rel: f64 = 0.0;
    let mut at_constants: f64 = 0.0;
    for warp in &warps {
        for mesh in [torus(32), FiberMesh::sphere(3).unwrap()] {
            let spec = LadderSpec {
                mesh: mesh.clone(),
                warp,
                profile: Profile::Random { base: 0.2, amplitude: 0.3, seed: 4 },
                margin: 0.05,
                levels: 1,
            };
            let rep = verify_el_equivalence(&spec, 8, EL_STEP, 21).map_err(|e| e.to_string())?;
            rel = rel.max(rep.checks[0].finest_max());
            let spec = LadderSpec { profile: Profile::Constant { level: 0.2 }, ..spec };
            let rep = run_suite(Suite::El, &spec).map_err(|e| e.to_string())?;
            at_constants = at_constants.max(rep.checks[0].finest_max());
        }
    }
    let msg = format!("max relative FD error {rel:.2e} (8 directions), max |dI| at constants {at_constants:.2e}");
    if rel <= 1e-6 && at_constants <= 1e-8 { Ok(msg) } else { Err(msg) }
}

/// Eigenvalues of a symmetric 2×2 matrix by one Jacobi rotation.
fn jacobi_eigen(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    if m[0][1] == 0.0 {
        return ([m[0][0], m[1][1]], [[1.0, 0.0], [0.0, 1.0]]);
    }
    let theta = 0.5 * (2.0 * m[0][1]).atan2(m[0][0] - m[1][1]);
    let (s, c) = theta.sin_cos();
    let l0 = c * c * m[0][0] + 2.0 * s * c * m[0][1] + s * s * m[1][1];
    let l1 = s * s * m[0][0] - 2.0 * s * c * m[0][1] + c * c * m[1][1];
    ([l0, l1], [[c, -s], [s, c]])
}

fn criterion_9() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b, d) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let shape = [[a, b], [b, d]];
        let hc = higher_curvatures(&shape, 2);
        let p = newton_data(&shape, 2);
        // Brute force: principal curvatures of B = -A and their subsets.
        let (k, q) = jacobi_eigen([[-a, -b], [-b, -d]]);
        let s1 = k[0] + k[1];
        let s2 = k[0] * k[1];
        // P_1 = Q diag(σ₁ - κ_i) Qᵀ, P_2 = 0.
        let p1_eig = [s1 - k[0], s1 - k[1]];
        for i in 0..2 {
            for j in 0..2 {
                let oracle = q[i][0] * p1_eig[0] * q[j][0] + q[i][1] * p1_eig[1] * q[j][1];
                worst = worst.max((p[1][i][j] - oracle).abs()).max(p[2][i][j].abs());
            }
        }
        let tr = |m: &[[f64; 2]; 2]| m[0][0] + m[1][1];
        worst = worst
            .max((hc.h[1] - s1 / 2.0).abs())
            .max((hc.h[2] - s2).abs())
            .max((tr(&p[0]) - 2.0).abs())
            .max((tr(&p[1]) - 2.0 * hc.h[1]).abs())
            .max(tr(&p[2]).abs());
    }
    let mut slice_worst: f64 = 0.0;
    let mesh = torus(16);
    for (_, warp, levels) in catalog() {
        for &c in &levels {
            let u = GraphFunction::constant(&mesh, &warp, c, 0.05).unwrap();
            let (f, fp, _) = warp.derivs(c).unwrap();
            for s in shape_operator(&u).map_err(|e| e.to_string())? {
                let hc = higher_curvatures(&s.shape, 2);
                for kk in 1..=2 {
                    slice_worst = slice_worst.max((hc.h[kk] - (fp / f).powi(kk as i32)).abs());
                }
            }
        }
    }
    let msg = format!("1000 matrices: max deviation {worst:.2e}; slices: max |H_k - (f'/f)^k| {slice_worst:.2e}");
    if worst <= 1e-12 && slice_worst <= 1e-12 { Ok(msg) } else { Err(msg) }
}

fn criterion_10() -> Outcome {
    let iv = Interval::new(-2.0, 2.0).unwrap();
    let sphere = FiberMesh::sphere(2).unwrap();
    let flat = torus(16);
    let ds = conditions(&WarpSpec::cosh(), &sphere, iv).map_err(|e| e.to_string())?;
    let oracle = &ds.einstein.as_ref().ok_or("no Einstein report for the sphere")?.oracle;
    let ds_ok = ds.ncc.margin.abs() <= 1e-12 && oracle.einstein && oracle.cbar.is_some_and(|c| c > 0.0);
    let ct = conditions(&WarpSpec::cosh(), &flat, iv).map_err(|e| e.to_string())?;
    let ct_ok = (ct.ncc.margin + 1.0).abs() <= 1e-12;
    let et = conditions(&exp_warp(), &flat, iv).map_err(|e| e.to_string())?;
    let et_ok = et.hubble_sign.class == SignClass::NonNegative
        && et.log_convexity.min.abs() <= 1e-12
        && et.log_convexity.max.abs() <= 1e-12;
    let msg = format!(
        "(cosh,S2) margin {:.1e} cbar {:?}; (cosh,T2) margin {:.15}; (e^t,T2) sign {:?} (log f)'' in [{:.1e},{:.1e}]",
        ds.ncc.margin, oracle.cbar, ct.ncc.margin, et.hubble_sign.class, et.log_convexity.min, et.log_convexity.max
    );
    if ds_ok && ct_ok && et_ok { Ok(msg) } else { Err(msg) }
}

fn criterion_11() -> Outcome {
    let mesh = torus(32);
    let warps = [exp_warp(), WarpSpec::cosh(), WarpSpec::constant(1.0).unwrap()];
    let mut min_defect = f64::INFINITY;
    for seed in 0..100u64 {
        let warp = &warps[(seed % 3) as usize];
        let u = random_graph(&mesh, warp, 0.1, 0.3, seed, 0.05).map_err(|e| e.to_string())?;
        for s in shape_operator(&u).map_err(|e| e.to_string())? {
            min_defect = min_defect.min(schwarz_defect(&s.shape, 2));
        }
    }
    let msg = format!("min trace(A^2) - nH^2 over 100 graphs: {min_defect:.2e}");
    if min_defect >= -1e-10 { Ok(msg) } else { Err(msg) }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("constants solve the equation", criterion_1),
        ("strong H vs shape-operator trace", criterion_2),
        ("Laplacian identities", criterion_3),
        ("integral formula", criterion_4),
        ("uniqueness, torus f = e^t", criterion_5),
        ("uniqueness, de Sitter sphere", criterion_6),
        ("maximal equation, f = 1", criterion_7),
        ("Euler-Lagrange equivalence", criterion_8),
        ("Newton transformation algebra", criterion_9),
        ("spacetime conditions", criterion_10),
        ("Schwarz defect", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(m) => println!("criterion {:>2} PASS  {name}: {m} [{secs:.2}s]", i + 1),
            Err(m) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {m} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
