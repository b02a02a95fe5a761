use std::path::{Path, PathBuf};
use std::time::Instant;

use grwlab_core::fiber::FiberMesh;
use grwlab_core::identities::{
    maximum_principle_sign_check, verify_connection_identities, verify_el_equivalence, verify_integral_formula,
    verify_laplacian_identities, verify_lk_display, IdentityReport, LadderSpec, Suite, TheoremVerdict,
};
use grwlab_core::solver::{solve, SolveConfig, SolveReport, Verdict};
use grwlab_core::warp::{conditions, ConditionReport, Interval, WarpSpec};
use grwlab_core::VERSION;
use serde::Serialize;

use crate::config::{parse_real, FiberConfig, InitConfig, RawConfig, RunConfig};
use crate::error::CliError;
use crate::output::{fmt17, off_mesh, write_atomic, write_json, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CONTRADICTION: i32 = 3;

pub const SOLVE_SCHEMA: &str = "grwlab.solve/1";
pub const VERIFY_SCHEMA: &str = "grwlab.verify/1";
pub const CONDITIONS_SCHEMA: &str = "grwlab.conditions/1";

/// Seed from `GRWLAB_SEED`, if set.
pub fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var("GRWLAB_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("GRWLAB_SEED must be a non-negative integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    source: &'a str,
    sections: &'a RawConfig,
    fiber: &'a FiberConfig,
    warp: &'a WarpSpec,
    solver: &'a SolveConfig,
    init: &'a InitConfig,
}

impl<'a> ConfigEcho<'a> {
    fn of(cfg: &'a RunConfig) -> Self {
        Self {
            source: cfg.raw.origin(),
            sections: &cfg.raw,
            fiber: &cfg.fiber,
            warp: &cfg.warp,
            solver: &cfg.solver,
            init: &cfg.init,
        }
    }
}

#[derive(Serialize)]
struct MeshSummary {
    backend: &'static str,
    dim: usize,
    vertices: usize,
    mesh_size: f64,
    total_volume: f64,
}

impl MeshSummary {
    fn of(mesh: &FiberMesh) -> Self {
        Self {
            backend: mesh.backend().name(),
            dim: mesh.dim(),
            vertices: mesh.vertex_count(),
            mesh_size: mesh.mesh_size(),
            total_volume: mesh.total_volume(),
        }
    }
}

#[derive(Serialize)]
struct ResidualSummary {
    initial: f64,
    final_inf: f64,
    tolerance: f64,
    iterations: usize,
    linear_iterations: usize,
    descent_steps: usize,
}

#[derive(Serialize)]
struct SolutionSummary {
    oscillation: f64,
    mean: f64,
    min: f64,
    max: f64,
    sup_grad_ratio: f64,
}

#[derive(Serialize)]
struct SolveJson<'a> {
    schema: &'static str,
    version: &'static str,
    seed: Option<u64>,
    config: ConfigEcho<'a>,
    mesh: MeshSummary,
    verdict: &'static str,
    contradiction: bool,
    exit_code: i32,
    residual: ResidualSummary,
    solution: SolutionSummary,
    wall_time_s: f64,
    theorems: &'a [TheoremVerdict],
}

pub struct SolveRun {
    pub report: SolveReport,
    pub exit_code: i32,
}

pub fn exit_code_for(report: &SolveReport) -> i32 {
    match report.verdict {
        Verdict::Constant => EXIT_OK,
        Verdict::NonconstantStationary if report.contradiction => EXIT_CONTRADICTION,
        Verdict::NonconstantStationary => EXIT_OK,
        Verdict::Diverged | Verdict::MarginStuck => EXIT_SOLVER,
    }
}

/// Solve and write the report files into `out`.
pub fn run_solve(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<SolveRun, CliError> {
    let mesh = cfg.fiber.build()?;
    let data = cfg.init.initial_data(&mesh)?;
    let u0 = data.build(&mesh, &cfg.warp, cfg.solver.margin)?;
    let start = Instant::now();
    let mut report = solve(&u0, &cfg.solver)?;
    report.wall_time_s = start.elapsed().as_secs_f64();
    let exit_code = exit_code_for(&report);

    let (min, max) = report.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if cfg.output.json {
        let json = SolveJson {
            schema: SOLVE_SCHEMA,
            version: VERSION,
            seed: cfg.init.seed(),
            config: ConfigEcho::of(cfg),
            mesh: MeshSummary::of(&mesh),
            verdict: report.verdict.name(),
            contradiction: report.contradiction,
            exit_code,
            residual: ResidualSummary {
                initial: report.residual_history[0],
                final_inf: report.final_residual,
                tolerance: cfg.solver.tol,
                iterations: report.iterations,
                linear_iterations: report.linear_iterations,
                descent_steps: report.descent_steps,
            },
            solution: SolutionSummary {
                oscillation: report.oscillation,
                mean: report.mean,
                min,
                max,
                sup_grad_ratio: report.sup_grad_ratio,
            },
            wall_time_s: report.wall_time_s,
            theorems: &report.theorems,
        };
        write_json(&out.join("report.json"), &json)?;
    }
    if cfg.output.csv {
        let mut t = Table::new(&["iteration", "residual_inf"])?;
        for (i, r) in report.residual_history.iter().enumerate() {
            t.row([i.to_string(), fmt17(*r)])?;
        }
        t.write(&out.join("residual_history.csv"))?;
        let mut t = Table::new(&["vertex", "x", "y", "z", "u"])?;
        for (v, (p, u)) in mesh.positions().iter().zip(&report.values).enumerate() {
            t.row([v.to_string(), fmt17(p[0]), fmt17(p[1]), fmt17(p[2]), fmt17(*u)])?;
        }
        t.write(&out.join("solution.csv"))?;
    }
    if cfg.output.off {
        match off_mesh(&mesh, &cfg.warp, &report.values) {
            Some(text) => write_atomic(&out.join("graph.off"), text.as_bytes())?,
            None if !quiet => println!("note: OFF export is not available for the circle backend"),
            None => {}
        }
    }
    if !quiet {
        println!(
            "verdict: {}{}",
            report.verdict.name(),
            if report.contradiction { " (CONTRADICTION: a theorem predicts a slice)" } else { "" }
        );
        println!(
            "iterations: {}  residual: {} -> {:.3e}  osc(u): {:.3e}  sup|Du|/f: {:.4}  time: {:.2}s",
            report.iterations,
            format_args!("{:.3e}", report.residual_history[0]),
            report.final_residual,
            report.oscillation,
            report.sup_grad_ratio,
            report.wall_time_s
        );
        if report.contradiction {
            for t in report.theorems.iter().filter(|t| t.contradiction) {
                println!("  {} [{}] predicts {:?}", t.theorem, t.branch, t.predicted);
            }
        }
        println!("reports written to {}", out.display());
    }
    Ok(SolveRun { report, exit_code })
}

pub fn cmd_solve(config: &Path, out: Option<PathBuf>) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config, seed_from_env()?)?;
    let out = out.unwrap_or_else(|| cfg.output.directory.clone());
    Ok(run_solve(&cfg, &out, false)?.exit_code)
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    schema: &'static str,
    version: &'static str,
    seed: Option<u64>,
    config: ConfigEcho<'a>,
    mesh: MeshSummary,
    levels: usize,
    passed: bool,
    report: &'a IdentityReport,
}

pub fn cmd_verify(config: &Path, suite: Option<String>, out: Option<PathBuf>) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config, seed_from_env()?)?;
    let name = suite
        .or_else(|| cfg.verify.suite.clone())
        .ok_or_else(|| CliError::Usage("no suite given: pass --suite or set verify.suite".into()))?;
    let suite = Suite::parse(&name).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        CliError::Usage(format!("unknown suite '{name}' (expected one of {})", names.join(", ")))
    })?;
    let mesh = cfg.fiber.build()?;
    if !suite.supports(mesh.backend()) {
        return Err(CliError::Usage(format!(
            "suite '{}' is not supported on the {} backend",
            suite.name(),
            mesh.backend().name()
        )));
    }
    let spec = LadderSpec {
        mesh: mesh.clone(),
        warp: &cfg.warp,
        profile: cfg.profile()?,
        margin: cfg.solver.margin,
        levels: cfg.verify.levels,
    };
    let report = match suite {
        Suite::Connection => verify_connection_identities(&spec)?,
        Suite::Laplacian => verify_laplacian_identities(&spec)?,
        Suite::Integral => verify_integral_formula(&spec)?,
        Suite::Lk => verify_lk_display(&spec, cfg.verify.lk_index)?,
        Suite::El => verify_el_equivalence(
            &spec,
            cfg.verify.el_directions,
            cfg.verify.el_step,
            spec.profile.seed().unwrap_or(0),
        )?,
        Suite::MaxPrinciple => maximum_principle_sign_check(&spec)?,
    };
    let out = out.unwrap_or_else(|| cfg.output.directory.clone());
    write_json(
        &out.join("identity_report.json"),
        &VerifyJson {
            schema: VERIFY_SCHEMA,
            version: VERSION,
            seed: spec.profile.seed(),
            config: ConfigEcho::of(&cfg),
            mesh: MeshSummary::of(&mesh),
            levels: cfg.verify.levels,
            passed: report.passed,
            report: &report,
        },
    )?;
    println!("suite {} on {} with warp {}", report.suite, report.backend, report.warp);
    if let Some(r) = &report.regime {
        println!("regime: {r}");
    }
    for c in &report.checks {
        let maxes: Vec<String> = c.ladder.iter().map(|l| format!("{:.3e}", l.residual.max)).collect();
        let order = c.order.map_or_else(|| "-".to_string(), |o| format!("{o:.3}"));
        println!(
            "  {:<28} {}  max residuals [{}]  order {order}",
            c.tag,
            if c.passed { "pass" } else { "FAIL" },
            maxes.join(", ")
        );
    }
    println!("{} ({})", if report.passed { "passed" } else { "failed" }, out.join("identity_report.json").display());
    Ok(if report.passed { EXIT_OK } else { EXIT_SOLVER })
}

fn split_spec(arg: &str) -> (&str, Vec<&str>) {
    match arg.split_once(':') {
        Some((name, params)) => (name.trim(), params.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()),
        None => (arg.trim(), Vec::new()),
    }
}

fn reals(what: &str, params: &[&str]) -> Result<Vec<f64>, CliError> {
    params
        .iter()
        .map(|p| parse_real(p).ok_or_else(|| CliError::Usage(format!("{what}: '{p}' is not a number"))))
        .collect()
}

fn counts(what: &str, params: &[&str]) -> Result<Vec<usize>, CliError> {
    params
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| CliError::Usage(format!("{what}: '{p}' is not a resolution"))))
        .collect()
}

/// `cosh`, `constant:V`, `exponential:SCALE,RATE`, `polynomial:C0,C1,...`
/// (domain = the condition interval).
pub fn parse_warp_arg(arg: &str, interval: Interval) -> Result<WarpSpec, CliError> {
    let (name, params) = split_spec(arg);
    let p = reals("--warp", &params)?;
    let arity = |n: usize| -> Result<(), CliError> {
        if p.len() > n {
            return Err(CliError::Usage(format!("--warp {name} takes at most {n} parameter(s)")));
        }
        Ok(())
    };
    Ok(match name {
        "cosh" => {
            arity(0)?;
            WarpSpec::cosh()
        }
        "constant" => {
            arity(1)?;
            WarpSpec::constant(p.first().copied().unwrap_or(1.0))?
        }
        "exponential" | "exp" => {
            arity(2)?;
            WarpSpec::exponential(p.first().copied().unwrap_or(1.0), p.get(1).copied().unwrap_or(1.0))?
        }
        "polynomial" => {
            if p.is_empty() {
                return Err(CliError::Usage("--warp polynomial needs coefficients, e.g. polynomial:2,0.5".into()));
            }
            WarpSpec::polynomial(p, interval)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown warp '{other}' (expected cosh, constant, exponential or polynomial)"
            )))
        }
    })
}

/// `sphere[:SUBDIVISIONS]`, `torus[:N[,L1,L2]]`, `circle[:N[,L]]`.
pub fn parse_fiber_arg(arg: &str) -> Result<FiberMesh, CliError> {
    let (name, params) = split_spec(arg);
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(match name {
        "sphere" => {
            let c = counts("--fiber", &params)?;
            if c.len() > 1 {
                return Err(CliError::Usage("--fiber sphere takes one parameter (subdivisions)".into()));
            }
            FiberMesh::sphere(c.first().copied().unwrap_or(2))?
        }
        "torus" => {
            let n = counts("--fiber", &params[..params.len().min(1)])?.first().copied().unwrap_or(16);
            let l = reals("--fiber", params.get(1..).unwrap_or(&[]))?;
            let lengths = match l.len() {
                0 => [two_pi, two_pi],
                2 => [l[0], l[1]],
                _ => return Err(CliError::Usage("--fiber torus:N,L1,L2 needs two lengths".into())),
            };
            FiberMesh::torus([n, n], lengths)?
        }
        "circle" => {
            let n = counts("--fiber", &params[..params.len().min(1)])?.first().copied().unwrap_or(64);
            let l = reals("--fiber", params.get(1..).unwrap_or(&[]))?;
            if l.len() > 1 {
                return Err(CliError::Usage("--fiber circle:N,L takes one length".into()));
            }
            FiberMesh::circle(n, l.first().copied().unwrap_or(two_pi))?
        }
        other => {
            return Err(CliError::Usage(format!("unknown fiber '{other}' (expected circle, torus or sphere)")))
        }
    })
}

pub fn parse_interval_arg(arg: &str) -> Result<Interval, CliError> {
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("--interval expects A,B, got '{arg}'")));
    }
    let v = reals("--interval", &parts)?;
    Ok(Interval::new(v[0], v[1])?)
}

#[derive(Serialize)]
struct ConditionsJson<'a> {
    schema: &'static str,
    version: &'static str,
    warp_arg: &'a str,
    fiber_arg: &'a str,
    interval: Interval,
    report: &'a ConditionReport,
}

pub fn cmd_conditions(warp: &str, fiber: &str, interval: &str, out: Option<PathBuf>) -> Result<i32, CliError> {
    let iv = parse_interval_arg(interval)?;
    let w = parse_warp_arg(warp, iv)?;
    let mesh = parse_fiber_arg(fiber)?;
    let report = conditions(&w, &mesh, iv)?;
    println!("warp {} on {} fiber (n = {}), t in [{}, {}]", report.warp, report.fiber, mesh.dim(), iv.lo, iv.hi);
    let hs = &report.hubble_sign;
    println!("  sign of f': {:?} (f' in [{:.6e}, {:.6e}])", hs.class, hs.min_fp, hs.max_fp);
    let lc = &report.log_convexity;
    println!("  (log f)'': {:?} (range [{:.6e}, {:.6e}])", lc.verdict, lc.min, lc.max);
    let ncc = &report.ncc;
    println!(
        "  NCC: {} (margin {:.15e}, sup f^2 (log f)'' = {:.6e} at t = {:.6})",
        if ncc.holds { "holds" } else { "fails" },
        ncc.margin,
        ncc.sup_density,
        ncc.argsup
    );
    if let Some(e) = &report.einstein {
        println!(
            "  Einstein identities: first {}, second {}, log form {}; oracle {} (c-bar {:?})",
            e.first_identity_holds,
            e.second_identity_holds,
            e.log_identity_holds,
            if e.oracle.einstein { "Einstein" } else { "not Einstein" },
            e.oracle.cbar
        );
        if let Some(d) = &e.discrepancy {
            println!("  discrepancy: {d}");
        }
    }
    let path = out.unwrap_or_else(|| PathBuf::from(".")).join("conditions.json");
    write_json(
        &path,
        &ConditionsJson {
            schema: CONDITIONS_SCHEMA,
            version: VERSION,
            warp_arg: warp,
            fiber_arg: fiber,
            interval: iv,
            report: &report,
        },
    )?;
    println!("report written to {}", path.display());
    Ok(EXIT_OK)
}

struct SweepRow {
    value: f64,
    verdict: &'static str,
    iterations: usize,
    final_residual: f64,
    osc_u: f64,
    sup_grad_ratio: f64,
    wall_time_s: f64,
    exit_code: i32,
}

pub fn cmd_sweep(
    config: &Path,
    axis: &str,
    values: &str,
    parallel: bool,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    if !RawConfig::is_numeric_key(axis) {
        return Err(CliError::Usage(format!("sweep axis '{axis}' is not a numeric configuration key")));
    }
    let items: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let integer = RawConfig::is_integer_key(axis);
    let mut numbers = Vec::with_capacity(items.len());
    for item in &items {
        let v = if integer {
            item.parse::<u64>().map(|v| v as f64).ok()
        } else {
            parse_real(item)
        };
        numbers.push(v.ok_or_else(|| CliError::Usage(format!("sweep value '{item}' is not valid for {axis}")))?);
    }

    let seed = seed_from_env()?;
    let raw = RawConfig::load(config)?;
    let base_dir = config.parent().unwrap_or(Path::new("."));
    let mut configs = Vec::with_capacity(items.len());
    for item in &items {
        let mut r = raw.clone();
        r.set(axis, item)?;
        configs.push(RunConfig::from_raw(r, base_dir, seed)?);
    }
    let out = out.unwrap_or_else(|| configs[0].output.directory.clone());

    let run = |i: usize| -> Result<SweepRow, CliError> {
        let cfg = &configs[i];
        let dir = out.join(format!("run_{i:03}"));
        let r = run_solve(cfg, &dir, true)?;
        Ok(SweepRow {
            value: numbers[i],
            verdict: r.report.verdict.name(),
            iterations: r.report.iterations,
            final_residual: r.report.final_residual,
            osc_u: r.report.oscillation,
            sup_grad_ratio: r.report.sup_grad_ratio,
            wall_time_s: r.report.wall_time_s,
            exit_code: r.exit_code,
        })
    };
    let rows: Vec<SweepRow> = if parallel {
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len());
        let mut slots: Vec<Option<Result<SweepRow, CliError>>> = (0..configs.len()).map(|_| None).collect();
        std::thread::scope(|s| {
            for (t, chunk) in slots.chunks_mut(configs.len().div_ceil(threads)).enumerate() {
                let run = &run;
                let start = t * configs.len().div_ceil(threads);
                s.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run(start + k));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every slot is filled")).collect::<Result<_, _>>()?
    } else {
        (0..configs.len()).map(run).collect::<Result<_, _>>()?
    };

    let mut table =
        Table::new(&["value", "verdict", "iterations", "final_residual", "osc_u", "sup_grad_ratio", "wall_time_s"])?;
    for r in &rows {
        table.row([
            fmt17(r.value),
            r.verdict.to_string(),
            r.iterations.to_string(),
            fmt17(r.final_residual),
            fmt17(r.osc_u),
            fmt17(r.sup_grad_ratio),
            fmt17(r.wall_time_s),
        ])?;
        println!(
            "{axis} = {:<12} {:<24} it {:>4}  residual {:.3e}  osc {:.3e}",
            r.value, r.verdict, r.iterations, r.final_residual, r.osc_u
        );
    }
    let path = out.join("sweep.csv");
    table.write(&path)?;
    println!("sweep written to {}", path.display());
    Ok(rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(verdict: Verdict, contradiction: bool) -> SolveReport {
        SolveReport {
            iterations: 0,
            residual_history: Vec::new(),
            final_residual: 0.0,
            oscillation: 0.0,
            mean: 0.0,
            sup_grad_ratio: 0.0,
            verdict,
            contradiction,
            linear_iterations: 0,
            descent_steps: 0,
            wall_time_s: 0.0,
            config: SolveConfig::default(),
            theorems: Vec::new(),
            values: Vec::new(),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&report(Verdict::Constant, false)), EXIT_OK);
        assert_eq!(exit_code_for(&report(Verdict::NonconstantStationary, false)), EXIT_OK);
        assert_eq!(exit_code_for(&report(Verdict::NonconstantStationary, true)), EXIT_CONTRADICTION);
        assert_eq!(exit_code_for(&report(Verdict::Diverged, false)), EXIT_SOLVER);
        assert_eq!(exit_code_for(&report(Verdict::MarginStuck, false)), EXIT_SOLVER);
    }
}
