use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const DE_SITTER: &str = "[fiber]\ntype = sphere\nsubdivisions = 3\n[warp]\ntype = cosh\n\
                         [init]\nkind = random-bump\namplitude = 0.3\nseed = 2\n";

const TORUS_EXP: &str = "[fiber]\ntype = torus\nresolution = 32\n[warp]\ntype = exponential\n\
                         [init]\nkind = sine\nbase = 0.5\namplitude = 0.3\n";

fn grwlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grwlab"));
    cmd.args(args).env_remove("GRWLAB_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run grwlab")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_de_sitter_reports_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ds.ini", DE_SITTER);
    let out = dir.path().join("out");
    let o = grwlab(&["solve", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("report.json"));
    assert_eq!(r["verdict"], "constant");
    assert_eq!(r["seed"], 2);
    assert_eq!(r["contradiction"], false);
    for key in ["schema", "version", "config", "residual", "theorems", "solution", "wall_time_s"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["config"]["sections"]["fiber"]["type"]["value"], "sphere");
    assert!(r["theorems"].as_array().unwrap().iter().any(|t| t["theorem"] == "Cor4.3"));
    let csv = fs::read_to_string(out.join("residual_history.csv")).unwrap();
    assert!(csv.starts_with("iteration,residual_inf\n0,"));
    assert!(!csv.contains('\r'));
    let last = csv.lines().last().unwrap();
    let mantissa = last.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
    // No temporary files are left behind.
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn solve_torus_sine_and_off_export() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TORUS_EXP}[output]\nformats = json, off\n");
    let cfg = write_config(dir.path(), "t.ini", &text);
    let out = dir.path().join("o");
    let o = grwlab(&["solve", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&out.join("report.json"))["verdict"], "constant");
    assert!(fs::read_to_string(out.join("graph.off")).unwrap().starts_with("OFF\n1089 2048 0\n"));
    assert!(!out.join("residual_history.csv").exists());
}

#[test]
fn unknown_fiber_type_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.ini", "[fiber]\ntype = klein\n[warp]\ntype = cosh\n");
    let o = grwlab(&["solve", "--config", s(&cfg)], &[]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fiber.type") && err.contains(":2"), "{err}");
}

#[test]
fn typo_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.ini", "[fiber]\ntype = torus\n[warp]\ntype = cosh\n[solver]\ntoll = 1e-9\n");
    let o = grwlab(&["solve", "--config", s(&cfg)], &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver.toll"));
}

#[test]
fn constant_start_takes_zero_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.ini", "[fiber]\ntype = torus\nresolution = 16\n[warp]\ntype = cosh\n[init]\nkind = constant\nbase = 0.4\n");
    let out = dir.path().join("o");
    let o = grwlab(&["solve", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(code(&o), 0);
    let r = json(&out.join("report.json"));
    assert_eq!(r["residual"]["iterations"], 0);
    assert_eq!(r["verdict"], "constant");
}

#[test]
fn iteration_cap_gives_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TORUS_EXP}[solver]\nmax_iterations = 1\n");
    let cfg = write_config(dir.path(), "d.ini", &text);
    let out = dir.path().join("o");
    let o = grwlab(&["solve", "--config", s(&cfg), "--out", s(&out)], &[]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&out.join("report.json"))["verdict"], "diverged");
}

#[test]
fn infeasible_initial_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "f.ini",
        "[fiber]\ntype = torus\nresolution = 16\n[warp]\ntype = constant\n[init]\nkind = sine\namplitude = 3\n",
    );
    assert_eq!(code(&grwlab(&["solve", "--config", s(&cfg)], &[])), 1);
}

#[test]
fn seed_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ds.ini", DE_SITTER);
    let out = dir.path().join("o");
    let o = grwlab(&["solve", "--config", s(&cfg), "--out", s(&out)], &[("GRWLAB_SEED", "99")]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&out.join("report.json"))["seed"], 99);
    let o = grwlab(&["solve", "--config", s(&cfg), "--out", s(&out)], &[("GRWLAB_SEED", "x")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let torus = write_config(
        dir.path(),
        "t.ini",
        "[fiber]\ntype = torus\nresolution = 32\n[warp]\ntype = exponential\n\
         [init]\nkind = random-bump\nbase = 0.2\namplitude = 0.3\nseed = 4\n",
    );
    let o = grwlab(&["verify", "--config", s(&torus), "--suite", "laplacian", "--out", s(&out)], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&out.join("identity_report.json"));
    assert_eq!(r["passed"], true);
    for c in r["report"]["checks"].as_array().unwrap() {
        assert!(c["order"].as_f64().unwrap() >= 1.9);
        assert_eq!(c["ladder"].as_array().unwrap().len(), 3);
    }

    let slice = write_config(
        dir.path(),
        "s.ini",
        "[fiber]\ntype = sphere\nsubdivisions = 2\n[warp]\ntype = cosh\n[init]\nkind = constant\nbase = 0.3\n",
    );
    let o = grwlab(&["verify", "--config", s(&slice), "--suite", "integral", "--out", s(&out)], &[]);
    assert_eq!(code(&o), 0);
    let r = json(&out.join("identity_report.json"));
    for l in r["report"]["checks"][0]["ladder"].as_array().unwrap() {
        assert!(l["residual"]["max"].as_f64().unwrap() <= 1e-10);
    }
    assert_eq!(code(&grwlab(&["verify", "--config", s(&slice), "--suite", "lk"], &[])), 1);
    assert_eq!(code(&grwlab(&["verify", "--config", s(&slice), "--suite", "bogus"], &[])), 1);
    assert_eq!(code(&grwlab(&["verify", "--config", s(&slice)], &[])), 1);
}

#[test]
fn conditions_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = grwlab(&["conditions", "--warp", "cosh", "--fiber", "sphere", "--interval", "-2,2", "--out", s(out)], &[]);
    assert_eq!(code(&o), 0);
    let r = json(&out.join("conditions.json"));
    assert!(r["report"]["ncc"]["margin"].as_f64().unwrap().abs() <= 1e-12);
    assert_eq!(r["report"]["einstein"]["oracle"]["einstein"], true);
    assert_eq!(r["report"]["einstein"]["oracle"]["cbar"], 2.0);

    let o = grwlab(&["conditions", "--warp", "cosh", "--fiber", "torus", "--interval", "-1,4", "--out", s(out)], &[]);
    assert_eq!(code(&o), 0);
    let margin = json(&out.join("conditions.json"))["report"]["ncc"]["margin"].as_f64().unwrap();
    assert!((margin + 1.0).abs() <= 1e-12);

    let o = grwlab(&["conditions", "--warp", "exp:1,1", "--fiber", "torus", "--interval", "0,1", "--out", s(out)], &[]);
    assert_eq!(code(&o), 0);
    let r = json(&out.join("conditions.json"));
    assert_eq!(r["report"]["hubble_sign"]["class"], "non-negative");
    assert_eq!(r["report"]["log_convexity"]["max"], 0.0);

    for bad in [["cosh", "torus", "1,1"], ["cosh", "klein", "0,1"], ["polynomial:1,-1", "torus", "0,2"], ["tanh", "torus", "0,1"]] {
        let o = grwlab(&["conditions", "--warp", bad[0], "--fiber", bad[1], "--interval", bad[2], "--out", s(out)], &[]);
        assert_eq!(code(&o), 1, "{bad:?}");
    }
}

#[test]
fn sweep_amplitudes_in_de_sitter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ds.ini", DE_SITTER);
    let seq = dir.path().join("seq");
    let o = grwlab(
        &["sweep", "--config", s(&cfg), "--axis", "init.amplitude", "--values", "0.1,0.2,0.3", "--out", s(&seq)],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(seq.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,verdict,iterations,final_residual,osc_u,sup_grad_ratio,wall_time_s");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(1) == Some("constant")));
    assert!(seq.join("run_002/report.json").exists());

    let par = dir.path().join("par");
    let o = grwlab(
        &["sweep", "--config", s(&cfg), "--axis", "init.amplitude", "--values", "0.1,0.2,0.3", "--parallel", "--out", s(&par)],
        &[],
    );
    assert_eq!(code(&o), 0);
    // Identical rows apart from wall time.
    let strip = |t: String| t.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    assert_eq!(strip(csv), strip(fs::read_to_string(par.join("sweep.csv")).unwrap()));
}

#[test]
fn sweep_rejects_bad_axes_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ds.ini", DE_SITTER);
    for (axis, values) in [
        ("init.amplitude", ""),
        ("init.amplitude", " , "),
        ("fiber.type", "1,2"),
        ("init.amplitude", "0.1,abc"),
        ("fiber.subdivisions", "2.5"),
        ("nothing.here", "1"),
    ] {
        let o = grwlab(&["sweep", "--config", s(&cfg), "--axis", axis, "--values", values], &[]);
        assert_eq!(code(&o), 1, "{axis} {values:?}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&grwlab(&["solve"], &[])), 1);
    assert_eq!(code(&grwlab(&["frobnicate"], &[])), 1);
    assert_eq!(code(&grwlab(&["--help"], &[])), 0);
    assert_eq!(code(&grwlab(&["solve", "--config", "/nonexistent/x.ini"], &[])), 1);
}
