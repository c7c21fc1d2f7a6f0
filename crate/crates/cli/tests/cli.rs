use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn cli(dir: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abelian-coh"))
        .current_dir(dir)
        .env("ABELIAN_COH_OUT", out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn run_scenario(name: &str, out: &Path) -> Output {
    let tmp = out.parent().unwrap();
    let path = scenario(name);
    cli(tmp, out, &["run", path.to_str().unwrap()])
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn poisson_scenario_reports_and_writes_shell_cocycle() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("poisson");
    let o = run_scenario("poisson_r05.json", &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["h1"], "nonvanishing");
    assert_eq!(report["reduced_h1"], "vanishes");
    assert_eq!(report["witness"]["kind"], "shell_cocycle");
    assert_eq!(report["witness"]["shell_count"], 8);
    let shells = json(&out.join("shells.json"));
    assert_eq!(shells["shell_count"], 8);
    assert_eq!(shells["validation"]["passed"], true);
    assert!(shells["min_obstruction_increment"].as_f64().unwrap() >= 1.0 - 1e-9);
    let csv = fs::read_to_string(out.join("cocycle.csv")).unwrap();
    assert!(csv.starts_with("index,kind,theta_1,mass,g1_re,g1_im\n"));
    assert!(csv.lines().count() > 1000);
    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    let lines: Vec<&str> = residuals.lines().collect();
    assert_eq!(lines[0], "stage,radius,residual");
    assert_eq!(lines.len(), 6);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("H1 nonvanishing, reduced H1 vanishes"));
}

#[test]
fn two_atoms_scenario_is_nonvanishing_twice() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("two");
    let o = run_scenario("two_atoms.json", &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["h1"], "nonvanishing");
    assert_eq!(report["reduced_h1"], "nonvanishing");
    assert_eq!(report["witness"]["kind"], "homomorphism_cocycle");
    assert_eq!(json(&out.join("gns.json"))["passed"], true);
}

#[test]
fn remaining_bundled_scenarios_succeed() {
    let tmp = TempDir::new().unwrap();
    for (name, h1) in [("z6.json", "vanishes"), ("delta.json", "vanishes"), ("arc.toml", "vanishes")] {
        let out = tmp.path().join(name);
        let o = run_scenario(name, &out);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let report = json(&out.join("report.json"));
        assert_eq!(report["h1"], h1, "{name}");
        assert_eq!(report["reduced_h1"], "vanishes", "{name}");
    }
    let solve = json(&tmp.path().join("delta.json").join("solve.json"));
    assert!(solve["residual"].as_f64().unwrap() < 1e-12);
    assert!(solve["box_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn empty_pipeline_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("empty");
    let o = run_scenario("empty.json", &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn scenario_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    for name in ["poisson_r05.json", "z6.json", "arc.toml"] {
        let a = tmp.path().join(format!("{name}.a"));
        let b = tmp.path().join(format!("{name}.b"));
        assert_eq!(code(&run_scenario(name, &a)), 0);
        assert_eq!(code(&run_scenario(name, &b)), 0);
        let (fa, fb) = (files(&a), files(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa.len(), fb.len(), "{name}");
        for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
            assert_eq!(na, nb);
            assert!(ca == cb, "{name}: {na} differs between runs");
        }
    }
}

#[test]
fn precondition_failures_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let s = tmp.path().join("wrong.json");
    fs::write(
        &s,
        r#"{"group":{"free_rank":1},"measure":{"atoms":[{"theta":[1.0],"weight":1}]},
            "pipeline":[{"command":"classify"},{"command":"build_cocycle","shells":3}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("wrong");
    let o = cli(tmp.path(), &out, &["run", s.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("wrong-regime"), "{}", stderr(&o));
    assert!(out.join("report.json").exists());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("step 2 build_cocycle: error wrong-regime"), "{summary}");
}

#[test]
fn malformed_scenarios_exit_with_code_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bad");
    let s = tmp.path().join("broken.json");
    fs::write(&s, "{\n  \"group\": {\"free_rank\": 1},\n  \"measure\": {}\n  \"pipeline\": []\n}\n").unwrap();
    let o = cli(tmp.path(), &out, &["run", s.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let s = tmp.path().join("dangling.toml");
    fs::write(
        &s,
        "group = { free_rank = 1 }\nmeasure = { atoms = [{ theta = [1.0], weight = 1.0 }] }\n\n[[pipeline]]\ncommand = \"approximate\"\n",
    )
    .unwrap();
    let o = cli(tmp.path(), &out, &["run", s.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("needs a cocycle"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn generated_poisson_has_unit_mass() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    let o = cli(
        tmp.path(),
        &out,
        &["--grid", "4096", "measure", "generate", "--kind", "poisson", "--params", r#"{"r": 0.5}"#],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let spec = json(&out.join("measure.json"));
    let values = spec["density"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 4096);
    let h = std::f64::consts::TAU / 4096.0;
    let mass: f64 = values.iter().map(|v| v.as_f64().unwrap() * h).sum();
    assert!((mass - 1.0).abs() <= 1e-9, "{mass}");
}

#[test]
fn generated_arc_is_half_a_radian_from_the_trivial_character() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    let o = cli(
        tmp.path(),
        &out,
        &["measure", "generate", "--kind", "uniform_arc", "--params", r#"{"arc": [0.5, 1.0]}"#],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let info: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = info["support_distance"].as_f64().unwrap();
    assert!((d - 0.5).abs() <= std::f64::consts::TAU / 4096.0, "{d}");

    let measure = out.join("measure.json");
    let o = cli(tmp.path(), &out, &["classify", "--measure", measure.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["h1"], "vanishes");
    assert_eq!(report["witness"]["kind"], "smoothing_measure");
}

#[test]
fn trivial_dirac_is_rejected_downstream() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    let o = cli(
        tmp.path(),
        &out,
        &["measure", "generate", "--kind", "atoms", "--params", r#"{"atoms": [{"theta": [0.0], "weight": 1.0}]}"#],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let measure = out.join("measure.json");
    let o = cli(tmp.path(), &out, &["classify", "--measure", measure.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("constant-function"), "{}", stderr(&o));
}

#[test]
fn invalid_generator_params_are_parse_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    for params in [r#"{"r": 1.5}"#, r#"{"r": 0.5, "extra": 1}"#, "{not json"] {
        let o = cli(tmp.path(), &out, &["measure", "generate", "--kind", "poisson", "--params", params]);
        assert_eq!(code(&o), 1, "{params}");
        assert!(stderr(&o).contains("parse error"), "{}", stderr(&o));
    }
    let mixture = r#"{"components": [{"kind": "poisson", "weight": 0.5, "r": 0.5}]}"#;
    let o = cli(tmp.path(), &out, &["measure", "generate", "--kind", "mixture", "--params", mixture]);
    assert_eq!(code(&o), 1);
}

#[test]
fn cocycle_csv_round_trips_through_solve() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("cob");
    let m = tmp.path().join("m.json");
    fs::write(&m, r#"{"density": {"kind": "uniform_arc", "arc": [1.0, 2.5]}, "grid_size": 1024}"#).unwrap();
    let ms = m.to_str().unwrap();
    let o = cli(tmp.path(), &out, &["cocycle", "synthetic", "--sample-seed", "3", "--measure", ms]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cocycle = out.join("cocycle.csv");
    let o = cli(
        tmp.path(),
        &out,
        &["cocycle", "solve", "--measure", ms, "--cocycle", cocycle.to_str().unwrap(), "--check-box", "2"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    assert!(v["box_residual"].as_f64().unwrap() < 1e-12);
    assert!(out.join("solution.csv").exists());

    let o = cli(
        tmp.path(),
        &out,
        &["cocycle", "approx", "--measure", ms, "--cocycle", cocycle.to_str().unwrap(), "--stages", "3"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn solve_without_gap_exits_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("nogap");
    let m = tmp.path().join("m.json");
    fs::write(&m, r#"{"density": {"kind": "poisson", "r": 0.5}, "grid_size": 512}"#).unwrap();
    let ms = m.to_str().unwrap();
    assert_eq!(code(&cli(tmp.path(), &out, &["cocycle", "synthetic", "--measure", ms])), 0);
    let cocycle = out.join("cocycle.csv");
    let o = cli(tmp.path(), &out, &["cocycle", "solve", "--measure", ms, "--cocycle", cocycle.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no-gap"), "{}", stderr(&o));
}

#[test]
fn gns_verify_and_transforms() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t");
    let m = tmp.path().join("m.json");
    fs::write(&m, r#"{"density": {"kind": "poisson", "r": 0.5}, "grid_size": 4096}"#).unwrap();
    let ms = m.to_str().unwrap();
    let o = cli(tmp.path(), &out, &["gns", "verify", "--measure", ms, "--shifts", "0..8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["discrepancy"].as_f64().unwrap() <= 1e-8);

    let o = cli(tmp.path(), &out, &["--window", "4", "gns", "verify", "--measure", ms, "--shifts", "0..8"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("window-too-small"), "{}", stderr(&o));

    let o = cli(tmp.path(), &out, &["--window", "256", "transform", "forward", "--measure", ms]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let phi = out.join("phi.json");
    let o = cli(tmp.path(), &out, &["--grid", "512", "transform", "inverse", "--phi", phi.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["roundtrip_error"].as_f64().unwrap() < 1e-3);
    let o = cli(tmp.path(), &out, &["--grid", "512", "classify", "--phi", phi.to_str().unwrap(), "--no-witness"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["reduced_h1"], "vanishes");
    assert_eq!(r["h1"], "nonvanishing");
}

#[test]
fn selftest_passes() {
    let tmp = TempDir::new().unwrap();
    let o = cli(tmp.path(), tmp.path(), &["--seed", "5", "selftest", "--cases", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{stdout}");
}
