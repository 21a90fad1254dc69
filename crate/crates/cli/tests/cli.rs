//! Drives the built `ratesplit` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = r#"
[grid]
gamma = [1.0]
theta = ["pi/9"]
r0_threshold = [0.5]
weights = [[1.0, 0.1], [1.0, 1.0], [1.0, 10.0]]

[ao]
restarts = 1
"#;

fn ratesplit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratesplit"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn region_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            (name.ends_with(".json") && name != "manifest.json").then_some(name)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn run_verify_plot_and_tamper() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("smoke.toml"), SMOKE).unwrap();
    let out = ratesplit(&["run", "smoke.toml", "--output-dir", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let res = tmp.path().join("res");
    assert!(res.join("manifest.json").exists());
    let files = region_files(&res);
    assert_eq!(files.len(), 3, "{files:?}");
    let paths: Vec<String> = files.iter().map(|f| format!("res/{f}")).collect();

    let mut args = vec!["verify"];
    args.extend(paths.iter().map(String::as_str));
    assert_eq!(ratesplit(&args, tmp.path()).status.code(), Some(0));

    let mut args = vec!["plot-data", "--output-dir", "plot"];
    args.extend(paths.iter().map(String::as_str));
    let out = ratesplit(&args, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_dir(tmp.path().join("plot")).unwrap().count() >= 3);

    // inflate one reported rate
    let victim = tmp.path().join(&paths[0]);
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&victim).unwrap()).unwrap();
    let wsr = &mut v["points"][0]["wsr"];
    *wsr = serde_json::json!(wsr.as_f64().unwrap() + 0.5);
    std::fs::write(&victim, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(ratesplit(&["verify", &paths[0]], tmp.path()).status.code(), Some(4));
}

#[test]
fn infeasible_threshold_exceeds_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMOKE.replace("r0_threshold = [0.5]", "r0_threshold = [40.0]");
    std::fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    let out = ratesplit(&["run", "c.toml", "--output-dir", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_inputs_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(ratesplit(&["run", "missing.toml"], tmp.path()).status.code(), Some(1));
    std::fs::write(tmp.path().join("bad.toml"), "[grid]\ngamma = [-1.0]\n").unwrap();
    assert_eq!(ratesplit(&["run", "bad.toml"], tmp.path()).status.code(), Some(1));
    std::fs::write(tmp.path().join("junk.json"), "{").unwrap();
    assert_eq!(ratesplit(&["verify", "junk.json"], tmp.path()).status.code(), Some(1));
}
