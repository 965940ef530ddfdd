use std::fs;
use std::process::{Command, Output};

fn qroute(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qroute"));
    cmd.args(args).env_remove("QROUTE_OUT_DIR");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (status.code().unwrap(), String::from_utf8(stdout).unwrap(), String::from_utf8(stderr).unwrap())
}

const SMALL: &[&str] = &["--n-e", "16", "--k", "3", "--capacity-cap", "64", "--seeds", "0..3"];

#[test]
fn eval_passes_and_writes_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let args: Vec<&str> = ["eval"].iter().chain(SMALL).copied().collect();
    let (code, stdout, _) = run(qroute(&args).env("QROUTE_OUT_DIR", dir.path()));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("all assertions passed"));
    let csv = fs::read_to_string(dir.path().join("pairs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 16 * 15);

    let (code, again, _) = run(&mut qroute(&["report", dir.path().to_str().unwrap()]));
    assert_eq!(code, 0);
    assert_eq!(again, stdout);
}

#[test]
fn failed_assertions_exit_one() {
    let (code, stdout, _) = run(&mut qroute(&["eval", "--n-e", "16", "--capacity-cap", "2", "--seeds", "1"]));
    assert_eq!(code, 1);
    assert!(stdout.contains("did not run"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "scheme = \"full-anchor\"\nseeds = [4]\n").unwrap();
    let (code, stdout, _) = run(&mut qroute(&[
        "eval", "--scheme", "partial", "--n-e", "16", "--k", "3", "--capacity-cap", "64", "--config",
        path.to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.starts_with("scheme full-anchor | n_e 16 | k 3"));
    assert_eq!(stdout.lines().filter(|l| l.trim_start().starts_with('4')).count(), 1);
}

#[test]
fn invalid_config_exits_two_naming_the_field() {
    let (code, _, stderr) = run(&mut qroute(&["eval", "--metric", "fidelity"]));
    assert_eq!(code, 2);
    assert!(stderr.contains("`metric`"), "{stderr}");
}

#[test]
fn generate_route_and_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = run(&mut qroute(&["generate", "--n-e", "12", "--seeds", "1,2", "--out", out]));
    assert_eq!(code, 0);
    assert!(dir.path().join("graph_seed_2.txt").exists());

    let (code, _, _) = run(&mut qroute(&["route", "--n-e", "16", "--k", "3", "--seeds", "5", "--out", out]));
    assert_eq!(code, 0);
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scheme_seed_5.json")).unwrap()).unwrap();
    assert_eq!(doc["tables"].as_array().unwrap().len(), 16);

    let (code, stdout, _) = run(&mut qroute(&["route", "--torus", "4x4", "--n-e", "16", "--k", "3", "--source", "0", "--dest", "10"]));
    assert_eq!(code, 0);
    let path: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(path["source"], 0);
    assert_eq!(path["destination"], 10);

    let (code, stdout, _) = run(&mut qroute(&["cluster", "--n-e", "16", "--k", "3", "--seeds", "0"]));
    assert_eq!(code, 0);
    let docs: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(docs[0]["coverage"]["failure_fraction"], 0.0);
}

#[test]
fn synthetic_search_matches_the_model() {
    let (code, stdout, _) = run(&mut qroute(&["qsearch", "--n-t", "4", "--overlap", "0.5"]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let exact = v["outcome"]["success_probability"].as_f64().unwrap();
    assert!((exact - 0.625).abs() < 1e-9);
    assert!((v["analytic_success_probability"].as_f64().unwrap() - exact).abs() < 1e-9);
}

#[test]
fn table_lookup_search() {
    let (code, stdout, _) =
        run(&mut qroute(&["qsearch", "--n-e", "8", "--k", "2", "--f", "2", "--seeds", "3", "--owner", "0", "--target", "5"]));
    assert_eq!(code, 0, "{stdout}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["classical_hits"].is_array());
}

#[test]
fn compare_writes_a_document() {
    let dir = tempfile::tempdir().unwrap();
    let args: Vec<&str> = ["compare", "--out", dir.path().to_str().unwrap()].iter().chain(SMALL).copied().collect();
    let (code, _, _) = run(&mut qroute(&args));
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("compare.json")).unwrap()).unwrap();
    assert_eq!(doc["scheme_b"], "full-anchor");
    assert_eq!(doc["seeds"].as_array().unwrap().len(), 3);
}
