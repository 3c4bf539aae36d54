use std::path::PathBuf;

use pdekit_cli::cli::run_cli;
use pdekit_cli::parse::{parse_system, render_system};
use serde_json::Value;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map_or(false, |x| x == "pde"))
        .collect();
    v.sort();
    v
}

fn run(args: &[&str]) -> pdekit_cli::cli::CliOutput {
    let mut all = vec!["pdekit".to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    run_cli(&all, None)
}

fn path(name: &str) -> String {
    corpus_dir().join(name).to_string_lossy().into_owned()
}

#[test]
fn report_matches_goldens() {
    let files = corpus_files();
    assert!(files.len() >= 20);
    for f in files {
        let golden = f.with_extension("expected.json");
        let want: Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
        let out = run(&["report", "--json", f.to_str().unwrap()]);
        assert_eq!(out.code, 0, "{}", f.display());
        let got: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(got, want, "{}", f.display());
    }
}

#[test]
fn envelope_shape() {
    let out = run(&["characters", "--json", &path("primary_ideal.pde")]);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["command", "error", "input_digest", "log", "payload", "schema", "timing", "version"]);
    assert_eq!(v["schema"], "pdekit.report/1");
    assert_eq!(v["command"], "characters");
    assert!(v["error"].is_null());
    assert!(v["timing"].is_null());
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
    let timed = run(&["characters", "--json", "--timing", &path("primary_ideal.pde")]);
    let v: Value = serde_json::from_str(&timed.stdout).unwrap();
    assert!(v["timing"]["ms"].is_number());
}

#[test]
fn corpus_round_trips_through_text() {
    for f in corpus_files() {
        let s = parse_system(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let back = parse_system(&render_system(&s)).unwrap();
        assert_eq!(back.render_equations(), s.render_equations(), "{}", f.display());
        assert_eq!((back.n, back.m, back.q, back.field), (s.n, s.m, s.q, s.field));
        assert_eq!(back.var_names, s.var_names);
        assert_eq!(back.unknown_names, s.unknown_names);
    }
}

#[test]
fn output_is_deterministic() {
    for cmd in ["report", "purity", "janet", "torsion"] {
        let a = run(&[cmd, "--json", &path("torsion_pair.pde")]);
        let b = run(&[cmd, "--json", &path("torsion_pair.pde")]);
        assert_eq!(a.stdout, b.stdout, "{}", cmd);
    }
}

#[test]
fn batch_preserves_order() {
    let names = ["two_components.pde", "primary_ideal.pde", "divergence.pde", "airy.pde"];
    let paths: Vec<String> = names.iter().map(|n| path(n)).collect();
    let mut args = vec!["batch", "--json", "--command", "characters"];
    args.extend(paths.iter().map(|s| s.as_str()));
    let out = run(&args);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), names.len());
    for (p, got) in paths.iter().zip(arr) {
        let single: Value = serde_json::from_str(&run(&["characters", "--json", p]).stdout).unwrap();
        assert_eq!(got, &single);
    }
}

#[test]
fn janet_text_output() {
    let out = run(&["janet", &path("primary_ideal.pde")]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().next(), Some("F: 1 4 4 1, euler 0"));
    assert!(out.stdout.contains("Psi1[0,0,1] - Psi2[0,1,0] + Psi4[1,0,0] - Psi3[0,0,0]"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["complete", "/nonexistent/x.pde"]).code, 1);
    assert_eq!(run(&["frobnicate", &path("primary_ideal.pde")]).code, 1);
    assert_eq!(run(&["localize", "--codim", "1", &path("two_components.pde")]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
    let bad = std::env::temp_dir().join(format!("pdekit-bad-{}.pde", std::process::id()));
    std::fs::write(&bad, "field Q\nvars x\nunknowns y\neq y[1 + = 0\n").unwrap();
    let out = run(&["complete", "--json", bad.to_str().unwrap()]);
    std::fs::remove_file(&bad).ok();
    assert_eq!(out.code, 1);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "parse");
    let out = run(&["localize", "--json", "--codim", "1", &path("two_components.pde")]);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "analysis");
    assert!(v["payload"].is_null());
}

#[test]
fn seed_from_environment() {
    let p = path("four_variables.pde");
    let args = |seed: &str| -> Vec<String> {
        ["pdekit", "complete", "--json", "--seed", seed, p.as_str()].iter().map(|s| s.to_string()).collect()
    };
    let flag = run_cli(&args("7"), None);
    let env = run_cli(&args("5"), Some("7"));
    assert_eq!(flag.code, 0);
    assert_eq!(flag.stdout, env.stdout);
    let bad = run_cli(&args("5"), Some("seven"));
    assert_eq!(bad.code, 1);
    assert!(bad.stderr.contains("PDEKIT_SEED"));
}
