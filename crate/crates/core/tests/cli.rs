use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_roughcorr")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, seq) in [(&a, false), (&b, true)] {
        let mut args = vec!["simulate", "--n", "32", "--d", "2", "--paths", "5", "--seed", "42", "--lift-n", "8", "--out"];
        args.push(out.to_str().unwrap());
        if seq {
            args.push("--sequential");
        }
        let (code, _, err) = run(&args);
        assert_eq!(code, 0, "{err}");
    }
    for f in ["paths.csv", "lift.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let text = std::fs::read_to_string(a.join("paths.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x1,x2,path_id");
    assert_eq!(text.lines().count(), 1 + 5 * 33);
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["seed"], 42);
    assert_eq!(m["M"], 5);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["simulate", "--hurst", "0.1", "--out", out]).0, 2);
    assert_eq!(run(&["simulate", "--bogus"]).0, 2);
    assert_eq!(run(&["rate-study", "--paths", "10", "--out", out]).0, 2);
    assert_eq!(run(&["verify-correction", "--model", "bm", "--hurst", "2", "--out", out]).0, 2);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "simulate", "n": 8, "unknown_key": 1}"#).unwrap();
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn missing_input_file_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "simulate",
        "--model",
        "tabulated",
        "--grid-file",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn linear_integrand_has_no_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let (code, _, err) = run(&["verify-correction", "--f", "linear", "--n", "64", "--paths", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let r = json(&out.join("report.json"));
    assert!(r["summary"]["residual_max"].as_f64().unwrap() < 1e-9);
    let csv = std::fs::read_to_string(out.join("paths.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "path_id,strat,sko,trace,simplex,residual");
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn config_file_runs_rate_study() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let cfg = dir.path().join("rate.json");
    let body = serde_json::json!({
        "experiment": "rate-study",
        "model": {"kind": "bm"},
        "n_list": [16, 32, 64, 128],
        "paths": 200,
        "q": 2.0,
        "seed": 3,
        "out": out,
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let (code, _, err) = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let r = json(&out.join("rate.json"));
    let slope = r["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() < 0.15, "slope {slope}");
    assert!(r["slope_SE"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(out.join("rate.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,i,j,q,norm_estimate,SE");
}

#[test]
fn variation_report_lists_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("var");
    let (code, _, err) = run(&["variation-report", "--n", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("variation.csv")).unwrap();
    assert!(csv.starts_with("norm_kind,exponent,rect,value,method"));
    assert!(csv.contains("EXACT_BRUTE"));
}
