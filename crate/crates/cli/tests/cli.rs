use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const KERNEL: &str = r#"{"d":2,"entries":[{"index":[0,0],"coeff":1.0},{"index":[1,0],"coeff":0.5},{"index":[0,1],"coeff":0.5},{"index":[1,1],"coeff":0.25}]}"#;

fn omd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omd"))
        .current_dir(dir)
        .env_remove("OMD_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("kernel.json"), KERNEL).unwrap();
    dir
}

#[test]
fn usage_errors_exit_2() {
    let dir = workspace();
    let out = omd(dir.path(), &["decompose", "--out", "d.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--in"));
    assert!(!dir.path().join("d.json").exists());

    assert_eq!(omd(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(omd(dir.path(), &["simulate", "--replicas", "many"]).status.code(), Some(2));
    assert_eq!(omd(dir.path(), &["vc", "--class", "R2"]).status.code(), Some(2));
    assert_eq!(omd(dir.path(), &["decompose", "--in", "missing.json"]).status.code(), Some(2));
    assert_eq!(omd(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn decompose_reconstruct_round_trip() {
    let dir = workspace();
    // dyadic coefficients keep every intermediate sum exact; entries in canonical order
    let f = r#"{"d":3,"entries":[{"index":[0,0,0],"coeff":1.5},{"index":[0,3,0],"coeff":2.0},{"index":[1,1,1],"coeff":0.125},{"index":[2,0,1],"coeff":-0.25}]}"#;
    std::fs::write(dir.path().join("f.json"), f).unwrap();
    let out = omd(dir.path(), &["decompose", "--in", "f.json", "--out", "d.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dec = json_file(&dir.path().join("d.json"));
    assert_eq!(dec["passed"], Value::Bool(true));
    assert_eq!(dec["reconstruction_error"].as_f64(), Some(0.0));
    assert!(dec["omd"]["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["residual"].as_f64() == Some(0.0)));
    assert_eq!(dec["m"]["entries"][0]["coeff"].as_f64(), Some(1.5 - 0.25 + 0.125 + 2.0));
    assert!(dec["provenance"]["config_hash"].as_str().unwrap().len() == 64);

    let out = omd(dir.path(), &["reconstruct", "--in", "d.json", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_file(&dir.path().join("r.json"));
    let original: Value = serde_json::from_str(f).unwrap();
    assert_eq!(r["d"], original["d"]);
    assert_eq!(r["entries"], original["entries"]);
}

#[test]
fn reports_are_reproducible() {
    let dir = workspace();
    let base = [
        "simulate",
        "--coefficients",
        "kernel.json",
        "--n",
        "16",
        "--replicas",
        "40",
        "--seed",
        "9",
        "--statistic",
        "points",
        "--point",
        "0.5,1",
        "--point",
        "1,1",
        "--no-timestamp",
    ];
    let run = |workers: &str| {
        let mut args = base.to_vec();
        args.extend(["--workers", workers]);
        let out = omd(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("3"));
    let report: Value = serde_json::from_slice(&one).unwrap();
    assert_eq!(report["provenance"]["seed"].as_u64(), Some(9));
    assert_eq!(report["provenance"]["replicas"].as_u64(), Some(40));
    assert!(report["provenance"].get("timestamp_unix").is_none());
    assert_eq!(report["sample"]["rows"].as_array().unwrap().len(), 40);

    let stamped = omd(dir.path(), &base[..base.len() - 1]);
    let stamped: Value = serde_json::from_slice(&stamped.stdout).unwrap();
    assert!(stamped["provenance"]["timestamp_unix"].as_u64().is_some());
    assert_eq!(stamped["provenance"]["config_hash"], report["provenance"]["config_hash"]);
}

#[test]
fn flags_override_config_file() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 3\nn = 8\n[simulate]\nreplicas = 12\nfield = \"product\"\n",
    )
    .unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", "run.toml", "simulate", "--no-timestamp"];
        args.extend_from_slice(extra);
        let out = omd(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<Value>(&out.stdout).unwrap()
    };
    let from_file = run(&[]);
    assert_eq!(from_file["provenance"]["replicas"].as_u64(), Some(12));
    assert_eq!(from_file["provenance"]["seed"].as_u64(), Some(3));
    assert_eq!(from_file["spec"]["n"].as_u64(), Some(8));
    assert_eq!(from_file["spec"]["field"]["kind"], "product_omd");
    let flagged = run(&["--replicas", "5"]);
    assert_eq!(flagged["provenance"]["replicas"].as_u64(), Some(5));
    assert_eq!(flagged["provenance"]["seed"].as_u64(), Some(3));
    assert_ne!(flagged["provenance"]["config_hash"], from_file["provenance"]["config_hash"]);

    std::fs::write(dir.path().join("bad.toml"), "replicas = \"lots\"\n").unwrap();
    let out = omd(dir.path(), &["--config", "bad.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

/// `sup_x |Φ(x) − Φ(x/2)|`, attained where both densities agree.
fn ks_distance_scale_two() -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let phi = Normal::new(0.0, 1.0).unwrap();
    let x = (8.0f64 * 2f64.ln() / 3.0).sqrt();
    phi.cdf(x) - phi.cdf(x / 2.0)
}

#[test]
fn wrong_limit_variance_fails_with_exit_1() {
    let dir = workspace();
    let common = ["verify", "clt", "--coefficients", "kernel.json", "--n", "32", "--replicas", "2000", "--seed", "4"];
    let ok = omd(dir.path(), &common);
    assert_eq!(ok.status.code(), Some(0));
    let ok: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(ok["ks"]["target_variance"].as_f64(), Some(5.0625));

    let mut args = common.to_vec();
    args.extend(["--variance-scale", "4", "--out", "clt.json"]);
    let bad = omd(dir.path(), &args);
    assert_eq!(bad.status.code(), Some(1));
    let report = json_file(&dir.path().join("clt.json"));
    assert_eq!(report["passed"], Value::Bool(false));
    assert_eq!(report["ks"]["passed"], Value::Bool(false));
    let oracle = ks_distance_scale_two();
    let stat = report["ks"]["statistic"].as_f64().unwrap();
    assert!((stat - oracle).abs() < 0.04, "{stat} vs {oracle}");
    assert!(stat > report["ks"]["threshold"].as_f64().unwrap());
}

#[test]
fn vc_index_of_plane_quadrants() {
    let dir = workspace();
    let out = omd(dir.path(), &["vc", "--class", "Q2", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["vc"]["index"].as_u64(), Some(3));
    assert_eq!(report["vc"]["exact"], Value::Bool(true));
    assert_eq!(report["vc"]["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_output_carries_sidecar_metadata() {
    let dir = workspace();
    let out = omd(
        dir.path(),
        &["verify", "moment", "--p", "2,4", "--n", "8", "--format", "csv", "--out", "m.csv", "--no-timestamp"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,measured,reference,ratio,kappa"));
    assert_eq!(lines.count(), 2);
    let meta = json_file(&dir.path().join("m.csv.meta.json"));
    assert_eq!(meta["provenance"]["command"], "verify.moment");
    assert_eq!(meta["passed"], Value::Bool(true));
}

#[test]
fn condition_reports_per_axis() {
    let dir = workspace();
    let out = omd(dir.path(), &["check-condition", "--in", "kernel.json", "--kind", "half-space"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let axes = report["axes"].as_array().unwrap();
    assert_eq!(axes.len(), 2);
    // E[X_0 | F_{1,s}] keeps the lag-one coefficients along axis s: 0.5 and 0.25
    let expected = (0.5f64 * 0.5 + 0.25 * 0.25).sqrt();
    for axis in axes {
        assert!((axis["total"].as_f64().unwrap() - expected).abs() < 1e-12);
    }
}
