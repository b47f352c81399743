use std::path::Path;
use std::process::{Command, Output};

fn khess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khess")).args(args).env("KHESS_THREADS", "2").output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn eigen_disk_laplacian() {
    let out = khess(&["eigen", "--dim", "2", "--order", "1", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let best = v["lambda_best"].as_f64().unwrap();
    assert!((best - 5.7832).abs() / 5.7832 < 1e-2, "{best}");
    assert_eq!(v["N"], 2);
    assert!(v["tolerance_met"].as_bool().unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&out.stderr).expect("manifest on stderr");
    assert_eq!(manifest["command"], "eigen");
}

#[test]
fn missing_order_is_usage_error() {
    let out = khess(&["eigen", "--dim", "2", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(khess(&["--help"]).status.code(), Some(0));
}

#[test]
fn eigen_out_writes_estimate_profile_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("est.json");
    let out = khess(&["eigen", "--dim", "2", "--order", "1", "--radius", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let est: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let csv = est["profile_ref"].as_str().unwrap();
    assert!(Path::new(csv).exists());
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("r,h,hp,hpp"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("est.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["output_paths"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config_hashes"]["parameters"].as_str().unwrap().len(), 64);
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn solve_constant_source() {
    let out = khess(&["solve", "--dim", "2", "--order", "1", "--radius", "1", "--source", "const:3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let r = csv_column(&text, 0);
    let h = csv_column(&text, 1);
    // Δh = 3 on the unit disk: h = 3(r² - 1)/4.
    for (r, h) in r.iter().zip(&h) {
        assert!((h - 0.75 * (r * r - 1.0)).abs() < 1e-6, "r={r} h={h}");
    }
}

#[test]
fn solve_zero_source_is_zero() {
    let out = khess(&["solve", "--dim", "3", "--order", "2", "--radius", "1", "--source", "const:0"]);
    assert_eq!(out.status.code(), Some(0));
    let h = csv_column(&String::from_utf8(out.stdout).unwrap(), 1);
    assert!(h.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn solve_negative_source_is_input_error() {
    let out = khess(&["solve", "--dim", "3", "--order", "2", "--radius", "1", "--source", "const:-1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cone_rejects_non_symmetric_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, r#"{"n":2,"entries":[1,2,3,4]}"#).unwrap();
    let out = khess(&["cone", "--matrix", path.to_str().unwrap(), "--order", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cone_spectrum_membership() {
    let v = json(&khess(&["cone", "--lambda", "1,2,-0.5", "--order", "2"]));
    assert_eq!(v["in_gamma_k"], true);
    assert_eq!(v["korevaar"], true);
    let v = json(&khess(&["cone", "--lambda", "1,-2,-0.5", "--order", "2"]));
    assert_eq!(v["in_gamma_k"], false);
}

#[test]
fn verify_bounds_passes() {
    let out = khess(&["verify", "bounds", "--dim", "3", "--order", "2", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let best = v["lambda_best"].as_f64().unwrap();
    assert!((3.0..=48.0).contains(&best));
}

#[test]
fn verify_minprinciple_quartic_planar() {
    let out = khess(&["verify", "minprinciple", "--quartic", "--dim", "2", "--order", "2", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["lambda"].as_f64().unwrap(), 16.0);
    assert_eq!(v["report"]["certifies"], true);
}

#[test]
fn failed_verification_exits_two() {
    let out = khess(&["verify", "minprinciple", "--quartic", "--dim", "3", "--order", "2", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn verify_barrier_exp_sphere() {
    let out = khess(&[
        "verify", "barrier-exp", "--field", "sphere:1", "--dim", "3", "--order", "2", "--t", "20", "--d0", "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_barrier_log_infeasible_is_numerical_error() {
    // t/(1 + t d0) stays below the augmentation parameter of a saddle-like field.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    std::fs::write(&path, r#"[{"point":[0,0,1],"kappa":[1.0,-0.2]}]"#).unwrap();
    let field = format!("file:{}", path.display());
    let out = khess(&[
        "verify", "barrier-log", "--field", &field, "--order", "2", "--t", "0.01", "--d0", "0.1", "--fsup", "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_is_hashed_and_unknown_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "grid_size = 128\n").unwrap();
    let out = khess(&["--config", good.to_str().unwrap(), "solve", "--dim", "2", "--order", "1", "--radius", "1", "--source", "const:1"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert!(manifest["config_hashes"].as_object().unwrap().contains_key(good.to_str().unwrap()));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 130);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "gridsize = 128\n").unwrap();
    let out = khess(&["--config", bad.to_str().unwrap(), "solve", "--dim", "2", "--order", "1", "--radius", "1", "--source", "const:1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let args = ["solve", "--dim", "3", "--order", "2", "--radius", "1.5", "--source", "poly:1,0,2", "--format", "json"];
    let (a, b) = (khess(&args), khess(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let eig = ["eigen", "--dim", "2", "--order", "2", "--radius", "1", "--probes", "3"];
    assert_eq!(khess(&eig).stdout, khess(&eig).stdout);
}

#[test]
fn csv_values_round_trip() {
    let out = khess(&["solve", "--dim", "2", "--order", "2", "--radius", "1", "--source", "const:1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let v: f64 = field.parse().unwrap();
        assert_eq!(format!("{v:.16e}").parse::<f64>().unwrap(), v);
        assert_eq!(field.split('e').next().unwrap().trim_start_matches('-').replace('.', "").len(), 17);
    }
}
