use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dpm");

fn dpm(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn toy_csv(dir: &std::path::Path) -> String {
    let path = dir.join("toy.csv");
    let mut s = String::from("x1,x2,y\n");
    for i in 0..30 {
        let (a, b) = (i as f64 / 29.0, ((i * 7) % 30) as f64 / 29.0);
        s.push_str(&format!("{a},{b},{}\n", 1.0 + 2.0 * a - b + (6.0 * a).sin()));
    }
    std::fs::write(&path, s).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn analytic_separability_prints_psi() {
    let out = dpm(&["separability", "--analytic-psi", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["theta_estimate"].as_f64().unwrap() - 0.82768).abs() < 1e-5);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy_csv(dir.path());
    let out = dir.path().join("t.csv");
    let out = out.to_str().unwrap();
    let missing = dpm(&["fit", "--data", &data, "--response", "nope", "--lambda-f", "1", "--lambda-g", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_grid = dpm(&["transect", "--data", &data, "--response", "y", "--lf-grid", "2:1:3", "--out", out]);
    assert_eq!(bad_grid.status.code(), Some(2));
    let no_lambda = dpm(&["fit", "--data", &data, "--response", "y", "--lambda-f", "1"]);
    assert_eq!(no_lambda.status.code(), Some(2));
    assert_eq!(dpm(&["simulate", "table9"]).status.code(), Some(2));
}

#[test]
fn fit_reports_original_scale_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let data = toy_csv(dir.path());
    let out = dpm(&["fit", "--data", &data, "--response", "y", "--flex", "stumps", "--lambda-f", "0", "--lambda-g", "0.01"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["f_original_scale"]["slopes"].as_array().unwrap().len(), 2);
    assert!(v["training_rmse"].as_f64().unwrap() < 0.5);
}

#[test]
fn help_says_transformations_are_the_users_job() {
    let out = dpm(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("taking logs"), "{text}");
}
