use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spikeloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikeloc")).args(args).output().expect("binary runs")
}

fn run_with(sub: &str, config: &str, dir: &TempDir) -> Output {
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    spikeloc(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn phi_profile_writes_the_pinned_layout() {
    let dir = TempDir::new().unwrap();
    let out = run_with("phi-profile", r#"{"phi": {"k_max": 50}}"#, &dir);
    assert_ok(&out);
    assert_eq!(header(&dir.path().join("out/phi_profile.csv")), "k,dist,phi_raw,phi_monotone");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/run.json")).unwrap()).unwrap();
    assert_eq!(meta["schema_version"], 1);
}

#[test]
fn noise_sweep_and_gamma_error_headers() {
    let dir = TempDir::new().unwrap();
    assert_ok(&run_with("noise-sweep", r#"{"trials": 2, "thetas": [0.1]}"#, &dir));
    assert_eq!(header(&dir.path().join("out/noise_sweep.csv")), "theta,trials,mean_px,q1_px,median_px,q3_px,max_px");
    assert_eq!(header(&dir.path().join("out/noise_trials.csv")), "theta,trial,x_true,x_hat,error_px");

    let dir = TempDir::new().unwrap();
    assert_ok(&run_with("gamma-error", r#"{"trials": 2, "thetas": [0.1]}"#, &dir));
    assert_eq!(header(&dir.path().join("out/gamma_error.csv")), "theta,trials,min,q1,median,q3,max,mean");
    assert_eq!(header(&dir.path().join("out/gamma_trials.csv")), "theta,trial,error_px,gamma_rel_error");
}

#[test]
fn phase_transition_header() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"trials": 2, "phase": {"k_values": [1], "n_values": [3], "samples": 200, "solvers": ["alternating_min"]}}"#;
    assert_ok(&run_with("phase-transition", cfg, &dir));
    assert_eq!(header(&dir.path().join("out/phase_alternating_min.csv")), "K,N,solver,success_rate,trials");
}

#[test]
fn mc_amplitude_header() {
    let dir = TempDir::new().unwrap();
    assert_ok(&run_with("mc-amplitude", r#"{"trials": 3, "mc": {"sigma_factors": [1.0]}}"#, &dir));
    assert_eq!(header(&dir.path().join("out/mc_amplitude.csv")), "sigma,trials,z1_mean,z1_std,z2_mean,z2_std,level,bound");
}

#[test]
fn localize_reports_a_synthesized_spike() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"localize": {"mode": "single", "synthesize": {"positions": [[0.4321]], "weights": [1.0], "gamma": [1.0, 0.2, -0.3]}}}"#;
    assert_ok(&run_with("localize", cfg, &dir));
    let dets: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/detections.json")).unwrap()).unwrap();
    let x = dets[0]["x"][0].as_f64().unwrap();
    assert!((x - 0.4321).abs() < 1e-9, "{dets}");
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = r#"{"trials": 3, "thetas": [0.5], "seed": 9}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_ok(&run_with("noise-sweep", cfg, &a));
    assert_ok(&run_with("noise-sweep", cfg, &b));
    for f in ["noise_sweep.csv", "noise_trials.csv"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
    }
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = run_with("noise-sweep", r#"{"trails": 3}"#, &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));

    let out = spikeloc(&["phi-profile", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run_with("phi-profile", r#"{"family": {"preset": "nope"}}"#, &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = spikeloc(&["phi-profile", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn measurement_file_round_trips_through_peaks_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"localize": {"synthesize": {"positions": [[0.4237]], "weights": [1.0], "gamma": [1.0, 0.3, 0.2]}}}"#;
    assert_ok(&run_with("localize", cfg, &dir));
    let csv = dir.path().join("out/measurement.csv");
    assert_eq!(header(&csv), "m,z_1,y");

    let again = TempDir::new().unwrap();
    let cfg = format!(r#"{{"localize": {{"measurement": {:?}}}}}"#, csv.to_str().unwrap());
    assert_ok(&run_with("localize", &cfg, &again));
    let dets: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(again.path().join("out/detections.json")).unwrap()).unwrap();
    let dets = dets.as_array().unwrap();
    assert_eq!(dets.len(), 1, "{dets:?}");
    assert_eq!(dets[0]["status"], "isolated");
    assert!((dets[0]["x"][0].as_f64().unwrap() - 0.4237).abs() < 1e-9);
}
