//! CLI surface tests: exit codes, validation messages, CSV layout,
//! determinism, config handling.

use std::path::PathBuf;
use std::process::{Command, Output};

fn cdrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdrp"))
        .args(args)
        .output()
        .expect("spawn cdrp")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cdrp-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn sample_writes_grid_sized_csv_deterministically() {
    let dir = tmp_dir("sample");
    let out1 = dir.join("dbm1.csv");
    let out2 = dir.join("dbm2.csv");
    for out in [&out1, &out2] {
        let r = cdrp(&[
            "sample", "--object", "dbm", "--grid", "0:1:1024", "--seed", "7", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same invocation must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1026, "header plus 1025 grid rows");
    assert_eq!(lines[0], "time,value1,value2");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sample_rejects_unordered_nibb_endpoints_with_exit_2() {
    let r = cdrp(&["sample", "--object", "nibb", "--z1", "1", "--z2", "1", "--seed", "7"]);
    assert_eq!(r.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&r.stderr);
    assert!(msg.contains("z1 > z2"), "message must name the constraint, got: {msg}");
}

#[test]
fn sample_rejects_unknown_object_with_exit_2() {
    let r = cdrp(&["sample", "--object", "airy", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn sample_path_objects_produce_two_column_csv() {
    let dir = tmp_dir("objects");
    for obj in ["bm", "bb", "bessel3", "meander"] {
        let out = dir.join(format!("{obj}.csv"));
        let r = cdrp(&[
            "sample", "--object", obj, "--grid", "0:1:16", "--seed", "3", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.status.code(), Some(0), "object {obj}");
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("time,value\n"), "object {obj}");
        assert_eq!(text.lines().count(), 18, "object {obj}");
    }
    // Bessel bridge needs its endpoint.
    let r = cdrp(&["sample", "--object", "bessel-bridge", "--seed", "3"]);
    assert_eq!(r.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn nonint_walks_emit_rejection_statistics_json() {
    let dir = tmp_dir("walks");
    let out = dir.join("walks.csv");
    let r = cdrp(&[
        "sample", "--object", "nonint-walks", "--walk-steps", "50", "--seed", "11", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("walks.json")).unwrap()).unwrap();
    assert_eq!(meta["n"], 50);
    assert_eq!(meta["accepted"], true);
    assert!(meta["attempts"].as_u64().unwrap() >= 1);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let r = cdrp(&["verify", "--suite", "everything", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn verify_writes_reports_with_seed_embedded() {
    let dir = tmp_dir("verify");
    let r = cdrp(&[
        "verify", "--suite", "densities", "--seed", "42", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let rep: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("dbm_entrance_normalization.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rep["seed"]["master_seed"], 42);
    assert_eq!(rep["pass"], true);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    // One printed line per check.
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 7);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_config_file_with_flag_override() {
    let dir = tmp_dir("config");
    let cfg = dir.join("verify.toml");
    std::fs::write(&cfg, "suite = \"densities\"\nseed = 42\nscale = 1.0\n").unwrap();
    let out = dir.join("reports");
    let r = cdrp(&[
        "verify", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    // Flag wins over the config seed.
    let rep: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("dbm_entrance_normalization.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rep["seed"]["master_seed"], 7);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_with_unknown_keys_is_rejected() {
    let dir = tmp_dir("badconfig");
    let cfg = dir.join("verify.toml");
    std::fs::write(&cfg, "suite = \"densities\"\nreplicas_per_worker = 4\n").unwrap();
    let r = cdrp(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&r.stderr);
    assert!(msg.contains("replicas_per_worker") || msg.contains("unknown field"), "{msg}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn polymer_rejects_odd_n_point_to_point_and_zero_replicas() {
    let r = cdrp(&["polymer", "--n", "101", "--kind", "point-to-point", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
    let r = cdrp(&["polymer", "--n", "100", "--replicas", "0", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn polymer_smoke_run_writes_reports_and_profiles() {
    let dir = tmp_dir("polymer");
    let r = cdrp(&[
        "polymer", "--n", "256", "--kappa", "2", "--replicas", "64", "--seed", "5",
        "--kappas", "1,2,4", "--out", dir.to_str().unwrap(),
    ]);
    // Exit may be 0 or 1 (pass flags are calibrated at production sizes);
    // usage errors are not acceptable.
    assert_ne!(r.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    for name in ["localization", "favorite_point", "bessel_shape", "ergodicity"] {
        let path = dir.join(format!("{name}.json"));
        assert!(path.exists(), "missing report {name}");
        let rep: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(rep["params"]["n"], 256, "report {name}");
        assert_eq!(rep["seed"]["master_seed"], 5);
    }
    let profiles = std::fs::read_to_string(dir.join("profiles.csv")).unwrap();
    assert!(profiles.starts_with("replica,offset_sites,offset_cdrp,profile\n"));
    assert!(profiles.lines().count() > 64);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn polymer_dumps_density_and_environment_csv() {
    let dir = tmp_dir("polymer-dumps");
    let r = cdrp(&[
        "polymer", "--n", "64", "--kappa", "2", "--replicas", "64", "--seed", "5",
        "--experiment", "localization", "--k-values", "1,2", "--dump-density",
        "--dump-environment", "--out", dir.to_str().unwrap(),
    ]);
    assert_ne!(r.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let dens = std::fs::read_to_string(dir.join("density.csv")).unwrap();
    assert!(dens.starts_with("site,logf,mass\n"));
    // Interior point-to-point slice at p = 0.5 on n = 64: 33 support sites.
    assert_eq!(dens.lines().count(), 34);
    let env = std::fs::read_to_string(dir.join("environment.csv")).unwrap();
    assert!(env.starts_with("i,j,omega\n"));
    assert_eq!(env.lines().count(), 1 + (64 + 1) * (64 + 2) / 2 - 1); // header + rows 1..=64
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn polymer_identical_statistics_across_thread_counts() {
    let dir = tmp_dir("polymer-threads");
    let run = |threads: &str, sub: &str| -> serde_json::Value {
        let out = dir.join(sub);
        let r = cdrp(&[
            "polymer", "--n", "256", "--kappa", "2", "--replicas", "64", "--seed", "5",
            "--experiment", "localization", "--threads", threads, "--out",
            out.to_str().unwrap(),
        ]);
        assert_ne!(r.status.code(), Some(2));
        serde_json::from_str(&std::fs::read_to_string(out.join("localization.json")).unwrap())
            .unwrap()
    };
    let a = run("1", "t1");
    let b = run("4", "t4");
    assert_eq!(a["statistics"], b["statistics"]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn out_env_var_honored_and_overridden_by_flag() {
    let dir = tmp_dir("envvar");
    let env_out = dir.join("from-env");
    std::fs::create_dir_all(&env_out).unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_cdrp"))
        .args(["sample", "--object", "bm", "--grid", "0:1:4", "--seed", "1"])
        .env("CDRP_OUT", env_out.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert!(env_out.join("bm.csv").exists());
    // Explicit --out wins.
    let flag_out = dir.join("flagged.csv");
    let r = Command::new(env!("CARGO_BIN_EXE_cdrp"))
        .args([
            "sample", "--object", "bm", "--grid", "0:1:4", "--seed", "1", "--out",
            flag_out.to_str().unwrap(),
        ])
        .env("CDRP_OUT", env_out.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert!(flag_out.exists());
    let _ = std::fs::remove_dir_all(&dir);
}
