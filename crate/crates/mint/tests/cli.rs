use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mint::data::{load_csv, read_samples, write_labeled_csv, Observations, Schema};
use mint::data::idx::{encode_images, encode_labels, IdxImages};
use mint::ExperimentConfig;

fn mint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mint")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const LOCATION: &str = r#"{
    "model": {"kind": "gaussian_location"},
    "data": {"source": "generate", "n": 200, "theta_star": [0.5], "seed": 4},
    "sampler": "mint",
    "mint": {"m": 20, "proposal": {"step": 0.3}},
    "seed": 11,
    "samples": 2000,
    "burn_in": 100
}"#;

#[test]
fn lambda_at_or_above_tau_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    // τ = ln 20 / ln 200 ≈ 0.565
    let cfg = write_config(dir.path(), "c.json", &LOCATION.replace(r#""m": 20,"#, r#""m": 20, "lambda": 0.6,"#));
    let out = mint(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("must be strictly below tau"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn malformed_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &LOCATION.replace("\"seed\": 11", "\"seed\": 11, \"typo\": 1"));
    assert_eq!(mint(&["run", "--config", s(&cfg)]).status.code(), Some(2));
    let missing = dir.path().join("missing.csv");
    let cfg = write_config(
        dir.path(),
        "d.json",
        &LOCATION.replace(
            r#"{"source": "generate", "n": 200, "theta_star": [0.5], "seed": 4}"#,
            &format!(r#"{{"source": "csv", "path": "{}"}}"#, s(&missing)),
        ),
    );
    let out = mint(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn same_seed_gives_identical_samples_and_diagnose_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", LOCATION);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = mint(&["run-mint", "--config", s(&cfg), "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let sa = fs::read(a.join("samples.csv")).unwrap();
    assert_eq!(sa, fs::read(b.join("samples.csv")).unwrap());
    assert_eq!(read_samples(&a.join("samples.csv")).unwrap().len(), 2000);

    let o = mint(&["run-mint", "--config", s(&cfg), "--seed", "12", "--out", s(&dir.path().join("c"))]);
    assert!(o.status.success());
    assert_ne!(sa, fs::read(dir.path().join("c/samples.csv")).unwrap());

    let before = fs::read(a.join("diagnostics.json")).unwrap();
    fs::remove_file(a.join("diagnostics.json")).unwrap();
    assert!(mint(&["diagnose", s(&a)]).status.success());
    assert_eq!(before, fs::read(a.join("diagnostics.json")).unwrap());
    assert!(a.join("acceptance.csv").exists());
    let d: serde_json::Value = serde_json::from_slice(&before).unwrap();
    assert!(d["ks_distance"].as_f64().unwrap() < 0.2);
    assert_eq!(d["evaluations_per_sample"].as_f64().unwrap(), (20.0 * 2101.0) / 2000.0);
}

#[test]
fn gen_data_writes_reproducible_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "symmetric_mixture", "d": 3},
            "data": {"source": "generate", "n": 100, "theta_star": [2, 0, 0]},
            "sampler": "mh"}"#,
    );
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = mint(&["gen-data", "--config", s(&cfg), "--seed", "7", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let obs = load_csv(&a, &Schema::Scalar { column: "x".into() }).unwrap();
    assert_eq!(obs.len(), 100);

    // the written file feeds a run exactly like the generated data
    let from_csv = write_config(
        dir.path(),
        "d.json",
        &format!(
            r#"{{"model": {{"kind": "symmetric_mixture", "d": 3}},
                "data": {{"source": "csv", "path": "{}"}},
                "sampler": "mh", "samples": 50, "seed": 2,
                "diagnostics": {{"theta_star": [2, 0, 0]}}}}"#,
            s(&a)
        ),
    );
    let generated = write_config(
        dir.path(),
        "e.json",
        r#"{"model": {"kind": "symmetric_mixture", "d": 3},
            "data": {"source": "generate", "n": 100, "theta_star": [2, 0, 0], "seed": 7},
            "sampler": "mh", "samples": 50, "seed": 2}"#,
    );
    for (cfg, out) in [(&from_csv, "x"), (&generated, "y")] {
        assert!(mint(&["run", "--config", s(cfg), "--out", s(&dir.path().join(out))]).status.success());
    }
    assert_eq!(
        fs::read(dir.path().join("x/samples.csv")).unwrap(),
        fs::read(dir.path().join("y/samples.csv")).unwrap()
    );
}

#[test]
fn one_chain_mintee_equals_full_batch_mh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "tied_means"},
            "data": {"source": "generate", "n": 300, "theta_star": [0, 1], "seed": 5},
            "sampler": "mh",
            "mh": {"proposal": {"kernel": "langevin", "step": 0.05}},
            "mintee": {"chains": 1, "initial_step": [0.05], "energy_floor": {"kind": "value", "h0": 0}},
            "seed": 9, "samples": 500, "burn_in": 50,
            "init": {"kind": "theta_star"}}"#,
    );
    let (a, b) = (dir.path().join("mh"), dir.path().join("ee"));
    assert!(mint(&["run-mh", "--config", s(&cfg), "--out", s(&a)]).status.success());
    let o = mint(&["run-mintee", "--config", s(&cfg), "--out", s(&b)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("samples.csv")).unwrap(), fs::read(b.join("samples.csv")).unwrap());
    assert!(b.join("ring_table.csv").exists());
}

#[test]
fn mintee_runs_threaded_with_valid_bookkeeping() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "symmetric_mixture", "d": 2},
            "data": {"source": "generate", "n": 400, "theta_star": [2, 0], "seed": 1},
            "sampler": "mintee",
            "mintee": {"chains": 3, "gamma": 1.4, "step_scale": 100},
            "seed": 4, "samples": 300, "burn_in": 50,
            "init": {"kind": "pilot_optimum"}}"#,
    );
    let out = dir.path().join("o");
    let o = mint(&["run", "--config", s(&cfg), "--parallel-chains", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    let m = &record["mintee"];
    assert_eq!(m["parallel"], true);
    assert_eq!(m["batch_sizes"][0], 400);
    let counts = m["ring_counts"].as_array().unwrap();
    for (k, row) in counts.iter().enumerate() {
        let total: u64 = row.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, (k as u64 + 1) * 350 - 50);
    }
    assert_eq!(read_samples(&out.join("samples.csv")).unwrap().len(), 300);
}

#[test]
fn labelled_csv_and_idx_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(
        r#"{"model": {"kind": "logistic", "features": 3},
            "data": {"source": "generate", "n": 40, "theta_star": [1, -1, 0.5, 0.1]},
            "sampler": "mint"}"#,
    )
    .unwrap();
    let mint::workload::Workload::Logistic { data, .. } = mint::workload::load_workload(&cfg).unwrap() else {
        panic!("logistic workload")
    };
    let path = dir.path().join("d.csv");
    write_labeled_csv(&path, data.points()).unwrap();
    let Observations::Labeled(back) = load_csv(&path, &Schema::Labeled { features: 3 }).unwrap() else {
        panic!("labelled rows")
    };
    assert_eq!(back, data.points());

    let images = IdxImages {
        count: 4,
        rows: 2,
        cols: 2,
        pixels: (0..16).map(|v| (v * 16) as u8).collect(),
    };
    let labels = [3u8, 5, 7, 5];
    fs::write(dir.path().join("img"), encode_images(&images)).unwrap();
    fs::write(dir.path().join("lab"), encode_labels(&labels)).unwrap();
    let run = write_config(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"model": {{"kind": "logistic", "features": 4}},
                "data": {{"source": "idx", "images": "{}", "labels": "{}", "digits": [3, 5]}},
                "sampler": "mh", "samples": 20}}"#,
            s(&dir.path().join("img")),
            s(&dir.path().join("lab"))
        ),
    );
    let o = mint(&["run", "--config", s(&run), "--out", s(&dir.path().join("o"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/run.json")).unwrap()).unwrap();
    assert_eq!(record["n"], 3);
    assert_eq!(record["dim"], 5);
}

#[test]
fn tied_means_example_balances_the_two_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/tied_means.json");
    let o = mint(&["run", "--config", cfg, "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    let ratio = d["mode_ratio"].as_f64().unwrap();
    assert!((0.7..=1.4).contains(&ratio), "mode ratio {ratio}");
    assert!(d["hitting_iterations"].as_array().unwrap().iter().all(|h| h.is_u64()));
}
