use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lcgp::experiment::{write_field_csv, CurlFreeField, ExperimentConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lcgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcgp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY_SIM: &str = r#"{
  "n_train": 12,
  "grid": 5,
  "nc_schedule": [0, 10],
  "repetitions": 2,
  "hyper": {"fixed": {"signal_variance": 4.0, "length_scale": 1.0}}
}"#;

#[test]
fn construct_g_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let o = lcgp(&["construct-g", "--f-spec", &cfg("divergence_2d.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("-d/dx1"));
    let text = fs::read_to_string(&out).unwrap();
    let g = lcgp::operator::parse_operator_json(&text).unwrap();
    assert_eq!((g.rows(), g.cols()), (2, 1));
    assert!(text.contains("\"rendered\""));
}

#[test]
fn construct_g_curl_gives_gradient() {
    let o = lcgp(&["construct-g", "--f-spec", &cfg("curl_3d.json")]);
    assert_eq!(o.status.code(), Some(0));
    let g = lcgp::operator::parse_operator_json(&stdout(&o)).unwrap();
    assert_eq!(g, lcgp::operator::make_gradient_operator(3));
}

#[test]
fn construct_g_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"vars\": 2,\n  \"rows\": oops\n}").unwrap();
    let o = lcgp(&["construct-g", "--f-spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    // a full-rank constant operator only has the trivial annihilator
    let full = dir.path().join("full.json");
    fs::write(
        &full,
        r#"{"vars": 1, "rows": 2, "cols": 2, "entries": [
            {"row": 0, "col": 0, "terms": [{"coeff": 1, "exponents": [0]}]},
            {"row": 1, "col": 1, "terms": [{"coeff": 1, "exponents": [0]}]}]}"#,
    )
    .unwrap();
    let o = lcgp(&["construct-g", "--f-spec", full.to_str().unwrap(), "--max-degree", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = lcgp(&["construct-g"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_kernel_outcomes() {
    let o = lcgp(&["check-kernel", "--f-spec", &cfg("divergence_2d.json"), "--g-spec", "auto", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("max violation"));

    let o = lcgp(&["check-kernel", "--f-spec", &cfg("divergence_2d.json"), "--g-spec", "identity"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exceeds tolerance"));

    let o = lcgp(&["check-kernel", "--f-spec", &cfg("curl_3d.json"), "--samples", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 samples"));
}

#[test]
fn sim_experiment_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, TINY_SIM).unwrap();
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = lcgp(&[
            "sim-experiment",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(out.join("field_error.csv").is_file());
        fs::read(out.join("rmse.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("1", "b");
    let c = run("2", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("method,nc,mean,std,n_ok,jitter,seconds\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn real_experiment_runs_and_reports_missing_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcgp(&[
        "real-experiment",
        "--data",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.csv"));

    let data = dir.path().join("field.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let field = CurlFreeField::random(3, 20, 0.4, &mut rng);
    let (x, y) = field.sample(&[[0.0, 1.0]; 3], 60, 0.01, &mut rng);
    write_field_csv(&data, &x, &y).unwrap();
    let config = dir.path().join("c.json");
    fs::write(
        &config,
        r#"{"n_train": 20, "n_test": 30, "repetitions": 2, "nc_schedule": [0, 5],
            "methods": ["curl_free", "diagonal", "artificial"],
            "hyper": {"fixed": {"signal_variance": 0.2, "length_scale": 0.4}}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = lcgp(&[
        "real-experiment",
        "--config",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("rmse.csv")).unwrap();
    assert!(text.contains("curl_free,0,"));
    assert!(text.contains("artificial,5,"));
}

#[test]
fn predict_with_shipped_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.csv");
    let o = lcgp(&[
        "predict",
        "--model",
        &cfg("model_div2.json"),
        "--points",
        &cfg("data/div2_points.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,mean1,mean2,var1,var2"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let truth = lcgp::experiment::simulated_field(&[v[0], v[1]], 0.01);
        assert!((v[2] - truth[0]).abs() < 0.05 && (v[3] - truth[1]).abs() < 0.05, "{line}");
    }
}

#[test]
fn shipped_configs_parse() {
    for name in ["sim_full.json", "sim_quick.json", "real_default.json"] {
        let text = fs::read_to_string(configs().join(name)).unwrap();
        ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for name in ["divergence_2d.json", "divergence_3d.json", "curl_3d.json"] {
        let text = fs::read_to_string(configs().join(name)).unwrap();
        lcgp::operator::parse_operator_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
