use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stkernel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const TRUTH: &str = r#"{"family":"ldho","dispersion":"quadratic","dim":2,
"params":{"c0":50,"tau_c":8,"omega_d":0.5,"regime":"underdamped","epsilon":4,"b_or_xi":0.5},
"nugget":0.1}"#;

#[test]
fn eval_writes_kernel_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "eval",
            "--figure",
            "fig1",
            "--r-count",
            "5",
            "--tau-count",
            "4",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("kernel_grid.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,tau,C,C_norm,Cs,Ct,Qint"));
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(first[3], 1.0);
    assert_eq!(text.lines().count(), 1 + 20);
    // 17 significant digits
    assert!(text.lines().nth(2).unwrap().contains("e"));
}

#[test]
fn degenerate_grid_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "eval",
            "--figure",
            "fig2",
            "--r-count",
            "1",
            "--tau-count",
            "1",
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("kernel_grid.csv")).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(&row[..2], &[0.0, 0.0]);
    assert_eq!(row[3], 1.0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["eval"])), 1);
    assert_eq!(code(&run(dir.path(), &["eval", "--figure", "fig9"])), 1);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(
        code(&run(dir.path(), &["--model", "missing.json", "eval"])),
        1
    );
    fs::write(dir.path().join("bad.json"), r#"{"family":"ldho"}"#).unwrap();
    assert_eq!(code(&run(dir.path(), &["--model", "bad.json", "eval"])), 1);
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
}

#[test]
fn empty_dataset_is_named() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("obs.csv"), "s1,s2,t,z\n").unwrap();
    fs::write(dir.path().join("q.csv"), "s1,s2,t\n0,0,1\n").unwrap();
    let o = run(
        dir.path(),
        &[
            "predict", "--figure", "fig1", "--data", "obs.csv", "--query", "q.csv",
        ],
    );
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("obs.csv") && err.contains("empty"), "{err}");
}

#[test]
fn predict_writes_means_and_variances() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("obs.csv"),
        "s1,s2,t,z\n0,0,0,1.5\n1,0,0,0.5\n",
    )
    .unwrap();
    fs::write(dir.path().join("q.csv"), "s1,s2,t\n0,0,0\n0.5,0.5,1\n").unwrap();
    let o = run(
        dir.path(),
        &[
            "predict", "--figure", "fig1", "--data", "obs.csv", "--query", "q.csv", "--mean", "0",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert!(text.starts_with("s1,s2,t,mean,variance\n"));
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[3] - 1.5).abs() < 1e-8);
}

#[test]
fn checks_pass_on_presets_and_fail_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["checks", "--out", "all"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("all/checks.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["models"].as_array().unwrap().len(), 9);

    fs::write(
        dir.path().join("tight.json"),
        r#"{"oracle_rel":1e-30,"oracle_error_factor":1e-30}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "checks",
            "--figure",
            "ou1",
            "--tolerances",
            "tight.json",
            "--out",
            "tight",
        ],
    );
    assert_eq!(code(&o), 3);
    assert!(dir.path().join("tight/checks.json").exists());
}

#[test]
fn simulate_and_fit_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("truth.json"), TRUTH).unwrap();
    for out in ["a", "b"] {
        let o = run(
            dir.path(),
            &[
                "--model",
                "truth.json",
                "--seed",
                "5",
                "--out",
                out,
                "simulate",
                "--spatial",
                "32,32",
                "--nt",
                "64",
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let side = format!("{out}/field.json");
        let o = run(
            dir.path(),
            &["--out", out, "--threads", "2", "fit", "--field", &side],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = run(dir.path(), &["--out", out, "variogram", "--field", &side]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "field.bin",
        "field.json",
        "fit.json",
        "fit_marginal.json",
        "fitted_model.json",
        "variogram_spatial.json",
        "variogram_temporal.json",
        "variogram_space_time.json",
    ] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between reruns");
    }
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/fit.json")).unwrap()).unwrap();
    assert!(fit["objective"].as_f64().unwrap() <= fit["initial_objective"].as_f64().unwrap());
    // the fitted model is itself a valid --model input
    let o = run(
        dir.path(),
        &[
            "--model",
            "a/fitted_model.json",
            "--out",
            "c",
            "eval",
            "--r-count",
            "2",
            "--tau-count",
            "2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn scattered_data_variograms() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("s1,t,z\n");
    for i in 0..12 {
        for j in 0..6 {
            let z = ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6;
            csv.push_str(&format!("{},{},{}\n", i as f64 * 0.5, j as f64, z));
        }
    }
    fs::write(dir.path().join("d.csv"), csv).unwrap();
    let o = run(
        dir.path(),
        &[
            "variogram",
            "--data",
            "d.csv",
            "--r-bins",
            "4",
            "--tau-bins",
            "3",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("variogram_spatial.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["kind"], "spatial_marginal");
    assert_eq!(v["bins"].as_array().unwrap().len(), 4);
}
