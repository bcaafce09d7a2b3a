use std::path::Path;
use std::process::{Command, Output};

use kernel_sysid::gram::assemble_gram;
use kernel_sysid::io::read_model_csv;
use kernel_sysid::kernels::KernelSpec;
use kernel_sysid::quadrature::QuadratureConfig;
use kernel_sysid::signals::{PiecewiseConstantSignal, TrueSystem};
use kernel_sysid::solver::fit_rls;

fn ksysid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksysid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TIMES: [f64; 5] = [0.1, 0.25, 0.4, 0.55, 0.7];

/// Input `t,level` and noiseless measurements `t,y` of the default system.
fn toy_files(dir: &Path) -> (String, String) {
    let input = dir.join("u.csv");
    std::fs::write(&input, "t,level\n0.0,1.0\n0.3,0.0\n0.5,1.0\n").unwrap();
    let u = PiecewiseConstantSignal::new(vec![0.0, 0.3, 0.5], vec![1.0, 0.0, 1.0]).unwrap();
    let sys = TrueSystem::default();
    let mut rows = String::from("t,y\n");
    for t in TIMES {
        rows.push_str(&format!("{t},{}\n", sys.response(&u, t)));
    }
    let data = dir.join("y.csv");
    std::fs::write(&data, rows).unwrap();
    (input.display().to_string(), data.display().to_string())
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv").display().to_string();
    let out = dir.path().join("out").display().to_string();
    let o = ksysid(&["identify", "--input", &missing, "--data", &missing, "--kernel", "family=exponential; atoms=1:1", "--lambda", "0.1", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (input, data) = toy_files(dir.path());
    let out = dir.path().join("out").display().to_string();
    let tc = "family=warped; atoms=1:5; k=0; G=min";
    let o = ksysid(&["identify", "--input", &input, "--data", &data, "--kernel", tc, "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--gcv"));
    let o = ksysid(&["identify", "--input", &input, "--data", &data, "--kernel", "family=bogus", "--lambda", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    let o = ksysid(&["diagnose", "--kernel", tc, "--probe", "square"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!ksysid(&["frobnicate"]).status.success());
}

#[test]
fn identify_single_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let (input, data) = toy_files(dir.path());
    let out = dir.path().join("out");
    let tc = "family=warped; atoms=1:5; k=0; G=min";
    let o = ksysid(&["identify", "--input", &input, "--data", &data, "--kernel", tc, "--lambda", "1e-3", "--out", &out.display().to_string(), "--export-gram"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = read_model_csv(&out.join("model.csv")).unwrap();
    assert_eq!(model.coefficients.len(), 5);
    assert_eq!(model.times, TIMES.to_vec());
    assert_eq!(model.lambda, 1e-3);

    // same fit computed directly through the library
    let spec: KernelSpec = tc.parse().unwrap();
    let u = PiecewiseConstantSignal::new(vec![0.0, 0.3, 0.5], vec![1.0, 0.0, 1.0]).unwrap();
    let g = assemble_gram(&spec, &u, &TIMES, &QuadratureConfig::default()).unwrap();
    let sys = TrueSystem::default();
    let y: Vec<f64> = TIMES.iter().map(|&t| sys.response(&u, t)).collect();
    let c = fit_rls(g.matrix(), &y, 1e-3).unwrap();
    for (a, b) in model.coefficients.iter().zip(c.iter()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
    let impulse = std::fs::read_to_string(out.join("impulse.csv")).unwrap();
    assert_eq!(impulse.lines().next(), Some("t,h"));
    assert_eq!(impulse.lines().count(), 1 + 401);
    assert!(out.join("output.csv").exists() && out.join("gram.csv").exists());
}

#[test]
fn identify_with_gcv_and_several_kernels_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (input, data) = toy_files(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = ksysid(&[
            "identify", "--input", &input, "--data", &data,
            "--kernel", "family=warped; atoms=1:3; k=0; G=min",
            "--kernel", "family=warped; atoms=1:30; k=1; G=min",
            "--gcv", "--normalize", "--grid", "0,1,11",
            "--out", &out.display().to_string(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("lambda = "));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["model.csv", "weights.csv", "impulse.csv", "output.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let model = read_model_csv(&a.join("model.csv")).unwrap();
    assert_eq!(model.components.len(), 2);
    let weights = std::fs::read_to_string(a.join("weights.csv")).unwrap();
    assert_eq!(weights.lines().count(), 3);
}

#[test]
fn diagnose_reports_verdict_and_degree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trend.csv");
    let o = ksysid(&["diagnose", "--kernel", "family=warped; atoms=1:1; k=1; G=min", "--csv", &csv.display().to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("verdict  bounded"), "{text}");
    assert!(text.contains("relative_degree  2"), "{text}");
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);

    let o = ksysid(&["diagnose", "--kernel", "family=ti; atoms=1:1; f=gaussian", "--horizons", "5,10,20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict  diverging"));
}

#[test]
fn small_experiment_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "n_runs = 1\nn_samples = 30\nm = 6\nlambda_grid = 1e-6, 1, 7\nfit_nodes = 201\n").unwrap();
    let out = dir.path().join("exp");
    let o = ksysid(&["experiment", "--config", &cfg.display().to_string(), "--out", &out.display().to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("median"));
}
