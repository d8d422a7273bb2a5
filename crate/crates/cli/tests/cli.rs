use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tfdw(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfdw"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TFDW_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Header names and data rows, comment lines skipped.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn summary(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn mass_curve_has_forty_increasing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfdw(
        &[
            "mass-curve",
            "--set",
            "c_tf=1",
            "--set",
            "mu_count=40",
            "--workers",
            "4",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("mass-curve.csv"));
    assert_eq!(rows.len(), 40);
    let mass = column(&header, &rows, "mass");
    assert!(mass.windows(2).all(|w| w[1] > w[0]));
    let s = summary(&dir.path().join("mass-curve.json"));
    assert_eq!(s["results"]["mass_increasing"], Value::Bool(true));
    assert_eq!(s["failed"], Value::Bool(false));
}

#[test]
fn scan_at_zero_exchange_has_no_gain() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfdw(
        &["scan-symmetry", "--set", "c_list=0", "--set", "n=16"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("scan-symmetry.csv"));
    assert_eq!(rows.len(), 1);
    assert!(column(&header, &rows, "gain")[0].abs() <= 1e-7);
    let s = summary(&dir.path().join("scan-symmetry.json"));
    assert_eq!(s["seed"], Value::from(0));
    assert_eq!(s["config"]["c_list"], Value::from("0"));
    assert!(s["version"].is_string());
}

#[test]
fn reruns_are_byte_identical_and_independent_of_workers() {
    let args = [
        "scan-symmetry",
        "--set",
        "c_list=0,2,5",
        "--set",
        "n=8",
        "--seed",
        "3",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&tfdw(&args, a.path())), 0);
    assert_eq!(code(&tfdw(&args, b.path())), 0);
    for file in ["scan-symmetry.csv", "scan-symmetry.json"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    let mut parallel = args.to_vec();
    parallel.extend(["--workers", "3"]);
    assert_eq!(code(&tfdw(&parallel, c.path())), 0);
    assert_eq!(
        read_csv(&a.path().join("scan-symmetry.csv")),
        read_csv(&c.path().join("scan-symmetry.csv"))
    );
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# radial run\nc_tf = 2   # heavier Thomas-Fermi term\nmu = 0.01\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tfdw(
        &[
            "radial",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "mu=0.02",
        ],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out.join("radial.json"));
    assert_eq!(s["config"]["c_tf"], Value::from("2"));
    assert_eq!(s["results"]["mu"], Value::from(0.02));
    assert!(s["results"]["pohozaev_residual"].as_f64().unwrap() <= 1e-6);
    let (header, rows) = read_csv(&out.join("radial-profile.csv"));
    assert_eq!(header, ["r", "q", "dq"]);
    assert!(rows.len() > 100);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&tfdw(&["periodic-min", "--set", "bogus=1"], dir.path())),
        1
    );
    assert_eq!(
        code(&tfdw(&["periodic-min", "--set", "c_tf=-1"], dir.path())),
        1
    );
    assert_eq!(
        code(&tfdw(
            &["periodic-min", "--config", "/nonexistent/run.cfg"],
            dir.path()
        )),
        1
    );
    assert_eq!(code(&tfdw(&["radial", "--set", "mu=1"], dir.path())), 1);
    assert_eq!(code(&tfdw(&["no-such-command"], dir.path())), 1);
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "c_tf = 1\nunknown_key = 3\n").unwrap();
    let o = tfdw(
        &["periodic-min", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));
}

#[test]
fn non_convergence_exits_with_two_and_still_writes_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfdw(
        &[
            "periodic-min",
            "--set",
            "n=8",
            "--set",
            "max_iters=1",
            "--set",
            "c=2",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let s = summary(&dir.path().join("periodic-min.json"));
    assert_eq!(s["failed"], Value::Bool(true));
    assert_eq!(s["results"]["converged"], Value::Bool(false));
}

#[test]
fn periodic_min_writes_a_density_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfdw(
        &["periodic-min", "--set", "n=8", "--set", "lambda=2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("periodic-min-density.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# dims = 8 8 8\n"));
    assert!(text.contains("# lambda = 2, c = 0\n"));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, ["w", "rho"]);
    assert_eq!(rows.len(), 512);
    let rho = column(&header, &rows, "rho");
    let dv = 1.0 / 512.0;
    assert!((rho.iter().sum::<f64>() * dv - 2.0).abs() <= 1e-12);
    let s = summary(&dir.path().join("periodic-min.json"));
    assert_eq!(s["results"]["uniqueness_certified"], Value::Bool(true));
}

#[test]
fn environment_variable_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tfdw"))
        .args(["periodic-min", "--set", "n=8"])
        .env("TFDW_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("periodic-min.json").exists());
}
