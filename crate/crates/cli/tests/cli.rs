//! End-to-end runs of the `qcmap` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qcmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcmap"))
        .args(args)
        .env_remove("QCMAP_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV with `#` comments, split into cells.
fn records(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn table1_lists_every_method() {
    let o = qcmap(&["table1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with(&format!("# qcmap v{}", env!("CARGO_PKG_VERSION"))));
    let (header, rows) = records(&text);
    assert_eq!(header[..3], ["method", "high_t", "low_t"]);
    assert_eq!(rows.len(), 11);
    let ehrenfest = rows.iter().find(|r| r[0] == "ehrenfest").unwrap();
    assert!((ehrenfest[1].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn predict_row_for_single_method() {
    let o = qcmap(&["predict", "--method", "mash", "--model", "spin-boson", "--eps", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = records(&stdout(&o));
    assert_eq!(header, ["eps", "alpha", "mash", "mash_err"]);
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][2].parse().unwrap();
    assert!((-1.0..0.0).contains(&v));
}

#[test]
fn sweep_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = qcmap(&[
        "sweep-eps",
        "--methods",
        "ehrenfest,mash,sqc",
        "--eps",
        "0:20:21",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = records(&fs::read_to_string(&out).unwrap());
    assert_eq!(header[0], "eps");
    assert_eq!(rows.len(), 21);
    let gp = fs::read_to_string(dir.path().join("fig1.gp")).unwrap();
    assert!(gp.contains("fig1.csv") && gp.contains("plot "));
}

#[test]
fn unstable_methods_leave_empty_cells() {
    let o = qcmap(&["sweep-alpha", "--methods", "sqc,single-unity,mash", "--alpha", "0:1:11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = records(&stdout(&o));
    for row in &rows {
        let alpha: f64 = row[0].parse().unwrap();
        // SQC has r_max = 2: inverted potentials once α ≥ 1/2. The φ law of
        // single-unity has unbounded support, so any α > 0 is unstable.
        assert_eq!(row[1].is_empty(), alpha >= 0.5 - 1e-12, "alpha {alpha}");
        assert_eq!(row[3].is_empty(), alpha > 0.0, "alpha {alpha}");
        assert!(!row[5].is_empty());
    }
}

#[test]
fn json_mirrors_csv() {
    let csv = stdout(&qcmap(&["predict", "--methods", "exact,sqc", "--eps", "0:2:3"]));
    let json = stdout(&qcmap(&["predict", "--methods", "exact,sqc", "--eps", "0:2:3", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let (header, rows) = records(&csv);
    assert_eq!(v["columns"].as_array().unwrap().len(), header.len());
    for (j, row) in rows.iter().enumerate() {
        let rec = &v["records"][j];
        for (k, name) in header.iter().enumerate() {
            let a: f64 = row[k].parse().unwrap();
            let b = rec[name].as_f64().unwrap();
            assert!((a - b).abs() <= 1e-15 * a.abs(), "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let kv = dir.path().join("run.conf");
    fs::write(&kv, "# benchmark\nmethods = mash\neps = 3\nbeta = 1.0\n").unwrap();
    let json = dir.path().join("run.json");
    fs::write(&json, r#"{"methods": "mash", "eps": 3, "beta": 1.0}"#).unwrap();
    let from_kv = stdout(&qcmap(&["predict", "--config", kv.to_str().unwrap()]));
    let from_json = stdout(&qcmap(&["predict", "--config", json.to_str().unwrap()]));
    assert_eq!(from_kv, from_json);
    assert!(from_kv.contains("# eps: 3"));
    let overridden = stdout(&qcmap(&["predict", "--config", kv.to_str().unwrap(), "--eps", "1"]));
    assert!(overridden.contains("# eps: 1") && overridden.contains("# beta: 1"));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let o = qcmap(&["predict", "--beta", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta"));

    let o = qcmap(&["predict", "--methods", "ehrenfest,nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("methods"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "beta = 1\ntemperature = 3\n").unwrap();
    let o = qcmap(&["predict", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("temperature"));

    assert_eq!(qcmap(&["predict", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(qcmap(&["simulate", "--methods", "exact"]).status.code(), Some(2));
}

#[test]
fn invalid_thread_env_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_qcmap"))
        .args(["table1"])
        .env("QCMAP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("QCMAP_THREADS"));
}

#[test]
fn all_diverged_exits_3() {
    // A single SingleUnity trajectory at α = 1 escapes on the inverted potential.
    let o = qcmap(&[
        "simulate", "--model", "anharmonic", "--alpha", "1", "--methods", "single-unity", "--ntraj", "1",
        "--tmax", "200", "--interval", "50", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn io_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let target = blocker.join("out.csv");
    let o = qcmap(&["table1", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(blocker.to_str().unwrap()));
}

fn simulate_csv(threads: &str, dir: &Path) -> String {
    let out = dir.join(format!("sim{threads}.csv"));
    let o = qcmap(&[
        "simulate", "--methods", "mash", "--ntraj", "300", "--tmax", "5", "--interval", "1", "--threads", threads,
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    fs::read_to_string(out).unwrap()
}

#[test]
fn simulation_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate_csv("1", dir.path()), simulate_csv("3", dir.path()));
}

#[test]
fn simulate_reports_prediction_and_divergence() {
    let o = qcmap(&["simulate", "--methods", "mash,sqc", "--ntraj", "200", "--tmax", "4", "--interval", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("# prediction:").count(), 2);
    assert_eq!(text.matches("# n_diverged: 0").count(), 2);
    assert!(text.contains("denominator"));
}

#[test]
fn histogram_is_two_columns() {
    let o = qcmap(&["histogram", "--ntraj", "400", "--tmax", "20", "--bins", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = records(&stdout(&o));
    assert_eq!(header, ["s_z", "density"]);
    assert_eq!(rows.len(), 8);
    let integral: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap() * 0.25).sum();
    assert!((integral - 1.0).abs() < 1e-12);
}

#[test]
fn mre_starts_at_zero() {
    let o = qcmap(&["mre", "--eps", "1", "--ntraj", "200", "--tmax", "4", "--interval", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = records(&stdout(&o));
    assert_eq!(header, ["t", "mre", "mre_err"]);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn potentials_table() {
    let o = qcmap(&["potentials", "--model", "anharmonic", "--alpha", "0.4"]);
    assert!(o.status.success());
    let (header, rows) = records(&stdout(&o));
    assert_eq!(header, ["x", "u", "v_minus", "v_plus", "kappa", "d_nac"]);
    for r in rows {
        let (lo, hi): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!(lo <= hi);
    }
}
