use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn matprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matprod")).args(args).output().expect("run matprod")
}

fn matprod_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matprod"))
        .env("MATPROD_THREADS", threads)
        .args(args)
        .output()
        .expect("run matprod")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    parse_csv(&fs::read_to_string(path).unwrap())
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SAMPLE: [&str; 14] =
    ["sample", "--mode", "matrix", "--theta", "1", "--n", "2", "--m", "6,4", "--nu", "1,1", "--count", "1000", "--seed"];

#[test]
fn sample_writes_table_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let mut args = SAMPLE.to_vec();
    args.extend(["3", "-o", out.to_str().unwrap()]);
    let o = matprod(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["x1_1", "x1_2", "x2_1", "x2_2"]);
    assert_eq!(rows.len(), 1000);
    for r in &rows {
        assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(r[0] <= r[1] && r[2] <= r[3]);
        assert!(r[2] <= r[0] && r[0] <= r[3], "second level interlaces the first: {r:?}");
    }
    assert!(fs::read_to_string(&out).unwrap().contains("\r\n"));
    let meta = read_json(&dir.path().join("s.csv.json"));
    assert_eq!(meta["schema"], "matprod/1");
    assert_eq!(meta["command"], "sample");
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["rows"], 1000);
    assert_eq!(meta["params"]["m"], serde_json::json!([6, 4]));
}

#[test]
fn sample_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "2", "1"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}.csv"));
        let mut args = SAMPLE.to_vec();
        args.extend(["11", "-o", out.to_str().unwrap()]);
        let o = matprod_threads(threads, &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let meta = fs::read(dir.path().join(format!("run{k}.csv.json"))).unwrap();
        outputs.push((fs::read(&out).unwrap(), meta));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn gibbs_sample_runs_at_general_theta() {
    let o = matprod(&[
        "sample", "--mode", "gibbs", "--theta", "0.7", "--n", "2", "--m", "6,4", "--nu", "1,1", "--count", "20", "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header.len(), 4);
    assert_eq!(rows.len(), 20);
}

#[test]
fn constraint_violation_is_a_validation_error() {
    let o = matprod(&["sample", "--mode", "matrix", "--theta", "1", "--n", "2", "--m", "6,5", "--nu", "1,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m_2"));
    let o = matprod(&["sample", "--mode", "matrix", "--theta", "0.7", "--n", "1", "--m", "3", "--nu", "0"]);
    assert_eq!(o.status.code(), Some(2), "no matrix model at theta = 0.7");
}

#[test]
fn jacobi_grid_integrates_to_one() {
    let cells = 120;
    let o = matprod(&[
        "density", "--formula", "jacobi", "--theta", "1", "--n", "2", "--m", "5", "--nu", "1", "--grid", &cells.to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["x_1", "x_2", "log_density"]);
    let h = 1.0 / cells as f64;
    let mass: f64 = rows.iter().map(|r| r[2].exp() * h * h).sum();
    assert!((mass - 1.0).abs() < 1e-2, "mass {mass}");
}

#[test]
fn jack_without_admissible_partition_fails() {
    let o = matprod(&["density", "--formula", "jack", "--theta", "2", "--n", "1", "--m", "3,3", "--nu", "0,1", "--point", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no admissible partition"));
}

#[test]
fn integral_density_rejects_four_factors() {
    let o = matprod(&[
        "density", "--formula", "integral", "--theta", "1", "--n", "1", "--m", "3,2,2,2", "--nu", "0,0,0,0", "--point", "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unsupported dimension"));
}

#[test]
fn densities_agree_at_a_point() {
    let base = ["density", "--theta", "2", "--n", "1", "--m", "3,4", "--nu", "0,2", "--point", "0.4", "--formula"];
    let mut values = Vec::new();
    for formula in ["jack", "twoproduct"] {
        let mut args = base.to_vec();
        args.push(formula);
        let o = matprod(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        values.push(parse_csv(&stdout(&o)).1[0][1]);
    }
    assert!((values[0] - values[1]).abs() < 1e-10, "{values:?}");
}

#[test]
fn kernel_grid_has_mass_n_and_pfaffian_symmetries() {
    let grid = 200;
    let o = matprod(&["kernel", "--n", "2", "--nu", "0,0", "--m", "4", "--grid", &grid.to_string()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["x", "y", "rho1_x", "rho2", "k11", "k12", "k21", "k22"]);
    assert_eq!(rows.len(), grid * grid);
    let mass: f64 = (0..grid).map(|i| rows[i * grid][2]).sum::<f64>() / grid as f64;
    assert!((mass - 2.0).abs() < 1e-2, "mass {mass}");
    let at = |i: usize, j: usize| &rows[i * grid + j];
    for (i, j) in [(3, 50), (20, 180), (99, 100)] {
        let (a, b) = (at(i, j), at(j, i));
        let scale = 1.0 + a[5].abs() + a[6].abs();
        assert!((a[5] + b[5]).abs() < 1e-8 * scale, "K12 antisymmetric");
        assert!((a[6] + b[6]).abs() < 1e-8 * scale, "K21 antisymmetric");
        assert!((a[4] - b[7]).abs() < 1e-8 * (1.0 + a[4].abs()), "K11(x,y) = K22(y,x)");
        assert!((a[3] - b[3]).abs() < 1e-8 * (1.0 + a[3].abs()), "rho2 symmetric");
        assert!(a[3] >= -1e-10);
    }
}

#[test]
fn json_format_embeds_metadata() {
    let o = matprod(&["crystallize", "--n", "2", "--nu", "1,2,2", "--m1", "7", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), 6);
    assert_eq!(v["meta"]["schema"], "matprod/1");
    let cov = v["meta"]["extra"]["covariance"].as_array().unwrap();
    assert_eq!(cov.len(), 4);
}

#[test]
fn crystallize_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = matprod(&["crystallize", "--n", "1", "--nu", "2", "--m1", "7", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["x1_1"]);
    assert_eq!(rows, vec![vec![3.0 / 7.0]]);
    let o = matprod(&["crystallize", "--n", "1", "--nu", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = matprod(&["verify", "--suite", "hankel"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("== hankel ==") && text.contains("PASS") && !text.contains("FAIL"));
    let o = matprod(&["verify", "--suite", "dixon"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = matprod(&["verify", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = matprod_threads("zero", &["verify", "--suite", "hankel"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_points_file_is_an_io_error() {
    let o = matprod(&[
        "density", "--formula", "jacobi", "--theta", "1", "--n", "1", "--m", "3", "--nu", "0", "--points-file",
        "/nonexistent/points.csv",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
