use std::f64::consts::PI;
use std::process::{Command, Output};

use gmms_core::PhaseSpaceGrid;
use num_complex::Complex64;

fn gmms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmms")).args(args).output().expect("run gmms")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn state_json_report() {
    let o = gmms(&["state", "--spec", "thermal:nbar=1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let s = v["report"]["entropy_nats"].as_f64().unwrap();
    assert!((s - 1.38629).abs() < 1e-5);
    assert!(stderr(&o).contains("n_max = "));
}

#[test]
fn state_csv_trace() {
    let o = gmms(&["state", "--spec", "cvmms:b=1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("spec,n_max,trace,"));
    let t = csv_column(&text, 2)[0];
    assert!((1.0 - 1e-10..=1.0).contains(&t), "{t}");
}

#[test]
fn weights_dump() {
    let o = gmms(&["state", "--spec", "cvmms:b=1", "--cutoff", "15", "--weights"]);
    let w = csv_column(&stdout(&o), 1);
    assert_eq!(w.len(), 16);
    assert!((w[0] - (1.0 - (-1f64).exp())).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    let o = gmms(&["state", "--spec", "cvmms:b=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`b`"));
    assert_eq!(gmms(&["state", "--spec", "cvmms:c=1"]).status.code(), Some(2));
    assert_eq!(gmms(&["state", "--spec", "thermal:nbar=1", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(gmms(&["state", "--spec", "thermal:nbar=1", "--cutoff", "x"]).status.code(), Some(2));
    assert_eq!(gmms(&["bogus"]).status.code(), Some(2));
    // numerical failure: requested cutoff loses too much mass
    assert_eq!(gmms(&["state", "--spec", "cvmms:b=5", "--cutoff", "3"]).status.code(), Some(3));
}

#[test]
fn purify_thermal_matches_tmsv_magnitudes() {
    let nbar = 1f64.sinh().powi(2);
    let spec = format!("thermal:nbar={nbar}");
    let o = gmms(&["purify", "--spec", &spec]);
    assert_eq!(o.status.code(), Some(0));
    let lambda = 1f64.tanh();
    for (n, c) in csv_column(&stdout(&o), 1).into_iter().enumerate() {
        let expect = (1.0 - lambda * lambda).sqrt() * lambda.powi(n as i32);
        assert!((c - expect).abs() < 1e-12, "n = {n}");
    }
}

#[test]
fn purify_reports() {
    let o = gmms(&["purify", "--spec", "cvmms:b=2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verification"]["pass"], true);
    assert!(v["verification"]["max_entry_deviation"].as_f64().unwrap() <= 1e-12);

    let o = gmms(&["purify", "--spec", "squeezed:b=2,s=0.3,phi=0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("dropped off-diagonal mass"));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["offdiag_hs_mass_removed"].as_f64().unwrap() > 0.0);
}

#[test]
fn husimi_fig2_grid() {
    let o = gmms(&["husimi", "--spec", "cvmms:b=1", "--extent", "4", "--res", "81"]);
    assert_eq!(o.status.code(), Some(0));
    let grid = PhaseSpaceGrid::from_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(grid.len(), 6561);
    assert_eq!(grid.argmax(), Some(3280));
    assert_eq!(grid.point(3280), Complex64::new(0.0, 0.0));
}

#[test]
fn husimi_vacuum_matches_gaussian() {
    let o = gmms(&["husimi", "--spec", "thermal:nbar=0", "--extent", "3", "--res", "41"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 41 * 41 + 1);
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let exact = (-(f[0] * f[0] + f[1] * f[1])).exp() / PI;
        assert!((f[2] - exact).abs() < 1e-12);
    }
}

#[test]
fn husimi_single_point_and_png() {
    let o = gmms(&["husimi", "--spec", "cvmms:b=1", "--res", "1"]);
    let grid = PhaseSpaceGrid::from_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(grid.len(), 1);
    assert!((grid.values[0] - (1.0 - (-1f64).exp()) / PI).abs() < 1e-12);

    let dir = std::env::temp_dir().join(format!("gmms-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let png = dir.join("q.png");
    let csv = dir.join("q.csv");
    let o = gmms(&[
        "husimi", "--spec", "cvmms:b=1", "--res", "21", "--png", png.to_str().unwrap(), "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let bytes = std::fs::read(&png).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
    let grid = PhaseSpaceGrid::from_csv(std::fs::read(&csv).unwrap().as_slice()).unwrap();
    assert_eq!(grid.resolution, 21);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let args = ["purify", "--spec", "squeezed:b=1.5,s=0.2,phi=1", "--format", "json"];
    assert_eq!(gmms(&args).stdout, gmms(&args).stdout);
    let args = ["husimi", "--spec", "riemann:b=1,delta=0.1", "--res", "31"];
    assert_eq!(gmms(&args).stdout, gmms(&args).stdout);
}

#[test]
fn scans() {
    let o = gmms(&["scan", "entropy", "--spec", "thermal", "--grid", "0,1,2,4,8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("param,entropy_nats,trace,mean_photon\n"));
    let s = csv_column(&text, 1);
    assert!(s.windows(2).all(|w| w[1] > w[0]));

    let o = gmms(&[
        "scan", "distance", "--a", "squeezed:b=B,s=0.2,phi=0", "--b", "cvmms:b=B", "--grid", "B=1,2,3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("trend: strictly decreasing") || stderr(&o).contains("trend: non-increasing"));
    let d = csv_column(&stdout(&o), 1);
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
    // first-run regression values
    for (got, pin) in d.iter().zip([0.143_346_984_930_884_94, 0.103_619_313_499_541_36, 0.084_006_570_763_622_99]) {
        assert!((got - pin).abs() < 1e-9, "{got} vs {pin}");
    }

    let o = gmms(&["scan", "riemann", "--b", "1", "--deltas", "0.2,0.1,0.05", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trend"], "strictly decreasing");
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    assert_eq!(gmms(&["scan", "distance", "--a", "cvmms:b=B", "--b", "cvmms:b=B", "--grid", "1,2"]).status.code(), Some(2));
}

#[test]
fn acceptance_subcommand() {
    let o = gmms(&["acceptance", "--only", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).starts_with("PASS [ 7]"));
    assert_eq!(gmms(&["acceptance", "--only", "11"]).status.code(), Some(2));
}
