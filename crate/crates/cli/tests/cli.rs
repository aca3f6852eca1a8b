use std::path::Path;
use std::process::{Command, Output};

use phlab::Trajectory;

fn phlab(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phlab"));
    cmd.args(args).env_remove("PHLAB_OUT");
    if let Some(dir) = out_env {
        cmd.env("PHLAB_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SHORT: [&str; 4] = ["--set", "scenario.horizon=2e-3", "--set", "scenario.stride=100"];

#[test]
fn equilibrium_table_for_nominal_reference() {
    let o = phlab(&["equilibrium", "--reference", "-15"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.621656689879, 0.885957523319"), "{text}");
    assert!(text.contains("verdict         feasible"));
}

#[test]
fn infeasible_reference_exits_3() {
    let o = phlab(&["equilibrium", "--reference", "-20"], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("discriminant -1424"));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn equilibrium_json_record() {
    let o = phlab(&["equilibrium", "--preset", "cuk-nominal", "--json"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["feasible"], true);
    let u = v["u_star"][0].as_f64().unwrap();
    assert!((u - 0.621656689879).abs() < 1e-11);
    assert_eq!(v["x_star"][3][0], "v4");
}

#[test]
fn presets_list_and_show() {
    let o = phlab(&["presets", "list"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["cuk-nominal", "fig-compare", "fig-load-step"] {
        assert!(text.contains(name), "{text}");
    }
    let o = phlab(&["presets", "show", "cuk-nominal"], None);
    assert!(stdout(&o).contains("[scenario]"));
    assert_eq!(phlab(&["presets", "show", "nope"], None).status.code(), Some(2));
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["simulate", "--preset", "cuk-nominal", "--out", out];
    args.extend(SHORT);
    let o = phlab(&args, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = std::fs::read_to_string(dir.path().join("cuk-nominal.csv")).unwrap();
    let traj = Trajectory::from_csv(&csv).unwrap();
    assert_eq!(traj.observer_names, ["fct"]);
    let last = traj.records.last().unwrap();
    assert!((last.t - 2e-3).abs() < 1e-12);

    let svg = std::fs::read_to_string(dir.path().join("cuk-nominal.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<path"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cuk-nominal.metrics.json")).unwrap()).unwrap();
    assert_eq!(m["observers"][0]["kind"], "fct-gpebo");
}

#[test]
fn output_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--preset", "cuk-nominal", "--set", "output.svg=false"];
    args.extend(SHORT);
    let o = phlab(&args, Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("cuk-nominal.csv").exists());
    assert!(!dir.path().join("cuk-nominal.svg").exists());
}

#[test]
fn compare_needs_two_observers() {
    let dir = tempfile::tempdir().unwrap();
    let o = phlab(&["compare", "--preset", "cuk-nominal", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_observers_compare_identically() {
    let dir = tempfile::tempdir().unwrap();
    let twin = r#"observers=[{name="a",kind="fct-gpebo",lambda=5.0,gamma=1e12,mu=1e-6},{name="b",kind="fct-gpebo",lambda=5.0,gamma=1e12,mu=1e-6}]"#;
    let mut args = vec!["compare", "--preset", "cuk-nominal", "--set", twin, "--out", dir.path().to_str().unwrap()];
    args.extend(SHORT);
    let o = phlab(&args, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "{text}");
    // Everything but the name and the wall-clock column must agree.
    let strip = |r: &str| {
        let cells: Vec<&str> = r.split_whitespace().collect();
        cells[1..cells.len() - 1].join(" ")
    };
    assert_eq!(strip(rows[0]), strip(rows[1]));
    assert!(dir.path().join("cuk-nominal.compare.txt").exists());
}

#[test]
fn empty_sweep_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = phlab(
        &["sweep", "--preset", "cuk-nominal", "--param", "observers.0.gamma", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("empty sweep"));
}

#[test]
fn sweep_over_gamma_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--preset", "cuk-nominal", "--param", "observers.0.gamma", "--out", dir.path().to_str().unwrap()];
    args.extend(SHORT);
    args.extend(["1e11", "1e12"]);
    let o = phlab(&args, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("cuk-nominal-sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("run,value,"));
    assert!(lines[1].contains(",1e11,") && lines[2].contains(",1e12,"));
}

#[test]
fn bad_override_is_a_config_error() {
    let o = phlab(&["simulate", "--preset", "cuk-nominal", "--set", "scenario.nonsense=1"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = phlab(&["simulate", "--preset", "cuk-nominal", "--set", "no-equals-sign"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_simulation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = phlab(
        &["simulate", "--preset", "cuk-nominal", "--set", "scenario.reference=-20", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
}
