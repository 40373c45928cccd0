//! End-to-end checks of the `dcf-police` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dcf_police::output::{EVENT_COLUMNS, SUMMARY_COLUMNS, TRACE_COLUMNS, WINDOW_COLUMNS};

const SMALL: &str = r#"
duration_s = 30.0
seed = 7

[[station]]
id = 1
policy = "compliant"

[[station]]
id = 2
policy = "cwmin-halved"
"#;

fn bin(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcf-police"))
        .args(args)
        .env("DCF_POLICE_OUT_DIR", out_dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_string).collect()
}

#[test]
fn run_writes_csvs_with_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("small.toml");
    fs::write(&file, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["run", file.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));

    let printed = stdout(&o);
    let written: Vec<&str> = printed.lines().map(|l| l.rsplit('/').next().unwrap()).collect();
    assert_eq!(
        written,
        ["small-s7-trace.csv", "small-s7-windows.csv", "small-s7-events.csv", "small-summary.csv"]
    );
    assert_eq!(header(&out.join("small-s7-trace.csv")), TRACE_COLUMNS);
    assert_eq!(header(&out.join("small-s7-windows.csv")), WINDOW_COLUMNS);
    assert_eq!(header(&out.join("small-s7-events.csv")), EVENT_COLUMNS);
    assert_eq!(header(&out.join("small-summary.csv")), SUMMARY_COLUMNS);

    // Three 10 s windows for two stations.
    let trace = fs::read_to_string(out.join("small-s7-trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 3 * 2);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("small.toml");
    fs::write(&file, SMALL).unwrap();
    let o = bin(&["run", file.to_str().unwrap(), "--seed", "3", "--no-policing"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("small-s3-trace.csv"));
    let summary = fs::read_to_string(dir.path().join("small-summary.csv")).unwrap();
    let policing = SUMMARY_COLUMNS.iter().position(|c| *c == "policing").unwrap();
    for line in summary.lines().skip(1) {
        assert_eq!(line.split(',').nth(policing), Some("false"));
    }
}

#[test]
fn config_errors_exit_2_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(&file, SMALL.replace("cwmin-halved", "greedy")).unwrap();
    let o = bin(&["run", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 11"), "{err}");
    assert!(err.contains("unknown policy `greedy`"), "{err}");

    fs::write(&file, format!("{SMALL}\n[[station]]\nid = 2\npolicy = \"compliant\"\n")).unwrap();
    let o = bin(&["run", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate station id 2 (first defined at line 9)"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_and_axis_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["preset", "fig4"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown preset `fig4`"));

    let file = dir.path().join("small.toml");
    fs::write(&file, SMALL).unwrap();
    let o = bin(&["sweep", file.to_str().unwrap(), "--axis", "controller.beta", "--values", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_scenario_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["run", dir.path().join("absent.toml").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn preset_list_names_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["preset", "--list"], dir.path());
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    let expected: Vec<&str> = dcf_police::presets::PRESETS.iter().map(|p| p.name).collect();
    assert_eq!(names, expected);
}

#[test]
fn analytics_writes_the_observation_time_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["analytics", "fig7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fig7.csv")).unwrap();
    assert_eq!(text.lines().count(), 31);
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let secs: f64 = first[5].parse().unwrap();
    assert!((secs - 0.94).abs() < 0.01, "{secs}");
}

#[test]
fn normalize_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("small.toml");
    fs::write(&file, SMALL).unwrap();
    let once = bin(&["normalize", file.to_str().unwrap()], dir.path());
    assert!(once.status.success(), "{}", stderr(&once));
    let canonical = dir.path().join("canonical.toml");
    fs::write(&canonical, &once.stdout).unwrap();
    let twice = bin(&["normalize", canonical.to_str().unwrap()], dir.path());
    assert_eq!(stdout(&once), stdout(&twice));
}

#[test]
fn sweep_writes_points_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("small.toml");
    fs::write(&file, SMALL).unwrap();
    let o = bin(
        &["sweep", file.to_str().unwrap(), "--axis", "controller.alpha", "--values", "0.05,0.2", "--seeds", "1..2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let points = fs::read_to_string(dir.path().join("small-sweep-points.csv")).unwrap();
    assert_eq!(points.lines().count(), 1 + 2 * 2);
    let summary = fs::read_to_string(dir.path().join("small-sweep-summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    assert!(summary.starts_with("sweep,controller.alpha,seeds,"));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = bin(&["preset", "fig5-fixed-cw", "--seed", "4"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}
