use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eitcool"));
    c.env_remove("EITCOOL_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .collect()
}

fn key(text: &str, name: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name} = ")))
        .unwrap_or_else(|| panic!("no {name} in output"))
        .to_string()
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run(&["cool", "--config", "/nonexistent/run.toml", "--mode", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn unknown_mode_is_a_usage_error() {
    let cfg = config("fig2.toml");
    let o = run(&["cool", "--config", cfg.to_str().unwrap(), "--mode", "w"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_window_is_a_usage_error() {
    let o = run(&["spectrum", "--from", "2", "--to", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_row_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shifts.csv");
    std::fs::write(&data, "# measured\nclock,plus,minus\n10,5,6\n10,five,6\n").unwrap();
    let o = run(&[
        "calibrate",
        "invert",
        "--data",
        data.to_str().unwrap(),
        "--delta-probe",
        "3.45",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn impossible_shifts_are_inconsistent() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shifts.csv");
    std::fs::write(&data, "-10,-5,-6\n").unwrap();
    let o = run(&[
        "calibrate",
        "invert",
        "--data",
        data.to_str().unwrap(),
        "--delta-probe",
        "3.45",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn resonant_shift_denominator_is_numeric_failure() {
    // probe tuned onto the P-manifold Zeeman splitting
    let o = run(&[
        "calibrate",
        "stark",
        "--unit",
        "mhz",
        "--delta-probe",
        "1.57",
        "--sigma-plus",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn stark_output_feeds_invert() {
    let dir = tempfile::tempdir().unwrap();
    let shifts = dir.path().join("shifts.csv");
    let o = run(&[
        "calibrate",
        "stark",
        "--delta-probe",
        "3.45",
        "--sigma-plus",
        "0.2",
        "--sigma-minus",
        "0.1",
        "--pi",
        "0.05",
        "--out",
        shifts.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "calibrate",
        "invert",
        "--data",
        shifts.to_str().unwrap(),
        "--delta-probe",
        "3.45",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = data_lines(&text)[0]
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    for (got, want) in row[3..].iter().zip([0.2, 0.1, 0.05]) {
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }
}

#[test]
fn spectrum_file_and_dark_companion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let cfg = config("fig2.toml");
    let o = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "-4",
        "--to",
        "6",
        "--points",
        "600",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text).len(), 600);
    let dark = std::fs::read_to_string(dir.path().join("fig2.dark.csv")).unwrap();
    let rows = data_lines(&dark);
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| r.ends_with("sigma_plus") || r.ends_with("sigma_minus")));
}

#[test]
fn replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let cfg = dir.path().join("run.toml");
    std::fs::copy(config("fig2.toml"), &cfg).unwrap();
    let o = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "3",
        "--to",
        "4",
        "--points",
        "12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    // the record carries the config text, so the original file may go away
    std::fs::remove_file(&cfg).unwrap();
    let again = dir.path().join("again.csv");
    let o = run(&[
        "--replay",
        out.to_str().unwrap(),
        "--replay-out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let cfg = config("fig2.toml");
    let args = [
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "3",
        "--to",
        "4.5",
        "--points",
        "24",
    ];
    let one = bin()
        .env("EITCOOL_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    let three = bin()
        .env("EITCOOL_THREADS", "3")
        .args(args)
        .output()
        .unwrap();
    let default = bin().args(args).output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, three.stdout);
    assert_eq!(one.stdout, default.stdout);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = bin()
        .env("EITCOOL_THREADS", "zero")
        .args(["calibrate", "stark", "--delta-probe", "3.45"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mode_without_projection_has_zero_rate() {
    let cfg = config("fig2.toml");
    let o = run(&["cool", "--config", cfg.to_str().unwrap(), "--mode", "z"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(key(&text, "eta"), "0");
    assert_eq!(key(&text, "rate_per_ms"), "0");
}

#[test]
fn equal_mode_frequencies_give_equal_columns() {
    let cfg = config("fig_s4.toml");
    let o = run(&[
        "design-dual",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "3.3",
        "--to",
        "3.5",
        "--points",
        "5",
        "--axial-mhz",
        "1.0",
        "--radial-mhz",
        "1.0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for row in data_lines(&text) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[1], f[2]);
    }
}

#[test]
fn nominal_outside_window_warns() {
    let cfg = config("fig_s4.toml");
    let o = run(&[
        "design-dual",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "3.0",
        "--to",
        "3.2",
        "--points",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# warning: nominal detuning"));
    assert_eq!(data_lines(&text).len(), 3);
}

#[test]
fn synthetic_fringe_fits_back() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fringe.csv");
    let o = run(&[
        "calibrate",
        "synth-ramsey",
        "--a",
        "0.8",
        "--delta",
        "9.0",
        "--gamma",
        "0.5",
        "--b",
        "0.1",
        "--t-to",
        "2",
        "--points",
        "120",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["calibrate", "fit-ramsey", "--data", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let delta: f64 = key(&text, "delta_rad_per_ms").parse().unwrap();
    assert!((delta - 9.0).abs() < 1e-6, "{delta}");
}

#[test]
fn pump_scan_runs_with_optimized_detuning() {
    let cfg = config("fig2.toml");
    let o = run(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "probe",
        "--from",
        "0.1",
        "--to",
        "0.3",
        "--points",
        "3",
        "--mode",
        "x",
        "--optimize-from",
        "3.3",
        "--optimize-to",
        "3.6",
        "--optimize-points",
        "7",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 3);
    assert!(text.contains("argmin"));
}
