use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn protmeas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protmeas"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const QUBIT: &str = "energies = [-0.5, 0.5]\nobservable = [[0.6, 0.8], [0.8, -0.6]]\n";

#[test]
fn table1_writes_json_and_text() {
    let dir = tempfile::tempdir().unwrap();
    let o = protmeas(dir.path(), &["table1", "--xmin", "62.8", "--out", "results/"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json = fs::read_to_string(dir.path().join("results/table1.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let text = fs::read_to_string(dir.path().join("results/table1.txt")).unwrap();
    assert!(text.contains("raised-cosine") && text.contains("pass"));
}

#[test]
fn non_square_observable_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "energies = [0.0, 1.0]\nobservable = [[0.0, 1.0], [1.0, 0.0, 2.0]]\n",
    )
    .unwrap();
    let o = protmeas(
        dir.path(),
        &["dyson", "--system", "bad.toml", "--profile", "boxcar", "--T", "10"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("system.observable[1]"));
}

#[test]
fn pointer_shifts_agree_within_band() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("qubit.toml"), QUBIT).unwrap();
    let o = protmeas(
        dir.path(),
        &[
            "pointer",
            "--system",
            "qubit.toml",
            "--T",
            "200",
            "--profiles",
            "boxcar,triangle,raised-cosine",
            "--format",
            "json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["agree"], true);
    let band = v["band"].as_f64().unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert!((row["shift"].as_f64().unwrap() - 0.6).abs() <= band);
    }
}

#[test]
fn csv_has_header_and_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("qubit.toml"), QUBIT).unwrap();
    let o = protmeas(
        dir.path(),
        &[
            "dyson",
            "--system",
            "qubit.toml",
            "--profile",
            "raised-cosine",
            "--T",
            "10",
            "--order",
            "2",
            "--format",
            "csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("order,m,re,im\n"));
    assert!(!s.contains('\r'));
    assert_eq!(s.lines().count(), 1 + 3 * 2);
    // 12 significant digits
    assert!(s.lines().nth(3).unwrap().ends_with("-6.00000000000e-1"));
}

#[test]
fn config_selects_the_command_and_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "command = \"oracle\"\nout = \"run\"\n[system]\n{QUBIT}[profile]\nkind = \"triangle\"\nT = 30.0\n[pointer]\ngrid_size = 16\n"
    );
    fs::write(dir.path().join("exp.toml"), cfg).unwrap();
    let first = protmeas(dir.path(), &["--config", "exp.toml"]);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let csv = fs::read(dir.path().join("run/oracle.csv")).unwrap();
    let json = fs::read(dir.path().join("run/oracle.json")).unwrap();
    let header = String::from_utf8_lossy(&csv).lines().next().unwrap().to_string();
    assert_eq!(header, "a,re_0,re_1,im_0,im_1,survival");
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    for key in ["pointer_shift", "disturbance", "purity", "convergence"] {
        assert!(v[key].is_number(), "{key}");
    }
    protmeas(dir.path(), &["--config", "exp.toml"]);
    assert_eq!(fs::read(dir.path().join("run/oracle.csv")).unwrap(), csv);
    assert_eq!(fs::read(dir.path().join("run/oracle.json")).unwrap(), json);
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "command = \"nope\"\n").unwrap();
    assert_eq!(protmeas(dir.path(), &["--config", "c.toml"]).status.code(), Some(2));
    fs::write(dir.path().join("c.toml"), "[scan]\nprofiles = []\n").unwrap();
    assert_eq!(
        protmeas(dir.path(), &["table1", "--config", "c.toml"]).status.code(),
        Some(2)
    );
    fs::write(dir.path().join("c.toml"), "[system]\nenergies = [0.0, \n").unwrap();
    let o = protmeas(dir.path(), &["--config", "c.toml", "identity"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    assert_eq!(protmeas(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(
        protmeas(dir.path(), &["dyson", "--profile", "boxcar", "--T", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn identity_and_ft_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = protmeas(dir.path(), &["identity", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_relative_error"].as_f64().unwrap() < 1e-9);
    let o = protmeas(
        dir.path(),
        &[
            "ft",
            "--profile",
            "boxcar",
            "--T",
            "2",
            "--points",
            "3",
            "--x-max",
            "6.283185307179586",
            "--format",
            "csv",
        ],
    );
    let s = stdout(&o);
    let last: Vec<&str> = s.lines().last().unwrap().split(',').collect();
    let analytic: f64 = last[2].parse().unwrap();
    assert!(analytic.abs() < 1e-12);
}
