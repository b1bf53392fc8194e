use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
preset = "desk"
[system]
m = 16
n = 4
[sweep]
em_n0_db = [2.0, 6.0]
trials = 2
[receiver]
outer_iters = 2
[exit]
i_grid = [0.0, 0.5, 1.0]
fixed_other = [0.0, 1.0]
trials = 2
"#;

fn obnoma(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_obnoma"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn ber_sweep_is_byte_identical_across_runs() {
    let dir = setup();
    for out in ["a", "b"] {
        let o = obnoma(dir.path(), &["--config", "small.toml", "--trials", "1", "--seed", "7", "--out-dir", out, "ber-sweep"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("a/ber-sweep.csv")).unwrap();
    let b = fs::read(dir.path().join("b/ber-sweep.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("em_n0_db,es_em_db,"));
    assert_eq!(lines.count(), 2);

    let meta: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/ber-sweep.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "ber-sweep");
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["config"]["sweep"]["trials"], 1);
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn other_studies_write_tables() {
    let dir = setup();
    for (cmd, file) in [("convergence", "convergence.csv"), ("csi-robustness", "csi-robustness.csv"), ("exit-chart", "exit-chart.csv")] {
        let mut args = vec!["--config", "small.toml", "--trials", "1", cmd];
        if cmd == "convergence" {
            args.extend(["--iters", "2"]);
        }
        let o = obnoma(dir.path(), &args);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let rows = fs::read_to_string(dir.path().join("out").join(file)).unwrap();
        assert!(rows.lines().count() >= 3, "{cmd}: {rows}");
    }
}

#[test]
fn selftest_passes() {
    let dir = setup();
    let o = obnoma(dir.path(), &["selftest"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = setup();
    fs::write(dir.path().join("bad.toml"), "[receiver]\nmobile = \"zf\"\n").unwrap();
    for args in [
        vec!["--config", "bad.toml", "ber-sweep"],
        vec!["--config", "missing.toml", "ber-sweep"],
        vec!["--preset", "huge", "ber-sweep"],
        vec!["--trials", "0", "ber-sweep"],
        vec!["--bogus"],
    ] {
        let o = obnoma(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}
