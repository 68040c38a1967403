use std::path::Path;
use std::process::{Command, Output};

fn relcoin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relcoin")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn honest_run_writes_records_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = relcoin(dir.path(), &["honest", "--n", "8", "--trials", "50", "--seed", "3", "--out", "h", "--transcript"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("aborts=0 disagreements=0"));

    let records = std::fs::read_to_string(dir.path().join("h.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["seed"], 3);
    assert_eq!(lines[0]["spec_sha256"].as_str().unwrap().len(), 64);

    let table = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert!(table.lines().next().unwrap().starts_with('#'));
    let transcripts = std::fs::read_to_string(dir.path().join("h.transcripts.jsonl")).unwrap();
    assert!(transcripts.lines().count() >= 50);
}

#[test]
fn cheat_summary_reports_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let o = relcoin(dir.path(), &["cheat", "--strategy", "mirror", "--n", "2", "--trials", "4000", "--out", "m"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("mirror") && out.contains("analytic=0.250000"), "{out}");
}

#[test]
fn invalid_input_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = relcoin(dir.path(), &["honest", "--n", "0", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("x.jsonl").exists());

    let o = relcoin(dir.path(), &["sweep", "--axis", "colour", "--values", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweep.axis"));

    std::fs::write(dir.path().join("bad.toml"), "trials = 10\n[mode]\nkind = \"honest\"\nbogus = 1\n").unwrap();
    let o = relcoin(dir.path(), &["honest", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));

    let o = relcoin(dir.path(), &["honest", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_drives_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"
trials = 2000
[mode]
kind = "sweep"
strategy = { kind = "measure_and_correct", t_measure = 0.0 }
[sweep]
axis = "t_measure"
values = [0.0, 0.5, 1.0]
[protocol]
n = 1
horizon = 2.0
seed = 11
[protocol.curve]
source = "parametric"
shape = "linear_ramp"
horizon = 1.0
"#;
    std::fs::write(dir.path().join("sweep.toml"), spec).unwrap();
    let o = relcoin(dir.path(), &["sweep", "--config", "sweep.toml", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4, "{table}");
}

#[test]
fn config_strategy_is_kept_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"
trials = 2000
[mode]
kind = "cheat"
strategy = { kind = "mirror" }
[protocol]
n = 2
horizon = 1.0
[protocol.curve]
source = "parametric"
shape = "linear_ramp"
horizon = 1.0
"#;
    std::fs::write(dir.path().join("c.toml"), spec).unwrap();
    let o = relcoin(dir.path(), &["cheat", "--config", "c.toml", "--out", "c"]);
    assert!(stdout(&o).starts_with("mirror "), "{}", stdout(&o));
    let o = relcoin(dir.path(), &["cheat", "--config", "c.toml", "--strategy", "delayed-send", "--out", "c"]);
    assert!(stdout(&o).starts_with("delayed_send "), "{}", stdout(&o));
}

#[test]
fn pcurve_reports_effective_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = relcoin(dir.path(), &["pcurve", "--family", "exponential-tail-pair", "--out", "p"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("t_eff="));
}
