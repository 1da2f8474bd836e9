use std::path::Path;
use std::process::{Command, Output};

fn hs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hs")).current_dir(dir).args(args).env_remove("HS_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enumerate_counts_lattice_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = hs(dir.path(), &["enumerate", "--dim", "2", "--step", "1/100", "--count", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "count\n5151\n");
    let o = hs(dir.path(), &["enumerate", "--dim", "2", "--step", "100", "--constraint", "x1<=0.6", "--count"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 4331);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hs(dir.path(), &["enumerate"]).status.code(), Some(2));
    assert_eq!(hs(dir.path(), &["enumerate", "--dim", "2", "--step", "1/0"]).status.code(), Some(2));
    let o = hs(dir.path(), &["workflow", "a", "--map", "f1", "--relation", "r1", "--hub", "0.3,0.5,0.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn workflow_a_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hs(dir.path(), &["init", "--registry", "reg.json"]).status.code(), Some(0));
    assert_eq!(hs(dir.path(), &["init", "--registry", "reg.json"]).status.code(), Some(2));
    let ok = hs(dir.path(), &["workflow", "a", "--map", "f1", "--relation", "r1", "--hub", "0.3,0.5,0.2"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = hs(dir.path(), &["workflow", "a", "--map", "f2", "--relation", "r1", "--hub", "0.3,0.5,0.2"]);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["verdict"], "rejected");
    assert_eq!(v["seq"], 2);
    let lines = std::fs::read_to_string(dir.path().join("ledger.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2);
}

#[test]
fn workflow_b_violation_does_not_touch_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    hs(dir.path(), &["init", "--registry", "reg.json"]);
    hs(dir.path(), &["workflow", "a", "--map", "f1", "--relation", "r1", "--hub", "0.3,0.5,0.2"]);
    let before = std::fs::read(dir.path().join("reg.json")).unwrap();
    std::fs::write(
        dir.path().join("fee.json"),
        r#"{"id": "fee2", "domain": "S", "codomain": "S", "kind": "fee_cap", "tau": 2, "fee": [10, 5, 0]}"#,
    )
    .unwrap();
    let o = hs(dir.path(), &["workflow", "b", "--relation-def", "fee.json"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(dir.path().join("reg.json")).unwrap(), before);
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hs"));
        c.current_dir(dir.path()).args(["verify", "--suite", "metric", "--instances", "5"]).env_remove("HS_SEED");
        if let Some(s) = seed {
            c.env("HS_SEED", s);
        }
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["seed"].clone()
    };
    assert_eq!(run(None), 42);
    assert_eq!(run(Some("7")), 7);
}

#[test]
fn compare_emits_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = hs(dir.path(), &["compare", "--scenario", "gaussian", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("scenario,constraint,radius"));
    assert_eq!(rows[0].split(',').count(), rows[1].split(',').count());
}
