//! The command-line binary: flags, JSONL output and exit codes.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn run(args: &[&str], script: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_livequery-sim"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn records(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn of_type<'a>(recs: &'a [serde_json::Value], ty: &str) -> Vec<&'a serde_json::Value> {
    recs.iter().filter(|r| r["type"] == ty).collect()
}

#[test]
fn view_for_intersecting_update() {
    let out = run(&[], "put k {\"a\":1}\nstream k [a] as s1 to x\nupdate k {\"a\":2}\nsettle\n");
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    let views = of_type(&recs, "view");
    assert_eq!(views.len(), 1);
    let v = views[0];
    assert_eq!(v["stream"], "s1");
    assert_eq!(v["key"], "k");
    assert_eq!(v["seq"], 1);
    assert_eq!(v["updated"], serde_json::json!(["a"]));
    assert_eq!(v["view"], serde_json::json!({"a": 2}));
    assert!(v["stamp"]["counter"].is_u64());
}

#[test]
fn no_view_for_disjoint_update() {
    for strategy in ["merge", "deferred", "versiondiff"] {
        let out = run(&["--strategy", strategy], "stream k [a] as s1 to x\nupdate k {\"b\":1}\nsettle\n");
        assert_eq!(out.status.code(), Some(0));
        assert!(of_type(&records(&out), "view").is_empty(), "{strategy}");
    }
}

#[test]
fn parse_error_exits_2_with_location() {
    let out = run(&[], "put k {\"a\":1}\nput k {\"a\":{\"b\":1}}\n");
    assert_eq!(out.status.code(), Some(2));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["type"], "error");
    assert_eq!(recs[0]["error"], "parse");
    assert_eq!(recs[0]["line"], 2);
    assert!(recs[0]["message"].as_str().unwrap().contains("nested values unsupported"));
}

#[test]
fn invalid_config_exits_2() {
    let out = run(&["--nodes", "0"], "get k\n");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(records(&out)[0]["error"], "invalid-config");
    let out = run(&["--min-latency", "5", "--max-latency", "2"], "get k\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flag_is_rejected() {
    let out = run(&["--strategy", "eventual"], "");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unavailable_exits_3() {
    let out = run(&["--nodes", "2"], "crash n1\ncrash n2\nget k\n");
    assert_eq!(out.status.code(), Some(3));
    let recs = records(&out);
    assert_eq!(of_type(&recs, "error")[0]["error"], "unavailable");
}

#[test]
fn record_types_and_sorted_updated_fields() {
    let script = "put k {\"c\":1,\"a\":1,\"b\":1}\nstream k [c,b,a] as s to x\nput k {\"a\":2,\"b\":2,\"c\":2}\nget k\ncrash n2\nrecover n2\n";
    let out = run(&["--trace", "--nodes", "3"], script);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    for r in &recs {
        let ty = r["type"].as_str().unwrap();
        assert!(["ack", "get", "view", "error", "event"].contains(&ty), "{ty}");
    }
    assert!(!of_type(&recs, "event").is_empty());
    let views = of_type(&recs, "view");
    assert_eq!(views.len(), 1);
    assert_eq!(views[0]["updated"], serde_json::json!(["a", "b", "c"]));
    let gets = of_type(&recs, "get");
    assert_eq!(gets[0]["object"], serde_json::json!({"a": 2, "b": 2, "c": 2}));
}

#[test]
fn scenario_file_and_stdin_agree() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/walkthrough.scenario");
    let script = std::fs::read_to_string(path).unwrap();
    let from_file = run(&["--seed", "3", "--scenario", path], "");
    let from_stdin = run(&["--seed", "3"], &script);
    assert_eq!(from_file.stdout, from_stdin.stdout);
    assert_eq!(from_file.status.code(), Some(0));
}

#[test]
fn seed_changes_schedule_but_not_views() {
    let script = "put k {\"a\":1}\nstream k [a] as s to x\nupdate k {\"a\":2}\nupdate k {\"a\":3}\n";
    let views = |seed: &str| -> Vec<serde_json::Value> {
        let out = run(&["--seed", seed], script);
        of_type(&records(&out), "view")
            .into_iter()
            .map(|v| serde_json::json!([v["seq"], v["view"]]))
            .collect()
    };
    assert_eq!(views("1"), views("2"));
}
