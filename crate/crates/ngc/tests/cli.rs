use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ngc_core::eval::evaluate;
use ngc_core::MicroGraph;
use serde_json::Value;

fn ngc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngc")).args(args).env_remove("NGC_CACHE_DIR").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn entries(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for sub in fs::read_dir(dir).unwrap() {
        let sub = sub.unwrap().path();
        if sub.is_dir() {
            out.extend(fs::read_dir(&sub).unwrap().map(|e| e.unwrap().path()));
        }
    }
    out.sort();
    out
}

#[test]
fn eval_prints_the_image() {
    let o = ngc(&["eval", "[0,3;2,3;2,3]", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g = MicroGraph::parse("[0,3;2,3;2,3]", 2, true).unwrap();
    assert_eq!(stdout(&o).trim(), evaluate(&g).unwrap().to_string());

    let o = ngc(&["eval", "[1,2;1,2]", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let h = MicroGraph::parse("[1,2;1,2]", 2, false).unwrap();
    assert_eq!(stdout(&o).trim(), evaluate(&h).unwrap().to_string());
}

#[test]
fn input_errors_exit_2_with_a_pointer() {
    let o = ngc(&["eval", "[0,3;2,x;2,3]", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('^'), "{}", stderr(&o));

    assert_eq!(ngc(&["pipeline", "--dim", "7"]).status.code(), Some(2));
    assert_eq!(ngc(&["pipeline", "--dim", "3", "--family", "descendants:99"]).status.code(), Some(2));
    assert_eq!(ngc(&["table", "--dim", "2"]).status.code(), Some(2));
    assert_eq!(ngc(&["cache", "list"]).status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_4() {
    let o = ngc(&["pipeline", "--dim", "2", "--budget", "0s"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn pipeline_json_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = ngc(&["pipeline", "--dim", "2", "--format", "json", "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let strip = |dir: &Path| {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    let v: Value = serde_json::from_str(&fs::read_to_string(a.join("result.json")).unwrap()).unwrap();
    assert_eq!(v["kernel"].as_array().unwrap().len(), 1);
    assert_eq!(v["solution"]["status"], "solution");
}

#[test]
fn cache_verify_flags_exactly_the_tampered_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    for g in ["[0,3;2,3;2,3]", "[1,2;1,2]", "[0,2;0,1]"] {
        assert_eq!(ngc(&["--cache-dir", dir, "eval", g, "--dim", "2"]).status.code(), Some(0));
    }
    let files = entries(tmp.path());
    assert_eq!(files.len(), 3);
    let o = ngc(&["--cache-dir", dir, "cache", "verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let read = |f: &PathBuf| -> Value { serde_json::from_str(&fs::read_to_string(f).unwrap()).unwrap() };
    let target = files.iter().find(|f| !read(f)["components"].as_array().unwrap().is_empty()).unwrap();
    let mut entry = read(target);
    let key = entry["key"].as_str().unwrap().to_string();
    let poly = entry["components"][0]["poly"].as_str().unwrap().to_string();
    entry["components"][0]["poly"] = Value::String(format!("2*({poly})"));
    fs::write(target, serde_json::to_string(&entry).unwrap()).unwrap();

    let o = ngc(&["--cache-dir", dir, "cache", "verify"]);
    assert_eq!(o.status.code(), Some(3));
    let flagged: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.ends_with("\tok"))
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(flagged, vec![key]);

    assert_eq!(ngc(&["--cache-dir", dir, "cache", "clear"]).status.code(), Some(0));
    let o = ngc(&["--cache-dir", dir, "cache", "list"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim().is_empty());
}

#[test]
fn generate_counts() {
    let o = ngc(&["generate", "--dim", "2", "--lc", "3"]);
    assert_eq!(stdout(&o).lines().count(), 14);
    let o = ngc(&["generate", "--dim", "4", "--hamiltonians", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 21);
}
