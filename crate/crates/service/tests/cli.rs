use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn showme(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_showme"))
        .arg("--workspace")
        .arg(ws)
        .args(args)
        .env_remove("SHOWME_WORKSPACE")
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

fn ok(ws: &Path, args: &[&str]) -> String {
    let out = showme(ws, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn init(ws: &Path) {
    ok(ws, &["init"]);
}

fn teach_pizza(ws: &Path) {
    let demo = ws.join("demos/pizza.jsonl");
    let out = ok(ws, &["utter", "order a large pepperoni pizza", "--demo", demo.to_str().unwrap()]);
    assert!(out.contains("task-0001"), "{out}");
}

#[test]
fn init_writes_demos() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path());
    for name in ["message", "pizza", "school", "contact"] {
        assert!(dir.path().join(format!("demos/{name}.jsonl")).is_file());
    }
    assert_eq!(
        std::fs::read_to_string(dir.path().join("demos/pizza.txt")).unwrap().trim(),
        "order a large pepperoni pizza"
    );
    init(dir.path());
}

#[test]
fn record_learn_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    init(ws);
    let events = ws.join("demos/pizza.jsonl");
    let out = ok(
        ws,
        &["--json", "record", "--utterance", "order a large pepperoni pizza", "--events", events.to_str().unwrap()],
    );
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["trace_id"], "trace-0001");
    let out = ok(ws, &["--json", "learn", "trace-0001"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["task_id"], "task-0001");

    let out = ok(ws, &["--json", "run", "task-0001", "--param", "s1=Veggie"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["report"]["success"], true);
    assert_eq!(r["report"]["final_screen"], "placed_veggie");

    let list = ok(ws, &["list"]);
    assert!(list.contains("task-0001"));
    assert!(list.contains("order a large pepperoni pizza"));
}

#[test]
fn utter_runs_known_task() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    init(ws);
    teach_pizza(ws);
    let out = ok(ws, &["--json", "utter", "order a small veggie pizza"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["report"]["final_screen"], "placed_veggie");
    let report = r["report_id"].as_str().unwrap();
    assert!(ws.join(format!("reports/{report}.json")).is_file());
}

#[test]
fn utter_answers_verification() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    init(ws);
    teach_pizza(ws);
    let out = showme(ws, &["utter", "menu"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let out = ok(ws, &["utter", "menu", "--answer", "no"]);
    assert!(out.contains("Can you show me?"), "{out}");
    let list: Value = serde_json::from_str(&ok(ws, &["--json", "list"])).unwrap();
    assert_eq!(list["clusters"].as_array().unwrap().len(), 1);
    let out = ok(ws, &["--json", "utter", "menu", "--answer", "yes"]);
    let replies: Vec<Value> = serde_json::Deserializer::from_str(&out).into_iter().collect::<Result<_, _>>().unwrap();
    assert_eq!(replies.len(), 2);
    let r = &replies[1];
    assert_eq!(r["report"]["success"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    init(ws);
    assert_eq!(code(&showme(ws, &["run", "task-0042"])), 2);
    assert_eq!(code(&showme(ws, &["run", "task-0001", "--param", "novalue"])), 2);
    assert_eq!(code(&showme(ws, &["--t-hard", "0.5", "--t-soft", "0.6", "list"])), 2);
    assert_eq!(code(&showme(ws, &["record", "--utterance", "x", "--events", "/nonexistent.jsonl"])), 2);
    teach_pizza(ws);
    assert_eq!(code(&showme(ws, &["run", "task-0001", "--param", "zz=1"])), 2);
    let out = showme(ws, &["run", "task-0001", "--param", "s1=Calzone"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(code(&showme(ws, &["--help"])), 0);
    assert_eq!(code(&showme(ws, &["frobnicate"])), 2);
}

#[test]
fn package_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let pkg = dir.path().join("pkg");
    ok(dir.path(), &["package-sample", pkg.to_str().unwrap()]);
    let out = ok(dir.path(), &["package-validate", pkg.to_str().unwrap()]);
    assert!(out.contains("is valid"), "{out}");
    let ws = dir.path().join("ws");
    ok(&ws, &["init"]);
    let demo = ws.join("demos/message.jsonl");
    let out = ok(
        &ws,
        &["--package", pkg.to_str().unwrap(), "utter", "tell the team hello", "--demo", demo.to_str().unwrap()],
    );
    assert!(out.contains("task-0001"), "{out}");
    std::fs::remove_file(pkg.join("manifest.json")).ok();
    assert_eq!(code(&showme(dir.path(), &["package-validate", pkg.to_str().unwrap()])), 2);
}

fn write_corpus(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("vectors.txt"), showme_service::SAMPLE_VECTORS).unwrap();
    let rows = [
        ("pizza", "order a large pepperoni pizza", "large"),
        ("pizza", "order a small veggie pizza", "small"),
        ("pizza", "buy a medium hawaiian pizza", "medium"),
        ("grades", "show my grades", ""),
        ("grades", "check my grades", ""),
        ("grades", "view school grades", ""),
        ("call", "call contact aaron", "aaron"),
        ("call", "open contact bella", "bella"),
        ("call", "call contact carlos", "carlos"),
    ];
    let lines: String = rows
        .iter()
        .map(|(task, text, value)| {
            let bindings = if value.is_empty() {
                serde_json::json!([])
            } else {
                let i = text.split(' ').position(|w| w == *value).unwrap();
                serde_json::json!([{ "slot": "s0", "start": i, "end": i + 1, "value": value }])
            };
            serde_json::json!({ "task": task, "text": text, "bindings": bindings }).to_string() + "\n"
        })
        .collect();
    std::fs::write(dir.join("utterances.jsonl"), lines).unwrap();
}

#[test]
fn evaluation_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus);
    let c = corpus.to_str().unwrap();
    let r: Value = serde_json::from_str(&ok(dir.path(), &["--json", "eval-clustering", c, "--seed", "7"])).unwrap();
    assert_eq!(r["utterances"], 9);
    assert_eq!(r["ari"].as_f64().unwrap(), 1.0, "{r}");
    assert_eq!(r["clusters"], 3);
    let text = ok(dir.path(), &["eval-clustering", c]);
    assert!(text.starts_with("ARI 1.000000"), "{text}");

    let r: Value = serde_json::from_str(&ok(dir.path(), &["--json", "eval-params", c])).unwrap();
    assert_eq!(r["evaluated"], 6);
    let text = ok(dir.path(), &["eval-params", c]);
    assert!(text.contains("exact"), "{text}");
    assert_eq!(code(&showme(dir.path(), &["eval-params", dir.path().to_str().unwrap()])), 2);
    let r: Value =
        serde_json::from_str(&ok(dir.path(), &["--json", "--edge-weights", "1,0,0,0", "eval-params", c])).unwrap();
    assert_eq!(r["evaluated"], 6);
    assert_eq!(code(&showme(dir.path(), &["--edge-weights", "1,0,0", "eval-params", c])), 2);
    assert_eq!(code(&showme(dir.path(), &["--edge-weights", "1,-1,0,0", "eval-params", c])), 2);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = walk(dir)
        .into_iter()
        .map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn cli_and_session_traces_match() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    init(&a);
    let events = a.join("demos/message.jsonl");
    ok(&a, &["record", "--utterance", "tell the team hello", "--events", events.to_str().unwrap()]);

    let b = dir.path().join("b");
    init(&b);
    let events = b.join("demos/message.jsonl");
    ok(&b, &["utter", "tell the team hello", "--demo", events.to_str().unwrap()]);

    let ta = dir_bytes(&a.join("traces/trace-0001"));
    let tb = dir_bytes(&b.join("traces/trace-0001"));
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
}
