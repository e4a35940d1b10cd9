//! End-to-end tests of the `sqlfix` binary: exit codes, error JSON and the
//! subcommands not covered by the acceptance suite.

mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::{config, dead_url, fixture, MockServer};
use serde_json::{json, Value};

fn sqlfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqlfix"))
        .args(args)
        .output()
        .unwrap()
}

fn sqlfix_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sqlfix"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|e| panic!("stderr is not error JSON ({e}): {text}"))
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn records(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(sqlfix(&["--help"]).status.success());
    assert!(sqlfix(&["--version"]).status.success());
    assert!(sqlfix(&["build", "--help"]).status.success());
}

#[test]
fn usage_errors_exit_one_with_error_json() {
    let out = sqlfix(&["mine", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["error"]["code"], "usage_error");
    assert_eq!(err["error"]["exit_code"], 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[mine]\nsession_gap_ms = 0\n").unwrap();
    let out = sqlfix(&[
        "--config",
        &s(&cfg),
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&dir.path().join("o")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    fs::write(&cfg, "[mine]\nunknown_key = 1\n").unwrap();
    let out = sqlfix(&[
        "--config",
        &s(&cfg),
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = sqlfix(&["--dialect", "oracle", "diffstats", "--pairs", "x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sample_run_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqlfix(&[
        "--config",
        &s(&config("run.sample.toml")),
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&dir.path().join("p.jsonl")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqlfix(&[
        "diffstats",
        "--pairs",
        &s(&dir.path().join("missing.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["code"], "data_error");

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"bug_sql\": 1}\n").unwrap();
    let out = sqlfix(&["diffstats", "--pairs", &s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("bad.jsonl:1:"));

    let unsorted = dir.path().join("events.jsonl");
    let e = |ts: i64| json!({"session_id": "s", "script_id": "q", "ts_ms": ts, "kind": "save_code", "sql": "SELECT 1"});
    fs::write(&unsorted, format!("{}\n{}\n", e(5), e(1))).unwrap();
    let out = sqlfix(&[
        "mine",
        "--events",
        &s(&unsorted),
        "--out",
        &s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_carry_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pairs.jsonl");
    assert!(sqlfix(&[
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&out)
    ])
    .status
    .success());
    for r in records(&out) {
        assert_eq!(r["schema_version"], 1);
        assert_eq!(r["source"], "diverse_collected");
    }
    let newer = dir.path().join("newer.jsonl");
    fs::write(
        &newer,
        fs::read_to_string(&out)
            .unwrap()
            .replace("\"schema_version\":1", "\"schema_version\":2"),
    )
    .unwrap();
    let res = sqlfix(&["diffstats", "--pairs", &s(&newer)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn baked_build_with_p_zero_keeps_every_token() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let samples = dir.path().join("samples.jsonl");
    assert!(sqlfix(&[
        "mine",
        "--events",
        &s(&fixture("pipeline_events.jsonl")),
        "--out",
        &s(&pairs)
    ])
    .status
    .success());
    for tokenizer in ["whitespace", "bytes"] {
        let out = sqlfix(&[
            "build",
            "--pairs",
            &s(&pairs),
            "--out",
            &s(&samples),
            "--mode",
            "baked",
            "--p",
            "0",
            "--tokenizer",
            tokenizer,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let recs = records(&samples);
        assert!(!recs.is_empty());
        for r in recs {
            let w = r["baked_token_weights"].as_array().unwrap();
            assert!(!w.is_empty());
            assert!(w.iter().all(|x| x == 1));
        }
    }
    let out = sqlfix(&[
        "build",
        "--pairs",
        &s(&pairs),
        "--out",
        &s(&samples),
        "--mode",
        "baked",
        "--p",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn span_build_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let samples = dir.path().join("samples.jsonl");
    assert!(sqlfix(&[
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&pairs)
    ])
    .status
    .success());
    assert!(
        sqlfix(&["build", "--pairs", &s(&pairs), "--out", &s(&samples)])
            .status
            .success()
    );
    let recs = records(&samples);
    assert_eq!(recs.len(), 3);
    assert!(recs[0].get("baked_token_weights").is_none());
    assert_eq!(recs[0]["target_text"], "SELECT a\nFROM t");
    assert_eq!(
        recs[0]["line_spans"],
        json!([{"start": 0, "end": 9, "class": "consistent"}, {"start": 9, "end": 15, "class": "diff"}])
    );
    assert!(recs[0]["input_text"]
        .as_str()
        .unwrap()
        .ends_with("Response:\n"));
}

#[test]
fn filter_reports_unreachable_executor() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    assert!(sqlfix(&[
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&pairs)
    ])
    .status
    .success());
    let kept = dir.path().join("kept.jsonl");
    let rejected = dir.path().join("rejected.jsonl");
    let out = sqlfix(&[
        "filter",
        "--pairs",
        &s(&pairs),
        "--kept",
        &s(&kept),
        "--rejected",
        &s(&rejected),
        "--executor-url",
        &dead_url(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"]["code"], "remote_unavailable");
    let rej = records(&rejected);
    assert_eq!(rej.len(), 3);
    assert!(rej.iter().all(|r| r["reason"] == "executor_unavailable"));
}

#[test]
fn filter_with_remote_executor() {
    let server = MockServer::start(vec![
        (200, json!({"ok": false, "message": "bad"}).to_string()),
        (200, json!({"ok": true, "message": ""}).to_string()),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let one = json!({"bug_sql": "SELECT a\nFRM t", "error_message": "e", "correct_sql": "SELECT a\nFROM t", "source": "diverse_collected"});
    fs::write(&pairs, format!("{one}\n")).unwrap();
    let kept = dir.path().join("kept.jsonl");
    let rejected = dir.path().join("rejected.jsonl");
    let out = sqlfix(&[
        "--jobs",
        "1",
        "filter",
        "--pairs",
        &s(&pairs),
        "--kept",
        &s(&kept),
        "--rejected",
        &s(&rejected),
        "--executor-url",
        &server.url,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(records(&kept).len(), 1);
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn review_without_answers_is_a_data_error() {
    let out = sqlfix_with_stdin(
        &[
            "review",
            "--pairs",
            &s(&fixture("review_pairs.jsonl")),
            "--sample-rate",
            "1",
        ],
        "",
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn review_logs_decisions_and_samples_by_seed() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("decisions.jsonl");
    let out = sqlfix_with_stdin(
        &[
            "--seed",
            "4",
            "review",
            "--pairs",
            &s(&fixture("review_pairs.jsonl")),
            "--sample-rate",
            "0.3",
            "--decisions",
            &s(&log),
        ],
        "y\ny\ny\n",
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let decisions = records(&log);
    assert_eq!(decisions.len(), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass rate 1.0000 (3/3)"));
    let out = sqlfix_with_stdin(
        &[
            "review",
            "--pairs",
            &s(&fixture("review_pairs.jsonl")),
            "--sample-rate",
            "0",
        ],
        "",
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_writes_verdicts_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let verdicts = dir.path().join("verdicts.jsonl");
    let report = dir.path().join("report.json");
    let out = sqlfix(&[
        "evaluate",
        "--predictions",
        &s(&fixture("predictions.jsonl")),
        "--evalset",
        &s(&fixture("evalset.jsonl")),
        "--out",
        &s(&verdicts),
        "--report",
        &s(&report),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = records(&verdicts);
    let by_id = |id: &str| v.iter().find(|r| r["id"] == id).unwrap()["verdict"].clone();
    assert_eq!(by_id("c01"), "different");
    assert_eq!(by_id("c02"), "equivalent");
    assert_eq!(by_id("c07"), "prediction_parse_error");
    assert_eq!(by_id("c08"), "different");
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(
        r["overall"],
        json!({"equivalent": 4, "total": 8, "accuracy": 0.5})
    );
    assert_eq!(r["by_level1"].as_array().unwrap().len(), 2);
}

#[test]
fn classify_report_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let out_pairs = dir.path().join("classified.jsonl");
    let report = dir.path().join("report.json");
    assert!(sqlfix(&[
        "mine",
        "--events",
        &s(&fixture("mining_trace.jsonl")),
        "--out",
        &s(&pairs)
    ])
    .status
    .success());
    let out = sqlfix(&[
        "classify",
        "--pairs",
        &s(&pairs),
        "--taxonomy",
        &s(&config("taxonomy.sample.toml")),
        "--out",
        &s(&out_pairs),
        "--report",
        &s(&report),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cats: Vec<String> = records(&out_pairs)
        .iter()
        .map(|r| r["category"]["level3"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(
        cats,
        ["UnexpectedToken", "MisspelledKeyword", "UnexpectedToken"]
    );
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r[0]["count"], 2);
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[[rule]]\nerror = \"(\"\npath = [\"a\", \"b\", \"c\"]\n",
    )
    .unwrap();
    let out = sqlfix(&[
        "classify",
        "--pairs",
        &s(&pairs),
        "--taxonomy",
        &s(&bad),
        "--out",
        &s(&out_pairs),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

fn write_generation_inputs(dir: &Path, url: &str) -> (String, String, String) {
    let corpus = dir.join("corpus.jsonl");
    let entry = json!({"sql": "SELECT region, SUM(amount) AS total\nFROM sales\nGROUP BY region", "schema_ddl": ["CREATE TABLE sales (region STRING, amount DOUBLE)"]});
    let other = json!({"sql": "SELECT 1"});
    fs::write(&corpus, format!("{entry}\n{other}\n")).unwrap();
    let endpoint = dir.join("endpoint.toml");
    fs::write(
        &endpoint,
        format!("url = \"{url}\"\nmodel = \"mock\"\nbackoff_ms = 1\nmax_retries = 1\n"),
    )
    .unwrap();
    (s(&corpus), s(&config("features.sample.toml")), s(&endpoint))
}

#[test]
fn recall_selects_matching_corpus_sql() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, features, _) = write_generation_inputs(dir.path(), "http://unused");
    let out_path = dir.path().join("cands.jsonl");
    let out = sqlfix(&[
        "recall",
        "--corpus",
        &corpus,
        "--features",
        &features,
        "--out",
        &s(&out_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cands = records(&out_path);
    assert!(cands
        .iter()
        .any(|c| c["category"]["level3"] == "GroupByMisuse"));
    assert!(cands
        .iter()
        .all(|c| c["target_sql"] != "SELECT 1" || c["category"]["level3"] == "MissingColumn"));
}

#[test]
fn generate_accepts_valid_llm_output_and_audits_everything() {
    let reply = json!({
        "error sql": "SELECT region, SUM(amount) AS total\nFRM sales\nGROUP BY region",
        "correct sql": "SELECT region, SUM(amount) AS total\nFROM sales\nGROUP BY region",
        "reason": "misspelled FROM",
        "suitable": "yes",
    });
    let server = MockServer::start(vec![(
        200,
        json!({"text": format!("```json\n{reply}\n```")}).to_string(),
    )]);
    let dir = tempfile::tempdir().unwrap();
    let (corpus, features, endpoint) = write_generation_inputs(dir.path(), &server.url);
    let out_path = dir.path().join("generated.jsonl");
    let audit = dir.path().join("audit.jsonl");
    let out = sqlfix(&[
        "generate",
        "--corpus",
        &corpus,
        "--features",
        &features,
        "--endpoint",
        &endpoint,
        "--out",
        &s(&out_path),
        "--audit",
        &s(&audit),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let audit = records(&audit);
    assert!(!audit.is_empty());
    assert_eq!(audit.len(), server.requests().len());
    let pairs = records(&out_path);
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert_eq!(p["source"], "oriented_generated");
        assert_eq!(p["provenance"]["model"], "mock");
        assert!(p["error_message"].as_str().unwrap().contains("FRM"));
    }
    for a in &audit {
        assert!(a["prompt"].as_str().unwrap().contains("[TARGET SPARK SQL]"));
        assert!(
            ["accepted", "rejected"].contains(&a["outcome"].as_str().unwrap()),
            "{a}"
        );
    }
}

#[test]
fn generate_exits_four_when_llm_is_down() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, features, endpoint) = write_generation_inputs(dir.path(), &dead_url());
    let audit = dir.path().join("audit.jsonl");
    let out = sqlfix(&[
        "generate",
        "--corpus",
        &corpus,
        "--features",
        &features,
        "--endpoint",
        &endpoint,
        "--out",
        &s(&dir.path().join("g.jsonl")),
        "--audit",
        &s(&audit),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(records(&audit)
        .iter()
        .all(|a| a["outcome"] == "llm_unavailable"));
}
