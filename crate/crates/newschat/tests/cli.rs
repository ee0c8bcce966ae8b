mod common;

use std::path::Path;
use std::process::{Command, Output, Stdio};

fn newschat(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newschat"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn ingest_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::fixture("corpus.jsonl");
    let first = stdout(&newschat(dir.path(), &["ingest", "--corpus", corpus.to_str().unwrap()]));
    let second = stdout(&newschat(dir.path(), &["ingest", "--corpus", corpus.to_str().unwrap()]));
    assert_eq!(first, second);
    assert_eq!(first.trim(), "ingested 4 stories, 11 events, 14 articles, 36 paragraphs");
}

#[test]
fn bad_corpus_reports_line_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(
        &path,
        "{\"kind\":\"story\",\"id\":\"s\",\"name\":\"S\"}\n{\"kind\":\"article\",\"id\":\"a\"}\n",
    )
    .unwrap();
    let data = dir.path().join("data");
    let out = newschat(&data, &["ingest", "--corpus", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert_eq!(stdout(&newschat(&data, &["rooms"])), "");
}

#[test]
fn graph_requires_bank() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::fixture("corpus.jsonl");
    stdout(&newschat(dir.path(), &["ingest", "--corpus", corpus.to_str().unwrap()]));
    let out = newschat(dir.path(), &["build-graph", "--story", "nato-summit"]);
    assert!(!out.status.success());
    let out = newschat(dir.path(), &["build-bank", "--story", "no-such-story"]);
    assert!(!out.status.success());

    stdout(&newschat(dir.path(), &["build-bank", "--story", "nato-summit"]));
    let built = stdout(&newschat(dir.path(), &["build-graph", "--story", "nato-summit"]));
    assert_eq!(built.trim(), "nato-summit: 6 edges over 6 questions; 2 covering questions keep 2 edges");
    let rooms = stdout(&newschat(dir.path(), &["rooms"]));
    let ids: Vec<&str> = rooms.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids, ["australia-fires", "boeing-737-max", "nato-summit", "lebanon-protests"]);
}

#[test]
fn replay_unknown_session_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = newschat(dir.path(), &["replay", "--session", "nobody"]);
    assert!(!out.status.success());
}
