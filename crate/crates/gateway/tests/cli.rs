use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spi-ttt"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spi-ttt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn build_then_verify_in_both_formats() {
    for (format, name) in [("bin", "table.bin"), ("json", "table.json")] {
        let path = scratch(name);
        let out = bin()
            .args(["build-table", "--out"])
            .arg(&path)
            .args(["--format", format])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("6436 entries"));

        let out = bin().arg("verify-table").arg("--table").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
        let text = stdout(&out);
        assert!(!text.contains("FAIL"));
        assert!(text.lines().count() >= 8);
    }
}

#[test]
fn tampered_table_fails_verification() {
    let path = scratch("tampered.bin");
    bin().args(["build-table", "--out"]).arg(&path).output().unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    // the first record's code byte: point it at a different square
    bytes[11] = if bytes[11] == 0 { 1 } else { 0 };
    std::fs::write(&path, &bytes).unwrap();
    let out = bin().arg("verify-table").arg("--table").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn unreadable_table_is_a_failure() {
    let path = scratch("garbage.bin");
    std::fs::write(&path, b"not a table").unwrap();
    let out = bin().arg("verify-table").arg("--table").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["simulate", "--games", "10"],
        vec!["simulate", "--games", "10", "--first", "sideways", "--seed", "1"],
        vec!["frobnicate"],
        vec![],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_prints_counts_and_writes_traces() {
    let trace = scratch("trace.jsonl");
    let out = bin()
        .args([
            "simulate", "--games", "50", "--first", "random", "--seed", "5", "--json", "--trace",
        ])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stats: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(stats["games"], 50);
    assert_eq!(stats["losses"], 0);
    let lines = std::fs::read_to_string(&trace).unwrap();
    let games: std::collections::BTreeSet<u64> = lines
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["game"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert_eq!(games.len(), 50);

    let out = bin()
        .args(["simulate", "--games", "20", "--first", "spi", "--seed", "5"])
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("win") && text.contains("draw") && text.contains("lose"));
}

fn play_with(input: &str, first: &str) -> Output {
    let mut child = bin()
        .args(["play", "--first", first, "--sigma", "0", "--seed", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn terminal_game_against_scripted_input() {
    let out = play_with("4\n9\n7\n", "spi");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("SPI plays 5"));
    assert!(text.contains("display pattern 12"));
    assert!(text.contains("You lose."));

    // bad input is reported and the prompt repeats
    let out = play_with("x\n5\n5\n3\n4\n9\n8\n", "human");
    let text = stdout(&out);
    assert!(text.contains("enter a number from 1 to 9"));
    assert!(text.contains("occupied"));
    assert!(text.contains("Draw."));
    assert!(text.contains("no display pattern"));
}

#[test]
fn closed_input_mid_game_is_an_error() {
    let out = play_with("1\n", "human");
    assert_eq!(out.status.code(), Some(1));
}
