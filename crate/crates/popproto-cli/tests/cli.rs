use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn popproto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popproto"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_epidemic_succeeds_and_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.txt");
    let out = popproto(&[
        "run", "--protocol", "epidemic", "--n", "50", "--seed", "7",
        "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("# --- config ---"));
    assert!(text.contains("# protocol = \"epidemic\""));
    assert!(text.contains("ok = true"));
    assert!(text.contains("stopped = true"));
}

#[test]
fn budget_zero_exits_3() {
    let out = popproto(&["run", "--protocol", "epidemic", "--n", "20", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_protocol_exits_1() {
    let out = popproto(&["run", "--protocol", "nosuch", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_n_list_in_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "protocol = \"epidemic\"\nn = []\n").unwrap();
    let out = popproto(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("empty n-list"));
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "protocol = epidemic oops\n").unwrap();
    let out = popproto(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn run_with_csv(dir: &Path, name: &str) -> Vec<u8> {
    let report = dir.join(name);
    let out = popproto(&[
        "run", "--protocol", "epidemic", "--n", "40", "--seed", "11",
        "--stride", "1", "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    fs::read(report.with_extension("csv")).unwrap()
}

#[test]
fn identical_config_gives_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_with_csv(dir.path(), "a.txt");
    let b = run_with_csv(dir.path(), "b.txt");
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# --- config ---"));
    assert!(text.contains("time,min,mean,max"));
    // the SVG chart is produced alongside
    let svg = fs::read_to_string(dir.path().join("a.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn flags_win_over_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "protocol = \"epidemic\"\nn = 30\nseed = 1\n").unwrap();
    let out = popproto(&["run", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("seed = 9"));
    assert!(text.contains("# seeds = [9]"));
}

#[test]
fn reach_epidemic_n3_has_three_configurations() {
    let out = popproto(&["reach", "--protocol", "epidemic", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("reachable = 3"));
    assert!(text.contains("stably_correct = true"));
}

#[test]
fn reach_null_n4_is_single_configuration() {
    let out = popproto(&["reach", "--protocol", "null", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("reachable = 1"));
}

#[test]
fn reach_cap_overflow_exits_4_with_partial_count() {
    let out = popproto(&["reach", "--protocol", "balls", "--n", "4", "--cap", "5"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("5 configurations visited"));
}

#[test]
fn wrapped_epidemic_projection_matches_direct() {
    let out = popproto(&["reach", "--protocol", "wrapped-epidemic", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("projected_equals_direct = true"));
}

#[test]
fn log_flag_emits_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let out = popproto(&[
        "sweep", "--protocol", "epidemic", "--n", "20", "--trials", "3",
        "--log", log.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&log).unwrap();
    let mut trials = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["event"] == "trial" {
            trials += 1;
            assert!(v["ok"].as_bool().unwrap());
        }
    }
    assert_eq!(trials, 3);
}

#[test]
fn sweep_reports_one_line_per_n() {
    let out = popproto(&[
        "sweep", "--protocol", "epidemic", "--n", "10,20", "--trials", "5", "--jobs", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("n = 10:"));
    assert!(text.contains("n = 20:"));
    assert!(text.contains("expected_interactions"));
}

#[test]
fn counting_run_reports_population_size() {
    let out = popproto(&["run", "--protocol", "counting", "--n", "8", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("Some(8) x8"));
}
