use std::process::Command;

use cubic_zeta::report::MatchReport;
use cubic_zeta_cli::TableReport;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cubic-zeta"));
    c.env_remove("CUBIC_ZETA_WORKERS");
    c
}

#[test]
fn json_report_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("local.json");
    let status = bin()
        .args([
            "verify",
            "local",
            "--local-prime",
            "2",
            "--const-prime",
            "5",
            "--k",
            "1",
            "--trunc",
            "8",
        ])
        .arg("--out")
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let report: MatchReport = serde_json::from_str(&text).unwrap();
    assert!(report.pass);
    assert_eq!(report.items.len(), 9);
    assert_eq!(report.params["local_prime"], "2");
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);
}

#[test]
fn ktab_grid_and_known_entries() {
    let out = bin()
        .args(["ktab", "--local-prime", "2", "--vmax", "4", "--rmax", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table: TableReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(table.entries.len(), 15);
    assert_eq!(table.entries[0].value.as_deref(), Some("1"));
    let out = bin()
        .args(["ktab", "--local-prime", "3", "--vmax", "1", "--rmax", "0"])
        .output()
        .unwrap();
    let table: TableReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(table.entries[1].value.as_deref(), Some("-3"));
}

#[test]
fn ktab_records_budget_errors_and_exits_nonzero() {
    let out = bin()
        .args([
            "ktab",
            "--local-prime",
            "2",
            "--vmax",
            "3",
            "--rmax",
            "2",
            "--pair-budget",
            "64",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let table: TableReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!table.pass);
    assert!(table.entries.iter().any(|e| e.value.is_some()));
    assert!(table
        .entries
        .iter()
        .any(|e| e.error.as_deref().is_some_and(|m| m.contains("budget"))));
}

#[test]
fn verify_examples_pass() {
    for args in [
        &["verify", "euler", "--n", "6", "--f", "1"][..],
        &["verify", "analytic", "--k", "1"],
        &["verify", "periodicity", "--n", "2", "--f", "2"],
        &["trace-factor", "--const-prime", "2", "--k", "1"],
    ] {
        let out = bin().args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}");
        let r: MatchReport = serde_json::from_slice(&out.stdout).unwrap();
        assert!(r.pass && !r.items.is_empty(), "{args:?}");
    }
}

#[test]
fn usage_and_parameter_errors_exit_nonzero() {
    for args in [
        &["verify", "everything"][..],
        &["verify", "local", "--local-prime", "6"],
        &[
            "verify",
            "local",
            "--local-prime",
            "5",
            "--const-prime",
            "5",
            "--k",
            "0",
        ],
        &["verify", "euler", "--n", "3"],
    ] {
        let status = bin().args(args).output().unwrap().status;
        assert!(!status.success(), "{args:?}");
    }
}

#[test]
fn csv_output() {
    let out = bin()
        .args([
            "trace-factor",
            "--const-prime",
            "3",
            "--k",
            "2",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("command,label,expected,computed,pass"));
    assert!(lines.next().unwrap().ends_with(",true"));
}

#[test]
fn workers_flag_and_env_agree() {
    let args = [
        "verify",
        "local",
        "--local-prime",
        "3",
        "--const-prime",
        "7",
        "--no-timing",
    ];
    let a = bin()
        .args(args)
        .args(["--workers", "2"])
        .output()
        .unwrap()
        .stdout;
    let b = bin()
        .args(args)
        .env("CUBIC_ZETA_WORKERS", "3")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(a, b);
}
