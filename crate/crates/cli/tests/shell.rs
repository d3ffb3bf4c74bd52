use std::collections::BTreeMap;
use std::process::Command;

use gredo_cli::format::OutputFormat;
use gredo_cli::session::{Session, SessionConfig};
use gredo_core::fixtures::YOGURT_QUERY;

fn session(optimizer: bool) -> Session {
    let mut s = Session::open(SessionConfig {
        optimizer,
        format: OutputFormat::Csv,
        ..SessionConfig::default()
    })
    .unwrap();
    s.run_command(".fixture yogurt").unwrap();
    s
}

/// CSV output as a multiset of data lines.
fn multiset(csv: &str) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for line in csv.lines().skip(1) {
        *m.entry(line.to_string()).or_insert(0) += 1;
    }
    m
}

#[test]
fn audit_of_fresh_fixture_reports_counts() {
    let mut s = session(true);
    let out = s.run_command(".audit").unwrap();
    assert_eq!(out, "Interested_in: consistent (6 vertices, 4 edges)");
}

#[test]
fn explain_differs_between_optimizer_settings_but_results_agree() {
    let mut on = session(true);
    let mut off = session(false);
    let explain = format!("EXPLAIN {YOGURT_QUERY}");
    let plan_on = on.run_command(&explain).unwrap();
    let plan_off = off.run_command(&explain).unwrap();
    assert_ne!(plan_on, plan_off);
    assert!(plan_off.ends_with("rules: "), "{plan_off}");
    assert!(plan_on.contains("traversal-pruning"), "{plan_on}");

    let rows_on = multiset(&on.run_command(YOGURT_QUERY).unwrap());
    let rows_off = multiset(&off.run_command(YOGURT_QUERY).unwrap());
    assert_eq!(rows_on, rows_off);
    let expected: BTreeMap<String, usize> = ["1,10", "1,20", "2,20"].iter().map(|r| (r.to_string(), 1)).collect();
    assert_eq!(rows_on, expected);
}

#[test]
fn malformed_csv_import_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "id,name\n1,ann\n2,bob\n3\n").unwrap();
    let mut s = session(true);
    s.run_command("CREATE TABLE People (id INT, name TEXT)").unwrap();
    let err = s
        .run_command(&format!("IMPORT People FROM '{}'", path.display()))
        .unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let text = err.render();
    assert!(text.starts_with("error[io]:"), "{text}");
    assert!(text.contains("line 4"), "{text}");
}

#[test]
fn errors_carry_a_category() {
    let mut s = session(true);
    let cases = [
        ("SELECT FROM", "syntax"),
        ("SELECT x.y FROM Nowhere x", "schema"),
        (".bench nosuch", "execution"),
        ("CREATE TABLE Customers (id INT)", "schema"),
        ("IMPORT Customers FROM '/nonexistent/file.csv'", "io"),
    ];
    for (cmd, category) in cases {
        let rendered = s.run_command(cmd).unwrap_err().render();
        assert!(rendered.starts_with(&format!("error[{category}]")), "{cmd}: {rendered}");
    }
    let syntax = s.run_command("SELECT C.id\nFROM Customers C WHERE ==").unwrap_err().render();
    assert!(syntax.contains("line 2"), "{syntax}");
}

#[test]
fn ddl_insert_and_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let mut s = Session::open(SessionConfig {
        format: OutputFormat::Csv,
        ..SessionConfig::default()
    })
    .unwrap();
    s.run_command("CREATE TABLE T (a INT, b TEXT)").unwrap();
    s.run_command("INSERT INTO T VALUES (1, 'x'), (2, 'y')").unwrap();
    assert_eq!(
        s.run_command(&format!("EXPORT T TO '{}'", out.display())).unwrap(),
        "exported 2 records from T"
    );
    s.run_command("CREATE TABLE U (a INT, b TEXT)").unwrap();
    s.run_command(&format!("IMPORT U FROM '{}'", out.display())).unwrap();
    assert_eq!(s.run_command("SELECT U.a, U.b FROM U").unwrap(), "U.a,U.b\n1,x\n2,y");
}

#[test]
fn directory_backed_session_persists() {
    let dir = tempfile::tempdir().unwrap();
    let config = SessionConfig {
        db_dir: Some(dir.path().to_path_buf()),
        format: OutputFormat::Csv,
        ..SessionConfig::default()
    };
    let mut s = Session::open(config.clone()).unwrap();
    s.run_command(".fixture yogurt").unwrap();
    s.run_command("INSERT INTO Customers VALUES (9, 'Zed', 30.0, 0)").unwrap();
    s.close().unwrap();

    let mut s = Session::open(config).unwrap();
    assert!(s.run_command(".audit").unwrap().contains("consistent"));
    assert_eq!(s.run_command("SELECT C.name FROM Customers C WHERE C.id = 9").unwrap(), "C.name\nZed");
}

#[test]
fn analyze_regression_beats_baseline() {
    let mut s = session(true);
    let out = s
        .run_command("ANALYZE REGRESSION USING (SELECT C.age, C.loyal FROM Customers C) WITH (label = 'loyal', standardize = true)")
        .unwrap();
    let loss_line = out.lines().find(|l| l.starts_with("loss:")).unwrap();
    let nums: Vec<f64> = loss_line
        .split(|c: char| !(c.is_ascii_digit() || c == '.'))
        .filter_map(|w| w.parse().ok())
        .collect();
    assert!(nums[0] < nums[1], "{out}");
}

#[test]
fn bench_scale_zero_is_empty_and_modes_agree() {
    let mut s = session(true);
    assert!(s.run_command(".bench gcdi 0").unwrap().contains("(no scenarios)"));
    let report = s.run_command(".bench gcdi 1").unwrap();
    assert!(report.contains("results agree across modes"), "{report}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gredo");
    let ok = Command::new(bin).args(["-c", ".fixture yogurt", "-c", ".audit"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("consistent (6 vertices, 4 edges)"));

    let bad = Command::new(bin).args(["-c", "SELEC 1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.starts_with("error[syntax]"), "{stderr}");
    assert!(!stderr.contains("panicked"));

    let off = Command::new(bin)
        .args(["--opt", "off", "--rule", "projection-trimming", "on", "--rule", "traversal-pruning", "on", "--format", "csv", "-c", ".fixture yogurt"])
        .args(["-c", &format!("EXPLAIN {YOGURT_QUERY}")])
        .output()
        .unwrap();
    assert_eq!(off.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&off.stdout).contains("rules: projection-trimming, traversal-pruning"));
}
