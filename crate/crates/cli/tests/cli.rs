use std::path::PathBuf;
use std::process::{Command, Output};

use refform_core::dsl::parse;
use refform_core::oracle::{semantic_influence, Logic};
use refform_core::{schedule_from_clocks, ReferringForm};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn circuit_path(name: &str) -> PathBuf {
    root().join("circuits").join(name)
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn refform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refform"))
        .args(args)
        .env_remove("REFFORM_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn analyze(file: &str, horizon: usize, extra: &[&str]) -> Output {
    let path = circuit_path(file);
    let h = horizon.to_string();
    let mut args = vec!["analyze", path.to_str().unwrap(), "--horizon", &h];
    args.extend_from_slice(extra);
    refform(&args)
}

fn oracle_form(file: &str, horizon: usize) -> (refform_core::Circuit, ReferringForm) {
    let c = parse(&std::fs::read_to_string(circuit_path(file)).unwrap()).unwrap();
    let s = schedule_from_clocks(&c, horizon, &Default::default()).unwrap();
    let form = semantic_influence(&c, &s, 2, Logic::Tupling, 1 << 20).unwrap();
    (c, form)
}

/// Rows of a `step | past | current` table, oracle side.
fn oracle_table_rows(file: &str, horizon: usize) -> Vec<(String, String)> {
    let (c, form) = oracle_form(file, horizon);
    let show = |items: Vec<String>| {
        if items.is_empty() {
            "∅".to_string()
        } else {
            format!("{{{}}}", items.join(", "))
        }
    };
    (0..horizon)
        .map(|t| {
            (
                show(
                    form.past(t)
                        .iter()
                        .map(|o| format!("({},{})", c.data_ports[o.port], o.time))
                        .collect(),
                ),
                show(
                    form.current(t)
                        .iter()
                        .map(|&p| c.data_ports[p].clone())
                        .collect(),
                ),
            )
        })
        .collect()
}

fn table_rows(table: &str) -> Vec<(String, String)> {
    table
        .lines()
        .skip(2)
        .map(|line| {
            let cols: Vec<&str> = line.split('|').map(str::trim).collect();
            (cols[1].to_string(), cols[2].to_string())
        })
        .collect()
}

#[test]
fn goldens_match_byte_for_byte() {
    for (file, h, name) in [
        ("dff.rfc", 9, "dff_h9.txt"),
        ("sync.rfc", 7, "sync_h7.txt"),
        ("twoclock.rfc", 12, "twoclock_h12.txt"),
        ("passthrough.rfc", 4, "passthrough_h4.txt"),
    ] {
        let out = analyze(file, h, &[]);
        assert_eq!(out.status.code(), Some(0), "{file}");
        assert_eq!(stdout(&out), golden(name), "{file}");
    }
    let out = analyze("twoclock.rfc", 12, &["--format", "json"]);
    assert_eq!(stdout(&out), golden("twoclock_h12.json"));
}

#[test]
fn goldens_agree_with_the_oracle() {
    for (file, h, name) in [
        ("dff.rfc", 9, "dff_h9.txt"),
        ("sync.rfc", 7, "sync_h7.txt"),
        ("twoclock.rfc", 12, "twoclock_h12.txt"),
        ("passthrough.rfc", 4, "passthrough_h4.txt"),
    ] {
        assert_eq!(
            table_rows(&golden(name)),
            oracle_table_rows(file, h),
            "{file}"
        );
    }
}

#[test]
fn json_form_follows_the_schema_and_the_oracle() {
    let json: Value = serde_json::from_str(&golden("twoclock_h12.json")).unwrap();
    let (c, form) = oracle_form("twoclock.rfc", 12);
    assert_eq!(json["horizon"], 12);
    let steps = json["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 12);
    for (t, step) in steps.iter().enumerate() {
        let mut keys: Vec<&str> = step
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        keys.sort_unstable();
        assert_eq!(keys, ["current", "past", "t"]);
        assert_eq!(step["t"], t);
        let past: Vec<(String, u64)> = step["past"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| {
                (
                    o["port"].as_str().unwrap().to_string(),
                    o["time"].as_u64().unwrap(),
                )
            })
            .collect();
        let expected: Vec<(String, u64)> = form
            .past(t)
            .iter()
            .map(|o| (c.data_ports[o.port].clone(), o.time.0 as u64))
            .collect();
        assert_eq!(past, expected, "t={t}");
        assert!(step["current"].as_array().unwrap().is_empty());
    }
}

#[test]
fn dff_plateaus_follow_the_clock() {
    let rows = table_rows(&golden("dff_h9.txt"));
    let past: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(past[0], "∅");
    assert!(past[1..5].iter().all(|p| *p == "{(I,0)}"));
    assert!(past[5..9].iter().all(|p| *p == "{(I,4)}"));
    assert!(rows.iter().all(|r| r.1 == "∅"));
}

#[test]
fn sync_accumulates_one_occurrence_per_edge() {
    let rows = table_rows(&golden("sync_h7.txt"));
    let sizes: Vec<usize> = rows
        .iter()
        .map(|r| {
            if r.0 == "∅" {
                0
            } else {
                r.0.matches('(').count()
            }
        })
        .collect();
    assert_eq!(sizes, [0, 1, 1, 2, 2, 3, 3]);
    for w in rows.windows(2) {
        let inner = w[0].0.trim_matches(|c| c == '{' || c == '}');
        assert!(w[0].0 == "∅" || w[1].0.contains(inner));
    }
}

#[test]
fn twoclock_delivers_the_newest_sample_at_each_slow_tick() {
    let (_, form) = oracle_form("twoclock.rfc", 12);
    // c1 samples at even steps, c2 ticks at 2, 5, 8
    for (tick, newest) in [(2usize, 0usize), (5, 4), (8, 6)] {
        let after = form.past(tick + 1);
        assert_eq!(after.latest().map(|t| t.0), Some(newest), "tick {tick}");
        for t in tick + 2..=(tick + 3).min(11) {
            assert_eq!(form.past(t), after, "plateau after tick {tick}");
        }
    }
    let rows = table_rows(&golden("twoclock_h12.txt"));
    assert_eq!(rows[6].0, "{(I,0), (I,4)}");
}

#[test]
fn passthrough_refers_to_nothing_past() {
    let rows = table_rows(&golden("passthrough_h4.txt"));
    assert!(rows.iter().all(|r| r.0 == "∅" && r.1 == "{I}"));
}

#[test]
fn check_reports_preserving_circuits() {
    let path = circuit_path("dff.rfc");
    let out = refform(&[
        "check",
        path.to_str().unwrap(),
        "--horizon",
        "9",
        "--all-schedules",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("time-preserving\n"));
}

#[test]
fn check_selmem_emits_a_witness() {
    let path = circuit_path("selmem.rfc");
    let out = refform(&[
        "check",
        path.to_str().unwrap(),
        "--horizon",
        "10",
        "--all-schedules",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).starts_with("NOT time-preserving\n"));

    let out = refform(&[
        "check",
        path.to_str().unwrap(),
        "--horizon",
        "10",
        "--all-schedules",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["preserving"], false);
    let witness = v["witness"].as_array().unwrap();
    assert_eq!(witness.len(), 2);
    for e in witness {
        let mut keys: Vec<&str> = e.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["form", "from", "t1", "t2", "to"]);
        assert!(e["t1"].as_u64() < e["t2"].as_u64());
    }
}

#[test]
fn check_json_on_preserving_has_null_witness() {
    let path = circuit_path("sync.rfc");
    let out = refform(&[
        "check",
        path.to_str().unwrap(),
        "--horizon",
        "6",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["preserving"], true);
    assert!(v["witness"].is_null());
}

#[test]
fn input_errors_exit_1() {
    let out = refform(&["check", "missing.rfc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.rfc"));

    let dir = std::env::temp_dir().join(format!("refform-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.rfc");
    std::fs::write(&bad, "circuit a {\n  input I;\n  output from {G};\n}\n").unwrap();
    let out = refform(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("3:16: unknown identifier G"),
        "{}",
        stderr(&out)
    );

    let out = refform(&[
        "analyze",
        circuit_path("selmem.rfc").to_str().unwrap(),
        "--horizon",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--schedule"));

    let out = refform(&["analyze", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn schedule_spec_drives_analysis() {
    let out = analyze(
        "selmem.rfc",
        8,
        &[
            "--schedule",
            "M1=10001000;M2=01000000;sel=00110011",
            "--format",
            "json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["steps"][1]["past"][0]["port"], "I1");
    assert_eq!(v["steps"][2]["past"][0]["port"], "I2");
    assert_eq!(v["steps"][6]["past"][0]["time"], 1);

    let out = analyze("selmem.rfc", 8, &["--schedule", "M1=1000;M2=0100;sel=0011"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn budget_overrun_exits_2() {
    let path = circuit_path("selmem.rfc");
    let out = refform(&[
        "analyze",
        path.to_str().unwrap(),
        "--horizon",
        "10",
        "--all-schedules",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget"));

    let out = Command::new(env!("CARGO_BIN_EXE_refform"))
        .args([
            "check",
            path.to_str().unwrap(),
            "--horizon",
            "6",
            "--all-schedules",
        ])
        .env("REFFORM_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = refform(&["--budget", "2^4", "verify", "--ffs", "1", "--horizon", "6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_all_schedules_lists_distinct_forms() {
    let out = analyze("selmem.rfc", 2, &["--all-schedules", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let forms = v["forms"].as_array().unwrap();
    // ∅∅, ∅{I1@0}, ∅{I2@0}
    assert_eq!(forms.len(), 3);
}

#[test]
fn oracle_diff_reports_agreement_and_cancellation() {
    let out = refform(&[
        "oracle-diff",
        circuit_path("dff.rfc").to_str().unwrap(),
        "--horizon",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "no differences\n");

    let dir = std::env::temp_dir().join(format!("refform-xor-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("twin.rfc");
    std::fs::write(
        &file,
        "circuit twin { input I; clock c period 1 offset 0; ff A clock c from {I}; ff B clock c from {I}; output from {A, B}; }",
    )
    .unwrap();
    let out = refform(&["oracle-diff", file.to_str().unwrap(), "--horizon", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let out = refform(&[
        "oracle-diff",
        file.to_str().unwrap(),
        "--horizon",
        "4",
        "--logic",
        "xor",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("analysis only {(I,0)}"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn verify_text_and_json() {
    let out = refform(&["verify", "--ffs", "1", "--horizon", "4", "--theorem"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("checked 9 circuits × 16 schedules: 0 failures\n"));

    let out = refform(&[
        "verify",
        "--ffs",
        "1",
        "--horizon",
        "4",
        "--lemma",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["checked"], 144);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert_eq!(v["spot_check"]["samples"], 100);

    let out = refform(&["verify", "--ffs", "3", "--horizon", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_is_deterministic() {
    let a = refform(&["verify", "--ffs", "2", "--horizon", "3", "--format", "json"]);
    let b = refform(&["verify", "--ffs", "2", "--horizon", "3", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn render_marks_latches() {
    let path = circuit_path("dff.rfc");
    let out = refform(&[
        "render",
        path.to_str().unwrap(),
        "--horizon",
        "9",
        "--format",
        "dot",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    let latched: Vec<usize> = (0..9)
        .filter(|t| dot.contains(&format!("\"F@{t}\" [label=\"F t={t} latch\"")))
        .collect();
    assert_eq!(latched, [0, 4, 8]);
    let ff_nodes = dot
        .lines()
        .filter(|l| l.trim_start().starts_with("\"F@") && l.contains("[label"))
        .count();
    assert_eq!(ff_nodes, 10);

    let out = refform(&["render", path.to_str().unwrap(), "--horizon", "9"]);
    let ascii = stdout(&out);
    assert!(ascii
        .lines()
        .any(|l| l.split_whitespace().collect::<Vec<_>>()
            == ["F", "L", ".", ".", ".", "L", ".", ".", ".", "L"]));
}
