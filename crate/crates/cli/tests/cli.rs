use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brix::bench::BenchReport;
use brix::datagen::PlantManifest;
use tempfile::TempDir;

fn brix(args: &[&str]) -> Output {
    brix_env(args, &[])
}

fn brix_env(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brix"));
    cmd.args(args).env_remove("BRIX_INDEX_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn brix")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(o: Output) -> Output {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(&o));
    o
}

struct Corpus {
    _dir: TempDir,
    path: PathBuf,
    manifest: PlantManifest,
}

impl Corpus {
    fn new(rows: u64) -> Self {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("corpus.csv");
        let rows = rows.to_string();
        ok(brix(&[
            "generate",
            "--rows",
            &rows,
            "--seed",
            "42",
            "--out",
            s(&path),
        ]));
        let manifest = PlantManifest::read(&PlantManifest::path_for(&path)).unwrap();
        Corpus {
            _dir: dir,
            path,
            manifest,
        }
    }

    fn p(&self) -> &str {
        s(&self.path)
    }

    fn email(&self, i: usize) -> &str {
        &self.manifest.planted[i].email
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_corpus_and_manifest() {
    let c = Corpus::new(400);
    assert_eq!(c.manifest.rows, 400);
    assert_eq!(c.manifest.planted.len(), 4);
    let text = std::fs::read_to_string(&c.path).unwrap();
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn auto_and_field_scan_print_identical_rows() {
    let c = Corpus::new(1000);
    ok(brix(&[
        "index",
        c.p(),
        "--key",
        "email:5",
        "--key",
        "phone:7",
    ]));
    let dir = brix::index_store::default_index_dir(&c.path);
    for name in ["rows.brix", "email-c5.brix", "phone-c7.brix"] {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    for i in 0..4 {
        let email = c.email(i);
        let auto = ok(brix(&[
            "query",
            c.p(),
            "--email",
            email,
            "--strategy",
            "auto",
        ]));
        let field = ok(brix(&[
            "query",
            c.p(),
            "--email",
            email,
            "--strategy",
            "field-scan",
        ]));
        let out = stdout(&auto);
        assert_eq!(out, stdout(&field));
        assert_eq!(out.lines().count(), 1);
        assert_eq!(out.trim_end().split(',').nth(5), Some(email));
    }
}

#[test]
fn every_strategy_agrees_on_a_key() {
    let c = Corpus::new(800);
    ok(brix(&["index", c.p(), "--key", "email:5"]));
    let email = c.email(2).to_uppercase();
    let expected = stdout(&ok(brix(&[
        "query",
        c.p(),
        "--email",
        &email,
        "--strategy",
        "field-scan",
    ])));
    assert_eq!(expected.lines().count(), 1);
    for strategy in ["auto", "chunked-scan", "index"] {
        let got = ok(brix(&[
            "query",
            c.p(),
            "--email",
            &email,
            "--strategy",
            strategy,
        ]));
        assert_eq!(stdout(&got), expected, "{strategy}");
    }
}

#[test]
fn row_query_prints_that_row() {
    let c = Corpus::new(500);
    let row = c.manifest.planted[1].row.to_string();
    let scan = ok(brix(&["query", c.p(), "--row", &row]));
    ok(brix(&["index", c.p()]));
    let indexed = ok(brix(&[
        "query",
        c.p(),
        "--row",
        &row,
        "--strategy",
        "index",
    ]));
    assert_eq!(stdout(&scan), stdout(&indexed));
    assert!(stdout(&scan).contains(c.email(1)));
}

#[test]
fn pattern_query_is_a_substring_scan() {
    let c = Corpus::new(300);
    let out = ok(brix(&["query", c.p(), "--pattern", "@plant.example"]));
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn not_found_is_success_with_empty_output() {
    let c = Corpus::new(200);
    let out = ok(brix(&["query", c.p(), "--email", "nobody@nowhere.invalid"]));
    assert!(out.stdout.is_empty());
    let out = ok(brix(&["query", c.p(), "--row", "5000"]));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_2() {
    let c = Corpus::new(100);
    let conflicting = brix(&["query", c.p(), "--row", "3", "--email", "a@b.c"]);
    assert_eq!(conflicting.status.code(), Some(2));
    let missing_target = brix(&["query", c.p()]);
    assert_eq!(missing_target.status.code(), Some(2));
    let bad_strategy = brix(&["query", c.p(), "--row", "3", "--strategy", "grep"]);
    assert_eq!(bad_strategy.status.code(), Some(2));

    let row_zero = brix(&["query", c.p(), "--row", "0"]);
    assert_eq!(row_zero.status.code(), Some(2));
    assert!(
        stderr(&row_zero).starts_with("ERROR usage:"),
        "{}",
        stderr(&row_zero)
    );
}

#[test]
fn operational_errors_exit_1_with_prefix() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = brix(&["query", s(&missing), "--row", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("ERROR io:"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn index_without_row_index_is_unavailable() {
    let c = Corpus::new(100);
    let out = brix(&["query", c.p(), "--email", c.email(0), "--strategy", "index"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).starts_with("ERROR strategy-unavailable:"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn stale_indexes_fall_back_in_auto_and_fail_when_forced() {
    let c = Corpus::new(400);
    ok(brix(&["index", c.p(), "--key", "email:5"]));
    let before = stdout(&ok(brix(&["query", c.p(), "--email", c.email(0)])));

    std::fs::OpenOptions::new()
        .append(true)
        .open(&c.path)
        .and_then(|mut f| std::io::Write::write_all(&mut f, b"late,row\n"))
        .unwrap();

    let forced = brix(&["query", c.p(), "--email", c.email(0), "--strategy", "index"]);
    assert_eq!(forced.status.code(), Some(1));
    assert!(
        stderr(&forced).starts_with("ERROR stale-index:"),
        "{}",
        stderr(&forced)
    );

    let auto = ok(brix(&["query", c.p(), "--email", c.email(0)]));
    assert_eq!(stdout(&auto), before);
    assert!(stderr(&auto).contains("stale"));

    let rebuild_needed = brix(&["index", c.p(), "--key", "email:5"]);
    assert_eq!(rebuild_needed.status.code(), Some(1));
    assert!(stderr(&rebuild_needed).contains("ERROR stale-index:"));
    ok(brix(&["index", c.p(), "--key", "email:5", "--rebuild"]));
    let indexed = ok(brix(&[
        "query",
        c.p(),
        "--email",
        c.email(0),
        "--strategy",
        "index",
    ]));
    assert_eq!(stdout(&indexed), before);
}

#[test]
fn index_dir_comes_from_the_environment() {
    let c = Corpus::new(300);
    let elsewhere = TempDir::new().unwrap();
    let env = [("BRIX_INDEX_DIR", elsewhere.path())];
    ok(brix_env(&["index", c.p(), "--key", "email:5"], &env));
    assert!(elsewhere.path().join("rows.brix").is_file());
    assert!(!brix::index_store::default_index_dir(&c.path).exists());
    let out = ok(brix_env(
        &["query", c.p(), "--email", c.email(3), "--strategy", "index"],
        &env,
    ));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn bench_json_matches_the_report_schema() {
    let c = Corpus::new(2000);
    ok(brix(&["index", c.p(), "--key", "email:5"]));
    let out = ok(brix(&[
        "bench",
        c.p(),
        "--probe",
        "email",
        "--repetitions",
        "1",
        "--warmup",
        "0",
        "--json",
    ]));
    let text = stdout(&out);
    let report: BenchReport = serde_json::from_str(&text).expect("report json");
    assert_eq!(report.probes, ["q1", "q2", "q3", "q4", "invalid"]);
    assert_eq!(report.cells.len(), report.strategies.len() * 5);
    assert_eq!(report.per_strategy_avg.len(), report.strategies.len());
    assert!(report.strategies.contains(&brix::Strategy::IndexLookup));

    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "probe_kind",
        "strategies",
        "probes",
        "cells",
        "per_strategy_avg",
        "environment",
    ] {
        assert!(value.get(key).is_some(), "{key}");
    }
    for cell in value["cells"].as_array().unwrap() {
        for key in [
            "strategy",
            "probe_label",
            "elapsed_s",
            "matches",
            "bytes_scanned",
        ] {
            assert!(cell.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn bench_markdown_has_the_three_tables() {
    let c = Corpus::new(400);
    let out = ok(brix(&[
        "bench",
        c.p(),
        "--probe",
        "row",
        "--strategies",
        "field_scan,chunked_scan",
        "--repetitions",
        "1",
        "--warmup",
        "0",
    ]));
    let text = stdout(&out);
    assert!(text.contains("| Setting | Value |"));
    assert!(text.contains("Time taken to find record using row (seconds)"));
    assert!(text.contains("| Average Time |"));
    assert!(text.contains("Overall benchmark for finding records using row"));
}

#[test]
fn bench_without_manifest_fails() {
    let c = Corpus::new(100);
    std::fs::remove_file(PlantManifest::path_for(&c.path)).unwrap();
    let out = brix(&["bench", c.p()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR io:"), "{}", stderr(&out));
}

#[test]
fn estimate_from_explicit_measurements() {
    let out = ok(brix(&[
        "estimate",
        "--sample-size",
        "262",
        "--sample-mem",
        "285.8",
        "--sample-time",
        "1",
        "--target-size",
        "22118.4",
        "--json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mem = v["est_mem_mb"].as_f64().unwrap();
    assert!((mem - 24_127.63).abs() < 0.01, "{mem}");
    assert!(v["note"].as_str().unwrap().contains("lower bound"));

    let zero = brix(&[
        "estimate",
        "--sample-size",
        "0",
        "--sample-mem",
        "1",
        "--sample-time",
        "1",
        "--target-size",
        "5",
    ]);
    assert_eq!(zero.status.code(), Some(1));
    assert!(stderr(&zero).starts_with("ERROR zero-sample:"));
}

#[test]
fn estimate_by_sampling_a_corpus() {
    let c = Corpus::new(2000);
    let size = std::fs::metadata(&c.path).unwrap().len();
    let out = ok(brix(&["estimate", c.p(), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let sampled = v["sample"]["sample_size_bytes"].as_u64().unwrap();
    assert!(
        sampled >= size / 10 && sampled < size / 10 + 1000,
        "{sampled}"
    );
    assert_eq!(v["estimate"]["target_size_bytes"].as_u64(), Some(size));

    let too_big = (size + 1).to_string();
    let out = brix(&["estimate", c.p(), "--sample-bytes", &too_big]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn inspect_reports_headers_and_freshness() {
    let c = Corpus::new(300);
    ok(brix(&["index", c.p(), "--key", "phone:7"]));
    let out = ok(brix(&["inspect", c.p(), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for e in entries {
        assert_eq!(e["status"], "fresh");
        assert_eq!(e["header"]["entry_count"], 300);
    }

    let dir = brix::index_store::default_index_dir(&c.path);
    let text = stdout(&ok(brix(&["inspect", s(&dir.join("phone-c7.brix"))])));
    assert!(text.contains("kind: key (phone, column 7)"), "{text}");
    assert!(text.contains("status: fresh"));

    std::fs::write(&c.path, "changed\n").unwrap();
    let text = stdout(&ok(brix(&["inspect", s(&dir)])));
    assert_eq!(text.matches("status: stale").count(), 2, "{text}");
}
