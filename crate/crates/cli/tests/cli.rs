use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use weylqw_core::lattice::step_vector;
use weylqw_core::walk::transition_matrix;
use weylqw_core::wire::{ExactAmplitude, PropagatorRecord};
use weylqw_core::{propagator_closed_form, Amplitude, Chirality, Site, SpinMatrix, StepIndex};

fn weylqw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylqw")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn record(out: &Output) -> PropagatorRecord {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(out)).unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const HALF_PLUS_HALF_I: &str = r#"{"re": "1", "im": "1", "log2_den": 1}"#;

fn delta_json(up: &str, down: &str) -> String {
    format!(r#"[{{"x": [0, 0, 0], "up": {up}, "down": {down}}}]"#)
}

#[test]
fn corner_propagator_is_the_single_path() {
    // Amplitude moves by -h each step, so two h_{-1} steps are the only way
    // from 0 to (2,2,2).
    let l = StepIndex::new(-1).unwrap();
    assert_eq!(step_vector(l), [-1, -1, -1]);
    let a = transition_matrix(l, Chirality::Plus);
    let expected = &a * &a;
    let rec = record(&weylqw(&["propagate", "--from", "0,0,0", "--to", "2,2,2", "--t", "2", "--chi", "+"]));
    let p = rec.to_propagator().unwrap();
    assert_eq!(p.matrix, expected);
    assert_eq!(rec.entries[0][1], ExactAmplitude { re: "0".into(), im: "-1".into(), log2_den: 3 });
    assert_eq!(rec.entries[1][1], ExactAmplitude { re: "0".into(), im: "1".into(), log2_den: 3 });
    assert_eq!(rec.float_view[1][1], [0.0, 0.125]);
}

#[test]
fn zero_steps_give_the_identity() {
    let rec = record(&weylqw(&["propagate", "--from", "0,0,0", "--to", "0,0,0", "--t", "0"]));
    assert_eq!(rec.to_propagator().unwrap().matrix, SpinMatrix::identity());
}

#[test]
fn mixed_parity_site_is_a_usage_error() {
    let out = weylqw(&["propagate", "--from", "0,0,0", "--to", "1,0,0", "--t", "1"]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("parit"));
}

#[test]
fn unreachable_sites_are_zero_or_strict_failures() {
    let rec = record(&weylqw(&["propagate", "--from", "0,0,0", "--to", "4,0,0", "--t", "1"]));
    assert!(rec.to_propagator().unwrap().is_zero());
    let strict = weylqw(&["propagate", "--from", "0,0,0", "--to", "4,0,0", "--t", "1", "--strict"]);
    assert_eq!(code(&strict), 2);
    assert!(strict.stdout.is_empty());
}

#[test]
fn negative_coordinates_and_engines_agree() {
    for t in ["3", "4"] {
        let from = "-3,1,-1";
        let to = if t == "3" { "-2,2,2" } else { "-1,-1,1" };
        let records: Vec<PropagatorRecord> = ["closed-form", "brute-force", "step"]
            .iter()
            .map(|e| record(&weylqw(&["propagate", "--from", from, "--to", to, "--t", t, "--chi", "-", "--engine", e])))
            .collect();
        assert!(!records[0].to_propagator().unwrap().is_zero());
        assert_eq!(records[0], records[1]);
        assert_eq!(records[1], records[2]);
        let direct = propagator_closed_form(
            &from.parse::<Site>().unwrap(),
            &to.parse::<Site>().unwrap(),
            t.parse().unwrap(),
            Chirality::Minus,
        );
        assert_eq!(records[0].to_propagator().unwrap(), direct);
    }
}

#[test]
fn brute_force_respects_the_budget() {
    let out = weylqw(&[
        "propagate", "--from", "0,0,0", "--to", "0,0,0", "--t", "6", "--engine", "brute-force", "--budget", "10",
    ]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn propagate_csv_has_a_header_and_one_row() {
    let out = weylqw(&["propagate", "--from", "0,0,0", "--to", "2,2,2", "--t", "2", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("t,chirality,from1"));
    assert!(lines[1].starts_with("2,+,0,0,0,2,2,2,"));
}

#[test]
fn one_step_from_a_point_reaches_all_eight_neighbours() {
    let dir = TempDir::new().unwrap();
    let state = write(&dir, "delta.json", &delta_json(HALF_PLUS_HALF_I, HALF_PLUS_HALF_I));
    let out = weylqw(&["evolve", "--state", &state, "--t", "1"]);
    assert_eq!(code(&out), 0);
    let rows: Vec<Value> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows.len(), 8);
    let sites: BTreeSet<[i64; 3]> = rows.iter().map(|r| serde_json::from_value(r["x"].clone()).unwrap()).collect();
    let expected: BTreeSet<[i64; 3]> = StepIndex::ALL.iter().map(|&l| step_vector(l).map(|v| -v)).collect();
    assert_eq!(sites, expected);
    let mut exact = Amplitude::zero();
    let mut float = 0.0;
    for r in &rows {
        let p: ExactAmplitude = serde_json::from_value(r["probability"].clone()).unwrap();
        exact += &Amplitude::try_from(&p).unwrap();
        float += r["probability_float"].as_f64().unwrap();
    }
    assert_eq!(exact, Amplitude::one());
    assert!((float - 1.0).abs() < 1e-12);
}

#[test]
fn spin_up_point_source_reaches_half_the_neighbours() {
    let dir = TempDir::new().unwrap();
    let zero = r#"{"re": "0", "im": "0", "log2_den": 0}"#;
    let one = r#"{"re": "1", "im": "0", "log2_den": 0}"#;
    let state = write(&dir, "up.json", &delta_json(one, zero));
    let out = weylqw(&["evolve", "--state", &state, "--t", "1", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,up_re,up_im,down_re,down_im,probability");
    let total: f64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert_eq!(text.lines().count() - 1, 4);
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn zero_steps_echo_the_input() {
    let dir = TempDir::new().unwrap();
    let input = format!(
        r#"[{{"x": [1, 1, 1], "up": {HALF_PLUS_HALF_I}, "down": {{"re": "0", "im": "0", "log2_den": 0}}}},
            {{"x": [-3, 1, 5], "up": {{"re": "0", "im": "0", "log2_den": 0}}, "down": {HALF_PLUS_HALF_I}}}]"#
    );
    let state = write(&dir, "s.json", &input);
    let out = weylqw(&["evolve", "--state", &state, "--t", "0"]);
    let rows: Vec<Value> = serde_json::from_str(&stdout(&out)).unwrap();
    let echoed: Vec<Value> =
        rows.iter().map(|r| serde_json::json!({"x": r["x"], "up": r["up"], "down": r["down"]})).collect();
    let mut original: Vec<Value> = serde_json::from_str(&input).unwrap();
    original.sort_by_key(|v| v["x"].to_string());
    let mut echoed_sorted = echoed.clone();
    echoed_sorted.sort_by_key(|v| v["x"].to_string());
    assert_eq!(echoed_sorted, original);
}

#[test]
fn step_and_convolve_write_identical_files() {
    let dir = TempDir::new().unwrap();
    let input = r#"[
        {"x": [0, 0, 0], "up": {"re": "3", "im": "-1", "log2_den": 3}, "down": {"re": "1", "im": "2", "log2_den": 3}},
        {"x": [2, -4, 0], "up": {"re": "0", "im": "1", "log2_den": 2}, "down": {"re": "-1", "im": "0", "log2_den": 4}},
        {"x": [-2, 2, 6], "up": {"re": "5", "im": "0", "log2_den": 5}, "down": {"re": "0", "im": "0", "log2_den": 0}}
    ]"#;
    let state = write(&dir, "s.json", input);
    for (format, ext) in [("json", "json"), ("csv", "csv")] {
        let paths: Vec<_> = ["step", "convolve"]
            .iter()
            .map(|engine| {
                let path = dir.path().join(format!("{engine}.{ext}"));
                let out = weylqw(&[
                    "evolve",
                    "--state",
                    &state,
                    "--t",
                    "7",
                    "--chi",
                    "-",
                    "--engine",
                    engine,
                    "--format",
                    format,
                    "--out",
                    path.to_str().unwrap(),
                ]);
                assert_eq!(code(&out), 0);
                path
            })
            .collect();
        assert_eq!(read(&paths[0]), read(&paths[1]), "{format}");
    }
}

#[test]
fn bad_state_files_exit_65_and_missing_files_74() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [
        ("truncated.json", "[{"),
        (
            "parity.json",
            r#"[{"x": [1, 0, 0], "up": {"re": "1", "im": "0", "log2_den": 0}, "down": {"re": "0", "im": "0", "log2_den": 0}}]"#,
        ),
        (
            "number.json",
            r#"[{"x": [0, 0, 0], "up": {"re": "one", "im": "0", "log2_den": 0}, "down": {"re": "0", "im": "0", "log2_den": 0}}]"#,
        ),
    ] {
        let state = write(&dir, name, body);
        assert_eq!(code(&weylqw(&["evolve", "--state", &state, "--t", "1"])), 65, "{name}");
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&weylqw(&["evolve", "--state", missing.to_str().unwrap(), "--t", "1"])), 74);
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(code(&weylqw(&["propagate", "--frm", "0,0,0"])), 64);
    assert_eq!(code(&weylqw(&["propagate", "--from", "0,0,0", "--to", "0,0,0", "--t", "1", "--chi", "x"])), 64);
    assert_eq!(code(&weylqw(&["--help"])), 0);
}

#[test]
fn cone_lists_every_source_with_counts() {
    let out = weylqw(&["cone", "--at", "1,-1,3", "--t", "3", "--chi", "-"]);
    assert_eq!(code(&out), 0);
    let rows: Vec<Value> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows.len(), 64);
    let at: Site = "1,-1,3".parse().unwrap();
    for r in &rows {
        let rec: PropagatorRecord = serde_json::from_value(r.clone()).unwrap();
        assert_eq!(rec.to, [1, -1, 3]);
        let from = Site::try_from(rec.from).unwrap();
        let d = at.displacement_from(&from);
        let k: [u64; 3] = serde_json::from_value(r["k"].clone()).unwrap();
        assert_eq!(k.map(|v| v as i64), [(3 + d[2]) / 2, (3 - d[0]) / 2, (3 - d[1]) / 2]);
        assert_eq!(rec.to_propagator().unwrap(), propagator_closed_form(&from, &at, 3, Chirality::Minus));
    }
}

#[test]
fn cone_output_is_independent_of_jobs_and_engine() {
    let dir = TempDir::new().unwrap();
    let mut bodies = Vec::new();
    for (jobs, engine) in [("1", "closed-form"), ("3", "closed-form"), ("2", "step"), ("1", "brute-force")] {
        let path = dir.path().join(format!("cone-{jobs}-{engine}.json"));
        let out = weylqw(&["--jobs", jobs, "cone", "--t", "5", "--engine", engine, "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        bodies.push(read(&path));
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn verify_passes_at_full_scale() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let out = weylqw(&["verify", "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    let reports: Vec<Value> = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(reports.len(), 9);
    assert!(reports.iter().any(|r| r["suite"] == "unitarity" && r["passed"] == true));
}

#[test]
fn single_suite_selection() {
    let out = weylqw(&["verify", "--suite", "unitarity", "--quick"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS  unitarity"));
    assert_eq!(code(&weylqw(&["verify", "--suite", "no-such-suite"])), 64);
}

#[test]
fn injected_fault_fails_with_a_counterexample() {
    let out =
        weylqw(&["verify", "--quick", "--suite", "triple-engine", "--suite", "weight-split", "--inject-fault", "-3"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("FAIL  triple-engine")));
    assert!(text.lines().any(|l| l.starts_with("PASS  weight-split")));
    let cx = text.lines().find_map(|l| l.strip_prefix("counterexample: ")).expect("counterexample line");
    let value: Value = serde_json::from_str(cx).unwrap();
    assert!(value.is_object());
}

fn bench_rows(args: &[&str]) -> Vec<Value> {
    let out = weylqw(args);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    report["rows"].as_array().unwrap().clone()
}

#[test]
fn bench_covers_all_engines_at_small_t() {
    let rows = bench_rows(&["bench", "--t-max", "8"]);
    let engines: BTreeSet<&str> = rows.iter().map(|r| r["engine"].as_str().unwrap()).collect();
    assert_eq!(engines, BTreeSet::from(["brute-force", "closed-form", "step"]));
    for t in 0..=8 {
        assert_eq!(rows.iter().filter(|r| r["t"] == t).count(), 3, "t={t}");
    }
}

#[test]
fn bench_gates_expensive_engines_by_budget() {
    let rows = bench_rows(&["bench", "--t-max", "100", "--budget", "100000"]);
    let t_of = |engine: &str| -> Vec<u64> {
        rows.iter().filter(|r| r["engine"] == engine).map(|r| r["t"].as_u64().unwrap()).collect()
    };
    assert_eq!(t_of("closed-form"), (0..=100).collect::<Vec<_>>());
    assert!(t_of("brute-force").iter().all(|&t| t < 20));
    assert!(t_of("step").iter().all(|&t| t < 30));
    assert!(rows.iter().filter(|r| r["t"].as_u64().unwrap() >= 30).all(|r| r["engine"] == "closed-form"));
}

#[test]
fn bench_values_are_deterministic_per_seed() {
    let strip = |rows: Vec<Value>| -> Vec<Value> {
        rows.into_iter()
            .map(|mut r| {
                r.as_object_mut().unwrap().remove("seconds");
                r
            })
            .collect()
    };
    let a = strip(bench_rows(&["bench", "--t-max", "12", "--seed", "9"]));
    let b = strip(bench_rows(&["bench", "--t-max", "12", "--seed", "9"]));
    assert_eq!(a, b);
}
