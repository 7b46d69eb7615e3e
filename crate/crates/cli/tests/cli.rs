use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nea"))
        .args(args)
        .env_remove("NEA_SEED")
        .output()
        .expect("nea runs")
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mask() -> String {
    root().join("scenarios/mask/scenario.toml").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const HEADER: &str = "tick,agent,pleasure,arousal,norm_id,relevance,action,variant,society_pleasure,society_arousal";

#[test]
fn check_accepts_valid_and_rejects_bad_programs() {
    let ok = root().join("scenarios/mask/prof_rebel.nea");
    let o = nea(&["check", ok.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.nea");
    std::fs::write(&bad, "norms__: { norm(\"permission\", \"np__x\", 0, 1, \"ALL\", [0,0]) }.\n").unwrap();
    let o = nea(&["check", ok.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.nea:1:"), "{err}");
}

#[test]
fn zero_ticks_writes_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = nea(&["run", &mask(), "--ticks", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv, format!("{HEADER}\n"));
    assert_eq!(std::fs::read_to_string(dir.path().join("trace.txt")).unwrap(), "");
}

#[test]
fn run_writes_one_row_per_agent_and_tick_and_repeats_exactly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m = mask();
    for (d, extra) in [(&a, None), (&b, Some("--parallel"))] {
        let mut args = vec!["run", m.as_str(), "--ticks", "40", "--seed", "11"];
        args.extend(["--trace-format", "structured", "--out", d.path().to_str().unwrap()]);
        args.extend(extra);
        let o = nea(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("ticks: 40  seed: 11"));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let csv = String::from_utf8(read(&a, "metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 40 * 5);
    assert_eq!(read(&a, "metrics.csv"), read(&b, "metrics.csv"));
    assert_eq!(read(&a, "trace.jsonl"), read(&b, "trace.jsonl"));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nea"))
        .args(["run", &mask(), "--ticks", "1", "--out", dir.path().to_str().unwrap()])
        .env("NEA_SEED", "99")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("seed: 99"), "{}", stdout(&o));
}

#[test]
fn bad_knobs_and_bad_paths_are_invalid() {
    let o = nea(&["run", &mask(), "--delta", "-1", "--out", "/nonexistent"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nea(&["run", "/no/such/scenario.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nea(&["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(nea(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = nea(&["run", &mask(), "--ticks", "1", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn sweep_rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_full_fraction_with_high_relevance_never_breaks() {
    let o = nea(&["sweep", "--reb", "0,0.25,0.5,0.75,1", "--frac", "1", "--relevance", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = sweep_rows(&o);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.last().unwrap() == "false"), "{}", stdout(&o));
}

#[test]
fn sweep_with_an_empty_axis_prints_only_the_header() {
    let o = nea(&["sweep", "--reb", "--frac", "1", "--relevance", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn shipped_calibration_lets_the_rebel_break_first() {
    let dir = tempfile::tempdir().unwrap();
    let o = nea(&["sweep", &mask(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = sweep_rows(&o);
    let reb_of = |r: &Vec<String>| r[0].parse::<f64>().unwrap();
    let rebel = rows.iter().find(|r| reb_of(r) == 0.8).expect("rebel row");
    assert_eq!(rebel.last().unwrap(), "true");
    let conformist = rows.iter().find(|r| reb_of(r) == 0.2).expect("conformist row");
    assert_eq!(conformist.last().unwrap(), "false");
    assert_eq!(std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap(), stdout(&o));
}
