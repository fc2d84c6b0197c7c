use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchsynth"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn dry_run_writes_resolved_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["synth", "--dry-run", "--out-dir", "r"]);
    assert!(o.status.success(), "{o:?}");
    let m = manifest(&tmp.path().join("r"));
    assert_eq!(m["format"], "sketchsynth/manifest-v1");
    let c = &m["config"];
    assert_eq!(c["method"], "sa");
    assert_eq!(c["sa"]["beta"], 200.0);
    assert_eq!(c["pipeline"]["psi_matches"], 1000);
    assert!(!tmp.path().join("r/trajectory.csv").exists());
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["synth", "--dry-run", "--alpha", "-1"][..],
        &["synth", "--dry-run", "--mode", "nonsense"],
        &["synth", "--dry-run", "--budget-seconds", "5", "--budget-iterations", "5"],
        &["eval", "--a", "random", "--difficulty", "hard"],
    ] {
        let o = run(tmp.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "beta = 50.0\nalpha = 2.0\nmethod = \"uct\"\n").unwrap();
    let o = run(tmp.path(), &["synth", "--dry-run", "--config", "run.toml", "--beta", "200", "--out-dir", "r"]);
    assert!(o.status.success(), "{o:?}");
    let c = &manifest(&tmp.path().join("r"))["config"];
    assert_eq!(c["sa"]["beta"], 200.0);
    assert_eq!(c["sa"]["alpha"], 2.0);
    assert_eq!(c["method"], "uct");

    fs::write(tmp.path().join("bad.toml"), "gamma = 1\n").unwrap();
    let o = run(tmp.path(), &["synth", "--dry-run", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_prints_a_win_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["eval", "--a", "random", "--b", "ga", "-n", "300", "--workers", "1"]);
    assert!(o.status.success(), "{o:?}");
    let rate: f64 = stdout(&o).trim().parse().unwrap();
    assert!(rate < 0.1, "random beat ga at {rate}");
}

#[test]
fn program_files_play_like_the_builtin() {
    let tmp = tempfile::tempdir().unwrap();
    let program = sketchsynth::dsl::ga_pair().to_string();
    fs::write(tmp.path().join("ga.txt"), program).unwrap();
    let args =
        |a: &str| ["eval", "--a", a, "--b", "random", "-n", "200", "--seed", "3", "--workers", "1"].map(String::from);
    let from_file = stdout(&bin().current_dir(tmp.path()).args(args("ga.txt")).output().unwrap());
    let builtin = stdout(&bin().current_dir(tmp.path()).args(args("ga")).output().unwrap());
    assert_eq!(from_file, builtin);
}

#[test]
fn datasets_and_traces_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let o =
        run(tmp.path(), &["dataset", "--out", "d.jsonl", "--traces", "t.jsonl", "--matches", "4", "--workers", "1"]);
    assert!(o.status.success(), "{o:?}");
    assert!(tmp.path().join("d.jsonl.manifest.json").exists());
    for f in ["d.jsonl", "t.jsonl"] {
        let o = run(tmp.path(), &["replay", f]);
        assert!(o.status.success(), "{f}: {o:?}");
    }

    fs::write(tmp.path().join("junk.jsonl"), "not json\n").unwrap();
    assert_eq!(run(tmp.path(), &["replay", "junk.jsonl"]).status.code(), Some(3));
    assert_eq!(run(tmp.path(), &["replay", "missing.jsonl"]).status.code(), Some(3));
}

#[test]
fn record_reads_choices_from_stdin() {
    let tmp = tempfile::tempdir().unwrap();
    let mut child = bin()
        .current_dir(tmp.path())
        .args(["record", "--matches", "1", "--out", "h.jsonl"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    {
        let mut stdin = child.stdin.take().unwrap();
        // An invalid answer first; the prompt repeats.
        let _ = stdin.write_all(b"banana\n");
        for _ in 0..5000 {
            if stdin.write_all(b"0\n").is_err() {
                break;
            }
        }
    }
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{o:?}");
    assert_eq!(run(tmp.path(), &["replay", "h.jsonl"]).status.code(), Some(0));

    let mut child = bin()
        .current_dir(tmp.path())
        .args(["record", "--out", "short.jsonl"])
        .stdin(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0\n").unwrap();
    assert_eq!(child.wait().unwrap().code(), Some(3));
    assert!(!tmp.path().join("short.jsonl").exists());
}

fn synth_args(out: &str) -> Vec<String> {
    [
        "synth",
        "--budget-iterations",
        "40",
        "--matches",
        "20",
        "--sketch-matches",
        "10",
        "--seed",
        "11",
        "--workers",
        "2",
        "--checkpoint-every",
        "10",
        "--out-dir",
        out,
    ]
    .map(String::from)
    .to_vec()
}

#[test]
fn iteration_budgets_reproduce_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = bin().current_dir(tmp.path()).args(synth_args(out)).output().unwrap();
        assert!(o.status.success(), "{o:?}");
    }
    for f in ["trajectory.csv", "best.sexpr", "checkpoint.sexpr", "summary.json"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let csv = fs::read_to_string(tmp.path().join("a/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);

    // The best program is a valid strategy file.
    let o = run(tmp.path(), &["eval", "--a", "a/best.sexpr", "-n", "20", "--workers", "1"]);
    assert!(o.status.success(), "{o:?}");
}

#[test]
fn uct_runs_write_tree_statistics() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = synth_args("u");
    args.extend(["--method", "uct", "--rollout-iterations", "5", "--mode", "sketch-a"].map(String::from));
    let o = bin().current_dir(tmp.path()).args(args).output().unwrap();
    assert!(o.status.success(), "{o:?}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("u/summary.json")).unwrap()).unwrap();
    let stats = summary["tree_stats"].as_array().unwrap();
    assert_eq!(stats.len(), 2);
    assert!(stats.iter().all(|s| s["nodes"].as_u64().unwrap() > 0));
}

#[test]
fn report_best_is_a_running_maximum() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().current_dir(tmp.path()).args(synth_args("a")).output().unwrap();
    assert!(o.status.success());
    let o = run(tmp.path(), &["report", "a/trajectory.csv", "--out", "report.csv"]);
    assert!(o.status.success(), "{o:?}");
    let mut reader = csv::Reader::from_path(tmp.path().join("report.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["run", "iteration", "elapsed_s", "phase", "psi_score", "best_psi"]
    );
    let mut last = f64::NEG_INFINITY;
    let mut rows = 0;
    for r in reader.records() {
        let r = r.unwrap();
        assert_eq!(&r[0], "a");
        let best: f64 = r[5].parse().unwrap();
        assert!(best >= last);
        last = best;
        rows += 1;
    }
    assert_eq!(rows, 40);
}
