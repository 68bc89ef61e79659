use std::path::Path;
use std::process::{Command, Output};

fn ladder(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ladder"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LADDER_LOG")
        .output()
        .expect("run ladder")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn spec(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("competition.json")).unwrap()).unwrap()
}

fn event_count(dir: &Path) -> usize {
    std::fs::read_to_string(dir.join("events.jsonl")).unwrap().lines().count()
}

#[test]
fn init_materializes_the_split() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ladder(&["init", "c", "--n-total", "12000", "--public-fraction", "0.3", "--seed", "1"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = spec(&tmp.path().join("c"));
    assert_eq!(s["public"].as_array().unwrap().len(), 3600);
    assert_eq!(s["private"].as_array().unwrap().len(), 8400);
    assert_eq!(s["split_seed"], 1);
    assert_eq!(event_count(&tmp.path().join("c")), 0);
}

#[test]
fn parameter_free_spec_has_no_step() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ladder(&["init", "c", "--mechanism", "ladder-pf", "--seed", "1"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(spec(&tmp.path().join("c"))["mechanism"], serde_json::json!({"kind": "ladder-pf"}));

    let o = ladder(&["init", "d", "--mechanism", "ladder-pf", "--eta", "0.1", "--seed", "1"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn reinit_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&ladder(&["init", "c", "--seed", "1"], tmp.path())), 0);
    let o = ladder(&["init", "c", "--seed", "2"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--force"), "{}", stderr(&o));
    assert_eq!(code(&ladder(&["init", "c", "--seed", "2", "--force"], tmp.path())), 0);
    assert_eq!(spec(&tmp.path().join("c"))["split_seed"], 2);
}

#[test]
fn submit_resubmit_and_reject() {
    let tmp = tempfile::tempdir().unwrap();
    let truth: String = (0..20).map(|i| format!("{}\n", i % 2)).collect();
    std::fs::write(tmp.path().join("truth.txt"), &truth).unwrap();
    let o = ladder(
        &["init", "c", "--n-total", "20", "--public-fraction", "0.5", "--mechanism", "ladder:0.01", "--truth", "truth.txt", "--seed", "3"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tmp.path().join("c");
    let s = spec(&dir);
    let public: Vec<usize> = s["public"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();

    // all zeros: wrong exactly on the odd examples of the public split
    std::fs::write(tmp.path().join("zeros.csv"), "0\n".repeat(20)).unwrap();
    let wrong = public.iter().filter(|&&i| i % 2 == 1).count() as f64;
    let want = (wrong / 10.0 / 0.01).round() * 0.01;

    let first = ladder(&["submit", "c", "--team", "t", "zeros.csv"], tmp.path());
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let score: f64 = stdout(&first).trim().parse().unwrap();
    assert!((score - want).abs() < 1e-12, "{score} vs {want}");

    let again = ladder(&["submit", "c", "--team", "t", "zeros.csv"], tmp.path());
    assert_eq!(stdout(&again), stdout(&first));
    assert_eq!(event_count(&dir), 2);

    std::fs::write(tmp.path().join("short.csv"), "0\n1\n").unwrap();
    let short = ladder(&["submit", "c", "--team", "t", "short.csv"], tmp.path());
    assert_eq!(code(&short), 2);
    assert_eq!(event_count(&dir), 2);

    std::fs::write(tmp.path().join("bad.csv"), format!("0\n0\nmaybe\n{}", "0\n".repeat(17))).unwrap();
    let bad = ladder(&["submit", "c", "--team", "t", "bad.csv"], tmp.path());
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("line 3"), "{}", stderr(&bad));
    assert_eq!(event_count(&dir), 2);

    let sealed = ladder(&["leaderboard", "c", "--board", "private"], tmp.path());
    assert_eq!(code(&sealed), 2);
    assert_eq!(code(&ladder(&["close", "c"], tmp.path())), 0);
    let board = ladder(&["leaderboard", "c", "--board", "private"], tmp.path());
    let entries: serde_json::Value = serde_json::from_str(&stdout(&board)).unwrap();
    assert_eq!(entries[0]["team"], "t");
    assert_eq!(entries[0]["submissions"], 2);
}

#[test]
fn boosting_reports_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["experiment", "--boosting", "--n", "1000", "--N", "3000", "--k", "60", "--reps", "2", "--seed", "9", "--out", out]
    };
    assert_eq!(code(&ladder(&args("a"), tmp.path())), 0);
    assert_eq!(code(&ladder(&args("b"), tmp.path())), 0);
    let read = |p: &str| std::fs::read(tmp.path().join(p)).unwrap();
    assert_eq!(read("a/boosting.csv"), read("b/boosting.csv"));

    let strip = |p: &str| {
        let mut v: serde_json::Value = serde_json::from_slice(&read(p)).unwrap();
        v.as_object_mut().unwrap().remove("volatile");
        v
    };
    assert_eq!(strip("a/boosting.json"), strip("b/boosting.json"));
    assert_eq!(strip("a/boosting.json")["seed"], 9);

    let csv = String::from_utf8(read("a/boosting.csv")).unwrap();
    // header plus 3 settings x 2 reps x 60 steps
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 60);
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("ladder.toml"),
        "seed = 9\n[boosting]\nn = 1000\nN = 3000\nk = 60\nreps = 2\n",
    )
    .unwrap();
    let from_cfg = ladder(&["experiment", "--boosting", "--config", "ladder.toml"], tmp.path());
    let from_flags = ladder(
        &["experiment", "--boosting", "--n", "1000", "--N", "3000", "--k", "60", "--reps", "2", "--seed", "9"],
        tmp.path(),
    );
    assert_eq!(code(&from_cfg), 0, "{}", stderr(&from_cfg));
    assert_eq!(from_cfg.stdout, from_flags.stdout);

    std::fs::write(tmp.path().join("bad.toml"), "[boosting]\nk = \"lots\"\n").unwrap();
    let bad = ladder(&["experiment", "--boosting", "--config", "bad.toml", "--seed", "1"], tmp.path());
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("boosting.k"), "{}", stderr(&bad));
}

#[test]
fn invalid_flags_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ladder(&["experiment", "--boosting", "--n", "5000", "--N", "4000", "--seed", "1"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--n"), "{}", stderr(&o));
    assert_eq!(code(&ladder(&["experiment", "--seed", "1"], tmp.path())), 2);
    assert_eq!(code(&ladder(&["init", "c", "--mechanism", "holdout"], tmp.path())), 2);
    assert_eq!(code(&ladder(&["submit", "missing", "--team", "t", "x.csv"], tmp.path())), 1);
}

#[test]
fn generated_seed_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ladder(&["fixtures", "losses", "--n", "10", "--rates", "0.5", "--out", "o"], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("(generated)"));
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("o/loss-fixture.json")).unwrap()).unwrap();
    assert!(side["seed"].is_u64());
}

#[test]
fn planted_significance_flags_planted_ranks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ladder(&["fixtures", "significance", "--seed", "5", "--out", "f"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = ladder(&["significance", "--losses", "f/significance-fixture.csv", "--top", "10"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let flagged: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .filter(|l| l.contains(",true,"))
        .map(|l| l.split(',').next().unwrap().to_owned())
        .collect();
    assert_eq!(flagged, ["8", "9"]);
}

#[test]
fn replay_of_a_one_team_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ladder(
        &["fixtures", "competition", "fx", "--teams", "1", "--submissions", "5", "--n-total", "400", "--seed", "4"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for out in ["r1", "r2"] {
        let o = ladder(&["replay", "fx", "--mechanism", "ladder-pf", "--top", "10", "--out", out], tmp.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let read = |p: &str| std::fs::read(tmp.path().join(p)).unwrap();
    for f in ["replay.csv", "replay-boards.csv", "replay-inversions.csv"] {
        assert_eq!(read(&format!("r1/{f}")), read(&format!("r2/{f}")), "{f}");
    }
    // a single team is ranked first on every board, so nothing moves
    assert_eq!(String::from_utf8(read("r1/replay.csv")).unwrap(), "");
    let boards = String::from_utf8(read("r1/replay-boards.csv")).unwrap();
    assert_eq!(boards.lines().count(), 1 + 4);
}
