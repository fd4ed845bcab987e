use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIO: &str =
    "init 10 20 30\nat 0 join 15\nat 1 leave 20\nat 2 search 30\nstop quiescence\n";

fn churnline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_churnline"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario_file(dir: &TempDir) -> String {
    let p = dir.path().join("s.txt");
    fs::write(&p, SCENARIO).unwrap();
    p.to_string_lossy().into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn run_reports_every_check() {
    let dir = TempDir::new().unwrap();
    let s = scenario_file(&dir);
    let o = churnline(&["run", "--seed", "7", "--scenario", &s, "--check", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 13);
    assert!(
        out.lines().all(|l| l.split(' ').nth(1) == Some("pass")),
        "{out}"
    );
}

#[test]
fn same_seed_gives_identical_trace_bytes() {
    let dir = TempDir::new().unwrap();
    let s = scenario_file(&dir);
    let (a, b) = (path(&dir, "a.trace"), path(&dir, "b.trace"));
    for t in [&a, &b] {
        let o = churnline(&[
            "run",
            "--seed",
            "3",
            "--scenario",
            &s,
            "--mode",
            "skiplist",
            "--trace",
            t,
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn artifacts_are_written_and_checkable() {
    let dir = TempDir::new().unwrap();
    let s = scenario_file(&dir);
    let (t, snap, stats) = (path(&dir, "t"), path(&dir, "snap"), path(&dir, "stats"));
    let o = churnline(&[
        "run",
        "--scenario",
        &s,
        "--trace",
        &t,
        "--snapshot",
        &snap,
        "--stats",
        &stats,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let stats = fs::read_to_string(&stats).unwrap();
    assert!(stats.lines().any(|l| l == "satisfied_joins\t1"), "{stats}");
    assert!(stats.lines().all(|l| l.split('\t').count() == 2));

    let o = churnline(&["check", "--trace", &t, "--snapshot", &snap]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = churnline(&["check", "--trace", &t, "--check", "linearization"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("linearization nyv"));
}

#[test]
fn failed_check_exits_one() {
    let dir = TempDir::new().unwrap();
    let s = path(&dir, "cut.txt");
    fs::write(&s, "init 10 20 30\nat 0 adversarial-exit 20\n").unwrap();
    let o = churnline(&["run", "--scenario", &s, "--check", "partition"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("partition fail"));
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(churnline(&["run", "--nonsense"]).status.code(), Some(2));
    assert_eq!(churnline(&["run"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let s = scenario_file(&dir);
    assert_eq!(
        churnline(&["run", "--scenario", &s, "--check", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        churnline(&["run", "--scenario", &s, "--mode", "ring"])
            .status
            .code(),
        Some(2)
    );
    let bad = path(&dir, "bad.txt");
    fs::write(&bad, "init 10\nat 5 join 15\nat 3 leave 10\n").unwrap();
    let o = churnline(&["run", "--scenario", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn partition_demo_passes_as_expected() {
    let o = churnline(&["run", "--demo", "theorem1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("adversarial-exit partition fail"), "{out}");
    assert!(out.contains("cooperative-leave partition pass"), "{out}");
}

#[test]
fn starvation_demo_shows_fairness_failure() {
    let dir = TempDir::new().unwrap();
    let t = path(&dir, "t");
    let o = churnline(&["run", "--demo", "theorem2", "--trace", &t]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.lines().any(|l| l.starts_with("request_progress pass")),
        "{out}"
    );
    assert!(
        out.lines().any(|l| l.starts_with("fair_request fail")),
        "{out}"
    );
    assert!(out.contains("expected-pattern yes"));
    assert!(Path::new(&t).exists());
}

#[test]
fn batch_writes_one_trace_per_seed() {
    let dir = TempDir::new().unwrap();
    let s = scenario_file(&dir);
    let t = path(&dir, "t");
    let o = churnline(&[
        "run",
        "--scenario",
        &s,
        "--batch",
        "3",
        "--seed",
        "5",
        "--trace",
        &t,
        "--check",
        "all",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
    for seed in 5..8 {
        assert!(Path::new(&format!("{t}.{seed}")).exists());
    }
}

#[test]
fn gen_is_reproducible_and_runnable() {
    let dir = TempDir::new().unwrap();
    let g = path(&dir, "g.txt");
    let args = [
        "gen",
        "--seed",
        "4",
        "--size",
        "10",
        "--requests",
        "30",
        "--search-rate",
        "0.5",
    ];
    let a = stdout(&churnline(&args));
    assert_eq!(a, stdout(&churnline(&args)));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", &g]);
    assert_eq!(churnline(&with_out).status.code(), Some(0));
    assert_eq!(fs::read_to_string(&g).unwrap(), a);
    let o = churnline(&["run", "--scenario", &g, "--check", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
