use std::path::Path;
use std::process::{Command, Output};

fn inpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inpg")).args(args).output().unwrap()
}

fn out_str(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_game_and_summary_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = inpg(&["generate", "--agents", "2", "--actions", "3", "--seed", "7", "--kind", "general", "--out", s(d)]);
        assert!(o.status.success(), "{}", out_str(&o));
    }
    let name = "game-general-n2-a3-s7.pgame";
    let fa = std::fs::read(a.join(name)).unwrap();
    assert_eq!(fa, std::fs::read(b.join(name)).unwrap());
    let game = inpg::game::read_game(&a.join(name)).unwrap();
    assert_eq!(game.num_entries(), 9);
    let txt = std::fs::read_to_string(a.join("game-general-n2-a3-s7.txt")).unwrap();
    assert!(txt.contains("phi_max"));
}

#[test]
fn generate_minimal_and_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = inpg(&["generate", "--agents", "1", "--actions", "1", "--seed", "0", "--out", s(dir.path())]);
    assert!(o.status.success());
    let g = inpg::game::read_game(&dir.path().join("game-identical-n1-a1-s0.pgame")).unwrap();
    assert_eq!(g.num_entries(), 1);
    let o = inpg(&["generate", "--agents", "9", "--actions", "20", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out_str(&o).contains("20^9"));
}

#[test]
fn zero_iterations_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = inpg(&["run", "--agents", "2", "--actions", "3", "--iters", "0", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", out_str(&o));
    let csv = std::fs::read_to_string(dir.path().join("npg_tau1e-2_seed0.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iter,phi_tau,ne_gap,qre_gap,jeffrey_step,avg_ne_gap,avg_qre_gap");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn run_then_audit_theorem1() {
    let dir = tempfile::tempdir().unwrap();
    let o = inpg(&[
        "run", "--agents", "3", "--actions", "4", "--seed", "3", "--kind", "general", "--method", "npg,mwu,pg",
        "--tau", "0.1,0.01", "--iters", "300", "--runs", "2", "--check", "theorem1", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", out_str(&o));
    for name in ["aggregate_npg_tau1e-1.csv", "aggregate_npg_tau1e-2.csv", "aggregate_mwu_tau0e0.csv", "aggregate_pg_tau0e0.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert!(dir.path().join("npg_tau1e-1_seed4.policy.csv").exists());

    let o = inpg(&["audit", "--out", s(dir.path()), "--check", "theorem1"]);
    let text = out_str(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.contains("[PASS] theorem1"));
    for line in text.lines().filter(|l| l.contains("[PASS] theorem1")) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let lhs: f64 = parts[2].parse().unwrap();
        let rhs: f64 = parts[4].parse().unwrap();
        assert!(lhs <= rhs);
    }
    // projected PG gets NE-gap reporting only
    let o = inpg(&["audit", s(&dir.path().join("pg_tau0e0_seed3.json"))]);
    let text = out_str(&o);
    assert!(text.contains("regularized checks skipped"));
    assert!(!text.contains("[PASS]") && text.contains("[SKIP] theorem1"));
}

#[test]
fn oversized_step_is_reported_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    // ten times the default 1/(2(min(sqrt 2, 2) + 0.01))
    let eta = 10.0 / (2.0 * (2f64.sqrt() + 0.01));
    let o = inpg(&[
        "run", "--agents", "2", "--actions", "3", "--iters", "50", "--eta", &eta.to_string(), "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", out_str(&o));
    let o = inpg(&["audit", "--out", s(dir.path())]);
    let text = out_str(&o);
    assert!(o.status.success());
    assert!(text.contains("[SKIP] monotone") && text.contains("not applicable"));
    assert!(text.contains("[SKIP] theorem1"));
}

#[test]
fn failed_check_sets_exit_code_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = inpg(&["run", "--agents", "2", "--actions", "3", "--iters", "20", "--out", s(dir.path())]);
    assert!(o.status.success());
    // inflate the logged gap beyond the bound
    let csv_path = dir.path().join("npg_tau1e-2_seed0.csv");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let last = lines.last_mut().unwrap();
    let mut cells: Vec<String> = last.split(',').map(String::from).collect();
    cells[6] = "1000".into();
    *last = cells.join(",");
    std::fs::write(&csv_path, lines.join("\n") + "\n").unwrap();
    let o = inpg(&["audit", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out_str(&o).contains("[FAIL] theorem1"));
}

#[test]
fn loaded_game_runs_once() {
    let dir = tempfile::tempdir().unwrap();
    inpg(&["generate", "--agents", "2", "--actions", "2", "--out", s(dir.path())]);
    let game = dir.path().join("game-identical-n2-a2-s0.pgame");
    let o = inpg(&["run", "--game", s(&game), "--iters", "10", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", out_str(&o));
    let o = inpg(&["run", "--game", s(&game), "--runs", "2", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_is_deterministic_and_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = inpg(&["plot", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());

    let run = dir.path().join("run");
    let o = inpg(&["run", "--agents", "2", "--actions", "3", "--method", "npg,pg", "--iters", "30", "--out", s(&run)]);
    assert!(o.status.success());
    assert!(inpg(&["plot", "--out", s(&run)]).status.success());
    let first: Vec<Vec<u8>> = ["potential.svg", "ne_gap.svg", "qre_gap.svg"]
        .iter()
        .map(|f| std::fs::read(run.join(f)).unwrap())
        .collect();
    assert!(inpg(&["plot", "--out", s(&run)]).status.success());
    for (f, bytes) in ["potential.svg", "ne_gap.svg", "qre_gap.svg"].iter().zip(&first) {
        assert_eq!(&std::fs::read(run.join(f)).unwrap(), bytes);
    }

    // a header-only aggregate is an error and writes nothing
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    std::fs::write(empty.join("aggregate_npg_tau1e-2.csv"), "iter,phi_tau,ne_gap,qre_gap,jeffrey_step,avg_ne_gap,avg_qre_gap\n").unwrap();
    let o = inpg(&["plot", "--out", s(&empty)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!empty.join("ne_gap.svg").exists());
}

#[test]
fn runs_are_byte_identical_across_executions() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = inpg(&["run", "--agents", "3", "--actions", "3", "--method", "npg,pg", "--tau", "0.1", "--runs", "3", "--iters", "40", "--out", s(d)]);
        assert!(o.status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2 * 3 * 3 + 2);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
}
