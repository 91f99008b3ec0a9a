use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

const PSP_LFP: &str = "lfp[X,u](S(u) | exists v. exists w. (X(v) & X(w) & R(v,w,u)))(t)";

fn lrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrec")).args(args).output().expect("binary runs")
}

fn lrec_with_input(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lrec"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Positive and negative instances over the same tree and leaf residues.
fn psp_pair(dir: &TempDir) -> (PathBuf, PathBuf) {
    let pos = dir.path().join("pos.json");
    let neg = dir.path().join("neg.json");
    for (t, path) in [("1", &pos), ("2", &neg)] {
        let o = lrec(&["psp-gen", "--h", "2", "--p", "3", "--sigma", "1,1,2,0", "--t", t, "--out", p(path)]);
        assert_eq!(code(&o), 0, "{o:?}");
    }
    (pos, neg)
}

#[test]
fn eval_reports_truth_in_exit_code() {
    let dir = TempDir::new().unwrap();
    let (pos, neg) = psp_pair(&dir);
    let o = lrec(&["eval", "-s", p(&pos), "-f", PSP_LFP]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("true", 0));
    let o = lrec(&["eval", "-s", p(&neg), "-f", PSP_LFP]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("false", 1));
}

#[test]
fn eval_reads_formula_files_and_bindings() {
    let dir = TempDir::new().unwrap();
    let (pos, _) = psp_pair(&dir);
    let f = dir.path().join("phi.txt");
    std::fs::write(&f, "S(x) & %m = 1").unwrap();
    let arg = format!("@{}", p(&f));
    let o = lrec(&["eval", "-s", p(&pos), "-f", &arg, "--bind", "x=n3_r1", "--bind", "%m=1"]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("true", 0));
    let o = lrec(&["eval", "-s", p(&pos), "-f", &arg, "--bind", "x=n3_r1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let (pos, _) = psp_pair(&dir);
    let o = lrec(&["eval", "-s", p(&pos), "-f", "exists x. (S(x)"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset"));
    assert_eq!(code(&lrec(&["eval", "-s", "/nonexistent.json", "-f", "true"])), 2);
    assert_eq!(code(&lrec(&["verify", "nope"])), 2);
    assert_eq!(code(&lrec(&["no-such-command"])), 2);
}

#[test]
fn budget_overrun_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let (pos, _) = psp_pair(&dir);
    let o = lrec(&["eval", "-s", p(&pos), "-f", "lrec[u;v;%p](R(u, v, t); false; %p = 0)(t; 1)", "--max-nodes", "2"]);
    assert_eq!(code(&o), 3, "{o:?}");
}

#[test]
fn psp_solve_and_rank() {
    let dir = TempDir::new().unwrap();
    let (pos, neg) = psp_pair(&dir);
    let o = lrec(&["psp-solve", "-s", p(&pos)]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("positive", 0));
    let o = lrec(&["psp-solve", "-s", p(&neg)]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("negative", 1));
    let o = lrec(&["rank", "-f", "exists x. lrec[u;v;%p](R(u, v, x); false; %p = 0)(x; 2)"]);
    assert_eq!(stdout(&o).trim(), "rank 3 degree 1");
}

#[test]
fn psp_gen_is_deterministic_per_seed() {
    let a = lrec(&["psp-gen", "--h", "3", "--p", "5", "--seed", "9"]);
    let b = lrec(&["psp-gen", "--h", "3", "--p", "5", "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = lrec(&["psp-gen", "--h", "3", "--p", "5"]);
    assert!(String::from_utf8_lossy(&c.stderr).contains("seed: 0"));
}

#[test]
fn quotient_and_chi() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    std::fs::write(
        &g,
        r##"{"universe":["a","b","c"],"relations":{
            "E":{"arity":2,"tuples":[["a","c"]]},
            "SIM":{"arity":2,"tuples":[["a","b"]]},
            "C":{"arity":2,"tuples":[["a","#1"],["c","#0"]]}}}"##,
    )
    .unwrap();
    let o = lrec(&["quotient", "-g", p(&g)]);
    assert_eq!(code(&o), 0);
    let q: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(q["classes"], serde_json::json!([["a", "b"], ["c"]]));
    assert_eq!(q["edges"], serde_json::json!([[0, 1]]));
    assert_eq!(q["labels"], serde_json::json!([[1], [0]]));
    // c holds at every ℓ ≥ 0 (no successors, 0 ∈ C). The class {a, b}
    // needs exactly one true successor: c at ⌊(ℓ - 1) / 1⌋, so ℓ ≥ 1.
    let o = lrec(&["chi", "-g", p(&g), "--node", "b", "--counter", "1"]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("true", 0));
    let o = lrec(&["chi", "-g", p(&g), "--node", "b", "--counter", "0"]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("false", 1));
    let o = lrec(&["chi", "-g", p(&g), "--node", "c", "--counter", "-1"]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("false", 1));
}

#[test]
fn seeded_runs_are_byte_identical_and_replay() {
    let dir = TempDir::new().unwrap();
    let (pos, neg) = psp_pair(&dir);
    let t1 = dir.path().join("t1.jsonl");
    let t2 = dir.path().join("t2.jsonl");
    for t in [&t1, &t2] {
        let o = lrec(&[
            "game-run", "-A", p(&pos), "-B", p(&neg), "--k", "3", "--q", "1", "--spoiler", "greedy", "--duplicator",
            "matching", "--seed", "4", "--transcript", p(t),
        ]);
        assert_eq!(code(&o), 0, "{o:?}");
        assert!(stdout(&o).starts_with("winner: "));
    }
    let text = std::fs::read_to_string(&t1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&t2).unwrap());
    let o = lrec(&["game-replay", "--transcript", p(&t1)]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("replay ok"));

    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let hash_at = lines[1].find("\"state_hash\":\"").unwrap() + 14;
    let flipped = if &lines[1][hash_at..hash_at + 1] == "0" { "1" } else { "0" };
    lines[1].replace_range(hash_at..hash_at + 1, flipped);
    std::fs::write(&t2, lines.join("\n")).unwrap();
    let o = lrec(&["game-replay", "--transcript", p(&t2)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("hash mismatch"));
}

#[test]
fn formula_spoiler_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let (pos, neg) = psp_pair(&dir);
    // t is the sum of two derivable children in A only.
    let derivable = "exists z. exists w. (S(z) & S(w) & R(z, w, x))";
    let phi = format!(
        "formula:exists x. exists y. (R(x, y, t) & {derivable} & {})",
        derivable.replace("x)", "y)")
    );
    let o = lrec(&[
        "game-run", "-A", p(&pos), "-B", p(&neg), "--k", "5", "--q", "0", "--duplicator", "identity", "--spoiler", &phi,
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("winner: Spoiler"), "{}", stdout(&o));
    let o = lrec(&["game-run", "-A", p(&pos), "-B", p(&neg), "--k", "3", "--spoiler", "nobody"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn interactive_constant_mismatch_ends_at_once() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, r#"{"universe":["x","y"],"relations":{"E":{"arity":2,"tuples":[["x","x"]]}},"constants":{"c":"x"}}"#).unwrap();
    std::fs::write(&b, r#"{"universe":["x","y"],"relations":{"E":{"arity":2,"tuples":[["y","y"]]}},"constants":{"c":"x"}}"#).unwrap();
    let o = lrec_with_input(&["game-interactive", "-A", p(&a), "-B", p(&b), "--k", "2"], "");
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("=== Spoiler wins"), "{}", stdout(&o));
}

#[test]
fn interactive_session_reprompts_and_wins() {
    let dir = TempDir::new().unwrap();
    let (pos, neg) = psp_pair(&dir);
    // Identity moves only t; the pebbled triangle n1_r0, n2_r1, t breaks R.
    let input = "nonsense\next\nnot-an-element\nn1_r0\next\nn2_r1\n";
    let o = lrec_with_input(
        &["game-interactive", "-A", p(&pos), "-B", p(&neg), "--k", "3", "--duplicator", "identity", "--seed", "1"],
        input,
    );
    let out = stdout(&o);
    assert_eq!(code(&o), 0);
    assert!(out.contains("unknown move"));
    assert!(out.contains("no element named"));
    assert!(out.contains("Duplicator's bijection"));
    assert!(out.contains("=== Spoiler wins"), "{out}");
}

#[test]
fn verify_reports_json_and_catches_the_mutation() {
    let o = lrec(&["verify", "treecomb", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["passed"], true);
    assert!(stdout(&o).contains("|F| > height(X)"));
    let o = lrec(&["verify", "psp", "--mutate-psp", "--sequential"]);
    assert_eq!(code(&o), 1);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let unique = r["properties"].as_array().unwrap().iter().find(|p| p["name"] == "sibling-witness-is-unique").unwrap();
    assert!(unique["failures"].as_u64().unwrap() > 0);
}
