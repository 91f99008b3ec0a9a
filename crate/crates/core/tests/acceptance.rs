//! Acceptance gate: one PASS/FAIL line per criterion, then a single assert.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrec_core::batch::{run_indexed, ExecMode};
use lrec_core::eval::{eval_formula, quotient, Assignment, Budget, ChiMemo};
use lrec_core::fixtures::{
    bijection_cases, formula_fixtures, permuted, psp_game_pair, random_labelled_graph, random_node_set,
    random_offsets_on, random_semigraph, random_structure, PSP_SENTENCES,
};
use lrec_core::game::oracle::bijection_game_oracle;
use lrec_core::game::transcript::replay;
use lrec_core::game::{run_match, GameConfig, GameError, Winner};
use lrec_core::logic::{iteration_degree, parse_formula, rank, Vocabulary};
use lrec_core::oracle::{brute_force_consistent, leaf_sum_consistent, naive_chi, union_find_quotient};
use lrec_core::psp::{expected_positivity, generate_instance, solve_direct, solve_via_lfp, TreeGroupSpec};
use lrec_core::strategy::{duplicator_by_name, FormulaSpoiler, GreedySpoiler, PaperDuplicator, RandomSpoiler, DUPLICATORS};
use lrec_core::treecomb::{
    check_lift, closure, components, extend_consistent, forced_extension, is_consistent, lift_sequence, min_h, BinTree,
    NodeSet,
};

const CHI_GRAPHS: usize = 500;
const CHI_MAX_V: usize = 8;
const CHI_MAX_L: i64 = 20;
const CHI_TIME: Duration = Duration::from_secs(10);
const QUOTIENT_GRAPHS: usize = 500;
const QUOTIENT_MAX_V: usize = 10;
const PSP_INSTANCES: usize = 200;
const TREECOMB_CASES: usize = 500;
const REPLAYS: usize = 100;
const MIN_FIXTURES: usize = 20;
const ROBUST_MATCHES: usize = 500;
const MATCH_TIME: Duration = Duration::from_secs(5);
const ROBUST_BUDGET: Budget = Budget { max_nodes: 40_000, max_pairs: 2_000_000 };
const MIN_SENTENCES: usize = 15;
const BIJECTION_CASES: usize = 10;

struct Gate {
    lines: Vec<(bool, String)>,
}

impl Gate {
    fn record(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        let line = format!("[{}] {id} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn chi_oracle(gate: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..CHI_GRAPHS {
        let g = random_labelled_graph(&mut rng, CHI_MAX_V);
        let mut memo = ChiMemo::new();
        for u in 0..g.len() {
            for l in 0..=CHI_MAX_L {
                mismatches += usize::from(memo.query(&g, u, &BigInt::from(l)) != naive_chi(&g, u, l));
            }
        }
    }
    let t = start.elapsed();
    gate.record(
        1,
        "chi oracle equivalence",
        mismatches == 0 && t < CHI_TIME,
        format!("{mismatches} mismatches over {CHI_GRAPHS} graphs in {:.2} s (limit {} s)", t.as_secs_f64(), CHI_TIME.as_secs()),
    );
}

fn quotient_oracle(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mismatches = (0..QUOTIENT_GRAPHS)
        .filter(|_| {
            let g = random_semigraph(&mut rng, QUOTIENT_MAX_V);
            quotient(&g) != union_find_quotient(&g)
        })
        .count();
    gate.record(2, "quotient equivalence", mismatches == 0, format!("{mismatches} mismatches over {QUOTIENT_GRAPHS} semi-graphs"));
}

fn psp_agreement(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut positive = 0;
    for i in 0..PSP_INSTANCES {
        let h = 1 + (i % 3) as u32;
        let p = [2u64, 3, 5][(i / 3) % 3];
        let sigma = (0..1usize << h).map(|_| rng.gen_range(0..p)).collect();
        let spec = TreeGroupSpec::new(h, p, sigma, rng.gen_range(0..p));
        let inst = generate_instance(&spec).expect("valid spec");
        let (d, l, e) = (solve_direct(&inst), solve_via_lfp(&inst), expected_positivity(&spec));
        mismatches += usize::from(!(d == l && l == e));
        positive += usize::from(e);
    }
    gate.record(
        3,
        "PSP three-way agreement",
        mismatches == 0,
        format!("{mismatches} mismatches over {PSP_INSTANCES} instances ({positive} positive)"),
    );
}

fn treecomb_suite(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut frontier_checks = 0;
    for i in 0..TREECOMB_CASES {
        let t = BinTree::new(rng.gen_range(1..=6));
        let x = random_node_set(&mut rng, &t, 8);
        if min_h(&t, &closure(&t, &x)) != min_h(&t, &x) {
            failures.push(format!("min-h case {i}"));
        }
        for c in components(&t, &closure(&t, &x)).expect("closed") {
            frontier_checks += 1;
            if c.frontier.len() as u32 <= c.height(&t) {
                failures.push(format!("|F| case {i}"));
            }
        }
        let small = BinTree::new(rng.gen_range(1..=3));
        let p = [2u64, 3][rng.gen_range(0..2)];
        let dom = random_node_set(&mut rng, &small, 4);
        let rho = random_offsets_on(&mut rng, p, &dom);
        let fast = is_consistent(&small, &rho);
        if fast != brute_force_consistent(&small, &rho) || fast != leaf_sum_consistent(&small, &rho) {
            failures.push(format!("consistency case {i}"));
        }
        let x = random_node_set(&mut rng, &t, 3);
        if let Ok(ext) = extend_consistent(&t, &random_offsets_on(&mut rng, 5, &x)) {
            let rho = ext.restrict(&x);
            let mut y = random_node_set(&mut rng, &t, 5);
            y.extend(x.iter().copied());
            match forced_extension(&t, &x, &y, &rho) {
                Ok(out) if is_consistent(&t, &out) => {}
                _ => failures.push(format!("forced extension case {i}")),
            }
            let ys: Vec<NodeSet> = (0..rng.gen_range(1..=4)).map(|_| random_node_set(&mut rng, &t, 3)).collect();
            let lifted = lift_sequence(&t, &rho, &ys, 3).map_err(|e| format!("{e:?}"));
            if lifted.and_then(|s| check_lift(&t, &rho, &s, 3)).is_err() {
                failures.push(format!("lift case {i}"));
            }
        }
    }
    gate.record(
        4,
        "tree proposition suite",
        failures.is_empty(),
        format!(
            "{} failures over {TREECOMB_CASES} cases ({frontier_checks} |F| > height checks){}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

fn replay_determinism(gate: &mut Gate) {
    let factory = |name: &str, seed: u64, cfg: &GameConfig| duplicator_by_name(name, seed, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut played = 0;
    let mut bad = Vec::new();
    let mut i = 0u64;
    while played < REPLAYS {
        i += 1;
        let a = random_structure(&mut rng, 6);
        let b = if i % 3 == 0 { random_structure(&mut rng, 6) } else { permuted(&mut rng, &a).0 };
        let Ok(cfg) = GameConfig::new(a, b, 3, 1) else { continue };
        let name = DUPLICATORS[i as usize % DUPLICATORS.len()];
        let play = || {
            let mut dup = duplicator_by_name(name, i, &cfg).expect("registered");
            if i % 2 == 0 {
                run_match(&cfg, &mut RandomSpoiler::new(i), dup.as_mut(), i)
            } else {
                run_match(&cfg, &mut GreedySpoiler::new(i), dup.as_mut(), i)
            }
        };
        let (first, second) = match (play(), play()) {
            (Err(GameError::ConstantMismatch(_)), _) => continue,
            (Ok(x), Ok(y)) => (x, y),
            (x, y) => panic!("seed {i}: {:?} / {:?}", x.err(), y.err()),
        };
        played += 1;
        let same = first.transcript.to_jsonl() == second.transcript.to_jsonl() && first.outcome == second.outcome;
        let replayed = replay(&first.transcript, &factory).map(|r| r.matches() && r.outcome.as_ref() == Some(&first.outcome));
        if !same || replayed != Ok(true) {
            bad.push(i);
        }
    }
    gate.record(5, "game determinism", bad.is_empty(), format!("{} of {REPLAYS} matches diverge on replay {bad:?}", bad.len()));
}

fn formula_spoiler(gate: &mut Gate) {
    let fixtures = formula_fixtures();
    let mut wins = 0;
    let mut lost = Vec::new();
    let mut valid = true;
    for fx in &fixtures {
        let phi = fx.formula();
        let ta = eval_formula(&phi, &fx.a, &Assignment::new()).expect("evaluates");
        let tb = eval_formula(&phi, &fx.b, &Assignment::new()).expect("evaluates");
        valid &= rank(&phi) <= 3 && iteration_degree(&phi) <= 1 && fx.a.size() <= 12 && ta != tb;
        let cfg = GameConfig::new(fx.a.clone(), fx.b.clone(), fx.k(), fx.q).expect("compatible");
        for name in DUPLICATORS {
            let mut dup = duplicator_by_name(name, 0, &cfg).expect("registered");
            let r = run_match(&cfg, &mut FormulaSpoiler::new(phi.clone(), 0), dup.as_mut(), 0).expect("plays");
            if r.outcome.winner == Winner::Spoiler {
                wins += 1;
            } else {
                lost.push(format!("{}/{name}", fx.name));
            }
        }
    }
    let total = fixtures.len() * DUPLICATORS.len();
    gate.record(
        6,
        "formula Spoiler wins",
        valid && fixtures.len() >= MIN_FIXTURES && wins == total,
        format!(
            "{wins}/{total} wins over {} fixtures x {} Duplicators (fixtures valid: {valid}){}",
            fixtures.len(),
            DUPLICATORS.len(),
            if lost.is_empty() { String::new() } else { format!("; lost {lost:?}") }
        ),
    );
}

struct RobustResult {
    duplicator_won: bool,
    time: Duration,
    detail: String,
}

fn strategy_robustness(gate: &mut Gate) {
    let results = run_indexed(ROBUST_MATCHES, ExecMode::Parallel, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i as u64);
        let h = rng.gen_range(6..=10);
        let p = if rng.gen_bool(0.5) { 5 } else { 7 };
        let (k, q) = (rng.gen_range(1..=3), rng.gen_range(0..=1));
        let (a, b) = psp_game_pair(&mut rng, h, p);
        let cfg = GameConfig::new(a, b, k, q).expect("compatible").with_budget(ROBUST_BUDGET);
        let seed = i as u64;
        let start = Instant::now();
        let mut dup = PaperDuplicator::new(&cfg);
        let r = if i % 2 == 0 {
            run_match(&cfg, &mut RandomSpoiler::new(seed), &mut dup, seed)
        } else {
            run_match(&cfg, &mut GreedySpoiler::new(seed), &mut dup, seed)
        };
        let time = start.elapsed();
        match r {
            Ok(r) => RobustResult {
                duplicator_won: r.outcome.winner == Winner::Duplicator,
                time,
                detail: format!("match {i} h={h} p={p} k={k} q={q}: {}", r.outcome.reason),
            },
            Err(e) => RobustResult {
                duplicator_won: false,
                time,
                detail: format!("match {i} h={h} p={p} k={k} q={q}: error {e}"),
            },
        }
    });
    let losses: Vec<&RobustResult> = results.iter().filter(|r| !r.duplicator_won).collect();
    let slow = results.iter().filter(|r| r.time >= MATCH_TIME).count();
    let max = results.iter().map(|r| r.time).max().unwrap_or_default();
    gate.record(
        7,
        "paper Duplicator robustness",
        losses.is_empty() && slow == 0 && results.len() >= ROBUST_MATCHES,
        format!(
            "{} losses in {} matches, max {:.2} s per match (limit {} s){}",
            losses.len(),
            results.len(),
            max.as_secs_f64(),
            MATCH_TIME.as_secs(),
            losses.first().map(|r| format!("; first: {}", r.detail)).unwrap_or_default()
        ),
    );
}

fn sentence_agreement(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (a, b) = psp_game_pair(&mut rng, 6, 5);
    let vocab = Vocabulary::psp();
    let mut differ = Vec::new();
    let mut valid = true;
    for text in PSP_SENTENCES {
        let phi = parse_formula(text, &vocab).expect("curated sentence parses");
        valid &= rank(&phi) <= 3 && iteration_degree(&phi) <= 1;
        let env = Assignment::new();
        if eval_formula(&phi, &a, &env).expect("evaluates") != eval_formula(&phi, &b, &env).expect("evaluates") {
            differ.push(text);
        }
    }
    let lrec_count = PSP_SENTENCES.iter().filter(|s| s.contains("lrec")).count();
    gate.record(
        8,
        "low-rank indistinguishability",
        valid && differ.is_empty() && PSP_SENTENCES.len() >= MIN_SENTENCES && lrec_count > 0,
        format!(
            "{} differences over {} sentences ({lrec_count} with lrec) on P(6,5,σ,t) vs t+1{}",
            differ.len(),
            PSP_SENTENCES.len(),
            if differ.is_empty() { String::new() } else { format!(": {differ:?}") }
        ),
    );
}

fn bijection_oracle(gate: &mut Gate) {
    let cases = bijection_cases();
    let agree = cases
        .iter()
        .filter(|c| {
            let f0 = GameConfig::new(c.a.clone(), c.b.clone(), 0, 0)
                .and_then(|cfg| cfg.constant_map())
                .expect("compatible");
            bijection_game_oracle(&c.a, &c.b, &f0, c.rounds) == c.duplicator_wins
        })
        .count();
    gate.record(
        9,
        "bijection-game oracle",
        agree == BIJECTION_CASES && cases.len() == BIJECTION_CASES,
        format!("{agree}/{} hand classifications match", cases.len()),
    );
}

#[test]
fn acceptance() {
    let mut gate = Gate { lines: Vec::new() };
    chi_oracle(&mut gate);
    quotient_oracle(&mut gate);
    psp_agreement(&mut gate);
    treecomb_suite(&mut gate);
    replay_determinism(&mut gate);
    formula_spoiler(&mut gate);
    strategy_robustness(&mut gate);
    sentence_agreement(&mut gate);
    bijection_oracle(&mut gate);
    let failed: Vec<&String> = gate.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
