//! Seeded property suites, one per module, with a machine-readable summary.
//!
//! Case `i` of a property draws from its own generator seeded by the suite
//! seed, the property name and `i`, so reports do not depend on
//! [`ExecMode`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::batch::{run_indexed, ExecMode};
use crate::eval::{chi, eval_formula, quotient, Assignment, Budget, ChiMemo, LabelledGraph};
use crate::fixtures::{
    bijection_cases, formula_fixtures, permuted, psp_game_pair, random_formula, random_labelled_graph,
    random_node_set, random_offsets_on, random_semigraph, random_structure,
};
use crate::game::oracle::bijection_game_oracle;
use crate::game::transcript::replay;
use crate::game::{run_match, Game, GameConfig, Winner};
use crate::logic::{free_vars, parse_formula, Sort, Vocabulary};
use crate::oracle::{brute_force_consistent, brute_force_free, leaf_sum_consistent, naive_chi, naive_eval, union_find_quotient};
use crate::psp::{
    ambiguous_nodes, expected_positivity, generate_instance_with, solve_direct, solve_via_lfp, ChildRule, PspLayout,
    TreeGroupSpec,
};
use crate::strategy::{
    duplicator_by_name, spike_keeps_class, tuple_nodes, FormulaSpoiler, GreedySpoiler, PaperDuplicator, RandomSpoiler,
    DUPLICATORS,
};
use crate::structure::{is_partial_isomorphism, Elem, Structure, Value};
use crate::treecomb::{
    check_lift, closure, components, extend_consistent, forced_extension, free_elements, frontier_of_closure,
    is_consistent, lift_sequence, min_h, minimally_encloses, BinTree, NodeSet,
};

pub const SUITES: [&str; 7] = ["core", "chi", "quotient", "psp", "treecomb", "game", "strategy"];

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mode: ExecMode,
    /// Child rule for generated PSP instances; [`ChildRule::AllowEqual`]
    /// is the injected mutation the `psp` suite must catch.
    pub psp_rule: ChildRule,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            mode: ExecMode::Parallel,
            psp_rule: ChildRule::Distinct,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// The lowest-index failing case.
    pub counterexample: Option<String>,
    /// Property-specific tallies summed over passing cases.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, u64>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownSuite(pub String);

impl fmt::Display for UnknownSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown suite {:?}; expected one of {}", self.0, SUITES.join(", "))
    }
}

impl std::error::Error for UnknownSuite {}

pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<SuiteReport, UnknownSuite> {
    let properties = match name {
        "core" => core_suite(opts),
        "chi" => chi_suite(opts),
        "quotient" => quotient_suite(opts),
        "psp" => psp_suite(opts),
        "treecomb" => treecomb_suite(opts),
        "game" => game_suite(opts),
        "strategy" => strategy_suite(opts),
        _ => return Err(UnknownSuite(name.to_string())),
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        seed: opts.seed,
        passed: properties.iter().all(PropertyReport::passed),
        properties,
    })
}

/// Tallies of one passing case; `Err` carries the counterexample.
type CaseResult = Result<Vec<(&'static str, u64)>, String>;

fn pass() -> CaseResult {
    Ok(Vec::new())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> CaseResult {
    if ok {
        pass()
    } else {
        Err(msg())
    }
}

fn case_seed(seed: u64, name: &str, i: usize) -> u64 {
    // FNV-1a over the name keeps properties on disjoint streams.
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    seed ^ h ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn property<F>(name: &str, cases: usize, opts: &VerifyOptions, f: F) -> PropertyReport
where
    F: Fn(&mut ChaCha8Rng, usize) -> CaseResult + Sync + Send,
{
    let results = run_indexed(cases, opts.mode, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(opts.seed, name, i));
        f(&mut rng, i)
    });
    let mut counts = BTreeMap::new();
    let mut failures = 0;
    let mut counterexample = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(tallies) => {
                for (k, v) in tallies {
                    *counts.entry(k.to_string()).or_insert(0) += v;
                }
            }
            Err(msg) => {
                failures += 1;
                counterexample.get_or_insert_with(|| format!("case {i}: {msg}"));
            }
        }
    }
    PropertyReport {
        name: name.to_string(),
        cases,
        failures,
        counterexample,
        counts,
    }
}

fn random_env(rng: &mut ChaCha8Rng, s: &Structure, vars: impl IntoIterator<Item = crate::logic::Var>) -> Assignment {
    vars.into_iter()
        .map(|v| {
            let val = match v.sort {
                Sort::Elem => Value::Elem(Elem(rng.gen_range(0..s.size() as u32))),
                Sort::Num => Value::Num(rng.gen_range(0..=s.number_max())),
            };
            (v, val)
        })
        .collect()
}

fn core_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    let vocab = Vocabulary::psp();
    vec![
        property("structure-json-round-trip", 200, opts, |rng, _| {
            let s = random_structure(rng, 6);
            let text = s.to_json();
            let back = Structure::from_json(&text).map_err(|e| e.to_string())?;
            check(back.to_json() == text, || text.clone())
        }),
        property("formula-print-parse", 300, opts, |rng, _| {
            let f = random_formula(rng, &vocab, 3);
            let text = f.to_string();
            match parse_formula(&text, &vocab) {
                Ok(g) => check(g == f, || text.clone()),
                Err(e) => Err(format!("{text}: {e}")),
            }
        }),
        property("eval-matches-naive", 300, opts, |rng, _| {
            let s = random_structure(rng, 4);
            let f = random_formula(rng, &vocab, 3);
            let env = random_env(rng, &s, free_vars(&f));
            match (eval_formula(&f, &s, &env), naive_eval(&f, &s, &env)) {
                (Ok(a), Ok(b)) => check(a == b, || format!("{f}: {a} vs {b}")),
                (Err(a), Err(b)) => check(a == b, || format!("{f}: {a:?} vs {b:?}")),
                (a, b) => Err(format!("{f}: {a:?} vs {b:?}")),
            }
        }),
        property("isomorphism-invariance", 200, opts, |rng, _| {
            let s = random_structure(rng, 5);
            let (t, perm) = permuted(rng, &s);
            let f = random_formula(rng, &vocab, 3);
            let env = random_env(rng, &s, free_vars(&f));
            let moved: Assignment = env
                .iter()
                .map(|(v, val)| match val {
                    Value::Elem(e) => (v.clone(), Value::Elem(perm[e.index()])),
                    n => (v.clone(), *n),
                })
                .collect();
            match (eval_formula(&f, &s, &env), eval_formula(&f, &t, &moved)) {
                (Ok(a), Ok(b)) => check(a == b, || format!("{f}")),
                (Err(_), Err(_)) => pass(),
                (a, b) => Err(format!("{f}: {a:?} vs {b:?}")),
            }
        }),
    ]
}

/// Vertices from which `u` is reachable, `u` included.
fn ancestors(g: &LabelledGraph, u: usize) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = [u].into_iter().collect();
    let mut queue: VecDeque<usize> = [u].into_iter().collect();
    while let Some(v) = queue.pop_front() {
        for (a, b) in g.edges() {
            if b as usize == v && seen.insert(a as usize) {
                queue.push_back(a as usize);
            }
        }
    }
    seen
}

fn chi_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    vec![
        property("memo-matches-naive", 300, opts, |rng, _| {
            let g = random_labelled_graph(rng, 8);
            let mut memo = ChiMemo::new();
            for u in 0..g.len() {
                for l in -1..=20i64 {
                    if memo.query(&g, u, &BigInt::from(l)) != naive_chi(&g, u, l) {
                        return Err(format!("u={u} l={l} {g:?}"));
                    }
                }
            }
            Ok(vec![("queries", g.len() as u64 * 22)])
        }),
        property("label-change-stays-upstream", 200, opts, |rng, _| {
            let g = random_labelled_graph(rng, 8);
            let u = rng.gen_range(0..g.len());
            let mut labels: Vec<BTreeSet<u64>> = (0..g.len()).map(|v| g.label(v).clone()).collect();
            labels[u] = (0..=8).filter(|_| rng.gen_bool(0.5)).collect();
            let h = LabelledGraph::new(g.len(), g.edges(), labels);
            let up = ancestors(&g, u);
            for v in (0..g.len()).filter(|v| !up.contains(v)) {
                for l in 0..=20i64 {
                    let l = BigInt::from(l);
                    if chi(&g, v, &l) != chi(&h, v, &l) {
                        return Err(format!("changed C({u}) moved χ at {v}, ℓ={l}"));
                    }
                }
            }
            pass()
        }),
    ]
}

fn quotient_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    vec![
        property("matches-union-find", 500, opts, |rng, _| {
            let g = random_semigraph(rng, 10);
            let q = quotient(&g);
            check(q == union_find_quotient(&g), || format!("{g:?}"))
        }),
        property("class-edges-lift-member-edges", 300, opts, |rng, _| {
            let g = random_semigraph(rng, 10);
            let q = quotient(&g);
            for a in 0..q.classes.len() {
                for b in 0..q.classes.len() {
                    let direct = g
                        .edges
                        .iter()
                        .any(|&(x, y)| q.class(x as usize) == a && q.class(y as usize) == b);
                    if direct != q.graph.has_edge(a, b) {
                        return Err(format!("classes {a},{b} in {g:?}"));
                    }
                }
            }
            Ok(vec![("classes", q.classes.len() as u64)])
        }),
    ]
}

fn random_spec(rng: &mut ChaCha8Rng, max_h: u32, primes: &[u64]) -> TreeGroupSpec {
    let h = rng.gen_range(1..=max_h);
    let p = primes[rng.gen_range(0..primes.len())];
    let sigma = (0..1usize << h).map(|_| rng.gen_range(0..p)).collect();
    TreeGroupSpec::new(h, p, sigma, rng.gen_range(0..p))
}

fn psp_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    let rule = opts.psp_rule;
    vec![
        property("three-solvers-agree", 200, opts, |rng, _| {
            let spec = random_spec(rng, 3, &[2, 3, 5]);
            let inst = generate_instance_with(&spec, rule).map_err(|e| e.to_string())?;
            let (d, l, e) = (solve_direct(&inst), solve_via_lfp(&inst), expected_positivity(&spec));
            check(d == l && l == e, || format!("{} direct={d} lfp={l} expected={e}", spec.to_json()))
                .map(|_| vec![("positive", u64::from(e))])
        }),
        property("sibling-witness-is-unique", 200, opts, |rng, _| {
            // For z at w and x at a child of w, R(x, ·, z) has one witness.
            let spec = random_spec(rng, 3, &[2, 3, 5]);
            let inst = generate_instance_with(&spec, rule).map_err(|e| e.to_string())?;
            let lay = spec.layout();
            let t = BinTree::new(spec.h);
            let r = inst.relation("R").expect("PSP vocabulary");
            let mut witnesses = vec![0u32; inst.size() * inst.size()];
            for tup in r.tuples() {
                witnesses[tup[0].index() * inst.size() + tup[2].index()] += 1;
            }
            for w in t.nodes().filter(|&w| !t.is_leaf(w)) {
                let (c1, c2) = t.children(w).expect("inner node");
                for u in [c1, c2] {
                    for a in 0..lay.p {
                        for c in 0..lay.p {
                            let (x, z) = (lay.elem(u, a), lay.elem(w, c));
                            let k = witnesses[x.index() * inst.size() + z.index()];
                            if k != 1 {
                                return Err(format!("{} has {k} witnesses for ({}, ·, {})", spec.to_json(), inst.name(x), inst.name(z)));
                            }
                        }
                    }
                }
            }
            pass()
        }),
        property("closure-residues-unique", 200, opts, |rng, _| {
            let spec = random_spec(rng, 3, &[2, 3, 5]);
            let inst = generate_instance_with(&spec, rule).map_err(|e| e.to_string())?;
            let amb = ambiguous_nodes(&inst, spec.layout());
            check(amb.is_empty(), || format!("{} ambiguous at {amb:?}", spec.to_json()))
        }),
        property("layout-detection-round-trips", 100, opts, |rng, _| {
            let spec = random_spec(rng, 4, &[2, 3, 5, 7]);
            let inst = generate_instance_with(&spec, rule).map_err(|e| e.to_string())?;
            let lay = PspLayout::detect(&inst).map_err(|e| e.to_string())?;
            check(lay == spec.layout(), || spec.to_json())
        }),
    ]
}

fn treecomb_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    vec![
        property("closure-keeps-min-height", 500, opts, |rng, _| {
            let t = BinTree::new(rng.gen_range(1..=5));
            let x = random_node_set(rng, &t, 8);
            check(min_h(&t, &closure(&t, &x)) == min_h(&t, &x), || format!("{x:?}"))
        }),
        property("frontier-exceeds-component-height", 500, opts, |rng, _| {
            let t = BinTree::new(rng.gen_range(1..=6));
            let x = closure(&t, &random_node_set(rng, &t, 10));
            let comps = components(&t, &x).map_err(|e| format!("{e:?}"))?;
            for c in &comps {
                if c.frontier.len() as u32 <= c.height(&t) {
                    return Err(format!("|F| = {} <= height {} at head {}", c.frontier.len(), c.height(&t), c.head));
                }
                if !minimally_encloses(&t, &c.frontier, c.head) {
                    return Err(format!("frontier does not minimally enclose {}", c.head));
                }
            }
            Ok(vec![("components", comps.len() as u64), ("|F| > height(X)", comps.len() as u64)])
        }),
        property("consistency-matches-enclosing-sums", 500, opts, |rng, _| {
            let t = BinTree::new(rng.gen_range(1..=3));
            let p = [2u64, 3][rng.gen_range(0..2)];
            let dom = random_node_set(rng, &t, 4);
            let rho = random_offsets_on(rng, p, &dom);
            let (fast, brute, sums) = (is_consistent(&t, &rho), brute_force_consistent(&t, &rho), leaf_sum_consistent(&t, &rho));
            check(fast == brute && brute == sums, || format!("{rho:?}: {fast} {brute} {sums}"))
                .map(|_| vec![("consistent", u64::from(fast))])
        }),
        property("free-elements-match-enumeration", 300, opts, |rng, _| {
            let t = BinTree::new(rng.gen_range(1..=4));
            let x = random_node_set(rng, &t, 3);
            let Ok(ext) = extend_consistent(&t, &random_offsets_on(rng, 3, &x)) else { return pass() };
            let rho = ext.restrict(&x);
            let mut y = random_node_set(rng, &t, 4);
            y.extend(x.iter().copied());
            let fast = free_elements(&t, &x, &y, &rho).map_err(|e| format!("{e:?}"))?;
            check(fast == brute_force_free(&t, &x, &y, &rho), || format!("x={x:?} y={y:?} rho={rho:?}"))
        }),
        property("forced-extension-is-consistent", 500, opts, |rng, _| {
            let t = BinTree::new(rng.gen_range(1..=5));
            let p = [2u64, 3, 5][rng.gen_range(0..3)];
            let x = random_node_set(rng, &t, 4);
            let Ok(ext) = extend_consistent(&t, &random_offsets_on(rng, p, &x)) else { return pass() };
            let rho = ext.restrict(&x);
            let mut y = random_node_set(rng, &t, 5);
            y.extend(x.iter().copied());
            let out = forced_extension(&t, &x, &y, &rho).map_err(|e| format!("{e:?}"))?;
            check(is_consistent(&t, &out) && out.restrict(&x) == rho, || format!("x={x:?} y={y:?} rho={rho:?}"))
        }),
        property("lift-sequence-conditions", 500, opts, |rng, _| {
            let t = BinTree::new(rng.gen_range(1..=8));
            let x = random_node_set(rng, &t, 3);
            let Ok(ext) = extend_consistent(&t, &random_offsets_on(rng, 5, &x)) else { return pass() };
            let rho = ext.restrict(&x);
            let s = 3;
            let ys: Vec<NodeSet> = (0..rng.gen_range(1..=4)).map(|_| random_node_set(rng, &t, s)).collect();
            let sig = lift_sequence(&t, &rho, &ys, s).map_err(|e| format!("{e:?}"))?;
            check_lift(&t, &rho, &sig, s).map_err(|e| format!("x={x:?} ys={ys:?}: {e}"))?;
            Ok(vec![("lifts", ys.len() as u64)])
        }),
    ]
}

fn game_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    let factory = |name: &str, seed: u64, cfg: &GameConfig| duplicator_by_name(name, seed, cfg);
    vec![
        property("seeded-matches-replay", 60, opts, |rng, i| {
            let a = random_structure(rng, 6);
            let b = if i % 3 == 0 { random_structure(rng, 6) } else { permuted(rng, &a).0 };
            let Ok(cfg) = GameConfig::new(a, b, 3, 1) else { return pass() };
            let name = DUPLICATORS[i % DUPLICATORS.len()];
            let seed = rng.gen();
            let play = || {
                let mut dup = duplicator_by_name(name, seed, &cfg).expect("registered");
                run_match(&cfg, &mut RandomSpoiler::new(seed), dup.as_mut(), seed)
            };
            let (first, second) = match (play(), play()) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), Err(_)) if matches!(e, crate::game::GameError::ConstantMismatch(_)) => return pass(),
                (x, y) => return Err(format!("{:?} / {:?}", x.err(), y.err())),
            };
            let text = first.transcript.to_jsonl();
            if text != second.transcript.to_jsonl() {
                return Err(format!("seed {seed}: transcripts differ"));
            }
            let report = replay(&first.transcript, &factory).map_err(|e| e.to_string())?;
            check(report.matches(), || format!("seed {seed}: {:?}", report.mismatch)).map(|_| vec![("matches", 1)])
        }),
        property("bijection-oracle-hand-cases", bijection_cases().len(), opts, |_, i| {
            let c = &bijection_cases()[i];
            let f0 = GameConfig::new(c.a.clone(), c.b.clone(), 0, 0)
                .and_then(|cfg| cfg.constant_map())
                .map_err(|e| e.to_string())?;
            let got = bijection_game_oracle(&c.a, &c.b, &f0, c.rounds);
            check(got == c.duplicator_wins, || format!("{}: oracle says {got}", c.name))
        }),
        property("built-in-duplicators-stay-legal", 60, opts, |rng, i| {
            let a = random_structure(rng, 6);
            let b = random_structure(rng, 6);
            let Ok(cfg) = GameConfig::new(a, b, 3, 1) else { return pass() };
            let name = DUPLICATORS[i % DUPLICATORS.len()];
            let seed = rng.gen();
            let mut dup = duplicator_by_name(name, seed, &cfg).expect("registered");
            let r = match run_match(&cfg, &mut GreedySpoiler::new(seed), dup.as_mut(), seed) {
                Ok(r) => r,
                Err(crate::game::GameError::ConstantMismatch(_)) => return pass(),
                Err(e) => return Err(e.to_string()),
            };
            let forfeit = r.outcome.winner == Winner::Spoiler && r.outcome.reason.contains("forfeit");
            check(!forfeit, || format!("{name} seed {seed}: {}", r.outcome.reason))
        }),
    ]
}

fn strategy_suite(opts: &VerifyOptions) -> Vec<PropertyReport> {
    let fixtures = formula_fixtures();
    let pairs = fixtures.len() * DUPLICATORS.len();
    vec![
        property("formula-spoiler-wins-fixtures", pairs, opts, |_, i| {
            let fx = &fixtures[i / DUPLICATORS.len()];
            let name = DUPLICATORS[i % DUPLICATORS.len()];
            let cfg = GameConfig::new(fx.a.clone(), fx.b.clone(), fx.k(), fx.q).map_err(|e| e.to_string())?;
            let mut dup = duplicator_by_name(name, 0, &cfg).expect("registered");
            let r = run_match(&cfg, &mut FormulaSpoiler::new(fx.formula(), 0), dup.as_mut(), 0).map_err(|e| e.to_string())?;
            check(r.outcome.winner == Winner::Spoiler, || format!("{} vs {name}: {}", fx.name, r.outcome.reason))
        }),
        property("spike-value-irrelevant", 200, opts, |rng, _| {
            const SIMS: [&str; 4] = ["x = y", "R(x, y, t) | R(y, x, t)", "exists z. R(x, z, y)", "S(x) & S(y)"];
            let (a, _) = psp_game_pair(rng, 2, 5);
            let lay = PspLayout::detect(&a).map_err(|e| e.to_string())?;
            let t = BinTree::new(2);
            let sim = SIMS[rng.gen_range(0..SIMS.len())];
            let (space, g) = sim_classes(&a, sim)?;
            let tuple = [Value::Elem(Elem(rng.gen_range(0..lay.size() as u32)))];
            let nodes = tuple_nodes(lay, &tuple);
            let mut fixed = frontier_of_closure(&t, &nodes);
            fixed.extend(nodes.iter().copied());
            let u = *fixed.iter().nth(rng.gen_range(0..fixed.len())).expect("nonempty");
            let one = spike_keeps_class(lay, &t, &g, &space, &tuple, u, &fixed, 1);
            let two = spike_keeps_class(lay, &t, &g, &space, &tuple, u, &fixed, 2);
            check(one == two, || format!("sim {sim} tuple {tuple:?} u {u}")).map(|_| vec![("free", u64::from(one))])
        }),
        property("paper-extension-is-partial-isomorphism", 40, opts, |rng, _| {
            let h = rng.gen_range(3..=6);
            let p = [3u64, 5][rng.gen_range(0..2)];
            let (a, b) = psp_game_pair(rng, h, p);
            let cfg = GameConfig::new(a, b, 3, 0).map_err(|e| e.to_string())?;
            let mut dup = PaperDuplicator::new(&cfg);
            let mut game = Game::start_default(cfg.clone()).map_err(|e| e.to_string())?;
            use crate::game::Duplicator;
            for _ in 0..2 {
                let g = dup.extension(&game.main_view());
                for x in 0..cfg.n() as u32 {
                    let mut f = game.f.clone();
                    let ok = f.insert(Elem(x), g[x as usize]).is_ok()
                        && is_partial_isomorphism(&f, &cfg.a, &cfg.b).unwrap_or(false);
                    if !ok {
                        return Err(format!("h {h} p {p} pebble {}", cfg.a.name(Elem(x))));
                    }
                }
                game.apply_extension(&g, Elem(rng.gen_range(0..cfg.n() as u32))).map_err(|e| e.to_string())?;
            }
            pass()
        }),
        property("paper-duplicator-survives", 8, opts, |rng, i| {
            let h = rng.gen_range(6..=7);
            let p = [5u64, 7][rng.gen_range(0..2)];
            let (a, b) = psp_game_pair(rng, h, p);
            let cfg = GameConfig::new(a, b, 3, 1)
                .map_err(|e| e.to_string())?
                .with_budget(Budget { max_nodes: 40_000, max_pairs: 2_000_000 });
            let seed = rng.gen();
            let mut dup = PaperDuplicator::new(&cfg);
            let r = if i % 2 == 0 {
                run_match(&cfg, &mut RandomSpoiler::new(seed), &mut dup, seed)
            } else {
                run_match(&cfg, &mut GreedySpoiler::new(seed), &mut dup, seed)
            }
            .map_err(|e| e.to_string())?;
            check(r.outcome.winner == Winner::Duplicator, || format!("h {h} p {p} seed {seed}: {}", r.outcome.reason))
        }),
    ]
}

fn sim_classes(s: &Structure, sim: &str) -> Result<(crate::eval::NodeSpace, crate::eval::QuotientGraph), String> {
    use crate::logic::Var;
    let vocab = Vocabulary::of(s);
    let space = crate::eval::NodeSpace::untyped(1, s.size());
    let never = parse_formula("false", &vocab).map_err(|e| e.to_string())?;
    let sim = parse_formula(sim, &vocab).map_err(|e| e.to_string())?;
    let g = crate::eval::interpret_semigraph(
        s,
        &Assignment::new(),
        &space,
        &[Var::elem("x")],
        &[Var::elem("y")],
        &never,
        &sim,
        None,
        Budget::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok((space, quotient(&g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_on_a_clean_build() {
        for name in SUITES {
            let report = run_suite(name, &VerifyOptions::default()).unwrap();
            for p in &report.properties {
                assert!(p.passed(), "{name}/{}: {:?}", p.name, p.counterexample);
                assert!(p.cases > 0);
            }
        }
    }

    #[test]
    fn treecomb_report_counts_frontier_checks() {
        let report = run_suite("treecomb", &VerifyOptions::default()).unwrap();
        let json = report.to_json();
        assert!(json.contains("|F| > height(X)"));
        let p = report.properties.iter().find(|p| p.name == "frontier-exceeds-component-height").unwrap();
        assert!(p.counts["|F| > height(X)"] > 0);
    }

    #[test]
    fn psp_mutation_is_caught() {
        let opts = VerifyOptions {
            psp_rule: ChildRule::AllowEqual,
            ..VerifyOptions::default()
        };
        let report = run_suite("psp", &opts).unwrap();
        assert!(!report.passed);
        let unique = report.properties.iter().find(|p| p.name == "sibling-witness-is-unique").unwrap();
        assert!(!unique.passed());
        assert!(unique.counterexample.as_deref().unwrap().contains("witnesses"));
    }

    #[test]
    fn modes_give_identical_reports() {
        let seq = VerifyOptions {
            mode: ExecMode::Sequential,
            seed: 7,
            ..VerifyOptions::default()
        };
        let par = VerifyOptions { mode: ExecMode::Parallel, ..seq };
        assert_eq!(run_suite("quotient", &seq).unwrap().to_json(), run_suite("quotient", &par).unwrap().to_json());
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert_eq!(run_suite("nope", &VerifyOptions::default()).unwrap_err(), UnknownSuite("nope".into()));
    }
}
