use super::*;
use crate::eval::eval_formula;
use crate::fixtures::{bijection_cases, formula_fixtures, indexed, permuted, random_structure, small_graph};
use crate::logic::{parse_formula, Vocabulary};
use crate::strategy::{duplicator_by_name, FormulaSpoiler, GreedySpoiler, IdentityDuplicator, RandomSpoiler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> crate::fixtures::GameFixture {
    formula_fixtures().into_iter().find(|f| f.name == name).expect("fixture")
}

fn cfg_of(name: &str) -> GameConfig {
    let fx = fixture(name);
    let k = fx.k();
    GameConfig::new(fx.a, fx.b, k, fx.q).unwrap()
}

fn open(vocab: &Vocabulary, edge: &str, sim: &str, start: Vec<Value>, counter: u32) -> GraphOpen {
    GraphOpen {
        x: vec![Var::elem("x")],
        y: vec![Var::elem("y")],
        edge: parse_formula(edge, vocab).unwrap(),
        sim: parse_formula(sim, vocab).unwrap(),
        params: Vec::new(),
        start,
        counter: BigUint::from(counter),
    }
}

#[test]
fn broken_constants_end_the_game_at_once() {
    let game = Game::start_default(cfg_of("constant-loop")).unwrap();
    assert_eq!(game.outcome().unwrap().winner, Winner::Spoiler);
}

#[test]
fn full_position_is_an_immediate_duplicator_win() {
    let s = small_graph();
    let cfg = GameConfig::new(s.clone(), s.clone(), 2, 0).unwrap();
    let f0 = PartialInjection::identity_on([Elem(0), Elem(1)]);
    let game = Game::start(cfg, f0).unwrap();
    assert_eq!(game.outcome().unwrap().winner, Winner::Duplicator);
    let cfg0 = GameConfig::new(s.clone(), s, 0, 0).unwrap();
    assert_eq!(Game::start_default(cfg0).unwrap().outcome().unwrap().winner, Winner::Duplicator);
}

#[test]
fn initial_position_must_respect_constants() {
    let fx = fixture("constant-out");
    let cfg = GameConfig::new(fx.a, fx.b, 2, 0).unwrap();
    let f0 = PartialInjection::from_pairs([(Elem(0), Elem(1))]).unwrap();
    assert!(matches!(Game::start(cfg, f0), Err(GameError::ConstantMismatch(_))));
}

#[test]
fn extension_must_extend_the_position() {
    let mut game = Game::start_default(cfg_of("constant-out")).unwrap();
    // c = a0 is pebbled to a0; swapping a0 and a1 does not extend that.
    game.apply_extension(&[Elem(1), Elem(0), Elem(2)], Elem(2)).unwrap();
    let o = game.outcome().unwrap();
    assert_eq!(o.winner, Winner::Spoiler);
    assert!(o.reason.contains("forfeit"));
}

#[test]
fn atom_mismatch_after_pick_is_a_spoiler_win() {
    let fx = fixture("some-s");
    let cfg = GameConfig::new(fx.a, fx.b, 1, 0).unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    game.apply_extension(&[Elem(0), Elem(1), Elem(2)], Elem(0)).unwrap();
    assert_eq!(game.outcome().unwrap().winner, Winner::Spoiler);
}

#[test]
fn pebbles_reaching_k_end_in_a_duplicator_win() {
    let s = small_graph();
    let cfg = GameConfig::new(s.clone(), s, 2, 0).unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    let id: Vec<Elem> = (0..5).map(Elem).collect();
    game.apply_extension(&id, Elem(0)).unwrap();
    assert!(game.outcome().is_none());
    game.apply_extension(&id, Elem(3)).unwrap();
    assert_eq!(game.outcome().unwrap().winner, Winner::Duplicator);
}

#[test]
fn oversized_graph_move_is_a_spoiler_forfeit() {
    let s = small_graph();
    let cfg = GameConfig::new(s.clone(), s.clone(), 1, 0).unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    let o = open(&Vocabulary::of(&s), "E(x,y)", "false", vec![Value::Num(0)], 0);
    assert!(game.check_open(&o).is_err());
    game.open_graph_move(o).unwrap();
    let out = game.outcome().unwrap();
    assert_eq!(out.winner, Winner::Duplicator);
    assert!(out.reason.contains("forfeit"));
}

#[test]
fn opening_checks_rank_counter_and_start() {
    let s = small_graph();
    let vocab = Vocabulary::of(&s);
    let cfg = GameConfig::new(s.clone(), s.clone(), 3, 0).unwrap();
    let game = Game::start_default(cfg).unwrap();
    let deep = open(&vocab, "exists z. exists w. (E(x,z) & E(z,w))", "false", vec![Value::Num(0)], 0);
    assert!(game.check_open(&deep).unwrap_err().contains("rank"));
    let counter = open(&vocab, "E(x,y)", "false", vec![Value::Num(0)], 1);
    assert!(game.check_open(&counter).unwrap_err().contains("counter"));
    let start = open(&vocab, "E(x,y)", "false", vec![Value::Elem(Elem(0))], 0);
    assert!(game.check_open(&start).unwrap_err().contains("unpebbled"));
    let ok = open(&vocab, "E(x,y)", "false", vec![Value::Num(3)], 0);
    assert!(game.check_open(&ok).is_ok());
}

#[test]
fn edgeless_graph_move_exits_on_its_own() {
    let s = small_graph();
    let cfg = GameConfig::new(s.clone(), s.clone(), 3, 1).unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    game.open_graph_move(open(&Vocabulary::of(&s), "false", "false", vec![Value::Num(0)], 4))
        .unwrap();
    assert!(game.graph_must_exit());
    game.exit_graph_move().unwrap();
    assert!(matches!(game.phase, Phase::Main));
    assert!(game.f.is_empty());
}

#[test]
fn in_degree_mismatch_loses_for_duplicator() {
    let cfg = cfg_of("reach-path");
    let vocab = Vocabulary::of(&cfg.a);
    let s = cfg.a.constant("s").unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    game.open_graph_move(open(&vocab, "E(x,y)", "false", vec![Value::Elem(s)], 3))
        .unwrap();
    let id: Vec<Elem> = (0..4).map(Elem).collect();
    let err = game.check_graph_response(&id, &IdentityH).unwrap_err();
    assert!(err.contains("condition (b)"), "{err}");
    game.graph_respond(id, Box::new(IdentityH)).unwrap();
    assert_eq!(game.outcome().unwrap().winner, Winner::Spoiler);
}

#[test]
fn stepping_off_the_successors_is_a_spoiler_forfeit() {
    let s = small_graph();
    let vocab = Vocabulary::of(&s);
    let cfg = GameConfig::new(s.clone(), s.clone(), 3, 1).unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    // From a0 the only successor is a1.
    let f0 = PartialInjection::identity_on([Elem(0)]);
    game.f = f0;
    game.open_graph_move(open(&vocab, "E(x,y)", "false", vec![Value::Elem(Elem(0))], 5))
        .unwrap();
    let id: Vec<Elem> = (0..5).map(Elem).collect();
    game.graph_respond(id.clone(), Box::new(IdentityH)).unwrap();
    assert!(game.outcome().is_none());
    game.graph_step(vec![Value::Elem(Elem(3))]).unwrap();
    assert_eq!(game.outcome().unwrap().winner, Winner::Duplicator);
}

#[test]
fn counter_and_h_follow_a_step() {
    let s = small_graph();
    let vocab = Vocabulary::of(&s);
    let cfg = GameConfig::new(s.clone(), s.clone(), 3, 1).unwrap();
    let mut game = Game::start_default(cfg).unwrap();
    game.f = PartialInjection::identity_on([Elem(2)]);
    game.open_graph_move(open(&vocab, "E(x,y)", "false", vec![Value::Elem(Elem(2))], 5))
        .unwrap();
    let id: Vec<Elem> = (0..5).map(Elem).collect();
    game.graph_respond(id, Box::new(IdentityH)).unwrap();
    game.graph_step(vec![Value::Elem(Elem(0))]).unwrap();
    let Phase::Graph(st) = &game.phase else { panic!("still in the graph move") };
    // a0 has in-degree 1: ⌊(5 - 1) / 1⌋.
    assert_eq!(st.l_i, BigUint::from(4u32));
    assert_eq!(st.h_i.pairs().collect::<Vec<_>>(), vec![(Elem(0), Elem(0))]);
    game.exit_graph_move().unwrap();
    assert_eq!(game.f.len(), 2);
}

#[test]
fn h_conflicting_with_f_loses_at_exit() {
    let fx = fixture("reach-moved-target");
    let cfg = GameConfig::new(fx.a.clone(), fx.b.clone(), fx.k(), fx.q).unwrap();
    let r = run_match(&cfg, &mut FormulaSpoiler::new(fx.formula(), 0), &mut IdentityDuplicator, 0).unwrap();
    assert_eq!(r.outcome.winner, Winner::Spoiler);
    assert!(r.outcome.reason.contains("not an injection"), "{}", r.outcome.reason);
}

#[test]
fn identity_never_loses_on_identical_structures() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..60u64 {
        let s = random_structure(&mut rng, 6);
        let k = rng.gen_range(1..=4);
        let cfg = GameConfig::new(s.clone(), s, k, 1).unwrap();
        let r = if seed % 2 == 0 {
            run_match(&cfg, &mut RandomSpoiler::new(seed), &mut IdentityDuplicator, seed)
        } else {
            run_match(&cfg, &mut GreedySpoiler::new(seed), &mut IdentityDuplicator, seed)
        }
        .unwrap();
        assert_eq!(r.outcome.winner, Winner::Duplicator, "seed {seed}: {}", r.outcome.reason);
    }
}

fn counters_decrease(tr: &Transcript) -> bool {
    let mut last: Option<BigUint> = None;
    for line in &tr.lines {
        match &line.record {
            MoveRecord::GraphOpen { counter, .. } => last = Some(counter.parse().unwrap()),
            MoveRecord::Step { counter, .. } => {
                let c: BigUint = counter.parse().unwrap();
                if last.as_ref().is_some_and(|l| c >= *l) {
                    return false;
                }
                last = Some(c);
            }
            _ => {}
        }
    }
    true
}

#[test]
fn transcripts_round_trip_and_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let factory = |name: &str, seed: u64, cfg: &GameConfig| duplicator_by_name(name, seed, cfg);
    for seed in 0..30u64 {
        let a = random_structure(&mut rng, 6);
        let (b, _) = if seed % 3 == 0 {
            (random_structure(&mut rng, 6), ())
        } else {
            let (b, _) = permuted(&mut rng, &a);
            (b, ())
        };
        let Ok(cfg) = GameConfig::new(a, b, 3, 1) else { continue };
        let dup_name = ["identity", "matching", "paper"][seed as usize % 3];
        let mut dup = duplicator_by_name(dup_name, seed, &cfg).unwrap();
        let r = match run_match(&cfg, &mut RandomSpoiler::new(seed), dup.as_mut(), seed) {
            Ok(r) => r,
            Err(GameError::ConstantMismatch(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(counters_decrease(&r.transcript));
        let text = r.transcript.to_jsonl();
        let back = Transcript::from_jsonl(&text).unwrap();
        assert_eq!(back, r.transcript);
        let report = transcript::replay(&back, &factory).unwrap();
        assert!(report.matches(), "seed {seed}: {:?}", report.mismatch);
    }
}

#[test]
fn tampered_transcript_fails_replay() {
    let fx = fixture("reach-moved-target");
    let cfg = GameConfig::new(fx.a.clone(), fx.b.clone(), fx.k(), fx.q).unwrap();
    let r = run_match(&cfg, &mut FormulaSpoiler::new(fx.formula(), 0), &mut IdentityDuplicator, 0).unwrap();
    let factory = |name: &str, seed: u64, cfg: &GameConfig| duplicator_by_name(name, seed, cfg);
    let mut tr = r.transcript.clone();
    tr.lines[0].state_hash = "0".repeat(64);
    assert!(!transcript::replay(&tr, &factory).unwrap().matches());
    assert!(transcript::replay(&r.transcript, &factory).unwrap().matches());
}

#[test]
fn bijection_oracle_matches_hand_classification() {
    let cases = bijection_cases();
    assert_eq!(cases.len(), 10);
    for c in cases {
        let cfg = GameConfig::new(c.a.clone(), c.b.clone(), 0, 0).unwrap();
        let f0 = cfg.constant_map().unwrap();
        assert_eq!(bijection_game_oracle(&c.a, &c.b, &f0, c.rounds), c.duplicator_wins, "{}", c.name);
    }
}

#[test]
fn interpreted_semigraph_matches_pairwise_evaluation() {
    let s = indexed(
        6,
        &[
            ("E", 2, &[&[0, 1], &[1, 2], &[2, 0], &[3, 4], &[4, 5]]),
            ("S", 1, &[&[1], &[4]]),
        ],
        &[("c", 3)],
    );
    let vocab = Vocabulary::of(&s);
    let (x, y) = (Var::elem("x"), Var::elem("y"));
    let cases = [
        ("E(x,y) | E(y,x)", "S(x) & S(y)"),
        ("exists z. (E(x,z) & E(z,y))", "x = y | E(x,c)"),
        ("!(x = y) & S(y)", "false"),
    ];
    let space = NodeSpace::untyped(1, s.size());
    for (edge, sim) in cases {
        let e = parse_formula(edge, &vocab).unwrap();
        let m = parse_formula(sim, &vocab).unwrap();
        let g = interpret_semigraph(&s, &Assignment::new(), &space, &[x.clone()], &[y.clone()], &e, &m, None, Budget::default())
            .unwrap();
        let mut want_e = Vec::new();
        let mut want_s = Vec::new();
        for a in s.elems() {
            for b in s.elems() {
                let env: Assignment = [(x.clone(), Value::Elem(a)), (y.clone(), Value::Elem(b))].into_iter().collect();
                let pair = (a.0, b.0);
                if eval_formula(&e, &s, &env).unwrap() {
                    want_e.push(pair);
                }
                if eval_formula(&m, &s, &env).unwrap() {
                    want_s.push(pair);
                }
            }
        }
        assert_eq!(g.edges, want_e, "{edge}");
        assert_eq!(g.sim, want_s, "{sim}");
    }
}
