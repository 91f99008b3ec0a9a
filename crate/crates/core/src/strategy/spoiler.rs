use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{
    eval_formula_with, interpret_semigraph, quotient, Assignment, ChiMemo, EvalResult, NodeSpace, QuotientGraph,
};
use crate::game::{apply_h, GameConfig, GraphOpen, GraphView, HFamily, MainChoice, MainView, Spoiler};
use crate::logic::{free_vars, print_formula, Formula, Lrec, Term, Var, Vocabulary};
use crate::structure::{decode_number_tuple, encode_number_tuple, is_partial_isomorphism, Elem, PartialInjection, Structure, Value};

/// A variable name of the given stem that is not a constant.
fn fresh_var(stem: &str, vocab: &Vocabulary) -> Var {
    let mut name = stem.to_string();
    while vocab.constants.contains(&name) {
        name.push('_');
    }
    Var::elem(&name)
}

/// Sparse edge and similarity formulas over `x`, `y`: relation atoms with
/// constants in the remaining positions, `x = y`, or `false`. Anything
/// denser makes semi-graphs on large universes too expensive.
fn template_open<R: Rng>(rng: &mut R, view: &MainView, counter: BigUint) -> GraphOpen {
    let vocab = Vocabulary::of(&view.cfg.a);
    let x = fresh_var("x", &vocab);
    let y = fresh_var("y", &vocab);
    let consts: Vec<String> = vocab.constants.iter().cloned().collect();
    let wide: Vec<(String, usize)> = vocab
        .relations
        .iter()
        .filter(|(_, &a)| a >= 2)
        .map(|(n, &a)| (n.clone(), a))
        .collect();
    let atom = |rng: &mut R| -> Formula {
        if wide.is_empty() {
            return Formula::Eq(Term::Var(x.clone()), Term::Var(y.clone()));
        }
        let (name, arity) = &wide[rng.gen_range(0..wide.len())];
        let mut args = vec![Term::Var(x.clone()), Term::Var(y.clone())];
        args.shuffle(rng);
        while args.len() < *arity {
            args.push(match consts.choose(rng) {
                Some(c) => Term::Const(c.clone()),
                None => Term::Var(x.clone()),
            });
        }
        Formula::atom(name, args)
    };
    let edge = match rng.gen_range(0..6) {
        0 => Formula::Eq(Term::Var(x.clone()), Term::Var(y.clone())),
        1 => Formula::False,
        _ => atom(rng),
    };
    let sim = match rng.gen_range(0..10) {
        0..=6 => Formula::False,
        7 => Formula::Eq(Term::Var(x.clone()), Term::Var(y.clone())),
        _ => atom(rng),
    };
    let pebbled: Vec<Elem> = view.f.domain().collect();
    let start = match pebbled.choose(rng) {
        Some(&e) if rng.gen_bool(0.8) => Value::Elem(e),
        _ => Value::Num(rng.gen_range(0..=view.cfg.n() as u64)),
    };
    GraphOpen {
        x: vec![x],
        y: vec![y],
        edge,
        sim,
        params: Vec::new(),
        start: vec![start],
        counter,
    }
}

fn random_counter<R: Rng>(rng: &mut R, cfg: &GameConfig) -> BigUint {
    let max = cfg.max_counter().to_u64().unwrap_or(u64::MAX).min(1 << 20);
    BigUint::from(rng.gen_range(0..=max))
}

fn unpebbled(view: &MainView) -> Vec<Elem> {
    view.cfg.a.elems().filter(|&e| !view.f.contains(e)).collect()
}

/// An element whose pebbling under `g` breaks the partial isomorphism, if
/// any; otherwise a random unpebbled one.
fn breaking_pick<R: Rng>(rng: &mut R, view: &MainView, g: &[Elem]) -> Elem {
    let free = unpebbled(view);
    for &a in &free {
        let mut f = view.f.clone();
        if f.insert(a, g[a.index()]).is_err() || !is_partial_isomorphism(&f, &view.cfg.a, &view.cfg.b).unwrap_or(true) {
            return a;
        }
    }
    free.choose(rng).copied().unwrap_or(Elem(0))
}

/// Whether `f ∪ h_{U(v̄)}` fails as a position.
fn breaks(cfg: &GameConfig, f: &PartialInjection, t: &[Value], h: &dyn HFamily) -> bool {
    let Ok(img) = apply_h(h, t, cfg.n()) else {
        return true;
    };
    let mut g = f.clone();
    for (x, y) in t.iter().zip(&img) {
        if let (Value::Elem(a), Value::Elem(b)) = (x, y) {
            if g.insert(*a, *b).is_err() {
                return true;
            }
        }
    }
    !is_partial_isomorphism(&g, &cfg.a, &cfg.b).unwrap_or(true)
}

/// Uniformly random legal play with sparse graph-move templates.
pub struct RandomSpoiler {
    rng: ChaCha8Rng,
}

impl RandomSpoiler {
    pub fn new(seed: u64) -> RandomSpoiler {
        RandomSpoiler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Spoiler for RandomSpoiler {
    fn name(&self) -> String {
        "random".into()
    }

    fn main_move(&mut self, view: &MainView) -> MainChoice {
        if view.cfg.k - view.f.len() >= 2 && self.rng.gen_bool(0.4) {
            let counter = random_counter(&mut self.rng, view.cfg);
            MainChoice::Graph(template_open(&mut self.rng, view, counter))
        } else {
            MainChoice::Extension
        }
    }

    fn pick(&mut self, view: &MainView, _g: &[Elem]) -> Elem {
        let free = unpebbled(view);
        match free.choose(&mut self.rng) {
            Some(&e) => e,
            None => Elem(self.rng.gen_range(0..view.cfg.n() as u32)),
        }
    }

    fn graph_continue(&mut self, _view: &GraphView) -> bool {
        self.rng.gen_bool(0.6)
    }

    fn graph_step(&mut self, view: &GraphView, _g: &[Elem], _h: &dyn HFamily) -> Vec<Value> {
        let succ = view.graph.successors();
        let v = succ[self.rng.gen_range(0..succ.len())];
        view.graph.space.tuple(v)
    }
}

/// Successors sampled per greedy step.
const GREEDY_SAMPLE: usize = 64;
/// Rounds after which the greedy Spoiler leaves a graph move.
const GREEDY_ROUNDS: usize = 6;

/// Pebbles elements that break the position when it can, and walks graph
/// moves towards nodes whose `h` image breaks it, leaving as soon as a
/// break is in hand or no step helps.
pub struct GreedySpoiler {
    rng: ChaCha8Rng,
    stuck: bool,
}

impl GreedySpoiler {
    pub fn new(seed: u64) -> GreedySpoiler {
        GreedySpoiler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            stuck: false,
        }
    }
}

impl Spoiler for GreedySpoiler {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn main_move(&mut self, view: &MainView) -> MainChoice {
        self.stuck = false;
        if view.cfg.k - view.f.len() >= 2 && self.rng.gen_bool(0.5) {
            MainChoice::Graph(template_open(&mut self.rng, view, view.cfg.max_counter()))
        } else {
            MainChoice::Extension
        }
    }

    fn pick(&mut self, view: &MainView, g: &[Elem]) -> Elem {
        breaking_pick(&mut self.rng, view, g)
    }

    fn graph_continue(&mut self, view: &GraphView) -> bool {
        let st = view.graph;
        let broken = match view.f.compose(&st.h_i) {
            Ok(f) => !is_partial_isomorphism(&f, &view.cfg.a, &view.cfg.b).unwrap_or(true),
            Err(_) => true,
        };
        !broken && !self.stuck && st.step < GREEDY_ROUNDS
    }

    fn graph_step(&mut self, view: &GraphView, _g: &[Elem], h: &dyn HFamily) -> Vec<Value> {
        let st = view.graph;
        let mut succ = st.successors();
        succ.shuffle(&mut self.rng);
        succ.truncate(GREEDY_SAMPLE);
        for &v in &succ {
            let t = st.space.tuple(v);
            if breaks(view.cfg, view.f, &t, h) {
                return t;
            }
        }
        self.stuck = true;
        st.space.tuple(succ[0])
    }
}

/// A formula whose truth differs between `(A, env_a)` and `(B, env_b)`,
/// with `env_b = f ∘ env_a` on elements.
#[derive(Clone, Debug)]
struct Obligation {
    phi: Formula,
    env_a: Assignment,
    env_b: Assignment,
}

struct GraphPlan {
    lrec: Lrec,
    env_a: Assignment,
    env_b: Assignment,
    space: NodeSpace,
    ga: QuotientGraph,
    gb: QuotientGraph,
    memo_a: ChiMemo,
    memo_b: ChiMemo,
    /// `ā_i` and `ℓ_i` as last seen.
    cur: Vec<Value>,
    counter: BigUint,
}

enum Plan {
    Idle,
    Quantifier { var: Var, body: Formula },
    Graph(Box<GraphPlan>),
}

/// Plays the strategy read off a distinguishing formula: quantifiers and
/// counting become extension moves that pebble a witness of disagreement,
/// lrec nodes become graph moves that walk to successors where the
/// recursion disagrees, and exit to the label formula when the successor
/// counts agree. When the thread is lost (lfp nodes, or a Duplicator answer
/// the analysis does not cover) it falls back to greedy picks.
pub struct FormulaSpoiler {
    formula: Formula,
    rng: ChaCha8Rng,
    ob: Option<Obligation>,
    plan: Plan,
    started: bool,
    lost: bool,
}

fn differs(cfg: &GameConfig, phi: &Formula, env_a: &Assignment, env_b: &Assignment) -> EvalResult<bool> {
    Ok(eval_formula_with(phi, &cfg.a, env_a, cfg.budget)? != eval_formula_with(phi, &cfg.b, env_b, cfg.budget)?)
}

fn term_value(s: &Structure, env: &Assignment, t: &Term) -> Option<Value> {
    match t {
        Term::Var(v) => env.get(v).copied(),
        Term::Const(c) => s.constant(c).map(Value::Elem),
        Term::Num(m) => Some(Value::Num(*m)),
    }
}

fn out_count(g: &QuotientGraph, memo: &mut ChiMemo, v: usize, l: &BigUint) -> usize {
    if l.is_zero() {
        return 0;
    }
    let cls = g.class(v);
    g.graph
        .out(cls)
        .iter()
        .filter(|&&x| {
            let next = (l - BigUint::one()) / g.graph.in_degree(x as usize);
            memo.query(&g.graph, x as usize, &BigInt::from(next))
        })
        .count()
}

impl FormulaSpoiler {
    pub fn new(formula: Formula, seed: u64) -> FormulaSpoiler {
        FormulaSpoiler {
            formula,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ob: None,
            plan: Plan::Idle,
            started: false,
            lost: false,
        }
    }

    /// Whether the strategy has had to fall back to greedy play.
    pub fn lost_thread(&self) -> bool {
        self.lost
    }

    fn lose(&mut self) {
        self.lost = true;
        self.ob = None;
        self.plan = Plan::Idle;
    }

    /// Reduces the obligation through connectives and number quantifiers
    /// until it calls for a move.
    fn next_move(&mut self, view: &MainView) -> MainChoice {
        let cfg = view.cfg;
        loop {
            let Some(ob) = self.ob.as_mut() else {
                return MainChoice::Extension;
            };
            match ob.phi.clone() {
                Formula::Not(b) => ob.phi = *b,
                Formula::And(a, b) | Formula::Or(a, b) => match differs(cfg, &a, &ob.env_a, &ob.env_b) {
                    Ok(true) => ob.phi = *a,
                    Ok(false) => ob.phi = *b,
                    Err(_) => {
                        self.lose();
                        return MainChoice::Extension;
                    }
                },
                Formula::Exists(x, body) | Formula::Forall(x, body) if x.sort == crate::logic::Sort::Num => {
                    let hit = (0..=cfg.n() as u64).find(|&m| {
                        let mut ea = ob.env_a.clone();
                        let mut eb = ob.env_b.clone();
                        ea.insert(x.clone(), Value::Num(m));
                        eb.insert(x.clone(), Value::Num(m));
                        differs(cfg, &body, &ea, &eb).unwrap_or(false)
                    });
                    match hit {
                        Some(m) => {
                            ob.env_a.insert(x.clone(), Value::Num(m));
                            ob.env_b.insert(x, Value::Num(m));
                            ob.phi = *body;
                        }
                        None => {
                            self.lose();
                            return MainChoice::Extension;
                        }
                    }
                }
                Formula::Exists(var, body) | Formula::Forall(var, body) | Formula::Count { var, body, .. } => {
                    self.plan = Plan::Quantifier { var, body: *body };
                    return MainChoice::Extension;
                }
                Formula::Lrec(l) => match self.open(view, *l) {
                    Some(open) => return MainChoice::Graph(open),
                    None => {
                        self.lose();
                        return MainChoice::Extension;
                    }
                },
                _ => {
                    self.lose();
                    return MainChoice::Extension;
                }
            }
        }
    }

    fn open(&mut self, view: &MainView, l: Lrec) -> Option<GraphOpen> {
        let cfg = view.cfg;
        let ob = self.ob.as_ref()?;
        let bound: Vec<&Var> = l.u.iter().chain(&l.v).collect();
        let mut params: Vec<(Var, Value)> = Vec::new();
        for v in free_vars(&l.edge).into_iter().chain(free_vars(&l.sim)) {
            if !bound.contains(&&v) && !params.iter().any(|(p, _)| *p == v) {
                params.push((v.clone(), *ob.env_a.get(&v)?));
            }
        }
        let start: Vec<Value> = l
            .w
            .iter()
            .map(|t| term_value(&cfg.a, &ob.env_a, t))
            .collect::<Option<_>>()?;
        let digits: Vec<u64> = l
            .r
            .iter()
            .map(|t| term_value(&cfg.a, &ob.env_a, t).and_then(|v| v.as_num()))
            .collect::<Option<_>>()?;
        let counter = encode_number_tuple(&digits, cfg.n() as u64).ok()?;
        let space = NodeSpace::untyped(l.c(), cfg.n());
        let label = Some((l.p.as_slice(), &l.label));
        let ga = interpret_semigraph(&cfg.a, &ob.env_a, &space, &l.u, &l.v, &l.edge, &l.sim, label, cfg.budget).ok()?;
        let gb = interpret_semigraph(&cfg.b, &ob.env_b, &space, &l.u, &l.v, &l.edge, &l.sim, label, cfg.budget).ok()?;
        let open = GraphOpen {
            x: l.u.clone(),
            y: l.v.clone(),
            edge: l.edge.clone(),
            sim: l.sim.clone(),
            params,
            start: start.clone(),
            counter: counter.clone(),
        };
        self.plan = Plan::Graph(Box::new(GraphPlan {
            env_a: ob.env_a.clone(),
            env_b: ob.env_b.clone(),
            lrec: l,
            space,
            ga: quotient(&ga),
            gb: quotient(&gb),
            memo_a: ChiMemo::new(),
            memo_b: ChiMemo::new(),
            cur: start,
            counter,
        }));
        Some(open)
    }

    /// After a graph move: the label formula at `ā_i` with the successor
    /// count as its number tuple.
    fn after_graph(&mut self, view: &MainView, mut plan: Box<GraphPlan>) {
        let cfg = view.cfg;
        let Some(b) = view.f.apply_tuple(&plan.cur) else {
            return self.lose();
        };
        let ia = plan.space.index(&plan.cur).expect("node");
        let m = out_count(&plan.ga, &mut plan.memo_a, ia, &plan.counter);
        let l = &plan.lrec;
        let Some(digits) = decode_number_tuple(&BigUint::from(m), cfg.n() as u64, l.p.len()) else {
            return self.lose();
        };
        let mut env_a = plan.env_a.clone();
        let mut env_b = plan.env_b.clone();
        for ((u, va), vb) in l.u.iter().zip(&plan.cur).zip(&b) {
            env_a.insert(u.clone(), *va);
            env_b.insert(u.clone(), *vb);
        }
        for (p, d) in l.p.iter().zip(&digits) {
            env_a.insert(p.clone(), Value::Num(*d));
            env_b.insert(p.clone(), Value::Num(*d));
        }
        if differs(cfg, &l.label, &env_a, &env_b).unwrap_or(false) {
            self.ob = Some(Obligation {
                phi: l.label.clone(),
                env_a,
                env_b,
            });
        } else {
            self.lose();
        }
    }

    pub fn formula_text(&self) -> String {
        print_formula(&self.formula)
    }
}

impl Spoiler for FormulaSpoiler {
    fn name(&self) -> String {
        "formula".into()
    }

    fn main_move(&mut self, view: &MainView) -> MainChoice {
        if !self.started {
            self.started = true;
            let (ea, eb) = (Assignment::new(), Assignment::new());
            match differs(view.cfg, &self.formula, &ea, &eb) {
                Ok(true) => {
                    self.ob = Some(Obligation {
                        phi: self.formula.clone(),
                        env_a: ea,
                        env_b: eb,
                    })
                }
                _ => self.lose(),
            }
        }
        if let Plan::Graph(plan) = std::mem::replace(&mut self.plan, Plan::Idle) {
            self.after_graph(view, plan);
        }
        if self.lost {
            return MainChoice::Extension;
        }
        self.next_move(view)
    }

    fn pick(&mut self, view: &MainView, g: &[Elem]) -> Elem {
        let Plan::Quantifier { var, body } = std::mem::replace(&mut self.plan, Plan::Idle) else {
            return breaking_pick(&mut self.rng, view, g);
        };
        let Some(ob) = self.ob.take() else {
            return breaking_pick(&mut self.rng, view, g);
        };
        for u in view.cfg.a.elems() {
            let mut ea = ob.env_a.clone();
            let mut eb = ob.env_b.clone();
            ea.insert(var.clone(), Value::Elem(u));
            eb.insert(var.clone(), Value::Elem(g[u.index()]));
            if differs(view.cfg, &body, &ea, &eb).unwrap_or(false) {
                self.ob = Some(Obligation {
                    phi: body,
                    env_a: ea,
                    env_b: eb,
                });
                return u;
            }
        }
        self.lose();
        breaking_pick(&mut self.rng, view, g)
    }

    fn graph_continue(&mut self, view: &GraphView) -> bool {
        let Plan::Graph(plan) = &mut self.plan else {
            return false;
        };
        let st = view.graph;
        plan.cur = st.a_i.clone();
        plan.counter = st.l_i.clone();
        let Some(b) = view.f.compose(&st.h_i).ok().and_then(|f| f.apply_tuple(&st.a_i)) else {
            return false;
        };
        let ib = plan.space.index(&b).expect("node");
        let ma = out_count(&plan.ga, &mut plan.memo_a, st.a_idx, &st.l_i);
        let mb = out_count(&plan.gb, &mut plan.memo_b, ib, &st.l_i);
        ma != mb
    }

    fn graph_step(&mut self, view: &GraphView, _g: &[Elem], h: &dyn HFamily) -> Vec<Value> {
        let st = view.graph;
        let succ = st.successors();
        let Plan::Graph(plan) = &mut self.plan else {
            return st.space.tuple(succ[0]);
        };
        let l1 = &st.l_i - BigUint::one();
        for &v in &succ {
            let t = st.space.tuple(v);
            let Ok(w) = apply_h(h, &t, view.cfg.n()) else {
                continue;
            };
            let iw = plan.space.index(&w).expect("node");
            let la = &l1 / plan.ga.class_in_degree(v);
            let lb = &l1 / plan.gb.class_in_degree(iw);
            let ca = plan.memo_a.query(&plan.ga.graph, plan.ga.class(v), &BigInt::from(la.clone()));
            let cb = plan.memo_b.query(&plan.gb.graph, plan.gb.class(iw), &BigInt::from(lb));
            if ca != cb {
                plan.cur = t.clone();
                plan.counter = la;
                return t;
            }
        }
        let t = st.space.tuple(succ[0]);
        plan.counter = &l1 / plan.ga.class_in_degree(succ[0]);
        plan.cur = t.clone();
        self.lost = true;
        t
    }
}
