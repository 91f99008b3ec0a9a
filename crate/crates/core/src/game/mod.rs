//! The k-step, q-degree LREC= game on two structures over one universe.
//!
//! [`Game`] is a state machine over positions `f`; [`run_match`] drives it
//! with a [`Spoiler`] and a [`Duplicator`] and records a JSONL
//! [`Transcript`]. Graph rounds work on the quotients `[G_A]`, `[G_B]` of the
//! interpreted semi-graphs; `ā_i` is kept as a concrete node.

pub mod oracle;
pub mod transcript;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{interpret_semigraph, quotient, Assignment, Budget, EvalError, NodeSpace, QuotientGraph};
use crate::logic::{free_vars, iteration_degree, print_formula, rank, Formula, Sort, Var};
use crate::structure::{is_partial_isomorphism, Elem, PartialInjection, Structure, Value};

pub use oracle::bijection_game_oracle;
pub use transcript::{Actor, MoveLine, MoveRecord, Transcript, TranscriptHeader};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("structures do not share a universe and vocabulary")]
    Incompatible,
    #[error("initial position does not respect constant {0}")]
    ConstantMismatch(String),
    #[error("initial position has {found} pebbles, more than k = {k}")]
    TooManyPebbles { k: usize, found: usize },
    #[error("illegal move: {0}")]
    Illegal(String),
    #[error("the game is over")]
    Finished,
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("transcript: {0}")]
    Transcript(String),
}

impl GameError {
    pub fn is_budget(&self) -> bool {
        matches!(self, GameError::Eval(e) if e.is_budget())
    }
}

/// The two structures and the step and degree budgets.
#[derive(Clone, Debug)]
pub struct GameConfig {
    pub a: Structure,
    pub b: Structure,
    pub k: usize,
    pub q: usize,
    pub budget: Budget,
}

impl GameConfig {
    pub fn new(a: Structure, b: Structure, k: usize, q: usize) -> Result<GameConfig, GameError> {
        if !a.same_universe(&b) || a.signature() != b.signature() {
            return Err(GameError::Incompatible);
        }
        Ok(GameConfig {
            a,
            b,
            k,
            q,
            budget: Budget::default(),
        })
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn n(&self) -> usize {
        self.a.size()
    }

    /// `e^A ↦ e^B` for every constant `e`.
    pub fn constant_map(&self) -> Result<PartialInjection, GameError> {
        let mut f = PartialInjection::new();
        for (c, ea) in self.a.constants() {
            let eb = self.b.constant(c).expect("same signature");
            f.insert(ea, eb).map_err(|_| GameError::ConstantMismatch(c.to_string()))?;
        }
        Ok(f)
    }

    /// Largest legal starting counter, `(n+1)^q - 1`: the largest value
    /// `⟨r̄⟩` of a `q`-tuple of numbers.
    pub fn max_counter(&self) -> BigUint {
        BigUint::from(self.n() + 1).pow(self.q as u32) - 1u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Winner {
    Spoiler,
    Duplicator,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::Spoiler => write!(f, "Spoiler"),
            Winner::Duplicator => write!(f, "Duplicator"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub winner: Winner,
    pub reason: String,
}

impl Outcome {
    fn new(winner: Winner, reason: impl Into<String>) -> Outcome {
        Outcome {
            winner,
            reason: reason.into(),
        }
    }
}

/// Spoiler's opening of a graph move.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphOpen {
    pub x: Vec<Var>,
    pub y: Vec<Var>,
    pub edge: Formula,
    pub sim: Formula,
    /// Free variables of the formulas other than `x̄`, `ȳ`: element values
    /// must be pebbled; numbers are fixed by every map.
    pub params: Vec<(Var, Value)>,
    pub start: Vec<Value>,
    pub counter: BigUint,
}

impl GraphOpen {
    pub fn c(&self) -> usize {
        self.x.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MainChoice {
    Extension,
    Graph(GraphOpen),
}

/// A family of injections `h_Y`, one per `Y ⊆ U` with `|Y| ≤ c`.
pub trait HFamily {
    /// Images of the members of `y` (sorted, without repeats), in order.
    fn image(&self, y: &[Elem]) -> Vec<Elem>;
}

/// `h_Y(y) = y`.
pub struct IdentityH;

impl HFamily for IdentityH {
    fn image(&self, y: &[Elem]) -> Vec<Elem> {
        y.to_vec()
    }
}

/// `h_Y` as the restriction of one bijection of `U`.
pub struct RestrictionH(pub Vec<Elem>);

impl HFamily for RestrictionH {
    fn image(&self, y: &[Elem]) -> Vec<Elem> {
        y.iter().map(|e| self.0[e.index()]).collect()
    }
}

/// The state of a graph move in progress.
pub struct GraphState {
    pub open: GraphOpen,
    pub space: NodeSpace,
    pub ga: QuotientGraph,
    pub gb: QuotientGraph,
    /// `ā_i` and its node index.
    pub a_i: Vec<Value>,
    pub a_idx: usize,
    pub h_i: PartialInjection,
    pub l_i: BigUint,
    /// Rounds completed.
    pub step: usize,
    /// Set between Duplicator's response and Spoiler's step.
    pending: Option<Pending>,
}

struct Pending {
    g: Vec<Elem>,
    h: Box<dyn HFamily>,
}

impl GraphState {
    pub fn c(&self) -> usize {
        self.open.c()
    }

    /// Nodes whose class is an out-neighbour of `ā_i`'s class in `[G_A]`.
    pub fn successors(&self) -> Vec<usize> {
        let ca = self.ga.class(self.a_idx);
        self.ga
            .graph
            .out(ca)
            .iter()
            .flat_map(|&cls| self.ga.classes[cls as usize].iter().map(|&v| v as usize))
            .collect()
    }

    pub fn has_successor(&self) -> bool {
        !self.ga.graph.out(self.ga.class(self.a_idx)).is_empty()
    }
}

pub enum Phase {
    Main,
    Graph(Box<GraphState>),
    Over(Outcome),
}

/// What an agent sees in the main phase.
pub struct MainView<'g> {
    pub cfg: &'g GameConfig,
    pub f: &'g PartialInjection,
    pub moves: usize,
}

/// What an agent sees during a graph move.
pub struct GraphView<'g> {
    pub cfg: &'g GameConfig,
    pub f: &'g PartialInjection,
    pub graph: &'g GraphState,
}

pub trait Spoiler {
    fn name(&self) -> String;
    fn main_move(&mut self, view: &MainView) -> MainChoice;
    /// The element to pebble after Duplicator's bijection `g`.
    fn pick(&mut self, view: &MainView, g: &[Elem]) -> Elem;
    /// Whether to play another round rather than end the graph move.
    fn graph_continue(&mut self, view: &GraphView) -> bool;
    /// `ā_{i+1}` after Duplicator's `g_i` and `h` family.
    fn graph_step(&mut self, view: &GraphView, g: &[Elem], h: &dyn HFamily) -> Vec<Value>;
}

pub trait Duplicator {
    fn name(&self) -> String;
    /// A bijection of `U` extending `f`, as the image of each element.
    fn extension(&mut self, view: &MainView) -> Vec<Elem>;
    fn graph_round(&mut self, view: &GraphView) -> (Vec<Elem>, Box<dyn HFamily>);
}

/// Elements of a tuple as a sorted set `U(v̄)`.
pub fn tuple_elems(t: &[Value]) -> Vec<Elem> {
    let set: BTreeSet<Elem> = t.iter().filter_map(|v| v.as_elem()).collect();
    set.into_iter().collect()
}

/// `h_{U(v̄)}(v̄)`, checking that the image of `U(v̄)` is injective.
pub fn apply_h(h: &dyn HFamily, t: &[Value], n: usize) -> Result<Vec<Value>, String> {
    let ys = tuple_elems(t);
    let img = h.image(&ys);
    check_h_image(&ys, &img, n)?;
    Ok(t
        .iter()
        .map(|v| match v {
            Value::Elem(e) => Value::Elem(img[ys.binary_search(e).expect("member")]),
            num => *num,
        })
        .collect())
}

fn check_h_image(ys: &[Elem], img: &[Elem], n: usize) -> Result<(), String> {
    if img.len() != ys.len() {
        return Err(format!("h_Y returned {} images for {} elements", img.len(), ys.len()));
    }
    if img.iter().any(|e| e.index() >= n) {
        return Err("h_Y maps outside the universe".into());
    }
    let distinct: BTreeSet<&Elem> = img.iter().collect();
    if distinct.len() != img.len() {
        return Err("h_Y is not injective".into());
    }
    Ok(())
}

fn check_permutation(g: &[Elem], n: usize) -> Result<(), String> {
    if g.len() != n {
        return Err(format!("map has {} entries for a universe of {n}", g.len()));
    }
    let mut seen = vec![false; n];
    for e in g {
        if e.index() >= n || std::mem::replace(&mut seen[e.index()], true) {
            return Err("map is not a bijection".into());
        }
    }
    Ok(())
}

fn apply_perm(g: &[Elem], t: &[Value]) -> Vec<Value> {
    t.iter()
        .map(|v| match v {
            Value::Elem(e) => Value::Elem(g[e.index()]),
            num => *num,
        })
        .collect()
}

/// The game state machine.
pub struct Game {
    pub cfg: GameConfig,
    pub f: PartialInjection,
    pub phase: Phase,
    /// Main-phase moves started.
    pub moves: usize,
}

impl Game {
    /// Extension moves that re-pebble an element and graph moves that add
    /// nothing leave `f` unchanged; after this many main moves Duplicator
    /// wins.
    pub fn max_moves(&self) -> usize {
        4 * self.cfg.k + 4
    }

    pub fn start(cfg: GameConfig, f0: PartialInjection) -> Result<Game, GameError> {
        for (c, ea) in cfg.a.constants() {
            let eb = cfg.b.constant(c).expect("same signature");
            let bad_forward = f0.get(ea).is_some_and(|x| x != eb);
            let bad_back = f0.preimage(eb).is_some_and(|x| x != ea);
            if bad_forward || bad_back {
                return Err(GameError::ConstantMismatch(c.to_string()));
            }
        }
        if f0.len() > cfg.k {
            return Err(GameError::TooManyPebbles {
                k: cfg.k,
                found: f0.len(),
            });
        }
        let mut game = Game {
            cfg,
            f: f0,
            phase: Phase::Main,
            moves: 0,
        };
        game.settle();
        Ok(game)
    }

    /// Starts from the constant map.
    pub fn start_default(cfg: GameConfig) -> Result<Game, GameError> {
        let f0 = cfg.constant_map()?;
        Game::start(cfg, f0)
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        match &self.phase {
            Phase::Over(o) => Some(o),
            _ => None,
        }
    }

    fn end(&mut self, winner: Winner, reason: impl Into<String>) {
        self.phase = Phase::Over(Outcome::new(winner, reason));
    }

    /// Re-evaluates the win conditions in the main phase.
    fn settle(&mut self) {
        if !matches!(self.phase, Phase::Main) {
            return;
        }
        let iso = is_partial_isomorphism(&self.f, &self.cfg.a, &self.cfg.b).expect("compatible structures");
        if !iso {
            self.end(Winner::Spoiler, "position is not a partial isomorphism");
        } else if self.f.len() >= self.cfg.k {
            self.end(Winner::Duplicator, format!("{} pebbles placed", self.f.len()));
        } else if self.moves >= self.max_moves() {
            self.end(Winner::Duplicator, "move limit reached");
        }
    }

    pub fn forfeit(&mut self, loser: Winner, reason: impl Into<String>) {
        let winner = match loser {
            Winner::Spoiler => Winner::Duplicator,
            Winner::Duplicator => Winner::Spoiler,
        };
        self.end(winner, format!("forfeit: {}", reason.into()));
    }

    pub fn main_view(&self) -> MainView<'_> {
        MainView {
            cfg: &self.cfg,
            f: &self.f,
            moves: self.moves,
        }
    }

    pub fn graph_view(&self) -> Option<GraphView<'_>> {
        match &self.phase {
            Phase::Graph(g) => Some(GraphView {
                cfg: &self.cfg,
                f: &self.f,
                graph: g,
            }),
            _ => None,
        }
    }

    fn require_main(&self) -> Result<(), GameError> {
        match self.phase {
            Phase::Main => Ok(()),
            Phase::Over(_) => Err(GameError::Finished),
            Phase::Graph(_) => Err(GameError::Illegal("a graph move is in progress".into())),
        }
    }

    /// Checks Duplicator's bijection for an extension move.
    pub fn check_extension(&self, g: &[Elem]) -> Result<(), String> {
        check_permutation(g, self.cfg.n())?;
        for (a, b) in self.f.pairs() {
            if g[a.index()] != b {
                return Err(format!("bijection does not extend the position at {}", self.cfg.a.name(a)));
            }
        }
        Ok(())
    }

    /// `f' = f ∪ g|{a}`. An illegal `g` is a Duplicator forfeit.
    pub fn apply_extension(&mut self, g: &[Elem], a: Elem) -> Result<(), GameError> {
        self.require_main()?;
        if let Err(e) = self.check_extension(g) {
            self.forfeit(Winner::Duplicator, e);
            return Ok(());
        }
        if a.index() >= self.cfg.n() {
            return Err(GameError::Illegal("picked element outside the universe".into()));
        }
        self.moves += 1;
        self.f.insert(a, g[a.index()]).expect("g extends f");
        self.settle();
        Ok(())
    }

    /// Validates an opening; `Err` carries the reason.
    pub fn check_open(&self, open: &GraphOpen) -> Result<(), String> {
        let (k, beta) = (self.cfg.k, self.f.len());
        let c = open.c();
        if c == 0 || open.y.len() != c {
            return Err("x̄ and ȳ must have the same positive length".into());
        }
        if 2 * c + beta > k {
            return Err(format!("c = {c} exceeds (k - |β|)/2"));
        }
        let budget = k - beta - 2 * c;
        for (name, phi) in [("edge", &open.edge), ("similarity", &open.sim)] {
            if rank(phi) > budget {
                return Err(format!("{name} formula has rank {} > {budget}", rank(phi)));
            }
            if iteration_degree(phi) > self.cfg.q {
                return Err(format!("{name} formula has degree {} > q", iteration_degree(phi)));
            }
        }
        if open.x.iter().zip(&open.y).any(|(a, b)| a.sort != b.sort) {
            return Err("x̄ and ȳ sorts differ".into());
        }
        let mut names: BTreeSet<&Var> = BTreeSet::new();
        for v in open.x.iter().chain(&open.y).chain(open.params.iter().map(|(v, _)| v)) {
            if !names.insert(v) {
                return Err(format!("variable {v} is bound twice"));
            }
            if v.sort == Sort::Elem && self.cfg.a.constant(&v.name).is_some() {
                return Err(format!("variable {v} shadows a constant"));
            }
        }
        for (v, val) in &open.params {
            match (v.sort, val) {
                (Sort::Elem, Value::Elem(e)) if self.f.contains(*e) => {}
                (Sort::Elem, _) => return Err(format!("parameter {v} is not a pebbled element")),
                (Sort::Num, Value::Num(m)) if *m <= self.cfg.n() as u64 => {}
                (Sort::Num, _) => return Err(format!("parameter {v} is not a number")),
            }
        }
        for phi in [&open.edge, &open.sim] {
            for v in free_vars(phi) {
                if !names.contains(&v) {
                    return Err(format!("free variable {v} is neither in x̄, ȳ nor a parameter"));
                }
            }
        }
        if open.start.len() != c {
            return Err("start tuple has the wrong length".into());
        }
        for v in &open.start {
            match v {
                Value::Elem(e) if !self.f.contains(*e) => return Err("start tuple uses an unpebbled element".into()),
                Value::Num(m) if *m > self.cfg.n() as u64 => return Err("start tuple number out of range".into()),
                _ => {}
            }
        }
        if open.counter > self.cfg.max_counter() {
            return Err(format!("counter exceeds {}", self.cfg.max_counter()));
        }
        Ok(())
    }

    /// Opens a graph move: builds both semi-graphs and their quotients. An
    /// illegal opening is a Spoiler forfeit; a budget overrun is an error.
    pub fn open_graph_move(&mut self, open: GraphOpen) -> Result<(), GameError> {
        self.require_main()?;
        if let Err(e) = self.check_open(&open) {
            self.forfeit(Winner::Spoiler, e);
            return Ok(());
        }
        self.moves += 1;
        let c = open.c();
        let n = self.cfg.n();
        let space = NodeSpace::untyped(c, n);
        let env_a: Assignment = open.params.iter().cloned().collect();
        let env_b: Assignment = open
            .params
            .iter()
            .map(|(v, val)| (v.clone(), self.f.apply(*val).expect("pebbled")))
            .collect();
        let build = |s: &Structure, env: &Assignment| {
            interpret_semigraph(s, env, &space, &open.x, &open.y, &open.edge, &open.sim, None, self.cfg.budget)
        };
        let ga = quotient(&build(&self.cfg.a, &env_a)?);
        let gb = quotient(&build(&self.cfg.b, &env_b)?);
        let a_idx = space.index(&open.start).expect("validated start tuple");
        let state = GraphState {
            a_i: open.start.clone(),
            a_idx,
            l_i: open.counter.clone(),
            open,
            space,
            ga,
            gb,
            h_i: PartialInjection::new(),
            step: 0,
            pending: None,
        };
        self.phase = Phase::Graph(Box::new(state));
        Ok(())
    }

    fn graph_mut(&mut self) -> Result<&mut GraphState, GameError> {
        match &mut self.phase {
            Phase::Graph(g) => Ok(g),
            Phase::Over(_) => Err(GameError::Finished),
            Phase::Main => Err(GameError::Illegal("no graph move in progress".into())),
        }
    }

    fn graph(&self) -> Result<&GraphState, GameError> {
        match &self.phase {
            Phase::Graph(g) => Ok(g),
            Phase::Over(_) => Err(GameError::Finished),
            Phase::Main => Err(GameError::Illegal("no graph move in progress".into())),
        }
    }

    /// Whether the graph move must end now: `ℓ_i = 0`, or `ā_i`'s class has
    /// no successor so Spoiler could not step.
    pub fn graph_must_exit(&self) -> bool {
        match &self.phase {
            Phase::Graph(g) => g.l_i.is_zero() || !g.has_successor(),
            _ => false,
        }
    }

    /// Ends the graph move with `f' = f ∪ h_i`. A conflict between `f` and
    /// `h_i` leaves no valid position and is a Duplicator loss.
    pub fn exit_graph_move(&mut self) -> Result<(), GameError> {
        let h = self.graph()?.h_i.clone();
        match self.f.compose(&h) {
            Ok(f2) => {
                self.f = f2;
                self.phase = Phase::Main;
                self.settle();
            }
            Err(e) => {
                self.end(Winner::Spoiler, format!("f ∪ h_i is not an injection ({e})"));
            }
        }
        Ok(())
    }

    /// Checks Duplicator's `g_i` and `h` family against the constraint on
    /// `g_i` and conditions (a)-(c). `Err` carries the violated condition.
    pub fn check_graph_response(&self, g: &[Elem], h: &dyn HFamily) -> Result<(), String> {
        let st = self.graph().map_err(|e| e.to_string())?;
        let n = self.cfg.n();
        check_permutation(g, n)?;
        let f_i = self.f.compose(&st.h_i).map_err(|e| format!("f ∪ h_i is not an injection ({e})"))?;
        let image = f_i
            .apply_tuple(&st.a_i)
            .ok_or_else(|| "f_i is undefined on ā_i".to_string())?;
        let mut inv = vec![Elem(0); n];
        for (i, e) in g.iter().enumerate() {
            inv[e.index()] = Elem(i as u32);
        }
        let back = apply_perm(&inv, &image);
        let back_idx = st.space.index(&back).expect("in space");
        if st.ga.class(back_idx) != st.ga.class(st.a_idx) {
            return Err("g_i⁻¹(f_i(ā_i)) is not in the class of ā_i".into());
        }
        let ga_i = st.space.index(&apply_perm(g, &st.a_i)).expect("in space");
        let size = st.space.size().expect("materialized");
        let mut cache: HashMap<Vec<Elem>, Vec<Elem>> = HashMap::new();
        let mut hit = vec![false; size];
        for v in 0..size {
            let t = st.space.tuple(v);
            let ys = tuple_elems(&t);
            let img = match cache.get(&ys) {
                Some(img) => img.clone(),
                None => {
                    let img = h.image(&ys);
                    check_h_image(&ys, &img, n)?;
                    cache.insert(ys.clone(), img.clone());
                    img
                }
            };
            let mapped: Vec<Value> = t
                .iter()
                .map(|x| match x {
                    Value::Elem(e) => Value::Elem(img[ys.binary_search(e).expect("member")]),
                    num => *num,
                })
                .collect();
            let w = st.space.index(&mapped).expect("in space");
            if std::mem::replace(&mut hit[w], true) {
                return Err(format!("condition (c): two nodes map to node {w}"));
            }
            if st.ga.class_in_degree(v) != st.gb.class_in_degree(w) {
                return Err(format!("condition (b): in-degree differs at node {v}"));
            }
            if st.ga.class_edge(st.a_idx, v) != st.gb.class_edge(ga_i, w) {
                return Err(format!("condition (a): edge from ā_i differs at node {v}"));
            }
        }
        Ok(())
    }

    /// Records Duplicator's round response; a violation is a Duplicator loss.
    pub fn graph_respond(&mut self, g: Vec<Elem>, h: Box<dyn HFamily>) -> Result<(), GameError> {
        let st = self.graph()?;
        if st.l_i.is_zero() || st.pending.is_some() {
            return Err(GameError::Illegal("no round is awaiting a response".into()));
        }
        if let Err(e) = self.check_graph_response(&g, &*h) {
            self.end(Winner::Spoiler, format!("Duplicator cannot answer: {e}"));
            return Ok(());
        }
        self.graph_mut()?.pending = Some(Pending { g, h });
        Ok(())
    }

    /// The pending round response, if any.
    pub fn pending_response(&self) -> Option<(&[Elem], &dyn HFamily)> {
        match &self.phase {
            Phase::Graph(g) => g.pending.as_ref().map(|p| (p.g.as_slice(), &*p.h)),
            _ => None,
        }
    }

    /// Spoiler's step to `ā_{i+1}`; a non-successor is a Spoiler forfeit.
    pub fn graph_step(&mut self, next: Vec<Value>) -> Result<(), GameError> {
        let n = self.cfg.n();
        let st = self.graph_mut()?;
        let Some(pending) = st.pending.take() else {
            return Err(GameError::Illegal("Duplicator has not answered this round".into()));
        };
        let Some(idx) = st.space.index(&next) else {
            self.forfeit(Winner::Spoiler, "step outside the node set");
            return Ok(());
        };
        if !st.ga.class_edge(st.a_idx, idx) {
            self.forfeit(Winner::Spoiler, "step to a node that is not a successor");
            return Ok(());
        }
        let deg = st.ga.class_in_degree(idx);
        st.l_i = (&st.l_i - BigUint::one()) / deg;
        let ys = tuple_elems(&next);
        let img = pending.h.image(&ys);
        check_h_image(&ys, &img, n).expect("checked for every node");
        st.h_i = PartialInjection::from_pairs(ys.into_iter().zip(img)).expect("injective");
        st.a_i = next;
        st.a_idx = idx;
        st.step += 1;
        Ok(())
    }

    /// Canonical hash of the position.
    pub fn state_hash(&self) -> String {
        let mut s = String::new();
        let pairs: Vec<String> = self.f.pairs().map(|(a, b)| format!("{}>{}", a.0, b.0)).collect();
        s.push_str(&format!("f[{}];moves={}", pairs.join(","), self.moves));
        match &self.phase {
            Phase::Main => s.push_str(";main"),
            Phase::Over(o) => s.push_str(&format!(";over:{}", o.winner)),
            Phase::Graph(g) => {
                let h: Vec<String> = g.h_i.pairs().map(|(a, b)| format!("{}>{}", a.0, b.0)).collect();
                s.push_str(&format!(
                    ";graph:a={};h[{}];l={};step={};pending={}",
                    g.a_idx,
                    h.join(","),
                    g.l_i,
                    g.step,
                    g.pending.is_some()
                ));
            }
        }
        hex::encode(Sha256::digest(s.as_bytes()))
    }
}

/// The result of one match.
pub struct MatchResult {
    pub outcome: Outcome,
    pub transcript: Transcript,
}

/// Plays one match to completion from the constant map. Budget overruns
/// while building semi-graphs surface as errors.
pub fn run_match(
    cfg: &GameConfig,
    spoiler: &mut dyn Spoiler,
    duplicator: &mut dyn Duplicator,
    seed: u64,
) -> Result<MatchResult, GameError> {
    let mut game = Game::start_default(cfg.clone())?;
    let mut tr = Transcript::new(TranscriptHeader::new(cfg, &game.f, seed, &spoiler.name(), &duplicator.name()));
    drive(&mut game, spoiler, duplicator, &mut tr)?;
    let outcome = game.outcome().expect("driven to the end").clone();
    tr.finish(&outcome);
    Ok(MatchResult { outcome, transcript: tr })
}

fn names(s: &Structure, t: &[Value]) -> Vec<String> {
    t.iter().map(|v| s.value_name(*v)).collect()
}

fn moved_pairs(s: &Structure, g: &[Elem]) -> Vec<(String, String)> {
    g.iter()
        .enumerate()
        .filter(|(i, e)| e.index() != *i)
        .map(|(i, e)| (s.name(Elem(i as u32)).to_string(), s.name(*e).to_string()))
        .collect()
}

fn drive(game: &mut Game, sp: &mut dyn Spoiler, dup: &mut dyn Duplicator, tr: &mut Transcript) -> Result<(), GameError> {
    let a = game.cfg.a.clone();
    loop {
        match &game.phase {
            Phase::Over(_) => return Ok(()),
            Phase::Main => {
                let round = game.moves + 1;
                let choice = sp.main_move(&game.main_view());
                match choice {
                    MainChoice::Extension => {
                        tr.push(round, Actor::S, MoveRecord::Extension, game.state_hash());
                        let g = dup.extension(&game.main_view());
                        tr.push(
                            round,
                            Actor::D,
                            MoveRecord::Bijection {
                                pairs: moved_pairs(&a, &g),
                            },
                            game.state_hash(),
                        );
                        if let Err(e) = game.check_extension(&g) {
                            game.forfeit(Winner::Duplicator, e);
                            continue;
                        }
                        let pick = sp.pick(&game.main_view(), &g);
                        if pick.index() >= game.cfg.n() {
                            game.forfeit(Winner::Spoiler, "picked element outside the universe");
                            continue;
                        }
                        game.apply_extension(&g, pick)?;
                        tr.push(
                            round,
                            Actor::S,
                            MoveRecord::Pick {
                                elem: a.name(pick).to_string(),
                            },
                            game.state_hash(),
                        );
                    }
                    MainChoice::Graph(open) => {
                        let record = MoveRecord::graph_open(&a, &open);
                        game.open_graph_move(open)?;
                        tr.push(round, Actor::S, record, game.state_hash());
                    }
                }
            }
            Phase::Graph(_) => {
                let round = game.moves;
                if game.graph_must_exit() {
                    game.exit_graph_move()?;
                    tr.push(round, Actor::S, MoveRecord::Exit { auto: true }, game.state_hash());
                    continue;
                }
                let go_on = sp.graph_continue(&game.graph_view().expect("graph phase"));
                if !go_on {
                    game.exit_graph_move()?;
                    tr.push(round, Actor::S, MoveRecord::Exit { auto: false }, game.state_hash());
                    continue;
                }
                tr.push(round, Actor::S, MoveRecord::Continue, game.state_hash());
                let (g, h) = dup.graph_round(&game.graph_view().expect("graph phase"));
                let pairs = moved_pairs(&a, &g);
                game.graph_respond(g, h)?;
                tr.push(round, Actor::D, MoveRecord::GraphRound { g: pairs }, game.state_hash());
                if game.outcome().is_some() {
                    continue;
                }
                let next = {
                    let view = game.graph_view().expect("graph phase");
                    let (g, h) = game.pending_response().expect("answered");
                    sp.graph_step(&view, g, h)
                };
                game.graph_step(next.clone())?;
                let (h_pairs, counter) = match &game.phase {
                    Phase::Graph(st) => (
                        st.h_i
                            .pairs()
                            .map(|(x, y)| (a.name(x).to_string(), a.name(y).to_string()))
                            .collect(),
                        st.l_i.to_string(),
                    ),
                    _ => (Vec::new(), String::new()),
                };
                tr.push(
                    round,
                    Actor::S,
                    MoveRecord::Step {
                        node: names(&a, &next),
                        h: h_pairs,
                        counter,
                    },
                    game.state_hash(),
                );
            }
        }
    }
}

/// `ℓ` as a signed integer for χ queries.
pub fn counter_as_bigint(l: &BigUint) -> BigInt {
    BigInt::from(l.clone())
}

/// `ℓ` as `u64` when it fits.
pub fn counter_u64(l: &BigUint) -> Option<u64> {
    l.to_u64()
}

/// Prints a graph-open formula pair for diagnostics.
pub fn describe_open(open: &GraphOpen) -> String {
    format!(
        "c={} edge=({}) sim=({}) counter={}",
        open.c(),
        print_formula(&open.edge),
        print_formula(&open.sim),
        open.counter
    )
}

#[cfg(test)]
mod tests;
