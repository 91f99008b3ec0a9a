//! JSONL match transcripts: a header line, one line per move, and an
//! outcome line. Every move line carries the hash of the position after it,
//! so a replay can be compared line by line.

use std::collections::VecDeque;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::{
    drive, Duplicator, Game, GameConfig, GameError, GraphOpen, GraphView, HFamily, MainChoice, MainView, Outcome,
    Spoiler, Winner,
};
use crate::eval::Budget;
use crate::logic::{parse_formula, print_formula, Var, Vocabulary};
use crate::structure::{Elem, PartialInjection, Structure, StructureFile, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Actor {
    S,
    D,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MoveRecord {
    Extension,
    Bijection {
        pairs: Vec<(String, String)>,
    },
    Pick {
        elem: String,
    },
    GraphOpen {
        c: usize,
        x: Vec<String>,
        y: Vec<String>,
        edge: String,
        sim: String,
        params: Vec<(String, String)>,
        start: Vec<String>,
        counter: String,
    },
    Continue,
    Exit {
        auto: bool,
    },
    GraphRound {
        g: Vec<(String, String)>,
    },
    Step {
        node: Vec<String>,
        h: Vec<(String, String)>,
        counter: String,
    },
}

impl MoveRecord {
    pub fn graph_open(s: &Structure, open: &GraphOpen) -> MoveRecord {
        MoveRecord::GraphOpen {
            c: open.c(),
            x: open.x.iter().map(|v| v.to_string()).collect(),
            y: open.y.iter().map(|v| v.to_string()).collect(),
            edge: print_formula(&open.edge),
            sim: print_formula(&open.sim),
            params: open.params.iter().map(|(v, val)| (v.to_string(), s.value_name(*val))).collect(),
            start: open.start.iter().map(|v| s.value_name(*v)).collect(),
            counter: open.counter.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveLine {
    pub round: usize,
    pub actor: Actor,
    #[serde(rename = "move")]
    pub record: MoveRecord,
    pub state_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub seed: u64,
    pub k: usize,
    pub q: usize,
    pub max_nodes: usize,
    pub max_pairs: usize,
    pub spoiler: String,
    pub duplicator: String,
    pub a: StructureFile,
    pub b: StructureFile,
    /// Initial position as element-name pairs.
    pub f0: Vec<(String, String)>,
    /// Free-form description of the Spoiler's plan, such as its sentence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TranscriptHeader {
    pub fn new(cfg: &GameConfig, f0: &PartialInjection, seed: u64, spoiler: &str, duplicator: &str) -> Self {
        TranscriptHeader {
            seed,
            k: cfg.k,
            q: cfg.q,
            max_nodes: cfg.budget.max_nodes,
            max_pairs: cfg.budget.max_pairs,
            spoiler: spoiler.to_string(),
            duplicator: duplicator.to_string(),
            a: cfg.a.to_file(),
            b: cfg.b.to_file(),
            f0: f0
                .pairs()
                .map(|(x, y)| (cfg.a.name(x).to_string(), cfg.a.name(y).to_string()))
                .collect(),
            note: None,
        }
    }

    pub fn config(&self) -> Result<GameConfig, GameError> {
        let a = Structure::from_file(&self.a).map_err(|e| GameError::Transcript(format!("{e:?}")))?;
        let b = Structure::from_file(&self.b).map_err(|e| GameError::Transcript(format!("{e:?}")))?;
        Ok(GameConfig::new(a, b, self.k, self.q)?.with_budget(Budget {
            max_nodes: self.max_nodes,
            max_pairs: self.max_pairs,
        }))
    }

    fn initial(&self, cfg: &GameConfig) -> Result<PartialInjection, GameError> {
        let mut f = PartialInjection::new();
        for (x, y) in &self.f0 {
            f.insert(elem(&cfg.a, x)?, elem(&cfg.a, y)?)
                .map_err(|e| GameError::Transcript(e.to_string()))?;
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct OutcomeLine {
    outcome: OutcomeRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct OutcomeRecord {
    winner: String,
    reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub lines: Vec<MoveLine>,
    pub outcome: Option<Outcome>,
}

impl Transcript {
    pub fn new(header: TranscriptHeader) -> Transcript {
        Transcript {
            header,
            lines: Vec::new(),
            outcome: None,
        }
    }

    pub fn push(&mut self, round: usize, actor: Actor, record: MoveRecord, state_hash: String) {
        self.lines.push(MoveLine {
            round,
            actor,
            record,
            state_hash,
        });
    }

    pub fn finish(&mut self, outcome: &Outcome) {
        self.outcome = Some(outcome.clone());
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("serializable");
        out.push('\n');
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line).expect("serializable"));
            out.push('\n');
        }
        if let Some(o) = &self.outcome {
            let line = OutcomeLine {
                outcome: OutcomeRecord {
                    winner: o.winner.to_string(),
                    reason: o.reason.clone(),
                },
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, GameError> {
        let bad = |i: usize, e: serde_json::Error| GameError::Transcript(format!("line {}: {e}", i + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i0, first) = lines.next().ok_or_else(|| GameError::Transcript("empty transcript".into()))?;
        let header: TranscriptHeader = serde_json::from_str(first).map_err(|e| bad(i0, e))?;
        let mut tr = Transcript::new(header);
        for (i, line) in lines {
            if tr.outcome.is_some() {
                return Err(GameError::Transcript(format!("line {}: text after the outcome", i + 1)));
            }
            if let Ok(o) = serde_json::from_str::<OutcomeLine>(line) {
                let winner = match o.outcome.winner.as_str() {
                    "Spoiler" => Winner::Spoiler,
                    "Duplicator" => Winner::Duplicator,
                    w => return Err(GameError::Transcript(format!("line {}: unknown winner {w}", i + 1))),
                };
                tr.outcome = Some(Outcome {
                    winner,
                    reason: o.outcome.reason,
                });
                continue;
            }
            tr.lines.push(serde_json::from_str(line).map_err(|e| bad(i, e))?);
        }
        Ok(tr)
    }
}

fn elem(s: &Structure, name: &str) -> Result<Elem, GameError> {
    s.elem(name)
        .ok_or_else(|| GameError::Transcript(format!("unknown element {name}")))
}

fn value(s: &Structure, name: &str) -> Result<Value, GameError> {
    s.parse_value(name).map_err(|e| GameError::Transcript(e.to_string()))
}

fn var(text: &str) -> Var {
    match text.strip_prefix('%') {
        Some(n) => Var::num(n),
        None => Var::elem(text),
    }
}

/// Rebuilds a [`GraphOpen`] from its record.
pub fn parse_graph_open(s: &Structure, rec: &MoveRecord) -> Result<GraphOpen, GameError> {
    let MoveRecord::GraphOpen {
        x,
        y,
        edge,
        sim,
        params,
        start,
        counter,
        ..
    } = rec
    else {
        return Err(GameError::Transcript("not a graph opening".into()));
    };
    let vocab = Vocabulary::of(s);
    let parse = |t: &str| parse_formula(t, &vocab).map_err(|e| GameError::Transcript(e.to_string()));
    let params = params
        .iter()
        .map(|(v, val)| Ok((var(v), value(s, val)?)))
        .collect::<Result<Vec<_>, GameError>>()?;
    Ok(GraphOpen {
        x: x.iter().map(|v| var(v)).collect(),
        y: y.iter().map(|v| var(v)).collect(),
        edge: parse(edge)?,
        sim: parse(sim)?,
        params,
        start: start.iter().map(|v| value(s, v)).collect::<Result<_, _>>()?,
        counter: counter
            .parse::<BigUint>()
            .map_err(|e| GameError::Transcript(e.to_string()))?,
    })
}

/// Replays the Spoiler's recorded moves in order.
pub struct ScriptedSpoiler {
    name: String,
    structure: Structure,
    script: VecDeque<MoveRecord>,
    /// First problem met while following the script.
    pub error: Option<String>,
}

impl ScriptedSpoiler {
    pub fn new(tr: &Transcript, structure: Structure) -> ScriptedSpoiler {
        let script = tr
            .lines
            .iter()
            .filter(|l| l.actor == Actor::S && l.record != MoveRecord::Exit { auto: true })
            .map(|l| l.record.clone())
            .collect();
        ScriptedSpoiler {
            name: tr.header.spoiler.clone(),
            structure,
            script,
            error: None,
        }
    }

    fn next(&mut self, what: &str) -> Option<MoveRecord> {
        let rec = self.script.pop_front();
        if rec.is_none() && self.error.is_none() {
            self.error = Some(format!("script ran out before {what}"));
        }
        rec
    }

    fn fail(&mut self, msg: String) {
        if self.error.is_none() {
            self.error = Some(msg);
        }
    }
}

impl Spoiler for ScriptedSpoiler {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn main_move(&mut self, _view: &MainView) -> MainChoice {
        match self.next("a main move") {
            Some(MoveRecord::Extension) => MainChoice::Extension,
            Some(rec @ MoveRecord::GraphOpen { .. }) => match parse_graph_open(&self.structure, &rec) {
                Ok(open) => MainChoice::Graph(open),
                Err(e) => {
                    self.fail(e.to_string());
                    MainChoice::Extension
                }
            },
            other => {
                self.fail(format!("expected a main move, found {other:?}"));
                MainChoice::Extension
            }
        }
    }

    fn pick(&mut self, _view: &MainView, _g: &[Elem]) -> Elem {
        match self.next("a pick") {
            Some(MoveRecord::Pick { elem }) => match self.structure.elem(&elem) {
                Some(e) => e,
                None => {
                    self.fail(format!("unknown element {elem}"));
                    Elem(0)
                }
            },
            other => {
                self.fail(format!("expected a pick, found {other:?}"));
                Elem(0)
            }
        }
    }

    fn graph_continue(&mut self, _view: &GraphView) -> bool {
        match self.next("a continue or exit") {
            Some(MoveRecord::Continue) => true,
            Some(MoveRecord::Exit { auto: false }) => false,
            other => {
                self.fail(format!("expected continue or exit, found {other:?}"));
                false
            }
        }
    }

    fn graph_step(&mut self, view: &GraphView, _g: &[Elem], _h: &dyn HFamily) -> Vec<Value> {
        match self.next("a step") {
            Some(MoveRecord::Step { node, .. }) => {
                match node.iter().map(|v| value(&self.structure, v)).collect::<Result<Vec<_>, _>>() {
                    Ok(t) => t,
                    Err(e) => {
                        self.fail(e.to_string());
                        view.graph.a_i.clone()
                    }
                }
            }
            other => {
                self.fail(format!("expected a step, found {other:?}"));
                view.graph.a_i.clone()
            }
        }
    }
}

/// Rebuilds a Duplicator from its recorded name and the match seed.
pub type DuplicatorFactory<'a> = dyn Fn(&str, u64, &GameConfig) -> Option<Box<dyn Duplicator>> + 'a;

/// The result of replaying a transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub lines_compared: usize,
    /// First mismatch, if any.
    pub mismatch: Option<String>,
    pub outcome: Option<Outcome>,
}

impl ReplayReport {
    pub fn matches(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Replays `tr` with a scripted Spoiler and a Duplicator rebuilt by
/// `factory`, comparing every move line, every state hash and the outcome.
pub fn replay(tr: &Transcript, factory: &DuplicatorFactory) -> Result<ReplayReport, GameError> {
    let cfg = tr.header.config()?;
    let f0 = tr.header.initial(&cfg)?;
    let mut dup = factory(&tr.header.duplicator, tr.header.seed, &cfg)
        .ok_or_else(|| GameError::Transcript(format!("unknown duplicator {}", tr.header.duplicator)))?;
    let mut sp = ScriptedSpoiler::new(tr, cfg.a.clone());
    let mut game = Game::start(cfg, f0)?;
    let mut fresh = Transcript::new(tr.header.clone());
    drive(&mut game, &mut sp, dup.as_mut(), &mut fresh)?;
    let outcome = game.outcome().cloned();
    let mut mismatch = sp.error.clone();
    let compared = tr.lines.len().min(fresh.lines.len());
    if mismatch.is_none() {
        mismatch = tr
            .lines
            .iter()
            .zip(&fresh.lines)
            .position(|(a, b)| a != b)
            .map(|i| format!("line {} differs: recorded {:?}, replayed {:?}", i + 2, tr.lines[i], fresh.lines[i]));
    }
    if mismatch.is_none() && tr.lines.len() != fresh.lines.len() {
        mismatch = Some(format!(
            "recorded {} move lines, replayed {}",
            tr.lines.len(),
            fresh.lines.len()
        ));
    }
    if mismatch.is_none() && tr.outcome != outcome {
        mismatch = Some(format!("recorded outcome {:?}, replayed {:?}", tr.outcome, outcome));
    }
    Ok(ReplayReport {
        lines_compared: compared,
        mismatch,
        outcome,
    })
}
