//! A Spoiler driven by text commands, with the legal moves listed at every
//! prompt. Illegal input re-prompts; end of input forfeits.

use std::io::{BufRead, Write};

use num_bigint::BigUint;

use lrec_core::game::{apply_h, Game, GameConfig, GraphOpen, GraphView, HFamily, MainChoice, MainView, Spoiler};
use lrec_core::logic::{parse_formula, Var, Vocabulary};
use lrec_core::structure::{Elem, Structure, Value};

const MAIN_HELP: &str = "moves:\n  ext                                   ask for a bijection, then pick an element\n  graph <c> | <edge> | <sim> | <start> | <counter>\n                                        open a graph move; x̄, ȳ are x, y when c = 1, else x1..xc, y1..yc\n  quit                                  forfeit";

pub struct HumanSpoiler<R, W> {
    input: R,
    out: W,
    a: Structure,
    vocab: Vocabulary,
    /// Set once input ends; every later move forfeits.
    gone: bool,
}

impl<R: BufRead, W: Write> HumanSpoiler<R, W> {
    pub fn new(input: R, out: W, cfg: &GameConfig) -> Self {
        HumanSpoiler {
            input,
            out,
            a: cfg.a.clone(),
            vocab: Vocabulary::of(&cfg.a),
            gone: false,
        }
    }

    fn say(&mut self, text: &str) {
        // A closed stdout is not worth aborting the game over.
        let _ = writeln!(self.out, "{text}");
    }

    /// The next non-empty line, or `None` at end of input or on `quit`.
    fn ask(&mut self, prompt: &str) -> Option<String> {
        if self.gone {
            return None;
        }
        loop {
            let _ = write!(self.out, "{prompt}> ");
            let _ = self.out.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) | Err(_) => {
                    self.gone = true;
                    self.say("(input ended; Spoiler forfeits)");
                    return None;
                }
                Ok(_) => {}
            }
            let line = line.trim();
            if line == "quit" {
                self.gone = true;
                return None;
            }
            if !line.is_empty() {
                return Some(line.to_string());
            }
        }
    }

    fn names(&self, t: &[Value]) -> String {
        tuple_names(&self.a, t)
    }

    fn parse_tuple(&self, text: &str) -> Result<Vec<Value>, String> {
        text.split_whitespace()
            .map(|w| self.a.parse_value(w).map_err(|e| e.to_string()))
            .collect()
    }

    fn parse_open(&self, rest: &str) -> Result<GraphOpen, String> {
        let parts: Vec<&str> = rest.split('|').map(str::trim).collect();
        let [c, edge, sim, start, counter] = parts[..] else {
            return Err("expected 5 fields separated by |".into());
        };
        let c: usize = c.parse().map_err(|_| format!("c = {c:?} is not a number"))?;
        let vars = |p: &str| -> Vec<Var> {
            if c == 1 {
                vec![Var::elem(p)]
            } else {
                (1..=c).map(|i| Var::elem(&format!("{p}{i}"))).collect()
            }
        };
        let parse = |t: &str| parse_formula(t, &self.vocab).map_err(|e| format!("{t:?} at offset {}: {}", e.pos, e.msg));
        Ok(GraphOpen {
            x: vars("x"),
            y: vars("y"),
            edge: parse(edge)?,
            sim: parse(sim)?,
            params: Vec::new(),
            start: self.parse_tuple(start)?,
            counter: counter.parse::<BigUint>().map_err(|_| format!("counter {counter:?} is not a natural number"))?,
        })
    }
}

impl<R: BufRead, W: Write> Spoiler for HumanSpoiler<R, W> {
    fn name(&self) -> String {
        "human".into()
    }

    fn main_move(&mut self, view: &MainView) -> MainChoice {
        let pebbles: Vec<String> = view
            .f
            .pairs()
            .map(|(x, y)| format!("{}↦{}", self.a.name(x), view.cfg.b.name(y)))
            .collect();
        self.say(&format!(
            "\nposition ({}/{} pebbles): {{{}}}",
            view.f.len(),
            view.cfg.k,
            pebbles.join(", ")
        ));
        self.say(MAIN_HELP);
        loop {
            let Some(line) = self.ask("spoiler") else {
                return MainChoice::Extension;
            };
            if line == "ext" {
                return MainChoice::Extension;
            }
            let Some(rest) = line.strip_prefix("graph") else {
                self.say("unknown move; type ext, graph ... or quit");
                continue;
            };
            let open = match self.parse_open(rest) {
                Ok(o) => o,
                Err(e) => {
                    self.say(&format!("illegal: {e}"));
                    continue;
                }
            };
            // Legality depends only on the configuration and position.
            let check = Game::start(view.cfg.clone(), view.f.clone()).map_err(|e| e.to_string()).and_then(|g| g.check_open(&open));
            match check {
                Ok(()) => return MainChoice::Graph(open),
                Err(e) => self.say(&format!("illegal: {e}")),
            }
        }
    }

    fn pick(&mut self, view: &MainView, g: &[Elem]) -> Elem {
        let options: Vec<String> = view
            .cfg
            .a
            .elems()
            .filter(|e| !view.f.contains(*e))
            .map(|e| format!("{}→{}", self.a.name(e), view.cfg.b.name(g[e.index()])))
            .collect();
        self.say(&format!("Duplicator's bijection on unpebbled elements: {}", options.join(" ")));
        loop {
            let Some(line) = self.ask("pick") else {
                return Elem(view.cfg.n() as u32);
            };
            match self.a.elem(&line) {
                Some(e) => return e,
                None => self.say(&format!("no element named {line:?}")),
            }
        }
    }

    fn graph_continue(&mut self, view: &GraphView) -> bool {
        let st = view.graph;
        self.say(&format!("at ({}) with counter {}", self.names(&st.a_i), st.l_i));
        loop {
            let Some(line) = self.ask("continue or exit") else {
                return false;
            };
            match line.as_str() {
                "continue" | "c" => return true,
                "exit" | "e" => return false,
                _ => self.say("type continue or exit"),
            }
        }
    }

    fn graph_step(&mut self, view: &GraphView, _g: &[Elem], h: &dyn HFamily) -> Vec<Value> {
        let st = view.graph;
        let n = view.cfg.n();
        let succ: Vec<Vec<Value>> = st.successors().into_iter().map(|i| st.space.tuple(i)).collect();
        let listing: Vec<String> = succ
            .iter()
            .map(|t| match apply_h(h, t, n) {
                Ok(img) => format!("({}) ↦ ({})", self.names(t), tuple_names(&view.cfg.b, &img)),
                Err(e) => format!("({}) ↦ illegal: {e}", self.names(t)),
            })
            .collect();
        self.say(&format!("successors and h images:\n  {}", listing.join("\n  ")));
        loop {
            let Some(line) = self.ask("step") else {
                return Vec::new();
            };
            match self.parse_tuple(&line) {
                Ok(t) if succ.contains(&t) => return t,
                Ok(_) => self.say("not a successor of the current class"),
                Err(e) => self.say(&e),
            }
        }
    }
}

fn tuple_names(s: &Structure, t: &[Value]) -> String {
    t.iter().map(|v| s.value_name(*v)).collect::<Vec<_>>().join(" ")
}
