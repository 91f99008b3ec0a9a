//! Sorted formulas for FO, FOC, LFP and LREC=, their concrete syntax, and
//! the rank and iteration-degree measures.
//!
//! Element variables are bare identifiers and number variables carry a `%`
//! prefix. `&` binds tighter than `|`; quantifier bodies extend as far right
//! as possible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::structure::Structure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Elem,
    Num,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn elem(name: &str) -> Var {
        Var {
            name: name.to_string(),
            sort: Sort::Elem,
        }
    }

    pub fn num(name: &str) -> Var {
        Var {
            name: name.to_string(),
            sort: Sort::Num,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sort {
            Sort::Elem => write!(f, "{}", self.name),
            Sort::Num => write!(f, "%{}", self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    /// A constant symbol of the vocabulary; element sort.
    Const(String),
    /// A number literal.
    Num(u64),
}

impl Term {
    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Const(_) => Sort::Elem,
            Term::Num(_) => Sort::Num,
        }
    }

    pub fn var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Num(n) => write!(f, "{n}"),
        }
    }
}

/// An lrec node: `lrec[u;v;p](edge;sim;label)(w;r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lrec {
    pub u: Vec<Var>,
    pub v: Vec<Var>,
    pub p: Vec<Var>,
    pub edge: Formula,
    pub sim: Formula,
    pub label: Formula,
    pub w: Vec<Term>,
    pub r: Vec<Term>,
}

impl Lrec {
    pub fn c(&self) -> usize {
        self.u.len()
    }

    pub fn d(&self) -> usize {
        self.p.len()
    }

    pub fn q(&self) -> usize {
        self.r.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    /// A vocabulary relation or an lfp-bound relation variable.
    Atom { rel: String, args: Vec<Term> },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
    Count {
        var: Var,
        body: Box<Formula>,
        rhs: Term,
    },
    Lfp {
        rel: String,
        vars: Vec<Var>,
        body: Box<Formula>,
        args: Vec<Term>,
    },
    Lrec(Box<Lrec>),
}

impl Formula {
    pub fn atom(rel: &str, args: Vec<Term>) -> Formula {
        Formula::Atom {
            rel: rel.to_string(),
            args,
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(v: Var, body: Formula) -> Formula {
        Formula::Exists(v, Box::new(body))
    }

    pub fn forall(v: Var, body: Formula) -> Formula {
        Formula::Forall(v, Box::new(body))
    }
}

/// Relation names with arities plus constant names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub relations: BTreeMap<String, usize>,
    pub constants: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new<R, C>(relations: R, constants: C) -> Vocabulary
    where
        R: IntoIterator<Item = (&'static str, usize)>,
        C: IntoIterator<Item = &'static str>,
    {
        Vocabulary {
            relations: relations
                .into_iter()
                .map(|(n, a)| (n.to_string(), a))
                .collect(),
            constants: constants.into_iter().map(|c| c.to_string()).collect(),
        }
    }

    /// `{R/3, S/1, t}`.
    pub fn psp() -> Vocabulary {
        Vocabulary::new([("R", 3), ("S", 1)], ["t"])
    }

    pub fn of(s: &Structure) -> Vocabulary {
        let (relations, constants) = s.signature();
        Vocabulary {
            relations,
            constants,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{msg} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    NumVar(String),
    Int(u64),
    Sym(char),
    End,
}

struct Lexer;

impl Lexer {
    fn run(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let bytes = text.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        let ident_char = |c: u8| c.is_ascii_alphanumeric() || c == b'_' || c == b'\'';
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = i;
                while i < bytes.len() && ident_char(bytes[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            } else if c == b'%' {
                let start = i;
                i += 1;
                let name_start = i;
                if i >= bytes.len() || !(bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                    return Err(ParseError {
                        pos: start,
                        msg: "expected number variable name after '%'".into(),
                    });
                }
                while i < bytes.len() && ident_char(bytes[i]) {
                    i += 1;
                }
                out.push((Tok::NumVar(text[name_start..i].to_string()), start));
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i].parse::<u64>().map_err(|_| ParseError {
                    pos: start,
                    msg: "number literal too large".into(),
                })?;
                out.push((Tok::Int(n), start));
            } else if "()[]{},;:.=!&|".contains(c as char) {
                out.push((Tok::Sym(c as char), i));
                i += 1;
            } else {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unexpected character {:?}", c as char),
                });
            }
        }
        out.push((Tok::End, text.len()));
        Ok(out)
    }
}

const KEYWORDS: [&str; 7] = ["exists", "forall", "count", "lfp", "lrec", "true", "false"];

#[derive(Clone)]
enum Binding {
    Var(Sort),
    Rel(Vec<Sort>),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vocab: &'a Vocabulary,
    scope: Vec<(String, Binding)>,
}

/// Parses a formula, checking relation names, arities and variable sorts.
pub fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: Lexer::run(text)?,
        at: 0,
        vocab,
        scope: Vec::new(),
    };
    let f = p.formula()?;
    match p.peek() {
        Tok::End => Ok(f),
        _ => Err(p.error("unexpected trailing input")),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn error(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos(),
            msg: msg.to_string(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.conj()?;
        while self.eat('|') {
            let right = self.conj()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while self.eat('&') {
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat('!') {
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_keyword("exists") || self.is_keyword("forall") {
            let universal = self.is_keyword("forall");
            self.bump();
            let var = self.binder()?;
            self.expect('.')?;
            self.scope.push((var.name.clone(), Binding::Var(var.sort)));
            let body = self.formula();
            self.scope.pop();
            let body = body?;
            return Ok(if universal {
                Formula::forall(var, body)
            } else {
                Formula::exists(var, body)
            });
        }
        self.primary()
    }

    fn binder(&mut self) -> Result<Var, ParseError> {
        let var = match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Var::elem(s),
            Tok::NumVar(s) => Var::num(s),
            _ => return Err(self.error("expected variable")),
        };
        self.bump();
        Ok(var)
    }

    fn binders(&mut self, close: char, sep: char) -> Result<Vec<Var>, ParseError> {
        let mut vars = Vec::new();
        if *self.peek() == Tok::Sym(close) {
            return Ok(vars);
        }
        loop {
            vars.push(self.binder()?);
            if !self.eat(sep) {
                break;
            }
        }
        Ok(vars)
    }

    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let bound = matches!(self.lookup(&s), Some(Binding::Var(Sort::Elem)));
                if !bound && self.vocab.constants.contains(&s) {
                    Ok(Term::Const(s))
                } else {
                    Ok(Term::Var(Var::elem(&s)))
                }
            }
            Tok::NumVar(s) => Ok(Term::Var(Var::num(&s))),
            Tok::Int(n) => Ok(Term::Num(n)),
            _ => Err(ParseError {
                pos,
                msg: "expected term".into(),
            }),
        }
    }

    fn terms(&mut self, close: char, sep: char) -> Result<Vec<Term>, ParseError> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if !self.eat(sep) {
                break;
            }
        }
        Ok(out)
    }

    fn sort_error(&self, pos: usize, what: &str) -> ParseError {
        ParseError {
            pos,
            msg: format!("sort mismatch: {what}"),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        if self.eat('(') {
            let f = self.formula()?;
            self.expect(')')?;
            return Ok(f);
        }
        if self.is_keyword("true") {
            self.bump();
            return Ok(Formula::True);
        }
        if self.is_keyword("false") {
            self.bump();
            return Ok(Formula::False);
        }
        if self.is_keyword("count") {
            return self.count();
        }
        if self.is_keyword("lfp") {
            return self.lfp();
        }
        if self.is_keyword("lrec") {
            return self.lrec();
        }
        if let (Tok::Ident(name), Tok::Sym('(')) = (self.peek().clone(), self.peek2().clone()) {
            if !KEYWORDS.contains(&name.as_str()) {
                return self.atom(name, pos);
            }
        }
        let left = self.term()?;
        let eq_pos = self.pos();
        self.expect('=')?;
        let right = self.term()?;
        if left.sort() != right.sort() {
            return Err(self.sort_error(eq_pos, "equality between different sorts"));
        }
        Ok(Formula::Eq(left, right))
    }

    fn atom(&mut self, name: String, pos: usize) -> Result<Formula, ParseError> {
        self.bump();
        self.expect('(')?;
        let args_pos = self.pos();
        let args = self.terms(')', ',')?;
        self.expect(')')?;
        let sorts: Vec<Sort> = match self.lookup(&name) {
            Some(Binding::Rel(sorts)) => sorts.clone(),
            Some(Binding::Var(_)) => {
                return Err(ParseError {
                    pos,
                    msg: format!("{name} is a variable, not a relation"),
                })
            }
            None => match self.vocab.relations.get(&name) {
                Some(&arity) => vec![Sort::Elem; arity],
                None => {
                    return Err(ParseError {
                        pos,
                        msg: format!("unknown relation {name}"),
                    })
                }
            },
        };
        if sorts.len() != args.len() {
            return Err(ParseError {
                pos,
                msg: format!(
                    "arity mismatch: {name} expects {} arguments, got {}",
                    sorts.len(),
                    args.len()
                ),
            });
        }
        if sorts.iter().zip(&args).any(|(s, a)| *s != a.sort()) {
            return Err(self.sort_error(args_pos, &format!("arguments of {name}")));
        }
        Ok(Formula::Atom { rel: name, args })
    }

    fn count(&mut self) -> Result<Formula, ParseError> {
        self.bump();
        self.expect('{')?;
        let var = self.binder()?;
        self.expect(':')?;
        self.scope.push((var.name.clone(), Binding::Var(var.sort)));
        let body = self.formula();
        self.scope.pop();
        let body = body?;
        self.expect('}')?;
        self.expect('=')?;
        let rhs_pos = self.pos();
        let rhs = self.term()?;
        if rhs.sort() != Sort::Num {
            return Err(self.sort_error(rhs_pos, "count compares against a number term"));
        }
        Ok(Formula::Count {
            var,
            body: Box::new(body),
            rhs,
        })
    }

    fn lfp(&mut self) -> Result<Formula, ParseError> {
        self.bump();
        self.expect('[')?;
        let rel = match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error("expected relation variable")),
        };
        self.bump();
        self.expect(',')?;
        let vars = self.binders(']', ',')?;
        if vars.is_empty() {
            return Err(self.error("lfp needs at least one variable"));
        }
        self.expect(']')?;
        self.expect('(')?;
        let sorts: Vec<Sort> = vars.iter().map(|v| v.sort).collect();
        let mark = self.scope.len();
        self.scope.push((rel.clone(), Binding::Rel(sorts.clone())));
        for v in &vars {
            self.scope.push((v.name.clone(), Binding::Var(v.sort)));
        }
        let body = self.formula();
        self.scope.truncate(mark);
        let body = body?;
        if !positive_in(&body, &rel, true) {
            return Err(self.error(&format!("{rel} occurs negatively in its lfp body")));
        }
        self.expect(')')?;
        self.expect('(')?;
        let args_pos = self.pos();
        let args = self.terms(')', ',')?;
        self.expect(')')?;
        if args.len() != vars.len() {
            return Err(ParseError {
                pos: args_pos,
                msg: format!("arity mismatch: lfp over {} variables applied to {} terms", vars.len(), args.len()),
            });
        }
        if sorts.iter().zip(&args).any(|(s, a)| *s != a.sort()) {
            return Err(self.sort_error(args_pos, "lfp arguments"));
        }
        Ok(Formula::Lfp {
            rel,
            vars,
            body: Box::new(body),
            args,
        })
    }

    fn scoped_formula(&mut self, vars: &[&Var]) -> Result<Formula, ParseError> {
        let mark = self.scope.len();
        for v in vars {
            self.scope.push((v.name.clone(), Binding::Var(v.sort)));
        }
        let f = self.formula();
        self.scope.truncate(mark);
        f
    }

    fn lrec(&mut self) -> Result<Formula, ParseError> {
        let start = self.pos();
        self.bump();
        self.expect('[')?;
        let u = self.binders(';', ',')?;
        self.expect(';')?;
        let v = self.binders(';', ',')?;
        self.expect(';')?;
        let p_pos = self.pos();
        let p = self.binders(']', ',')?;
        self.expect(']')?;
        if u.is_empty() || u.len() != v.len() {
            return Err(ParseError {
                pos: start,
                msg: "lrec needs two variable tuples of equal positive length".into(),
            });
        }
        if u.iter().zip(&v).any(|(a, b)| a.sort != b.sort) {
            return Err(self.sort_error(start, "lrec tuples must have matching sorts"));
        }
        if p.iter().any(|x| x.sort != Sort::Num) {
            return Err(self.sort_error(p_pos, "lrec label variables are number variables"));
        }
        if p.len() > u.len() {
            return Err(ParseError {
                pos: p_pos,
                msg: "lrec label tuple longer than the node tuple".into(),
            });
        }
        self.expect('(')?;
        let uv: Vec<&Var> = u.iter().chain(v.iter()).collect();
        let edge = self.scoped_formula(&uv)?;
        self.expect(';')?;
        let sim = self.scoped_formula(&uv)?;
        self.expect(';')?;
        let up: Vec<&Var> = u.iter().chain(p.iter()).collect();
        let label = self.scoped_formula(&up)?;
        self.expect(')')?;
        self.expect('(')?;
        let w_pos = self.pos();
        let w = self.terms(';', ',')?;
        self.expect(';')?;
        let r_pos = self.pos();
        let r = self.terms(')', ',')?;
        self.expect(')')?;
        if w.len() != u.len() {
            return Err(ParseError {
                pos: w_pos,
                msg: format!("arity mismatch: lrec node tuple has length {}, got {} terms", u.len(), w.len()),
            });
        }
        if u.iter().zip(&w).any(|(a, t)| a.sort != t.sort()) {
            return Err(self.sort_error(w_pos, "lrec start tuple"));
        }
        if r.iter().any(|t| t.sort() != Sort::Num) {
            return Err(self.sort_error(r_pos, "lrec counter tuple must be number terms"));
        }
        Ok(Formula::Lrec(Box::new(Lrec {
            u,
            v,
            p,
            edge,
            sim,
            label,
            w,
            r,
        })))
    }
}

/// Whether relation variable `rel` occurs only positively (`pos` tracks the
/// current polarity). Occurrences under a rebinding lfp are ignored.
fn positive_in(f: &Formula, rel: &str, pos: bool) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Eq(..) => true,
        Formula::Atom { rel: r, .. } => r != rel || pos,
        Formula::Not(b) => positive_in(b, rel, !pos),
        Formula::And(a, b) | Formula::Or(a, b) => positive_in(a, rel, pos) && positive_in(b, rel, pos),
        Formula::Exists(_, b) | Formula::Forall(_, b) => positive_in(b, rel, pos),
        // Counting is not monotone in its body.
        Formula::Count { body, .. } => !mentions(body, rel),
        Formula::Lfp { rel: r, body, .. } => r == rel || positive_in(body, rel, pos),
        Formula::Lrec(l) => !mentions(&l.edge, rel) && !mentions(&l.sim, rel) && !mentions(&l.label, rel),
    }
}

fn mentions(f: &Formula, rel: &str) -> bool {
    !positive_in(f, rel, true) || !positive_in(f, rel, false)
}

/// Prints the canonical concrete syntax; `parse_formula` inverts it.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    Printer { out: &mut out }.go(f, 1, true);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

struct Printer<'o> {
    out: &'o mut String,
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Printer<'_> {
    /// Precedence level and whether the form is open to the right.
    fn level(f: &Formula) -> (u8, bool) {
        match f {
            Formula::Or(..) => (1, false),
            Formula::And(..) => (2, false),
            Formula::Exists(..) | Formula::Forall(..) => (3, true),
            Formula::Not(..) | Formula::Eq(..) | Formula::Count { .. } => (3, false),
            _ => (4, false),
        }
    }

    fn go(&mut self, f: &Formula, min: u8, rightmost: bool) {
        let (lvl, open) = Self::level(f);
        let wrap = lvl < min || (open && !rightmost);
        let rm = wrap || rightmost;
        if wrap {
            self.out.push('(');
        }
        match f {
            Formula::True => self.out.push_str("true"),
            Formula::False => self.out.push_str("false"),
            Formula::Atom { rel, args } => {
                self.out.push_str(&format!("{rel}({})", join(args)));
            }
            Formula::Eq(a, b) => self.out.push_str(&format!("{a} = {b}")),
            Formula::Not(b) => {
                self.out.push('!');
                let inner_min = if matches!(**b, Formula::Not(_)) { 3 } else { 4 };
                self.go(b, inner_min, rm);
            }
            Formula::Or(a, b) => {
                self.go(a, 1, false);
                self.out.push_str(" | ");
                self.go(b, 2, rm);
            }
            Formula::And(a, b) => {
                self.go(a, 2, false);
                self.out.push_str(" & ");
                self.go(b, 3, rm);
            }
            Formula::Exists(v, b) | Formula::Forall(v, b) => {
                let kw = if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" };
                self.out.push_str(&format!("{kw} {v}. "));
                self.go(b, 1, rm);
            }
            Formula::Count { var, body, rhs } => {
                self.out.push_str(&format!("count{{{var} : "));
                self.go(body, 1, true);
                self.out.push_str(&format!("}} = {rhs}"));
            }
            Formula::Lfp {
                rel,
                vars,
                body,
                args,
            } => {
                self.out.push_str(&format!("lfp[{rel},{}](", join(vars)));
                self.go(body, 1, true);
                self.out.push_str(&format!(")({})", join(args)));
            }
            Formula::Lrec(l) => {
                self.out
                    .push_str(&format!("lrec[{};{};{}](", join(&l.u), join(&l.v), join(&l.p)));
                self.go(&l.edge, 1, true);
                self.out.push_str("; ");
                self.go(&l.sim, 1, true);
                self.out.push_str("; ");
                self.go(&l.label, 1, true);
                self.out.push_str(&format!(")({};{})", join(&l.w), join(&l.r)));
            }
        }
        if wrap {
            self.out.push(')');
        }
    }
}

/// Quantifier rank extended by the lrec rule. Connectives take the maximum
/// of their children; an lfp over `m` variables costs `m` on top of its body.
pub fn rank(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => 0,
        Formula::Not(b) => rank(b),
        Formula::And(a, b) | Formula::Or(a, b) => rank(a).max(rank(b)),
        Formula::Exists(_, b) | Formula::Forall(_, b) => 1 + rank(b),
        Formula::Count { body, .. } => 1 + rank(body),
        Formula::Lfp { vars, body, .. } => vars.len() + rank(body),
        Formula::Lrec(l) => {
            let (c, d) = (l.c(), l.d());
            (2 * c + rank(&l.sim))
                .max(2 * c + rank(&l.edge))
                .max(c + d + rank(&l.label))
        }
    }
}

/// Iteration degree: the largest counter-tuple length of any lrec node.
pub fn iteration_degree(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => 0,
        Formula::Not(b) => iteration_degree(b),
        Formula::And(a, b) | Formula::Or(a, b) => iteration_degree(a).max(iteration_degree(b)),
        Formula::Exists(_, b) | Formula::Forall(_, b) => iteration_degree(b),
        Formula::Count { body, .. } => iteration_degree(body),
        Formula::Lfp { body, .. } => iteration_degree(body),
        Formula::Lrec(l) => l
            .q()
            .max(iteration_degree(&l.sim))
            .max(iteration_degree(&l.edge))
            .max(iteration_degree(&l.label)),
    }
}

/// Free individual variables of either sort.
pub fn free_vars(f: &Formula) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut Vec::new(), &mut out);
    out
}

fn collect_term(t: &Term, bound: &[Var], out: &mut BTreeSet<Var>) {
    if let Term::Var(v) = t {
        if !bound.contains(v) {
            out.insert(v.clone());
        }
    }
}

fn collect_free(f: &Formula, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom { args, .. } => args.iter().for_each(|t| collect_term(t, bound, out)),
        Formula::Eq(a, b) => {
            collect_term(a, bound, out);
            collect_term(b, bound, out);
        }
        Formula::Not(b) => collect_free(b, bound, out),
        Formula::And(a, b) | Formula::Or(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            bound.push(v.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        Formula::Count { var, body, rhs } => {
            collect_term(rhs, bound, out);
            bound.push(var.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Formula::Lfp { vars, body, args, .. } => {
            args.iter().for_each(|t| collect_term(t, bound, out));
            let mark = bound.len();
            bound.extend(vars.iter().cloned());
            collect_free(body, bound, out);
            bound.truncate(mark);
        }
        Formula::Lrec(l) => {
            l.w.iter().chain(&l.r).for_each(|t| collect_term(t, bound, out));
            let mark = bound.len();
            bound.extend(l.u.iter().cloned());
            bound.extend(l.v.iter().cloned());
            collect_free(&l.edge, bound, out);
            collect_free(&l.sim, bound, out);
            bound.truncate(mark);
            bound.extend(l.u.iter().cloned());
            bound.extend(l.p.iter().cloned());
            collect_free(&l.label, bound, out);
            bound.truncate(mark);
        }
    }
}

/// Replaces free occurrences of variables by terms. Substituted terms are
/// literals or constants here, so capture cannot occur.
pub fn substitute(f: &Formula, map: &BTreeMap<Var, Term>) -> Formula {
    let sub_t = |t: &Term, hidden: &[&Var]| -> Term {
        match t {
            Term::Var(v) if !hidden.contains(&v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        }
    };
    fn go(
        f: &Formula,
        map: &BTreeMap<Var, Term>,
        hidden: &mut Vec<Var>,
        sub_t: &dyn Fn(&Term, &[&Var]) -> Term,
    ) -> Formula {
        let h: Vec<&Var> = hidden.iter().collect();
        let st = |t: &Term| sub_t(t, &h);
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom { rel, args } => Formula::Atom {
                rel: rel.clone(),
                args: args.iter().map(st).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(st(a), st(b)),
            Formula::Not(b) => Formula::not(go(b, map, hidden, sub_t)),
            Formula::And(a, b) => Formula::and(go(a, map, hidden, sub_t), go(b, map, hidden, sub_t)),
            Formula::Or(a, b) => Formula::or(go(a, map, hidden, sub_t), go(b, map, hidden, sub_t)),
            Formula::Exists(v, b) | Formula::Forall(v, b) => {
                hidden.push(v.clone());
                let body = go(b, map, hidden, sub_t);
                hidden.pop();
                if matches!(f, Formula::Exists(..)) {
                    Formula::exists(v.clone(), body)
                } else {
                    Formula::forall(v.clone(), body)
                }
            }
            Formula::Count { var, body, rhs } => {
                let rhs = st(rhs);
                hidden.push(var.clone());
                let body = go(body, map, hidden, sub_t);
                hidden.pop();
                Formula::Count {
                    var: var.clone(),
                    body: Box::new(body),
                    rhs,
                }
            }
            Formula::Lfp { rel, vars, body, args } => {
                let args = args.iter().map(st).collect();
                let mark = hidden.len();
                hidden.extend(vars.iter().cloned());
                let body = go(body, map, hidden, sub_t);
                hidden.truncate(mark);
                Formula::Lfp {
                    rel: rel.clone(),
                    vars: vars.clone(),
                    body: Box::new(body),
                    args,
                }
            }
            Formula::Lrec(l) => {
                let w = l.w.iter().map(st).collect();
                let r = l.r.iter().map(st).collect();
                let mark = hidden.len();
                hidden.extend(l.u.iter().cloned());
                hidden.extend(l.v.iter().cloned());
                let edge = go(&l.edge, map, hidden, sub_t);
                let sim = go(&l.sim, map, hidden, sub_t);
                hidden.truncate(mark);
                hidden.extend(l.u.iter().cloned());
                hidden.extend(l.p.iter().cloned());
                let label = go(&l.label, map, hidden, sub_t);
                hidden.truncate(mark);
                Formula::Lrec(Box::new(Lrec {
                    u: l.u.clone(),
                    v: l.v.clone(),
                    p: l.p.clone(),
                    edge,
                    sim,
                    label,
                    w,
                    r,
                }))
            }
        }
    }
    go(f, map, &mut Vec::new(), &sub_t)
}

/// The path-systems sentence `[lfp_{X,u} S(u) | ∃v∃w (X(v) & X(w) & R(v,w,u))](t)`.
pub fn psp_lfp_sentence() -> Formula {
    parse_formula(
        "lfp[X,u](S(u) | exists v. exists w. (X(v) & X(w) & R(v,w,u)))(t)",
        &Vocabulary::psp(),
    )
    .expect("fixed sentence parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_formula;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psp(text: &str) -> Formula {
        parse_formula(text, &Vocabulary::psp()).unwrap()
    }

    #[test]
    fn parses_atom() {
        assert_eq!(psp("S(x)"), Formula::atom("S", vec![Term::Var(Var::elem("x"))]));
        assert_eq!(print_formula(&psp("S(x)")), "S(x)");
    }

    #[test]
    fn parses_lfp_sentence() {
        let f = psp_lfp_sentence();
        match &f {
            Formula::Lfp { rel, vars, args, .. } => {
                assert_eq!(rel, "X");
                assert_eq!(vars, &vec![Var::elem("u")]);
                assert_eq!(args, &vec![Term::Const("t".into())]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse_formula(&print_formula(&f), &Vocabulary::psp()).unwrap(), f);
    }

    #[test]
    fn parses_count() {
        let f = psp("count{x : S(x)} = %m");
        assert!(matches!(&f, Formula::Count { rhs: Term::Var(v), .. } if v.sort == Sort::Num));
    }

    #[test]
    fn negated_equality_prints_with_parens() {
        assert_eq!(print_formula(&psp("!(x = y)")), "!(x = y)");
        assert_eq!(psp("!x = y"), psp("!(x = y)"));
    }

    #[test]
    fn lrec_prints_in_expected_shape() {
        let f = psp("lrec[u;v;%p](R(u,v,t); false; %p = 0)(t;%r)");
        assert_eq!(print_formula(&f), "lrec[u;v;%p](R(u,v,t); false; %p = 0)(t;%r)");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("S(x) & Q(y)", &Vocabulary::psp()).unwrap_err();
        assert_eq!(e.pos, 7);
        assert!(e.msg.contains("unknown relation"));
        let e = parse_formula("S(x,y)", &Vocabulary::psp()).unwrap_err();
        assert!(e.msg.contains("arity mismatch"));
        let e = parse_formula("S(%m)", &Vocabulary::psp()).unwrap_err();
        assert!(e.msg.contains("sort mismatch"));
        let e = parse_formula("x = %m", &Vocabulary::psp()).unwrap_err();
        assert!(e.msg.contains("sort mismatch"));
        let e = parse_formula("exists x S(x)", &Vocabulary::psp()).unwrap_err();
        assert_eq!(e.pos, 9);
        let e = parse_formula("lfp[X,u](!X(u))(t)", &Vocabulary::psp()).unwrap_err();
        assert!(e.msg.contains("negatively"));
    }

    #[test]
    fn constants_and_shadowing() {
        assert_eq!(psp("S(t)"), Formula::atom("S", vec![Term::Const("t".into())]));
        let f = psp("exists t. S(t)");
        assert_eq!(f, Formula::exists(Var::elem("t"), Formula::atom("S", vec![Term::Var(Var::elem("t"))])));
    }

    #[test]
    fn precedence() {
        assert_eq!(
            psp("S(x) | S(y) & S(z)"),
            Formula::or(psp("S(x)"), Formula::and(psp("S(y)"), psp("S(z)")))
        );
        assert_eq!(
            psp("exists x. S(x) | S(y)"),
            Formula::exists(Var::elem("x"), psp("S(x) | S(y)"))
        );
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&psp("R(x,y,z)")), 0);
        assert_eq!(rank(&psp("exists x. S(x)")), 1);
        let l = psp("lrec[u;v;%p](R(u,v,t); S(u); S(u))(t;%r)");
        assert_eq!(rank(&l), 2);
        assert_eq!(rank(&psp("count{x : S(x)} = 3 & exists y. exists z. R(x,y,z)")), 2);
    }

    #[test]
    fn degree_examples() {
        assert_eq!(iteration_degree(&psp("S(x)")), 0);
        assert_eq!(iteration_degree(&psp("forall x. S(x)")), 0);
        assert_eq!(iteration_degree(&psp("lrec[u;v;](S(u); false; true)(t;%a,%b)")), 2);
    }

    #[test]
    fn degree_of_lrec_is_exact_max() {
        let inner = "lrec[a;b;](S(a); false; true)(u;%x,%y,%z)";
        let f = psp(&format!("lrec[u;v;](S(u) & {inner}; false; true)(t;%r)"));
        assert_eq!(iteration_degree(&f), 3);
    }

    #[test]
    fn free_vars_and_substitution() {
        let f = psp("exists y. R(x,y,t) & %p = 0");
        let fv = free_vars(&f);
        assert_eq!(fv, [Var::elem("x"), Var::num("p")].into_iter().collect());
        let g = substitute(&f, &[(Var::num("p"), Term::Num(3))].into_iter().collect());
        assert_eq!(print_formula(&g), "exists y. R(x,y,t) & 3 = 0");
    }

    #[test]
    fn round_trip_random() {
        let vocab = Vocabulary::psp();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let f = random_formula(&mut rng, &vocab, 4);
            let text = print_formula(&f);
            let back = parse_formula(&text, &vocab).unwrap_or_else(|e| panic!("{text}: {e}"));
            assert_eq!(back, f, "{text}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]
            #[test]
            fn quantifier_prefix_is_monotone(seed in any::<u64>(), universal in any::<bool>()) {
                let vocab = Vocabulary::psp();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_formula(&mut rng, &vocab, 3);
                let g = if universal { Formula::forall(Var::elem("z9"), f.clone()) } else { Formula::exists(Var::elem("z9"), f.clone()) };
                prop_assert!(rank(&g) > rank(&f));
                prop_assert!(iteration_degree(&g) >= iteration_degree(&f));
            }
        }
    }
}
