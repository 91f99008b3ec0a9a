//! Semantics of FOC, LFP and LREC= formulas over finite structures.
//!
//! The workhorse is [`Evaluator::solve`], which computes the set of values of
//! one free variable satisfying a formula under the current assignment.
//! Atoms answer it through relation indexes, so conjunctions and
//! existentials over sparse relations avoid scanning the full domain.

pub mod chi;
pub mod interp;
pub mod semigraph;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::marker::PhantomData;
use std::rc::Rc;

use num_bigint::BigInt;
use thiserror::Error;

pub use chi::{chi, ChiMemo, LabelledGraph};
pub use interp::{apply_interpretation, InterpretedRelation, Interpretation};
pub use semigraph::{chi_hat, node_name, quotient, NodeSpace, PosKind, QuotientGraph, SemiGraph, SemiGraphFile};

use crate::logic::{free_vars, Formula, Lrec, Sort, Term, Var};
use crate::structure::{encode_number_tuple, Elem, Structure, Value};

/// A sort-respecting valuation of variables.
pub type Assignment = BTreeMap<Var, Value>;

/// Guards on semi-graph materialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: usize,
    /// Edge and similarity pairs materialized per semi-graph.
    pub max_pairs: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 20_000,
            max_pairs: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unknown constant {0}")]
    UnknownConstant(String),
    #[error("number {value} outside the number domain 0..={max}")]
    NumberOutOfRange { value: u64, max: u64 },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("label value overflows 64 bits")]
    LabelOverflow,
    #[error("interpretation error: {0}")]
    Interpretation(String),
}

impl EvalError {
    pub fn is_budget(&self) -> bool {
        matches!(self, EvalError::Budget(_))
    }
}

pub type EvalResult<T> = Result<T, EvalError>;

/// A subset of one sort's domain, stored as a finite set or a complement.
#[derive(Clone, Debug)]
pub enum DomSet {
    Fin(HashSet<Value>),
    Co(HashSet<Value>),
}

impl DomSet {
    pub fn all() -> DomSet {
        DomSet::Co(HashSet::new())
    }

    pub fn empty() -> DomSet {
        DomSet::Fin(HashSet::new())
    }

    pub fn from_bool(b: bool) -> DomSet {
        if b {
            DomSet::all()
        } else {
            DomSet::empty()
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self {
            DomSet::Fin(s) => s.contains(v),
            DomSet::Co(s) => !s.contains(v),
        }
    }

    pub fn len(&self, dom: usize) -> usize {
        match self {
            DomSet::Fin(s) => s.len(),
            DomSet::Co(s) => dom - s.len(),
        }
    }

    pub fn is_empty(&self, dom: usize) -> bool {
        self.len(dom) == 0
    }

    pub fn is_all(&self, dom: usize) -> bool {
        self.len(dom) == dom
    }

    pub fn complement(self) -> DomSet {
        match self {
            DomSet::Fin(s) => DomSet::Co(s),
            DomSet::Co(s) => DomSet::Fin(s),
        }
    }

    pub fn union(self, other: DomSet) -> DomSet {
        match (self, other) {
            (DomSet::Fin(mut a), DomSet::Fin(b)) => {
                a.extend(b);
                DomSet::Fin(a)
            }
            (DomSet::Co(a), DomSet::Co(b)) => DomSet::Co(a.intersection(&b).copied().collect()),
            (DomSet::Fin(f), DomSet::Co(mut c)) | (DomSet::Co(mut c), DomSet::Fin(f)) => {
                c.retain(|v| !f.contains(v));
                DomSet::Co(c)
            }
        }
    }

    pub fn intersect(self, other: DomSet) -> DomSet {
        self.complement().union(other.complement()).complement()
    }

    /// Members in ascending order, given the full domain.
    pub fn members(&self, domain: impl Iterator<Item = Value>) -> Vec<Value> {
        match self {
            DomSet::Fin(s) => {
                let mut v: Vec<Value> = s.iter().copied().collect();
                v.sort_unstable();
                v
            }
            DomSet::Co(ex) => domain.filter(|v| !ex.contains(v)).collect(),
        }
    }
}

type RelSet = Rc<HashSet<Vec<Value>>>;

struct LrecGraph {
    space: NodeSpace,
    quotient: QuotientGraph,
    memo: ChiMemo,
}

/// Formula evaluator over one structure. Caches lfp fixed points and lrec
/// semi-graphs per syntax node and parameter values; formulas must outlive
/// the evaluator.
pub struct Evaluator<'s, 'f> {
    s: &'s Structure,
    budget: Budget,
    env: Vec<(Var, Value)>,
    rels: Vec<(String, RelSet)>,
    lfp_cache: HashMap<(usize, Vec<Value>), RelSet>,
    lrec_cache: HashMap<(usize, Vec<Value>), Rc<RefCell<LrecGraph>>>,
    free_cache: HashMap<usize, Rc<Vec<Var>>>,
    _formulas: PhantomData<&'f Formula>,
}

impl<'s, 'f> Evaluator<'s, 'f> {
    pub fn new(s: &'s Structure) -> Self {
        Evaluator {
            s,
            budget: Budget::default(),
            env: Vec::new(),
            rels: Vec::new(),
            lfp_cache: HashMap::new(),
            lrec_cache: HashMap::new(),
            free_cache: HashMap::new(),
            _formulas: PhantomData,
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn structure(&self) -> &'s Structure {
        self.s
    }

    /// Replaces the base assignment, checking sorts and ranges.
    pub fn set_env(&mut self, env: &Assignment) -> EvalResult<()> {
        self.env.clear();
        for (var, val) in env {
            self.check_value(var, *val)?;
            self.env.push((var.clone(), *val));
        }
        Ok(())
    }

    fn check_value(&self, var: &Var, val: Value) -> EvalResult<()> {
        match (var.sort, val) {
            (Sort::Elem, Value::Elem(e)) if e.index() < self.s.size() => Ok(()),
            (Sort::Num, Value::Num(n)) if n <= self.s.number_max() => Ok(()),
            (Sort::Num, Value::Num(n)) => Err(EvalError::NumberOutOfRange {
                value: n,
                max: self.s.number_max(),
            }),
            _ => Err(EvalError::SortMismatch(format!("value for {var}"))),
        }
    }

    fn dom_size(&self, sort: Sort) -> usize {
        match sort {
            Sort::Elem => self.s.size(),
            Sort::Num => self.s.size() + 1,
        }
    }

    fn domain(&self, sort: Sort) -> Box<dyn Iterator<Item = Value>> {
        match sort {
            Sort::Elem => Box::new((0..self.s.size() as u32).map(|i| Value::Elem(Elem(i)))),
            Sort::Num => Box::new((0..=self.s.number_max()).map(Value::Num)),
        }
    }

    fn lookup(&self, v: &Var) -> EvalResult<Value> {
        self.env
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, val)| *val)
            .ok_or_else(|| EvalError::Unbound(v.to_string()))
    }

    fn term(&self, t: &Term) -> EvalResult<Value> {
        match t {
            Term::Var(v) => self.lookup(v),
            Term::Const(c) => self
                .s
                .constant(c)
                .map(Value::Elem)
                .ok_or_else(|| EvalError::UnknownConstant(c.clone())),
            Term::Num(n) if *n <= self.s.number_max() => Ok(Value::Num(*n)),
            Term::Num(n) => Err(EvalError::NumberOutOfRange {
                value: *n,
                max: self.s.number_max(),
            }),
        }
    }

    fn push(&mut self, v: &Var, val: Value) {
        self.env.push((v.clone(), val));
    }

    fn set_top(&mut self, val: Value) {
        self.env.last_mut().expect("pushed").1 = val;
    }

    fn pop(&mut self) {
        self.env.pop();
    }

    fn relvar(&self, name: &str) -> Option<RelSet> {
        self.rels
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.clone())
    }

    /// Truth of `f` under the current assignment.
    pub fn holds(&mut self, f: &'f Formula) -> EvalResult<bool> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom { rel, args } => {
                let vals = args.iter().map(|t| self.term(t)).collect::<EvalResult<Vec<_>>>()?;
                if let Some(set) = self.relvar(rel) {
                    return Ok(set.contains(&vals));
                }
                let r = self
                    .s
                    .relation(rel)
                    .ok_or_else(|| EvalError::UnknownRelation(rel.clone()))?;
                if r.arity() != vals.len() {
                    return Err(EvalError::SortMismatch(format!("arity of {rel}")));
                }
                let mut elems = Vec::with_capacity(vals.len());
                for v in vals {
                    match v {
                        Value::Elem(e) => elems.push(e),
                        Value::Num(_) => return Err(EvalError::SortMismatch(format!("number in {rel}"))),
                    }
                }
                Ok(r.contains(&elems))
            }
            Formula::Eq(a, b) => Ok(self.term(a)? == self.term(b)?),
            Formula::Not(b) => Ok(!self.holds(b)?),
            Formula::And(a, b) => Ok(self.holds(a)? && self.holds(b)?),
            Formula::Or(a, b) => Ok(self.holds(a)? || self.holds(b)?),
            Formula::Exists(v, b) => {
                let dom = self.dom_size(v.sort);
                Ok(!self.solve(b, v)?.is_empty(dom))
            }
            Formula::Forall(v, b) => {
                let dom = self.dom_size(v.sort);
                Ok(self.solve(b, v)?.is_all(dom))
            }
            Formula::Count { var, body, rhs } => {
                let target = match self.term(rhs)? {
                    Value::Num(n) => n,
                    Value::Elem(_) => return Err(EvalError::SortMismatch("count right-hand side".into())),
                };
                let dom = self.dom_size(var.sort);
                Ok(self.solve(body, var)?.len(dom) as u64 == target)
            }
            Formula::Lfp { args, .. } => {
                let rel = self.lfp_relation(f)?;
                let vals = args.iter().map(|t| self.term(t)).collect::<EvalResult<Vec<_>>>()?;
                Ok(rel.contains(&vals))
            }
            Formula::Lrec(l) => self.lrec_holds(l),
        }
    }

    /// The values of `x` satisfying `f`, other free variables taken from the
    /// current assignment. Any binding of `x` in the assignment is ignored.
    pub fn solve(&mut self, f: &'f Formula, x: &'f Var) -> EvalResult<DomSet> {
        if !occurs_free(f, x) {
            return Ok(DomSet::from_bool(self.holds(f)?));
        }
        match f {
            Formula::Atom { rel, args } => self.solve_atom(rel, args, x),
            Formula::Eq(a, b) => {
                let (ax, bx) = (a.var() == Some(x), b.var() == Some(x));
                if ax && bx {
                    return Ok(DomSet::all());
                }
                let other = if ax { b } else { a };
                let val = self.term(other)?;
                Ok(DomSet::Fin([val].into_iter().collect()))
            }
            Formula::Not(b) => Ok(self.solve(b, x)?.complement()),
            Formula::And(a, b) => {
                let sa = self.solve(a, x)?;
                match sa {
                    DomSet::Fin(set) => {
                        let mut out = HashSet::new();
                        let mut cands: Vec<Value> = set.into_iter().collect();
                        cands.sort_unstable();
                        self.push(x, Value::Num(0));
                        for v in cands {
                            self.set_top(v);
                            match self.holds(b) {
                                Ok(true) => {
                                    out.insert(v);
                                }
                                Ok(false) => {}
                                Err(e) => {
                                    self.pop();
                                    return Err(e);
                                }
                            }
                        }
                        self.pop();
                        Ok(DomSet::Fin(out))
                    }
                    co => {
                        if co.is_empty(self.dom_size(x.sort)) {
                            return Ok(DomSet::empty());
                        }
                        Ok(co.intersect(self.solve(b, x)?))
                    }
                }
            }
            Formula::Or(a, b) => {
                let sa = self.solve(a, x)?;
                if sa.is_all(self.dom_size(x.sort)) {
                    return Ok(sa);
                }
                Ok(sa.union(self.solve(b, x)?))
            }
            Formula::Exists(y, b) => {
                let dom = self.dom_size(x.sort);
                let cands = self.candidates(y, b, x)?;
                let mut acc = DomSet::empty();
                self.push(y, Value::Num(0));
                for v in cands {
                    self.set_top(v);
                    match self.solve(b, x) {
                        Ok(s) => acc = acc.union(s),
                        Err(e) => {
                            self.pop();
                            return Err(e);
                        }
                    }
                    if acc.is_all(dom) {
                        break;
                    }
                }
                self.pop();
                Ok(acc)
            }
            Formula::Forall(y, b) => {
                let dom = self.dom_size(x.sort);
                let mut acc = DomSet::all();
                let vals: Vec<Value> = self.domain(y.sort).collect();
                self.push(y, Value::Num(0));
                for v in vals {
                    self.set_top(v);
                    match self.solve(b, x) {
                        Ok(s) => acc = acc.intersect(s),
                        Err(e) => {
                            self.pop();
                            return Err(e);
                        }
                    }
                    if acc.is_empty(dom) {
                        break;
                    }
                }
                self.pop();
                Ok(acc)
            }
            _ => self.pointwise(f, x),
        }
    }

    fn pointwise(&mut self, f: &'f Formula, x: &'f Var) -> EvalResult<DomSet> {
        let vals: Vec<Value> = self.domain(x.sort).collect();
        let mut out = HashSet::new();
        self.push(x, Value::Num(0));
        for v in vals {
            self.set_top(v);
            match self.holds(f) {
                Ok(true) => {
                    out.insert(v);
                }
                Ok(false) => {}
                Err(e) => {
                    self.pop();
                    return Err(e);
                }
            }
        }
        self.pop();
        Ok(DomSet::Fin(out))
    }

    /// Values of `y` worth trying when solving `∃y b` for `x`: conjuncts of
    /// `b` that mention `y` but not `x` prune the range.
    fn candidates(&mut self, y: &'f Var, b: &'f Formula, x: &'f Var) -> EvalResult<Vec<Value>> {
        let mut conjuncts = Vec::new();
        flatten_and(b, &mut conjuncts);
        let mut acc = DomSet::all();
        let dom = self.dom_size(y.sort);
        for c in conjuncts {
            if !occurs_free(c, x) && occurs_free(c, y) {
                acc = acc.intersect(self.solve(c, y)?);
                if acc.is_empty(dom) {
                    break;
                }
            }
        }
        Ok(acc.members(self.domain(y.sort)))
    }

    fn solve_atom(&mut self, rel: &str, args: &'f [Term], x: &'f Var) -> EvalResult<DomSet> {
        let mut bound: Vec<Option<Value>> = Vec::with_capacity(args.len());
        for t in args {
            if t.var() == Some(x) {
                bound.push(None);
            } else {
                bound.push(Some(self.term(t)?));
            }
        }
        let first_x = bound.iter().position(|b| b.is_none()).expect("x occurs");
        let matches = |tuple: &[Value]| {
            bound.iter().zip(tuple).all(|(b, v)| match b {
                Some(bv) => bv == v,
                None => *v == tuple[first_x],
            })
        };
        let mut out = HashSet::new();
        if let Some(set) = self.relvar(rel) {
            for t in set.iter() {
                if matches(t) {
                    out.insert(t[first_x]);
                }
            }
            return Ok(DomSet::Fin(out));
        }
        let r = self
            .s
            .relation(rel)
            .ok_or_else(|| EvalError::UnknownRelation(rel.to_string()))?;
        if x.sort != Sort::Elem {
            return Err(EvalError::SortMismatch(format!("number variable in {rel}")));
        }
        let mut check = |t: &[Elem]| {
            let vals: Vec<Value> = t.iter().map(|e| Value::Elem(*e)).collect();
            if matches(&vals) {
                out.insert(vals[first_x]);
            }
        };
        let anchor = bound.iter().enumerate().find_map(|(i, b)| match b {
            Some(Value::Elem(e)) => Some((i, *e)),
            _ => None,
        });
        match anchor {
            Some((pos, e)) => r.with_at(pos, e).for_each(&mut check),
            None => r.tuples().iter().for_each(|t| check(t)),
        }
        Ok(DomSet::Fin(out))
    }

    /// All tuples of values for `vars` satisfying `f`, in ascending order.
    pub fn solve_tuple(&mut self, f: &'f Formula, vars: &'f [Var]) -> EvalResult<Vec<Vec<Value>>> {
        let (last, prefix) = vars.split_last().expect("at least one variable");
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(vars.len());
        self.solve_tuple_rec(f, prefix, last, &mut current, &mut out)?;
        Ok(out)
    }

    fn solve_tuple_rec(
        &mut self,
        f: &'f Formula,
        prefix: &'f [Var],
        last: &'f Var,
        current: &mut Vec<Value>,
        out: &mut Vec<Vec<Value>>,
    ) -> EvalResult<()> {
        if current.len() == prefix.len() {
            let set = self.solve(f, last)?;
            for v in set.members(self.domain(last.sort)) {
                let mut t = current.clone();
                t.push(v);
                out.push(t);
            }
            return Ok(());
        }
        let var = &prefix[current.len()];
        let vals: Vec<Value> = self.domain(var.sort).collect();
        self.push(var, Value::Num(0));
        for v in vals {
            self.set_top(v);
            current.push(v);
            let r = self.solve_tuple_rec(f, prefix, last, current, out);
            current.pop();
            if let Err(e) = r {
                self.pop();
                return Err(e);
            }
        }
        self.pop();
        Ok(())
    }

    fn free_list(&mut self, key: usize, compute: impl FnOnce() -> Vec<Var>) -> Rc<Vec<Var>> {
        self.free_cache
            .entry(key)
            .or_insert_with(|| Rc::new(compute()))
            .clone()
    }

    fn lfp_relation(&mut self, f: &'f Formula) -> EvalResult<RelSet> {
        let Formula::Lfp { rel, vars, body, .. } = f else {
            unreachable!("lfp node expected")
        };
        let key_ptr = f as *const Formula as usize;
        let params = self.free_list(key_ptr, || {
            let own: BTreeSet<&Var> = vars.iter().collect();
            free_vars(body).into_iter().filter(|v| !own.contains(v)).collect()
        });
        let outer_rels = self.rels.iter().any(|(n, _)| n != rel && mentions_rel(body, n));
        let key_vals = params.iter().map(|v| self.lookup(v)).collect::<EvalResult<Vec<_>>>()?;
        let key = (key_ptr, key_vals);
        if !outer_rels {
            if let Some(r) = self.lfp_cache.get(&key) {
                return Ok(r.clone());
            }
        }
        let mut current: RelSet = Rc::new(HashSet::new());
        loop {
            self.rels.push((rel.clone(), current.clone()));
            let stage = self.solve_tuple(body, vars);
            self.rels.pop();
            let next: HashSet<Vec<Value>> = stage?.into_iter().collect();
            if next.len() == current.len() {
                break;
            }
            current = Rc::new(next);
        }
        if !outer_rels {
            self.lfp_cache.insert(key, current.clone());
        }
        Ok(current)
    }

    fn lrec_holds(&mut self, l: &'f Lrec) -> EvalResult<bool> {
        let graph = self.lrec_graph(l)?;
        let w = l.w.iter().map(|t| self.term(t)).collect::<EvalResult<Vec<_>>>()?;
        let mut r = Vec::with_capacity(l.r.len());
        for t in &l.r {
            match self.term(t)? {
                Value::Num(n) => r.push(n),
                Value::Elem(_) => return Err(EvalError::SortMismatch("lrec counter".into())),
            }
        }
        let counter = encode_number_tuple(&r, self.s.number_max()).expect("terms are in range");
        let mut g = graph.borrow_mut();
        let node = g
            .space
            .index(&w)
            .ok_or_else(|| EvalError::SortMismatch("lrec start tuple".into()))?;
        let class = g.quotient.class(node);
        let LrecGraph { quotient, memo, .. } = &mut *g;
        Ok(memo.query(&quotient.graph, class, &BigInt::from(counter)))
    }

    fn lrec_graph(&mut self, l: &'f Lrec) -> EvalResult<Rc<RefCell<LrecGraph>>> {
        let key_ptr = l as *const Lrec as usize;
        let params = self.free_list(key_ptr, || lrec_params(l));
        let key_vals = params.iter().map(|v| self.lookup(v)).collect::<EvalResult<Vec<_>>>()?;
        let key = (key_ptr, key_vals);
        if let Some(g) = self.lrec_cache.get(&key) {
            return Ok(g.clone());
        }
        let sorts: Vec<Sort> = l.u.iter().map(|v| v.sort).collect();
        let space = NodeSpace::typed(&sorts, self.s.size());
        let sg = self.build_semigraph(&space, &l.u, &l.v, &l.edge, &l.sim, Some((&l.p, &l.label)))?;
        let g = Rc::new(RefCell::new(LrecGraph {
            space,
            quotient: quotient(&sg),
            memo: ChiMemo::new(),
        }));
        self.lrec_cache.insert(key, g.clone());
        Ok(g)
    }

    /// Materializes the semi-graph defined by `(edge, sim, label)` over the
    /// nodes of `space`. Nodes whose values do not match the sorts of `u`
    /// stay isolated with empty labels.
    pub fn build_semigraph(
        &mut self,
        space: &NodeSpace,
        u: &'f [Var],
        v: &'f [Var],
        edge: &'f Formula,
        sim: &'f Formula,
        label: Option<(&'f [Var], &'f Formula)>,
    ) -> EvalResult<SemiGraph> {
        let size = space
            .size()
            .filter(|&n| n <= self.budget.max_nodes)
            .ok_or_else(|| {
                EvalError::Budget(format!(
                    "semi-graph has more than {} nodes (raise --max-nodes)",
                    self.budget.max_nodes
                ))
            })?;
        let sorts: Vec<Sort> = u.iter().map(|x| x.sort).collect();
        let mut g = SemiGraph::new(size);
        let mut pairs = 0usize;
        let base = self.env.len();
        for x in u {
            self.push(x, Value::Num(0));
        }
        let result = (|| {
            for a in 0..size {
                let tuple = space.tuple(a);
                if !NodeSpace::well_sorted(&tuple, &sorts) {
                    continue;
                }
                for (i, val) in tuple.iter().enumerate() {
                    self.env[base + i].1 = *val;
                }
                for (formula, is_edge) in [(edge, true), (sim, false)] {
                    for t in self.solve_tuple(formula, v)? {
                        let b = space.index(&t).expect("well-sorted target") as u32;
                        if is_edge {
                            g.edges.push((a as u32, b));
                        } else {
                            g.sim.push((a as u32, b));
                        }
                        pairs += 1;
                        if pairs > self.budget.max_pairs {
                            return Err(EvalError::Budget(format!(
                                "more than {} semi-graph pairs (raise --max-pairs)",
                                self.budget.max_pairs
                            )));
                        }
                    }
                }
                if let Some((p, lf)) = label {
                    g.labels[a] = self.label_set(p, lf)?;
                }
            }
            Ok(())
        })();
        self.env.truncate(base);
        result?;
        g.normalize();
        Ok(g)
    }

    fn label_set(&mut self, p: &'f [Var], f: &'f Formula) -> EvalResult<BTreeSet<u64>> {
        if p.is_empty() {
            return Ok(if self.holds(f)? { [0].into_iter().collect() } else { BTreeSet::new() });
        }
        let base = self.s.number_max() + 1;
        let mut out = BTreeSet::new();
        for t in self.solve_tuple(f, p)? {
            let mut acc: u64 = 0;
            let mut weight: u64 = 1;
            for (i, v) in t.iter().enumerate() {
                let digit = v.as_num().expect("number tuple");
                acc = weight
                    .checked_mul(digit)
                    .and_then(|x| acc.checked_add(x))
                    .ok_or(EvalError::LabelOverflow)?;
                if i + 1 < t.len() {
                    weight = weight.checked_mul(base).ok_or(EvalError::LabelOverflow)?;
                }
            }
            out.insert(acc);
        }
        Ok(out)
    }
}

/// Free variables of an lrec node's bodies that are not bound by the node.
pub fn lrec_params(l: &Lrec) -> Vec<Var> {
    let mut out = BTreeSet::new();
    let uv: BTreeSet<&Var> = l.u.iter().chain(&l.v).collect();
    out.extend(free_vars(&l.edge).into_iter().filter(|x| !uv.contains(x)));
    out.extend(free_vars(&l.sim).into_iter().filter(|x| !uv.contains(x)));
    let up: BTreeSet<&Var> = l.u.iter().chain(&l.p).collect();
    out.extend(free_vars(&l.label).into_iter().filter(|x| !up.contains(x)));
    out.into_iter().collect()
}

fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}

fn term_is(t: &Term, x: &Var) -> bool {
    t.var() == Some(x)
}

/// Whether `x` occurs free in `f`.
pub fn occurs_free(f: &Formula, x: &Var) -> bool {
    match f {
        Formula::True | Formula::False => false,
        Formula::Atom { args, .. } => args.iter().any(|t| term_is(t, x)),
        Formula::Eq(a, b) => term_is(a, x) || term_is(b, x),
        Formula::Not(b) => occurs_free(b, x),
        Formula::And(a, b) | Formula::Or(a, b) => occurs_free(a, x) || occurs_free(b, x),
        Formula::Exists(v, b) | Formula::Forall(v, b) => v != x && occurs_free(b, x),
        Formula::Count { var, body, rhs } => term_is(rhs, x) || (var != x && occurs_free(body, x)),
        Formula::Lfp { vars, body, args, .. } => {
            args.iter().any(|t| term_is(t, x)) || (!vars.contains(x) && occurs_free(body, x))
        }
        Formula::Lrec(l) => {
            l.w.iter().chain(&l.r).any(|t| term_is(t, x))
                || (!l.u.contains(x) && !l.v.contains(x) && (occurs_free(&l.edge, x) || occurs_free(&l.sim, x)))
                || (!l.u.contains(x) && !l.p.contains(x) && occurs_free(&l.label, x))
        }
    }
}

fn mentions_rel(f: &Formula, rel: &str) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Eq(..) => false,
        Formula::Atom { rel: r, .. } => r == rel,
        Formula::Not(b) | Formula::Exists(_, b) | Formula::Forall(_, b) => mentions_rel(b, rel),
        Formula::And(a, b) | Formula::Or(a, b) => mentions_rel(a, rel) || mentions_rel(b, rel),
        Formula::Count { body, .. } => mentions_rel(body, rel),
        Formula::Lfp { rel: r, body, .. } => r != rel && mentions_rel(body, rel),
        Formula::Lrec(l) => mentions_rel(&l.edge, rel) || mentions_rel(&l.sim, rel) || mentions_rel(&l.label, rel),
    }
}

fn check_covered(f: &Formula, env: &Assignment) -> EvalResult<()> {
    for v in free_vars(f) {
        if !env.contains_key(&v) {
            let other = Var {
                name: v.name.clone(),
                sort: match v.sort {
                    Sort::Elem => Sort::Num,
                    Sort::Num => Sort::Elem,
                },
            };
            if env.contains_key(&other) {
                return Err(EvalError::SortMismatch(format!("{v} is bound with the other sort")));
            }
            return Err(EvalError::Unbound(v.to_string()));
        }
    }
    Ok(())
}

/// Evaluates `f` on `s` under `env` with the default budget.
pub fn eval_formula(f: &Formula, s: &Structure, env: &Assignment) -> EvalResult<bool> {
    eval_formula_with(f, s, env, Budget::default())
}

pub fn eval_formula_with(f: &Formula, s: &Structure, env: &Assignment, budget: Budget) -> EvalResult<bool> {
    check_covered(f, env)?;
    let mut ev = Evaluator::new(s).with_budget(budget);
    ev.set_env(env)?;
    ev.holds(f)
}

/// Evaluates an lrec node: builds its labelled semi-graph over the typed
/// node set and queries `χ̂` at the start tuple with counter `⟨r̄⟩`.
pub fn eval_lrec(node: &Lrec, s: &Structure, env: &Assignment) -> EvalResult<bool> {
    let f = Formula::Lrec(Box::new(node.clone()));
    eval_formula(&f, s, env)
}

/// The semi-graph of an lrec-style interpretation over an arbitrary node
/// space, with parameters taken from `env`.
#[allow(clippy::too_many_arguments)]
pub fn interpret_semigraph(
    s: &Structure,
    env: &Assignment,
    space: &NodeSpace,
    u: &[Var],
    v: &[Var],
    edge: &Formula,
    sim: &Formula,
    label: Option<(&[Var], &Formula)>,
    budget: Budget,
) -> EvalResult<SemiGraph> {
    let mut ev = Evaluator::new(s).with_budget(budget);
    ev.set_env(env)?;
    ev.build_semigraph(space, u, v, edge, sim, label)
}
