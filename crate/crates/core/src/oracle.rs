//! Brute-force reference implementations used to cross-check the fast paths.
//!
//! Each oracle follows its definition literally and shares no code with the
//! implementation it checks beyond the data types.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::eval::{Assignment, EvalError, EvalResult, LabelledGraph, QuotientGraph, SemiGraph};
use crate::logic::{free_vars, Formula, Sort, Term, Var};
use crate::structure::{Elem, Structure, Value};
use crate::treecomb::{closure, encloses, BinTree, Node, NodeSet, OffsetFn};

/// `(u, ℓ) ∈ χ` straight from the recursive definition.
pub fn naive_chi(g: &LabelledGraph, u: usize, l: i64) -> bool {
    fn go(g: &LabelledGraph, u: usize, l: i64, memo: &mut HashMap<(usize, i64), bool>) -> bool {
        if l < 0 {
            return false;
        }
        if let Some(&b) = memo.get(&(u, l)) {
            return b;
        }
        let count = g
            .out(u)
            .iter()
            .filter(|&&v| {
                let d = g.in_degree(v as usize) as i64;
                go(g, v as usize, (l - 1).div_euclid(d), memo)
            })
            .count() as u64;
        let res = g.label(u).contains(&count);
        memo.insert((u, l), res);
        res
    }
    go(g, u, l, &mut HashMap::new())
}

/// The quotient of a semi-graph via union-find over `∼`.
pub fn union_find_quotient(g: &SemiGraph) -> QuotientGraph {
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    let mut parent: Vec<usize> = (0..g.n).collect();
    for &(a, b) in &g.sim {
        let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
        // Keep the smaller index as root so roots are least members.
        if ra < rb {
            parent[rb] = ra;
        } else if rb < ra {
            parent[ra] = rb;
        }
    }
    let roots: Vec<usize> = (0..g.n).map(|v| find(&mut parent, v)).collect();
    let mut ids: BTreeMap<usize, u32> = BTreeMap::new();
    for &r in &roots {
        let next = ids.len() as u32;
        ids.entry(r).or_insert(next);
    }
    let class_of: Vec<u32> = roots.iter().map(|r| ids[r]).collect();
    let mut classes = vec![Vec::new(); ids.len()];
    let mut labels = vec![BTreeSet::new(); ids.len()];
    for v in 0..g.n {
        let c = class_of[v] as usize;
        classes[c].push(v as u32);
        labels[c].extend(g.labels[v].iter().copied());
    }
    let edges: Vec<(u32, u32)> = g
        .edges
        .iter()
        .map(|&(a, b)| (class_of[a as usize], class_of[b as usize]))
        .collect();
    QuotientGraph {
        class_of,
        graph: LabelledGraph::new(classes.len(), edges, labels),
        classes,
    }
}

struct Naive<'s> {
    s: &'s Structure,
    rels: Vec<(String, BTreeSet<Vec<Value>>)>,
}

impl Naive<'_> {
    fn domain(&self, sort: Sort) -> Vec<Value> {
        match sort {
            Sort::Elem => self.s.elems().map(Value::Elem).collect(),
            Sort::Num => (0..=self.s.number_max()).map(Value::Num).collect(),
        }
    }

    fn term(&self, t: &Term, env: &Assignment) -> EvalResult<Value> {
        match t {
            Term::Var(v) => env.get(v).copied().ok_or_else(|| EvalError::Unbound(v.to_string())),
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

    fn with<T>(env: &Assignment, v: &Var, val: Value, f: impl FnOnce(&Assignment) -> T) -> T {
        let mut e = env.clone();
        e.insert(v.clone(), val);
        f(&e)
    }

    fn eval(&mut self, f: &Formula, env: &Assignment) -> EvalResult<bool> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom { rel, args } => {
                let vals = args.iter().map(|t| self.term(t, env)).collect::<EvalResult<Vec<_>>>()?;
                if let Some((_, set)) = self.rels.iter().rev().find(|(n, _)| n == rel) {
                    return Ok(set.contains(&vals));
                }
                let r = self.s.relation(rel).ok_or_else(|| EvalError::UnknownRelation(rel.clone()))?;
                let elems: Option<Vec<Elem>> = vals.iter().map(|v| v.as_elem()).collect();
                let elems = elems.ok_or_else(|| EvalError::SortMismatch(format!("number in {rel}")))?;
                Ok(r.tuples().iter().any(|t| *t == elems))
            }
            Formula::Eq(a, b) => Ok(self.term(a, env)? == self.term(b, env)?),
            Formula::Not(b) => Ok(!self.eval(b, env)?),
            Formula::And(a, b) => Ok(self.eval(a, env)? && self.eval(b, env)?),
            Formula::Or(a, b) => Ok(self.eval(a, env)? || self.eval(b, env)?),
            Formula::Exists(v, b) => {
                for val in self.domain(v.sort) {
                    if Self::with(env, v, val, |e| self.eval(b, e))? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Forall(v, b) => {
                for val in self.domain(v.sort) {
                    if !Self::with(env, v, val, |e| self.eval(b, e))? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Count { var, body, rhs } => {
                let target = self.term(rhs, env)?;
                let mut n = 0u64;
                for val in self.domain(var.sort) {
                    if Self::with(env, var, val, |e| self.eval(body, e))? {
                        n += 1;
                    }
                }
                Ok(Value::Num(n) == target)
            }
            Formula::Lfp { rel, vars, body, args } => {
                let tuples = self.all_tuples(vars.iter().map(|v| v.sort).collect());
                let mut current: BTreeSet<Vec<Value>> = BTreeSet::new();
                loop {
                    self.rels.push((rel.clone(), current.clone()));
                    let mut next = BTreeSet::new();
                    let mut err = None;
                    for t in &tuples {
                        let mut e = env.clone();
                        for (v, val) in vars.iter().zip(t) {
                            e.insert(v.clone(), *val);
                        }
                        match self.eval(body, &e) {
                            Ok(true) => {
                                next.insert(t.clone());
                            }
                            Ok(false) => {}
                            Err(x) => {
                                err = Some(x);
                                break;
                            }
                        }
                    }
                    self.rels.pop();
                    if let Some(x) = err {
                        return Err(x);
                    }
                    if next == current {
                        break;
                    }
                    current = next;
                }
                let vals = args.iter().map(|t| self.term(t, env)).collect::<EvalResult<Vec<_>>>()?;
                Ok(current.contains(&vals))
            }
            Formula::Lrec(l) => {
                let sorts: Vec<Sort> = l.u.iter().map(|v| v.sort).collect();
                let nodes = self.all_tuples(sorts);
                let index: HashMap<&Vec<Value>, usize> = nodes.iter().enumerate().map(|(i, t)| (t, i)).collect();
                let mut g = SemiGraph::new(nodes.len());
                let n = self.s.number_max();
                let num_tuples = self.all_tuples(vec![Sort::Num; l.p.len()]);
                for (ia, a) in nodes.iter().enumerate() {
                    let mut ea = env.clone();
                    for (v, val) in l.u.iter().zip(a) {
                        ea.insert(v.clone(), *val);
                    }
                    for (ib, b) in nodes.iter().enumerate() {
                        let mut eab = ea.clone();
                        for (v, val) in l.v.iter().zip(b) {
                            eab.insert(v.clone(), *val);
                        }
                        if self.eval(&l.edge, &eab)? {
                            g.edges.push((ia as u32, ib as u32));
                        }
                        if self.eval(&l.sim, &eab)? {
                            g.sim.push((ia as u32, ib as u32));
                        }
                    }
                    for p in &num_tuples {
                        let mut ep = ea.clone();
                        for (v, val) in l.p.iter().zip(p) {
                            ep.insert(v.clone(), *val);
                        }
                        if self.eval(&l.label, &ep)? {
                            let digits: Vec<u64> = p.iter().map(|v| v.as_num().expect("number")).collect();
                            let code = digits_value(&digits, n).to_u64().ok_or(EvalError::LabelOverflow)?;
                            g.labels[ia].insert(code);
                        }
                    }
                }
                let start = l.w.iter().map(|t| self.term(t, env)).collect::<EvalResult<Vec<_>>>()?;
                let mut r = Vec::new();
                for t in &l.r {
                    r.push(self.term(t, env)?.as_num().ok_or_else(|| EvalError::SortMismatch("lrec counter".into()))?);
                }
                let ell = digits_value(&r, n).to_i64().expect("desk-scale counter");
                let q = union_find_quotient(&g);
                let node = *index
                    .get(&start)
                    .ok_or_else(|| EvalError::SortMismatch("lrec start tuple".into()))?;
                Ok(naive_chi(&q.graph, q.class(node), ell))
            }
        }
    }

    fn all_tuples(&self, sorts: Vec<Sort>) -> Vec<Vec<Value>> {
        let mut out = vec![Vec::new()];
        for s in sorts {
            let dom = self.domain(s);
            out = out
                .into_iter()
                .flat_map(|t| {
                    dom.iter().map(move |v| {
                        let mut t2 = t.clone();
                        t2.push(*v);
                        t2
                    })
                })
                .collect();
        }
        out
    }
}

/// `Σ d_i (n+1)^i`.
fn digits_value(digits: &[u64], n: u64) -> BigUint {
    digits
        .iter()
        .rev()
        .fold(BigUint::from(0u32), |acc, &d| acc * (n + 1) + d)
}

/// Tarskian evaluation by exhaustive enumeration, with lfp by stage
/// iteration and lrec through an explicit semi-graph and [`naive_chi`].
pub fn naive_eval(f: &Formula, s: &Structure, env: &Assignment) -> EvalResult<bool> {
    for v in free_vars(f) {
        if !env.contains_key(&v) {
            let flipped = Var {
                name: v.name.clone(),
                sort: if v.sort == Sort::Elem { Sort::Num } else { Sort::Elem },
            };
            if env.contains_key(&flipped) {
                return Err(EvalError::SortMismatch(format!("{v} is bound with the other sort")));
            }
            return Err(EvalError::Unbound(v.to_string()));
        }
    }
    for (v, val) in env {
        match (v.sort, val) {
            (Sort::Elem, Value::Elem(e)) if e.index() < s.size() => {}
            (Sort::Num, Value::Num(n)) if *n <= s.number_max() => {}
            (Sort::Num, Value::Num(n)) => {
                return Err(EvalError::NumberOutOfRange {
                    value: *n,
                    max: s.number_max(),
                })
            }
            _ => return Err(EvalError::SortMismatch(format!("value for {v}"))),
        }
    }
    Naive { s, rels: Vec::new() }.eval(f, env)
}

/// Consistency by the enclosing-sum criterion: every `F ⊆ dom ρ` minimally
/// enclosing some `x ∈ dom ρ` has `ρ(x) = Σ_F ρ`.
pub fn brute_force_consistent(t: &BinTree, rho: &OffsetFn) -> bool {
    let dom: Vec<Node> = rho.map.keys().copied().collect();
    assert!(dom.len() <= 16, "exhaustive check is for small domains");
    for mask in 1u32..(1 << dom.len()) {
        let f: NodeSet = (0..dom.len()).filter(|i| mask & (1 << i) != 0).map(|i| dom[i]).collect();
        let sum = f.iter().map(|&y| rho.map[&y]).sum::<u64>() % rho.p;
        for &x in &dom {
            if minimal_enclosure(t, &f, x) && rho.map[&x] != sum {
                return false;
            }
        }
    }
    true
}

fn minimal_enclosure(t: &BinTree, f: &NodeSet, x: Node) -> bool {
    encloses(t, f, x)
        && f.iter().all(|&y| {
            let mut g = f.clone();
            g.remove(&y);
            !encloses(t, &g, x)
        })
}

/// Consistency as extendability: some assignment of leaf values, summed
/// upward, agrees with `ρ`.
pub fn leaf_sum_consistent(t: &BinTree, rho: &OffsetFn) -> bool {
    let leaves: Vec<Node> = t.leaves().collect();
    let total = (rho.p as u128).pow(leaves.len() as u32);
    assert!(total <= 1 << 22, "exhaustive check is for small trees");
    let mut vals = vec![0u64; t.len()];
    for code in 0..total {
        let mut c = code;
        for &leaf in &leaves {
            vals[leaf as usize] = (c % rho.p as u128) as u64;
            c /= rho.p as u128;
        }
        for v in (0..t.len() as Node).rev() {
            if let Some((a, b)) = t.children(v) {
                vals[v as usize] = (vals[a as usize] + vals[b as usize]) % rho.p;
            }
        }
        if rho.map.iter().all(|(&v, &a)| vals[v as usize] == a) {
            return true;
        }
    }
    false
}

/// All closed connected subsets of `within` with head `r`, as
/// `(nodes, frontier)`.
fn closed_connected(t: &BinTree, within: &NodeSet, r: Node) -> Vec<(NodeSet, NodeSet)> {
    let mut out = vec![([r].into_iter().collect::<NodeSet>(), [r].into_iter().collect::<NodeSet>())];
    if let Some((a, b)) = t.children(r) {
        if within.contains(&a) && within.contains(&b) {
            let left = closed_connected(t, within, a);
            let right = closed_connected(t, within, b);
            for (ln, lf) in &left {
                for (rn, rf) in &right {
                    let mut nodes: NodeSet = ln.union(rn).copied().collect();
                    nodes.insert(r);
                    out.push((nodes, lf.union(rf).copied().collect()));
                }
            }
        }
    }
    out
}

/// Free elements of `cl(y)` over `ρ` by enumerating every closed connected
/// `S ⊆ cl(y)`.
pub fn brute_force_free(t: &BinTree, x: &NodeSet, y: &NodeSet, rho: &OffsetFn) -> NodeSet {
    let mut all = y.clone();
    all.extend(x.iter().copied());
    let cl = closure(t, &all);
    let mut free: NodeSet = cl.clone();
    for &r in &cl {
        for (nodes, frontier) in closed_connected(t, &cl, r) {
            let mut boundary = frontier.clone();
            boundary.insert(r);
            let clause_i = boundary
                .iter()
                .filter(|v| x.contains(v))
                .all(|&v| rho.get(v).unwrap_or(0) == 0);
            let clause_ii = nodes.iter().any(|v| x.contains(v) && !boundary.contains(v));
            if !clause_i && !clause_ii {
                for v in &boundary {
                    free.remove(v);
                }
            }
        }
    }
    free
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_chi_small_cases() {
        let g = LabelledGraph::new(2, [(0, 1)], vec![[1].into_iter().collect(), [0].into_iter().collect()]);
        assert!(!naive_chi(&g, 0, 0));
        assert!(naive_chi(&g, 0, 1));
        assert!(naive_chi(&g, 1, 0));
        assert!(!naive_chi(&g, 1, -1));
    }

    #[test]
    fn leaf_sums_agree_with_enclosing_sums() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let t = BinTree::new(rng.gen_range(1..=3));
            let p = [2u64, 3][rng.gen_range(0..2)];
            let k = rng.gen_range(0..=4);
            let rho = OffsetFn::from_pairs(p, (0..k).map(|_| (rng.gen_range(0..t.len() as Node), rng.gen_range(0..p))));
            assert_eq!(brute_force_consistent(&t, &rho), leaf_sum_consistent(&t, &rho), "{rho:?}");
        }
    }
}
