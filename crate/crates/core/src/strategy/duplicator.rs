use std::cell::RefCell;
use std::collections::HashMap;

use super::{complete_bijection, is_free_in_class, offset_bijection, offsets_of, tuple_nodes};
use crate::game::oracle::has_perfect_matching;
use crate::game::{Duplicator, GameConfig, GraphView, HFamily, IdentityH, MainView, RestrictionH};
use crate::psp::PspLayout;
use crate::structure::{is_partial_isomorphism, Elem, PartialInjection, Structure};
use crate::treecomb::{extend_consistent, frontier_of_closure, lift_sequence, BinTree, Node, NodeSet, OffsetFn};

/// Extends the position by the identity wherever it can and answers graph
/// rounds with identity injections.
pub struct IdentityDuplicator;

impl Duplicator for IdentityDuplicator {
    fn name(&self) -> String {
        "identity".into()
    }

    fn extension(&mut self, view: &MainView) -> Vec<Elem> {
        complete_bijection(view.f, view.cfg.n())
    }

    fn graph_round(&mut self, view: &GraphView) -> (Vec<Elem>, Box<dyn HFamily>) {
        let f_i = view.f.compose(&view.graph.h_i).unwrap_or_else(|_| view.f.clone());
        (complete_bijection(&f_i, view.cfg.n()), Box::new(IdentityH))
    }
}

/// Universes above this size skip the matching and use
/// [`complete_bijection`].
const MATCHING_LIMIT: usize = 200;

/// Extends the position by a bijection under which every single new pebble
/// keeps a partial isomorphism, when one exists; graph rounds restrict that
/// bijection (built from `f ∪ h_i`) to every `Y`.
pub struct MatchingDuplicator;

fn safe_extension(f: &PartialInjection, a: &Structure, b: &Structure) -> Vec<Elem> {
    let n = a.size();
    if n > MATCHING_LIMIT {
        return complete_bijection(f, n);
    }
    let allowed: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let x = Elem(i as u32);
            if let Some(y) = f.get(x) {
                return vec![y.index()];
            }
            (0..n)
                .filter(|&j| {
                    let mut g = f.clone();
                    g.insert(x, Elem(j as u32)).is_ok() && is_partial_isomorphism(&g, a, b).unwrap_or(false)
                })
                .collect()
        })
        .collect();
    match matching(&allowed, n) {
        Some(owner) => {
            let mut g = vec![Elem(0); n];
            for (j, i) in owner.into_iter().enumerate() {
                g[i] = Elem(j as u32);
            }
            g
        }
        None => complete_bijection(f, n),
    }
}

/// A perfect matching of left vertices into `0..n` as `owner[right]`.
fn matching(allowed: &[Vec<usize>], n: usize) -> Option<Vec<usize>> {
    if !has_perfect_matching(allowed, n) {
        return None;
    }
    fn augment(u: usize, allowed: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &allowed[u] {
            if !std::mem::replace(&mut seen[v], true)
                && (owner[v].is_none() || augment(owner[v].expect("owned"), allowed, seen, owner))
            {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n];
    for u in 0..allowed.len() {
        augment(u, allowed, &mut vec![false; n], &mut owner);
    }
    owner.into_iter().collect()
}

impl Duplicator for MatchingDuplicator {
    fn name(&self) -> String {
        "matching".into()
    }

    fn extension(&mut self, view: &MainView) -> Vec<Elem> {
        safe_extension(view.f, &view.cfg.a, &view.cfg.b)
    }

    fn graph_round(&mut self, view: &GraphView) -> (Vec<Elem>, Box<dyn HFamily>) {
        let f_i = view.f.compose(&view.graph.h_i).unwrap_or_else(|_| view.f.clone());
        let g = safe_extension(&f_i, &view.cfg.a, &view.cfg.b);
        (g.clone(), Box::new(RestrictionH(g)))
    }
}

/// The offset-function strategy on tree-group instances.
///
/// Positions are read as offsets `ρ` on tree nodes. Extension moves answer
/// with `bij(o)` where `o(v)` is the first term of a lift of `ρ` to `{v}`;
/// graph rounds answer with `g_i = bij(σ_i)` and `h_Y = bij(η_Y)|_Y` for
/// `η_Y` the lift of `ρ_β ∪ σ_i` to the nodes of `Y`. Structures that are
/// not tree-group instances get the matching strategy.
pub struct PaperDuplicator {
    tree: Option<(PspLayout, BinTree)>,
    fallback: MatchingDuplicator,
}

impl PaperDuplicator {
    pub fn new(cfg: &GameConfig) -> PaperDuplicator {
        let tree = PspLayout::detect(&cfg.a).ok().map(|lay| (lay, BinTree::new(lay.h)));
        PaperDuplicator {
            tree,
            fallback: MatchingDuplicator,
        }
    }

    pub fn is_tree_instance(&self) -> bool {
        self.tree.is_some()
    }
}

/// `o(v)` for every node: the consistent extension of `ρ` where defined,
/// otherwise the lift of `ρ` to `{v}`.
pub fn extension_offsets(t: &BinTree, rho: &OffsetFn) -> OffsetFn {
    let base = extend_consistent(t, rho).unwrap_or_else(|_| rho.clone());
    let mut out = base.clone();
    for v in t.nodes() {
        if out.get(v).is_some() {
            continue;
        }
        let y: NodeSet = [v].into_iter().collect();
        let a = lift_sequence(t, &base, &[y], 1)
            .ok()
            .and_then(|s| s[0].get(v))
            .unwrap_or(0);
        out.set(v, a);
    }
    out
}

/// Per-round data of the offset strategy.
pub struct RoundPlan {
    pub rho_beta: OffsetFn,
    pub rho_i: OffsetFn,
    /// Frontier of `cl(V(ã_i))`.
    pub frontier: NodeSet,
    pub free: NodeSet,
    pub sigma: OffsetFn,
    /// Candidate bases for `η_Y`, in order of preference.
    pub bases: Vec<OffsetFn>,
}

pub fn plan_round(lay: PspLayout, t: &BinTree, view: &GraphView) -> Option<RoundPlan> {
    let st = view.graph;
    let rho_beta = offsets_of(lay, view.f)?;
    let f_i = view.f.compose(&st.h_i).ok()?;
    let a_nodes = tuple_nodes(lay, &st.a_i);
    let raw_i = offsets_of(lay, &f_i)?;
    let rho_i = extend_consistent(t, &raw_i).unwrap_or_else(|_| raw_i.clone());
    let frontier = if a_nodes.is_empty() {
        NodeSet::new()
    } else {
        frontier_of_closure(t, &a_nodes)
    };
    let beta = rho_beta.domain();
    let mut fixed = beta.clone();
    fixed.extend(frontier.iter().copied());
    let mut sigma = rho_beta.clone();
    let mut free = NodeSet::new();
    for &u in frontier.difference(&beta) {
        if is_free_in_class(lay, t, &st.ga, &st.space, &st.a_i, u, &fixed) {
            free.insert(u);
            sigma.set(u, 0);
        } else {
            sigma.set(u, rho_i.get(u).unwrap_or(0));
        }
    }
    let mut bases = Vec::new();
    if let Ok(s) = extend_consistent(t, &sigma) {
        bases.push(s);
    }
    if let Some(m) = rho_beta.union(&raw_i.restrict(&a_nodes)) {
        if let Ok(s) = extend_consistent(t, &m) {
            bases.push(s);
        }
    }
    if let Ok(s) = extend_consistent(t, &rho_beta) {
        bases.push(s);
    }
    Some(RoundPlan {
        rho_beta,
        rho_i,
        frontier,
        free,
        sigma,
        bases,
    })
}

/// `h_Y = bij(η_Y)|_Y`, computed lazily and cached per node set.
struct LiftH {
    lay: PspLayout,
    tree: BinTree,
    bases: Vec<OffsetFn>,
    c: usize,
    cache: RefCell<HashMap<Vec<Node>, OffsetFn>>,
}

impl LiftH {
    fn eta(&self, nodes: &NodeSet) -> OffsetFn {
        let key: Vec<Node> = nodes.iter().copied().collect();
        if let Some(e) = self.cache.borrow().get(&key) {
            return e.clone();
        }
        let eta = self
            .bases
            .iter()
            .find_map(|b| {
                lift_sequence(&self.tree, b, std::slice::from_ref(nodes), self.c)
                    .ok()
                    .map(|mut s| s.remove(0))
            })
            .unwrap_or_else(|| OffsetFn::new(self.lay.p));
        self.cache.borrow_mut().insert(key, eta.clone());
        eta
    }
}

impl HFamily for LiftH {
    fn image(&self, y: &[Elem]) -> Vec<Elem> {
        let nodes: NodeSet = y.iter().map(|e| self.lay.decode(*e).0).collect();
        let eta = self.eta(&nodes);
        y.iter()
            .map(|e| {
                let (v, a) = self.lay.decode(*e);
                self.lay.elem(v, a + eta.get(v).unwrap_or(0))
            })
            .collect()
    }
}

impl Duplicator for PaperDuplicator {
    fn name(&self) -> String {
        "paper".into()
    }

    fn extension(&mut self, view: &MainView) -> Vec<Elem> {
        let Some((lay, t)) = self.tree else {
            return self.fallback.extension(view);
        };
        match offsets_of(lay, view.f) {
            Some(rho) => offset_bijection(lay, &extension_offsets(&t, &rho)),
            None => complete_bijection(view.f, view.cfg.n()),
        }
    }

    fn graph_round(&mut self, view: &GraphView) -> (Vec<Elem>, Box<dyn HFamily>) {
        let Some((lay, t)) = self.tree else {
            return self.fallback.graph_round(view);
        };
        match plan_round(lay, &t, view) {
            Some(plan) => {
                let g_off = plan.bases.first().cloned().unwrap_or_else(|| plan.sigma.clone());
                let h = LiftH {
                    lay,
                    tree: t,
                    bases: plan.bases,
                    c: view.graph.c(),
                    cache: RefCell::new(HashMap::new()),
                };
                (offset_bijection(lay, &g_off), Box::new(h))
            }
            None => self.fallback.graph_round(view),
        }
    }
}
