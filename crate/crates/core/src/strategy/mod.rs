//! Game agents: Duplicators (identity, matching and the offset-function
//! strategy for tree-group instances) and Spoilers (random, greedy and the
//! formula-driven one), plus the offset helpers they share.

mod duplicator;
mod spoiler;

use std::fmt;

use crate::eval::{NodeSpace, QuotientGraph};
use crate::game::{Duplicator, GameConfig, Spoiler};
use crate::psp::PspLayout;
use crate::structure::{Elem, PartialInjection, Value};
use crate::treecomb::{extend_consistent, BinTree, Node, NodeSet, OffsetFn};

pub use duplicator::{extension_offsets, plan_round, IdentityDuplicator, MatchingDuplicator, PaperDuplicator, RoundPlan};
pub use spoiler::{FormulaSpoiler, GreedySpoiler, RandomSpoiler};

/// Names accepted by [`duplicator_by_name`].
pub const DUPLICATORS: [&str; 3] = ["identity", "matching", "paper"];
/// Names accepted by [`spoiler_by_name`]; `formula:<text>` is handled by
/// [`FormulaSpoiler::new`].
pub const SPOILERS: [&str; 2] = ["random", "greedy"];

pub fn duplicator_by_name(name: &str, _seed: u64, cfg: &GameConfig) -> Option<Box<dyn Duplicator>> {
    match name {
        "identity" => Some(Box::new(IdentityDuplicator)),
        "matching" => Some(Box::new(MatchingDuplicator)),
        "paper" => Some(Box::new(PaperDuplicator::new(cfg))),
        _ => None,
    }
}

pub fn spoiler_by_name(name: &str, seed: u64) -> Option<Box<dyn Spoiler>> {
    match name {
        "random" => Some(Box::new(RandomSpoiler::new(seed))),
        "greedy" => Some(Box::new(GreedySpoiler::new(seed))),
        _ => None,
    }
}

/// `min-h` of the nonzero support minus one; infinite when `ρ ≡ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NullHeight {
    Finite(i64),
    Infinite,
}

impl fmt::Display for NullHeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullHeight::Finite(h) => write!(f, "{h}"),
            NullHeight::Infinite => write!(f, "inf"),
        }
    }
}

pub fn null_height(t: &BinTree, rho: &OffsetFn) -> NullHeight {
    rho.support()
        .iter()
        .map(|&v| t.node_height(v) as i64 - 1)
        .min()
        .map_or(NullHeight::Infinite, NullHeight::Finite)
}

/// `bij(ρ)`: `(v, a) ↦ (v, a + ρ(v))`, with `ρ` read as zero off its
/// domain.
pub fn offset_bijection(lay: PspLayout, rho: &OffsetFn) -> Vec<Elem> {
    (0..lay.size())
        .map(|i| {
            let (v, a) = lay.decode(Elem(i as u32));
            lay.elem(v, a + rho.get(v).unwrap_or(0))
        })
        .collect()
}

/// `bij(ρ)` on a tuple; numbers are fixed. `None` when an element's node is
/// outside `dom ρ`.
pub fn offset_tuple(lay: PspLayout, rho: &OffsetFn, t: &[Value]) -> Option<Vec<Value>> {
    t.iter()
        .map(|v| match v {
            Value::Elem(e) => {
                let (node, a) = lay.decode(*e);
                rho.get(node).map(|d| Value::Elem(lay.elem(node, a + d)))
            }
            num => Some(*num),
        })
        .collect()
}

/// Offsets `b - a` of a position pebbling `(v, a) ↦ (v, b)`. `None` when a
/// pebble changes node or two pebbles on one node disagree.
pub fn offsets_of(lay: PspLayout, f: &PartialInjection) -> Option<OffsetFn> {
    let mut rho = OffsetFn::new(lay.p);
    for (x, y) in f.pairs() {
        let (v, a) = lay.decode(x);
        let (w, b) = lay.decode(y);
        if v != w {
            return None;
        }
        let d = (b + lay.p - a) % lay.p;
        match rho.get(v) {
            Some(e) if e != d => return None,
            _ => rho.set(v, d),
        }
    }
    Some(rho)
}

/// Tree nodes of the elements of a tuple.
pub fn tuple_nodes(lay: PspLayout, t: &[Value]) -> NodeSet {
    t.iter()
        .filter_map(|v| v.as_elem())
        .map(|e| lay.decode(e).0)
        .collect()
}

/// Whether the frontier node `u` is free in the class of `ā`: a spike of 1
/// at `u`, zero on the rest of `fixed`, extended over the closure and
/// applied to `ā`, keeps `ā` in its class. An inconsistent spike means `u`
/// is bounded.
pub fn is_free_in_class(
    lay: PspLayout,
    t: &BinTree,
    g: &QuotientGraph,
    space: &NodeSpace,
    a: &[Value],
    u: Node,
    fixed: &NodeSet,
) -> bool {
    spike_keeps_class(lay, t, g, space, a, u, fixed, 1)
}

/// [`is_free_in_class`] with an arbitrary nonzero spike value.
#[allow(clippy::too_many_arguments)]
pub fn spike_keeps_class(
    lay: PspLayout,
    t: &BinTree,
    g: &QuotientGraph,
    space: &NodeSpace,
    a: &[Value],
    u: Node,
    fixed: &NodeSet,
    spike: u64,
) -> bool {
    let mut mu = OffsetFn::zero_on(lay.p, fixed.iter().copied().filter(|&v| v != u));
    mu.set(u, spike % lay.p);
    let Ok(ext) = extend_consistent(t, &mu) else {
        return false;
    };
    let moved: Vec<Value> = a
        .iter()
        .map(|v| match v {
            Value::Elem(e) => {
                let (node, r) = lay.decode(*e);
                Value::Elem(lay.elem(node, r + ext.get(node).unwrap_or(0)))
            }
            num => *num,
        })
        .collect();
    let (Some(from), Some(to)) = (space.index(a), space.index(&moved)) else {
        return false;
    };
    g.class(from) == g.class(to)
}

/// A bijection of `0..n` extending `f`: identity where possible, otherwise
/// the unused targets in increasing order.
pub fn complete_bijection(f: &PartialInjection, n: usize) -> Vec<Elem> {
    let mut out: Vec<Option<Elem>> = (0..n).map(|i| f.get(Elem(i as u32))).collect();
    let mut used = vec![false; n];
    for (_, b) in f.pairs() {
        used[b.index()] = true;
    }
    for (i, slot) in out.iter_mut().enumerate() {
        if slot.is_none() && !used[i] {
            *slot = Some(Elem(i as u32));
            used[i] = true;
        }
    }
    let mut spare = (0..n).filter(|&i| !used[i]);
    out.into_iter()
        .map(|s| s.unwrap_or_else(|| Elem(spare.next().expect("counts match") as u32)))
        .collect()
}
