//! Closures, frontiers and consistent `Z_p`-valued functions on complete
//! binary trees.
//!
//! Nodes use heap numbering (root 0, children `2v+1`, `2v+2`). A related
//! triple is a node with its two children; a set is closed when any two
//! members of a related triple force the third.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

pub type Node = u32;
pub type NodeSet = BTreeSet<Node>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("offset function is inconsistent")]
    Inconsistent,
    #[error("node set is not closed")]
    NotClosed,
    #[error("node {0} is outside the tree")]
    UnknownNode(Node),
    #[error("set has {found} nodes, more than the bound {bound}")]
    SetTooLarge { bound: usize, found: usize },
    #[error("lift construction failed its own check: {0}")]
    LiftCheck(String),
}

/// A complete binary tree of the given height.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinTree {
    pub height: u32,
}

impl BinTree {
    pub fn new(height: u32) -> BinTree {
        assert!(height < 31, "tree height out of range");
        BinTree { height }
    }

    pub fn len(&self) -> usize {
        (1usize << (self.height + 1)) - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: Node) -> bool {
        (v as usize) < self.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        0..self.len() as Node
    }

    pub fn root(&self) -> Node {
        0
    }

    pub fn depth(&self, v: Node) -> u32 {
        31 - (v + 1).leading_zeros()
    }

    /// Distance to a leaf.
    pub fn node_height(&self, v: Node) -> u32 {
        self.height - self.depth(v)
    }

    pub fn is_leaf(&self, v: Node) -> bool {
        self.node_height(v) == 0
    }

    pub fn parent(&self, v: Node) -> Option<Node> {
        (v > 0).then(|| (v - 1) / 2)
    }

    pub fn children(&self, v: Node) -> Option<(Node, Node)> {
        (!self.is_leaf(v)).then(|| (2 * v + 1, 2 * v + 2))
    }

    pub fn sibling(&self, v: Node) -> Option<Node> {
        (v > 0).then(|| if v % 2 == 1 { v + 1 } else { v - 1 })
    }

    pub fn grandparent(&self, v: Node) -> Option<Node> {
        self.parent(v).and_then(|u| self.parent(u))
    }

    pub fn leaves(&self) -> impl Iterator<Item = Node> {
        let first = (1u32 << self.height) - 1;
        first..=(2 * first)
    }

    /// Whether `a` is `d` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, a: Node, d: Node) -> bool {
        let (da, dd) = (self.depth(a), self.depth(d));
        dd >= da && ((d + 1) >> (dd - da)) == a + 1
    }

    /// Ancestors of `v` from its parent up to the root.
    pub fn ancestors(&self, v: Node) -> impl Iterator<Item = Node> + '_ {
        std::iter::successors(self.parent(v), move |&u| self.parent(u))
    }

    /// Grandchildren of `v`, if it has height at least 2.
    pub fn grandchildren(&self, v: Node) -> Option<[Node; 4]> {
        if self.node_height(v) < 2 {
            return None;
        }
        let f = 4 * v + 3;
        Some([f, f + 1, f + 2, f + 3])
    }
}

pub fn min_h(t: &BinTree, x: &NodeSet) -> Option<u32> {
    x.iter().map(|&v| t.node_height(v)).min()
}

pub fn max_h(t: &BinTree, x: &NodeSet) -> Option<u32> {
    x.iter().map(|&v| t.node_height(v)).max()
}

/// `cl(X)` together with the order in which nodes outside `X` were added;
/// each added node completes a related triple with two earlier members.
pub fn closure_with_order(t: &BinTree, x: &NodeSet) -> (NodeSet, Vec<Node>) {
    let mut set = x.clone();
    let mut order = Vec::new();
    let mut queue: VecDeque<Node> = x.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        let mut triples = Vec::with_capacity(2);
        if let Some((c1, c2)) = t.children(v) {
            triples.push([v, c1, c2]);
        }
        if let Some(u) = t.parent(v) {
            let (c1, c2) = t.children(u).expect("parent has children");
            triples.push([u, c1, c2]);
        }
        for tri in triples {
            let missing: Vec<Node> = tri.iter().copied().filter(|n| !set.contains(n)).collect();
            if missing.len() == 1 {
                set.insert(missing[0]);
                order.push(missing[0]);
                queue.push_back(missing[0]);
            }
        }
    }
    (set, order)
}

pub fn closure(t: &BinTree, x: &NodeSet) -> NodeSet {
    closure_with_order(t, x).0
}

pub fn is_closed(t: &BinTree, x: &NodeSet) -> bool {
    x.iter().all(|&v| {
        let check = |u: Node| {
            let (c1, c2) = t.children(u).expect("internal");
            [u, c1, c2].iter().filter(|n| x.contains(n)).count() != 2
        };
        t.children(v).is_none_or(|_| check(v)) && t.parent(v).is_none_or(check)
    })
}

/// A closed connected set with its head (highest node) and frontier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedComponent {
    pub nodes: NodeSet,
    pub head: Node,
    pub frontier: NodeSet,
}

impl ClosedComponent {
    /// `height(head) - min-h(nodes)`.
    pub fn height(&self, t: &BinTree) -> u32 {
        t.node_height(self.head) - min_h(t, &self.nodes).expect("non-empty")
    }
}

/// Splits a closed set into its maximal closed connected components.
pub fn components(t: &BinTree, x: &NodeSet) -> Result<Vec<ClosedComponent>, TreeError> {
    if let Some(&v) = x.iter().find(|&&v| !t.contains(v)) {
        return Err(TreeError::UnknownNode(v));
    }
    if !is_closed(t, x) {
        return Err(TreeError::NotClosed);
    }
    let mut out = Vec::new();
    let mut seen = NodeSet::new();
    // Heap order visits every head before the rest of its component.
    for &head in x {
        if seen.contains(&head) {
            continue;
        }
        let mut nodes = NodeSet::new();
        let mut frontier = NodeSet::new();
        let mut stack = vec![head];
        while let Some(v) = stack.pop() {
            nodes.insert(v);
            seen.insert(v);
            match t.children(v) {
                Some((c1, c2)) if x.contains(&c1) => {
                    stack.push(c1);
                    stack.push(c2);
                }
                _ => {
                    frontier.insert(v);
                }
            }
        }
        out.push(ClosedComponent { nodes, head, frontier });
    }
    Ok(out)
}

/// Union of the frontiers of the components of `cl(x)`.
pub fn frontier_of_closure(t: &BinTree, x: &NodeSet) -> NodeSet {
    components(t, &closure(t, x))
        .expect("closure is closed")
        .into_iter()
        .flat_map(|c| c.frontier)
        .collect()
}

/// Every downward path from `v` to a leaf meets `f`.
pub fn encloses(t: &BinTree, f: &NodeSet, v: Node) -> bool {
    if f.contains(&v) {
        return true;
    }
    match t.children(v) {
        None => false,
        Some((a, b)) => encloses(t, f, a) && encloses(t, f, b),
    }
}

pub fn minimally_encloses(t: &BinTree, f: &NodeSet, v: Node) -> bool {
    if !encloses(t, f, v) {
        return false;
    }
    // Enclosure is monotone, so dropping single nodes suffices.
    f.iter().all(|&x| {
        let mut g = f.clone();
        g.remove(&x);
        !encloses(t, &g, v)
    })
}

/// A partial map from tree nodes to `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OffsetFn {
    pub p: u64,
    pub map: BTreeMap<Node, u64>,
}

impl OffsetFn {
    pub fn new(p: u64) -> OffsetFn {
        OffsetFn { p, map: BTreeMap::new() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (Node, u64)>>(p: u64, pairs: I) -> OffsetFn {
        OffsetFn {
            p,
            map: pairs.into_iter().map(|(v, a)| (v, a % p)).collect(),
        }
    }

    pub fn zero_on<I: IntoIterator<Item = Node>>(p: u64, nodes: I) -> OffsetFn {
        Self::from_pairs(p, nodes.into_iter().map(|v| (v, 0)))
    }

    pub fn get(&self, v: Node) -> Option<u64> {
        self.map.get(&v).copied()
    }

    pub fn set(&mut self, v: Node, a: u64) {
        self.map.insert(v, a % self.p);
    }

    pub fn domain(&self) -> NodeSet {
        self.map.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn support(&self) -> NodeSet {
        self.map.iter().filter(|(_, &a)| a != 0).map(|(&v, _)| v).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.map.values().all(|&a| a == 0)
    }

    pub fn restrict(&self, nodes: &NodeSet) -> OffsetFn {
        OffsetFn {
            p: self.p,
            map: self.map.iter().filter(|(v, _)| nodes.contains(v)).map(|(&v, &a)| (v, a)).collect(),
        }
    }

    /// `self ∪ other`, or `None` when they disagree on a shared node.
    pub fn union(&self, other: &OffsetFn) -> Option<OffsetFn> {
        let mut out = self.clone();
        for (&v, &a) in &other.map {
            match out.map.insert(v, a) {
                Some(b) if b != a => return None,
                _ => {}
            }
        }
        Some(out)
    }

    pub fn add(&self, other: &OffsetFn) -> OffsetFn {
        let mut out = self.clone();
        for (&v, &a) in &other.map {
            let cur = out.map.get(&v).copied().unwrap_or(0);
            out.map.insert(v, (cur + a) % self.p);
        }
        out
    }
}

/// Elimination order used by [`extend_consistent_ordered`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elimination {
    /// The order in which the closure adds nodes, breadth-first from `dom ρ`.
    BreadthFirst,
    /// Repeatedly the deepest determinable node.
    DeepestFirst,
}

pub fn extend_consistent(t: &BinTree, rho: &OffsetFn) -> Result<OffsetFn, TreeError> {
    extend_consistent_ordered(t, rho, Elimination::BreadthFirst)
}

fn determine(t: &BinTree, out: &OffsetFn, v: Node) -> Option<u64> {
    let p = out.p;
    if let Some((c1, c2)) = t.children(v) {
        if let (Some(a), Some(b)) = (out.get(c1), out.get(c2)) {
            return Some((a + b) % p);
        }
    }
    let u = t.parent(v)?;
    let s = t.sibling(v)?;
    match (out.get(u), out.get(s)) {
        (Some(a), Some(b)) => Some((a + p - b) % p),
        _ => None,
    }
}

/// The unique consistent extension of `ρ` to `cl(dom ρ)`.
pub fn extend_consistent_ordered(t: &BinTree, rho: &OffsetFn, order: Elimination) -> Result<OffsetFn, TreeError> {
    if let Some(&v) = rho.map.keys().find(|&&v| !t.contains(v)) {
        return Err(TreeError::UnknownNode(v));
    }
    let (cl, added) = closure_with_order(t, &rho.domain());
    let mut out = rho.clone();
    match order {
        Elimination::BreadthFirst => {
            for v in added {
                let a = determine(t, &out, v).expect("closure order determines each node");
                out.set(v, a);
            }
        }
        Elimination::DeepestFirst => {
            let mut pending: NodeSet = added.into_iter().collect();
            while !pending.is_empty() {
                let v = *pending
                    .iter()
                    .filter(|&&v| determine(t, &out, v).is_some())
                    .max_by_key(|&&v| (t.depth(v), v))
                    .expect("some pending node is determined");
                let a = determine(t, &out, v).expect("checked");
                out.set(v, a);
                pending.remove(&v);
            }
        }
    }
    for &v in &cl {
        if let Some((c1, c2)) = t.children(v) {
            if let (Some(a), Some(b)) = (out.get(c1), out.get(c2)) {
                if out.get(v).expect("in closure") != (a + b) % rho.p {
                    return Err(TreeError::Inconsistent);
                }
            }
        }
    }
    Ok(out)
}

pub fn is_consistent(t: &BinTree, rho: &OffsetFn) -> bool {
    extend_consistent(t, rho).is_ok()
}

/// Nodes of `cl(y)` that are free over `ρ` (with `dom ρ = x ⊆ y`).
///
/// `y` is bounded iff some closed connected `S ⊆ cl(y)` has `y` on its
/// frontier or head, a node of `x` with nonzero value on its frontier or
/// head, and no node of `x` strictly inside. For each head, a bottom-up
/// pass over `cl(y)` tracks which of these two flags some expansion below
/// each node can achieve.
pub fn free_elements(t: &BinTree, x: &NodeSet, y: &NodeSet, rho: &OffsetFn) -> Result<NodeSet, TreeError> {
    let mut dom = rho.domain();
    dom.extend(x.iter().copied());
    if !is_consistent(t, rho) {
        return Err(TreeError::Inconsistent);
    }
    let mut all = y.clone();
    all.extend(dom.iter().copied());
    let cl = closure(t, &all);
    let nonzero = |v: Node| rho.get(v).is_some_and(|a| a != 0);
    let in_x = |v: Node| dom.contains(&v);
    // Bit 0: contains the target on the boundary. Bit 1: contains a nonzero
    // node of x on the boundary. `reach[v]` holds achievable flag pairs for
    // the part of S hanging below v when v is not the head.
    let mut order: Vec<Node> = cl.iter().copied().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(t.depth(v)));
    let combine = |a: u8, b: u8| -> u8 {
        let mut out = 0u8;
        for i in 0..4u8 {
            if a & (1 << i) == 0 {
                continue;
            }
            for j in 0..4u8 {
                if b & (1 << j) != 0 {
                    out |= 1 << (i | j);
                }
            }
        }
        out
    };
    let mut free = NodeSet::new();
    let mut reach: BTreeMap<Node, u8> = BTreeMap::new();
    for &target in &cl {
        reach.clear();
        let mut bounded = false;
        for &v in &order {
            let own = (v == target) as u8 | ((nonzero(v) as u8) << 1);
            let expanded = t
                .children(v)
                .filter(|(c1, c2)| cl.contains(c1) && cl.contains(c2))
                .map(|(c1, c2)| combine(reach[&c1], reach[&c2]));
            // As a non-head node: stop here (frontier), or expand if not in x.
            let mut r = 1u8 << own;
            if !in_x(v) {
                if let Some(e) = expanded {
                    r |= e;
                }
            }
            reach.insert(v, r);
            // As the head: alone, or expanded regardless of membership in x.
            let mut as_head = 1u8 << own;
            if let Some(e) = expanded {
                as_head |= combine(1 << own, e);
            }
            if as_head & (1 << 3) != 0 {
                bounded = true;
                break;
            }
        }
        if !bounded {
            free.insert(target);
        }
    }
    Ok(free)
}

/// `ρ ∪ σ` where `σ` is zero on the free nodes of `cl(y)`.
pub fn forced_extension(t: &BinTree, x: &NodeSet, y: &NodeSet, rho: &OffsetFn) -> Result<OffsetFn, TreeError> {
    let free = free_elements(t, x, y, rho)?;
    let mut out = rho.clone();
    for v in free {
        out.map.entry(v).or_insert(0);
    }
    Ok(out)
}

/// A consistent extension of `ρ` defined on all of `cl(dom ρ ∪ y)`: zero on
/// free nodes, then zero on the least undetermined node until closed.
pub fn complete_on(t: &BinTree, rho: &OffsetFn, y: &NodeSet) -> Result<OffsetFn, TreeError> {
    let dom = rho.domain();
    let mut out = extend_consistent(t, &forced_extension(t, &dom, y, rho)?)?;
    let mut all = y.clone();
    all.extend(dom);
    let target = closure(t, &all);
    while let Some(&v) = target.iter().find(|v| !out.map.contains_key(v)) {
        out.set(v, 0);
        out = extend_consistent(t, &out)?;
    }
    Ok(out)
}

/// The sets `H_i` of the lift construction, one per `Y_i` (0-based).
///
/// For a node `v` with no nonzero `ρ` value below it, `u` (a grandchild of
/// `v`) is in `H_i` when the first `j ≥ i` at which a single grandchild's
/// subtree holds all of `(Y_j ∪ X) ∩ T(v)` has that set nonempty and held by
/// `u`. An empty set is held by every grandchild and so ends the search.
pub fn h_sets(t: &BinTree, x: &NodeSet, rho: &OffsetFn, ys: &[NodeSet]) -> Vec<NodeSet> {
    let support = rho.support();
    let mut candidates = NodeSet::new();
    for v in ys.iter().flatten().chain(x.iter()) {
        candidates.extend(t.ancestors(*v).filter(|&a| t.node_height(a) >= 2));
        if t.node_height(*v) >= 2 {
            candidates.insert(*v);
        }
    }
    candidates.retain(|&v| !support.iter().any(|&s| t.is_ancestor_or_self(v, s)));
    let mut out = vec![NodeSet::new(); ys.len()];
    for &v in &candidates {
        let gcs = t.grandchildren(v).expect("height at least 2");
        // Per j: None if no single grandchild holds the set, Some(None) if
        // the set is empty, Some(Some(w)) if grandchild w holds it.
        let holder: Vec<Option<Option<Node>>> = ys
            .iter()
            .map(|yj| {
                let inside: Vec<Node> = yj
                    .iter()
                    .chain(x.iter())
                    .copied()
                    .filter(|&n| t.is_ancestor_or_self(v, n))
                    .collect();
                if inside.is_empty() {
                    return Some(None);
                }
                gcs.iter()
                    .copied()
                    .find(|&w| inside.iter().all(|&n| t.is_ancestor_or_self(w, n)))
                    .map(Some)
            })
            .collect();
        for (i, set) in out.iter_mut().enumerate() {
            if let Some(Some(Some(u))) = holder[i..].iter().find(|h| h.is_some()) {
                set.insert(*u);
            }
        }
    }
    out
}

/// Offset functions `σ_1..σ_r` on `ys` such that `ρ ∪ σ_i ∪ σ_{i+1}` is
/// consistent and every nonzero `σ_i(y)` lies within `2(|X| + s)` of the
/// height of some nonzero `ρ` value. Both properties are re-checked before
/// returning.
pub fn lift_sequence(t: &BinTree, rho: &OffsetFn, ys: &[NodeSet], s: usize) -> Result<Vec<OffsetFn>, TreeError> {
    if let Some(y) = ys.iter().find(|y| y.len() > s) {
        return Err(TreeError::SetTooLarge {
            bound: s,
            found: y.len(),
        });
    }
    if !is_consistent(t, rho) {
        return Err(TreeError::Inconsistent);
    }
    let x = rho.domain();
    let hs = h_sets(t, &x, rho, ys);
    let mut sigmas: Vec<OffsetFn> = Vec::with_capacity(ys.len());
    let mut prev = OffsetFn::new(rho.p);
    for (i, yi) in ys.iter().enumerate() {
        let rho_i = rho
            .union(&OffsetFn::zero_on(rho.p, hs[i].iter().copied()))
            .ok_or_else(|| TreeError::LiftCheck("H set meets nonzero ρ".into()))?;
        let eta = rho_i
            .union(&prev)
            .ok_or_else(|| TreeError::LiftCheck("σ disagrees with ρ".into()))?;
        let full = complete_on(t, &eta, yi).map_err(|_| TreeError::LiftCheck(format!("η inconsistent at step {i}")))?;
        let sigma = full.restrict(yi);
        prev = sigma.clone();
        sigmas.push(sigma);
    }
    check_lift(t, rho, &sigmas, s).map_err(TreeError::LiftCheck)?;
    Ok(sigmas)
}

/// The two defining conditions of a lift sequence.
pub fn check_lift(t: &BinTree, rho: &OffsetFn, sigmas: &[OffsetFn], s: usize) -> Result<(), String> {
    for (i, w) in sigmas.windows(2).enumerate() {
        let joint = rho
            .union(&w[0])
            .and_then(|a| a.union(&w[1]))
            .ok_or_else(|| format!("σ_{} and σ_{} disagree", i + 1, i + 2))?;
        if !is_consistent(t, &joint) {
            return Err(format!("ρ ∪ σ_{} ∪ σ_{} is inconsistent", i + 1, i + 2));
        }
    }
    if let Some(first) = sigmas.first() {
        if rho.union(first).is_none_or(|j| !is_consistent(t, &j)) {
            return Err("ρ ∪ σ_1 is inconsistent".into());
        }
    }
    let gap = 2 * (rho.len() + s) as i64;
    let support_heights: Vec<i64> = rho.support().iter().map(|&v| t.node_height(v) as i64).collect();
    for (i, sigma) in sigmas.iter().enumerate() {
        for y in sigma.support() {
            let hy = t.node_height(y) as i64;
            if !support_heights.iter().any(|&hx| hy >= hx - gap) {
                return Err(format!("σ_{}({y}) is nonzero too far below ρ's support", i + 1));
            }
        }
    }
    Ok(())
}
