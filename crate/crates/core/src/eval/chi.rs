//! The χ recursion on labelled graphs.
//!
//! `(u, ℓ) ∈ χ` iff `ℓ ≥ 0` and the number of out-neighbours `v` of `u` with
//! `(v, ⌊(ℓ-1)/indeg(v)⌋) ∈ χ` lies in `C(u)`. Every out-neighbour has
//! in-degree at least one, so the counter strictly decreases along the
//! recursion. Evaluation is iterative and memoized on `(vertex, ℓ)`.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};

/// A directed graph with a finite label set per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledGraph {
    out: Vec<Vec<u32>>,
    in_deg: Vec<u32>,
    labels: Vec<BTreeSet<u64>>,
}

impl LabelledGraph {
    /// Builds the graph; edges are deduplicated. Panics on out-of-range
    /// endpoints or a label vector of the wrong length.
    pub fn new<I>(n: usize, edges: I, labels: Vec<BTreeSet<u64>>) -> LabelledGraph
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        assert_eq!(labels.len(), n, "one label set per vertex");
        let mut out = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!((a as usize) < n && (b as usize) < n, "edge references unknown vertex");
            out[a as usize].push(b);
        }
        let mut in_deg = vec![0u32; n];
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
            for &b in list.iter() {
                in_deg[b as usize] += 1;
            }
        }
        LabelledGraph { out, in_deg, labels }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn out(&self, u: usize) -> &[u32] {
        &self.out[u]
    }

    pub fn in_degree(&self, v: usize) -> u32 {
        self.in_deg[v]
    }

    pub fn label(&self, u: usize) -> &BTreeSet<u64> {
        &self.labels[u]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out[a].binary_search(&(b as u32)).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().map(move |&b| (a as u32, b)))
    }
}

trait Level: Clone + Eq + Hash {
    fn is_zero(&self) -> bool;
    /// `⌊(self - 1) / deg⌋` for a positive counter.
    fn step(&self, deg: u32) -> Self;
}

impl Level for u64 {
    fn is_zero(&self) -> bool {
        *self == 0
    }

    fn step(&self, deg: u32) -> Self {
        (self - 1) / deg as u64
    }
}

impl Level for BigUint {
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn step(&self, deg: u32) -> Self {
        (self - 1u32) / deg
    }
}

struct Frame<L> {
    u: u32,
    l: L,
    child: usize,
    count: u64,
}

fn solve<L: Level>(g: &LabelledGraph, memo: &mut HashMap<(u32, L), bool>, u: u32, l: L) -> bool {
    if let Some(&b) = memo.get(&(u, l.clone())) {
        return b;
    }
    let mut stack = vec![Frame {
        u,
        l: l.clone(),
        child: 0,
        count: 0,
    }];
    while let Some(top) = stack.last_mut() {
        let out = &g.out[top.u as usize];
        // At ℓ = 0 every successor sits at ℓ = -1 and fails.
        if !top.l.is_zero() && top.child < out.len() {
            let v = out[top.child];
            let cl = top.l.step(g.in_deg[v as usize]);
            match memo.get(&(v, cl.clone())) {
                Some(&b) => {
                    top.count += b as u64;
                    top.child += 1;
                }
                None => stack.push(Frame {
                    u: v,
                    l: cl,
                    child: 0,
                    count: 0,
                }),
            }
        } else {
            let res = g.labels[top.u as usize].contains(&top.count);
            memo.insert((top.u, top.l.clone()), res);
            stack.pop();
        }
    }
    memo[&(u, l)]
}

/// Memo tables for repeated χ queries on one graph.
#[derive(Default, Debug, Clone)]
pub struct ChiMemo {
    small: HashMap<(u32, u64), bool>,
    big: HashMap<(u32, BigUint), bool>,
}

impl ChiMemo {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of memoized `(vertex, ℓ)` states.
    pub fn states(&self) -> usize {
        self.small.len() + self.big.len()
    }

    pub fn query(&mut self, g: &LabelledGraph, u: usize, l: &BigInt) -> bool {
        if l.sign() == Sign::Minus {
            return false;
        }
        let mag = l.magnitude();
        match mag.to_u64() {
            Some(small) => solve(g, &mut self.small, u as u32, small),
            None => solve(g, &mut self.big, u as u32, mag.clone()),
        }
    }

    pub fn query_u64(&mut self, g: &LabelledGraph, u: usize, l: u64) -> bool {
        solve(g, &mut self.small, u as u32, l)
    }
}

/// Membership of `(u, ℓ)` in `χ(G, C)`.
pub fn chi(g: &LabelledGraph, u: usize, l: &BigInt) -> bool {
    ChiMemo::new().query(g, u, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::naive_chi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(sets: &[&[u64]]) -> Vec<BTreeSet<u64>> {
        sets.iter().map(|s| s.iter().copied().collect()).collect()
    }

    #[test]
    fn isolated_vertex_with_zero_label_holds_everywhere() {
        let g = LabelledGraph::new(1, [], labels(&[&[0]]));
        for l in 0..50 {
            assert!(chi(&g, 0, &BigInt::from(l)));
        }
        let g = LabelledGraph::new(1, [], labels(&[&[1]]));
        assert!(!chi(&g, 0, &BigInt::from(7)));
    }

    #[test]
    fn negative_counter_fails() {
        let g = LabelledGraph::new(1, [], labels(&[&[0]]));
        assert!(!chi(&g, 0, &BigInt::from(-1)));
    }

    #[test]
    fn single_edge() {
        let g = LabelledGraph::new(2, [(0, 1)], labels(&[&[1], &[0]]));
        assert!(chi(&g, 0, &BigInt::from(1)));
        // At ℓ = 0 the successor is evaluated at -1.
        assert!(!chi(&g, 0, &BigInt::from(0)));
    }

    #[test]
    fn big_counters_match_small_ones_on_cycles() {
        // Complete digraph with loops on two vertices, label {0}: every
        // in-degree is 2, so χ(ℓ) = ¬χ(⌊(ℓ-1)/2⌋) for ℓ ≥ 1 and χ(0) holds.
        let g = LabelledGraph::new(2, [(0, 0), (0, 1), (1, 0), (1, 1)], labels(&[&[0], &[0]]));
        fn expect(l: &BigInt) -> bool {
            if l.is_zero() {
                return true;
            }
            !expect(&((l - 1) / 2))
        }
        let huge: BigInt = BigInt::from(u64::MAX) * BigInt::from(1000u32) + BigInt::from(7);
        for l in [huge.clone(), huge + BigInt::from(1), BigInt::from(5), BigInt::from(u64::MAX)] {
            assert_eq!(chi(&g, 0, &l), expect(&l), "{l}");
        }
    }

    #[test]
    fn memo_matches_naive_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let edges: Vec<(u32, u32)> = (0..rng.gen_range(0..=n * 2))
                .map(|_| (rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32))
                .collect();
            let labs: Vec<BTreeSet<u64>> = (0..n)
                .map(|_| (0..=8).filter(|_| rng.gen_bool(0.3)).collect())
                .collect();
            let g = LabelledGraph::new(n, edges, labs);
            let mut memo = ChiMemo::new();
            for u in 0..n {
                for l in -1..=20i64 {
                    assert_eq!(memo.query(&g, u, &BigInt::from(l)), naive_chi(&g, u, l));
                }
            }
        }
    }

    #[test]
    fn label_change_only_affects_ancestors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = rng.gen_range(2..=8);
            let edges: Vec<(u32, u32)> = (0..n * 2)
                .map(|_| (rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32))
                .collect();
            let labs: Vec<BTreeSet<u64>> = (0..n).map(|_| (0..=4).filter(|_| rng.gen_bool(0.4)).collect()).collect();
            let g = LabelledGraph::new(n, edges.clone(), labs.clone());
            let target = rng.gen_range(0..n);
            let mut labs2 = labs.clone();
            labs2[target] = (0..=4).filter(|_| rng.gen_bool(0.5)).collect();
            let g2 = LabelledGraph::new(n, edges.clone(), labs2);
            // Vertices that can reach `target` (including itself).
            let mut reach = vec![false; n];
            reach[target] = true;
            loop {
                let mut changed = false;
                for &(a, b) in &edges {
                    if reach[b as usize] && !reach[a as usize] {
                        reach[a as usize] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            for u in (0..n).filter(|&u| !reach[u]) {
                for l in 0..=15 {
                    let l = BigInt::from(l);
                    assert_eq!(chi(&g, u, &l), chi(&g2, u, &l));
                }
            }
        }
    }
}
