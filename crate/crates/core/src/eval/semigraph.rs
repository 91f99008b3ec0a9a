//! Labelled semi-graphs `(V, E, ∼, C)`, their quotients, and node spaces of
//! tuples over `A ∪ N(A)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::chi::{ChiMemo, LabelledGraph};
use crate::logic::Sort;
use crate::structure::{Elem, RelationFile, Structure, Value};

/// A semi-graph on vertices `0..n` with edge, similarity and label data.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SemiGraph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub sim: Vec<(u32, u32)>,
    pub labels: Vec<BTreeSet<u64>>,
}

impl SemiGraph {
    pub fn new(n: usize) -> SemiGraph {
        SemiGraph {
            n,
            edges: Vec::new(),
            sim: Vec::new(),
            labels: vec![BTreeSet::new(); n],
        }
    }

    /// Sorts and deduplicates the pair lists.
    pub fn normalize(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup();
        self.sim.sort_unstable();
        self.sim.dedup();
    }

    pub fn as_graph(&self) -> LabelledGraph {
        LabelledGraph::new(self.n, self.edges.iter().copied(), self.labels.clone())
    }
}

/// The quotient `[G]` with merged labels `Ĉ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientGraph {
    /// Class id per vertex; classes are numbered by their least member.
    pub class_of: Vec<u32>,
    /// Members of each class, ascending.
    pub classes: Vec<Vec<u32>>,
    pub graph: LabelledGraph,
}

impl QuotientGraph {
    pub fn class(&self, v: usize) -> usize {
        self.class_of[v] as usize
    }

    /// In-degree of the class of `v` in `[G]`.
    pub fn class_in_degree(&self, v: usize) -> u32 {
        self.graph.in_degree(self.class(v))
    }

    pub fn class_edge(&self, a: usize, b: usize) -> bool {
        self.graph.has_edge(self.class(a), self.class(b))
    }
}

/// Merges `∼`-connected vertices; classes are the components of the
/// undirected graph of `∼`.
pub fn quotient(g: &SemiGraph) -> QuotientGraph {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); g.n];
    for &(a, b) in &g.sim {
        if a != b {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    let mut class_of = vec![u32::MAX; g.n];
    let mut classes: Vec<Vec<u32>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.n {
        if class_of[start] != u32::MAX {
            continue;
        }
        let id = classes.len() as u32;
        let mut members = vec![start as u32];
        class_of[start] = id;
        queue.push_back(start as u32);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x as usize] {
                if class_of[y as usize] == u32::MAX {
                    class_of[y as usize] = id;
                    members.push(y);
                    queue.push_back(y);
                }
            }
        }
        members.sort_unstable();
        classes.push(members);
    }
    let labels = classes
        .iter()
        .map(|m| {
            m.iter()
                .flat_map(|&v| g.labels[v as usize].iter().copied())
                .collect()
        })
        .collect();
    let edges = g
        .edges
        .iter()
        .map(|&(a, b)| (class_of[a as usize], class_of[b as usize]));
    let graph = LabelledGraph::new(classes.len(), edges, labels);
    QuotientGraph {
        class_of,
        classes,
        graph,
    }
}

/// `χ̂(G, C) = χ([G], Ĉ)` at the class of `u`.
pub fn chi_hat(g: &SemiGraph, u: usize, l: &BigInt) -> bool {
    let q = quotient(g);
    ChiMemo::new().query(&q.graph, q.class(u), l)
}

/// Per-position domain of a node space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PosKind {
    Sorted(Sort),
    /// Any value of `A ∪ N(A)`.
    Any,
}

/// The nodes of an interpreted semi-graph: tuples whose positions range over
/// the given domains, indexed in lexicographic tuple order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpace {
    pub positions: Vec<PosKind>,
    /// Universe size `|A|`.
    pub n: usize,
}

impl NodeSpace {
    pub fn typed(sorts: &[Sort], n: usize) -> NodeSpace {
        NodeSpace {
            positions: sorts.iter().map(|s| PosKind::Sorted(*s)).collect(),
            n,
        }
    }

    pub fn untyped(c: usize, n: usize) -> NodeSpace {
        NodeSpace {
            positions: vec![PosKind::Any; c],
            n,
        }
    }

    fn width(&self, k: PosKind) -> usize {
        match k {
            PosKind::Sorted(Sort::Elem) => self.n,
            PosKind::Sorted(Sort::Num) => self.n + 1,
            PosKind::Any => 2 * self.n + 1,
        }
    }

    /// Number of nodes, or `None` on overflow.
    pub fn size(&self) -> Option<usize> {
        self.positions
            .iter()
            .try_fold(1usize, |acc, k| acc.checked_mul(self.width(*k)))
    }

    fn digit(&self, k: PosKind, v: Value) -> Option<usize> {
        match (k, v) {
            (PosKind::Sorted(Sort::Elem), Value::Elem(e)) | (PosKind::Any, Value::Elem(e)) => Some(e.index()),
            (PosKind::Sorted(Sort::Num), Value::Num(m)) => Some(m as usize),
            (PosKind::Any, Value::Num(m)) => Some(self.n + m as usize),
            _ => None,
        }
        .filter(|&d| d < self.width(k))
    }

    fn value(&self, k: PosKind, d: usize) -> Value {
        match k {
            PosKind::Sorted(Sort::Elem) => Value::Elem(Elem(d as u32)),
            PosKind::Sorted(Sort::Num) => Value::Num(d as u64),
            PosKind::Any if d < self.n => Value::Elem(Elem(d as u32)),
            PosKind::Any => Value::Num((d - self.n) as u64),
        }
    }

    pub fn index(&self, tuple: &[Value]) -> Option<usize> {
        if tuple.len() != self.positions.len() {
            return None;
        }
        let mut idx = 0usize;
        for (k, v) in self.positions.iter().zip(tuple) {
            idx = idx * self.width(*k) + self.digit(*k, *v)?;
        }
        Some(idx)
    }

    pub fn tuple(&self, mut idx: usize) -> Vec<Value> {
        let mut out = vec![Value::Num(0); self.positions.len()];
        for (i, k) in self.positions.iter().enumerate().rev() {
            let w = self.width(*k);
            out[i] = self.value(*k, idx % w);
            idx /= w;
        }
        out
    }

    /// Whether the tuple's values have the given sorts.
    pub fn well_sorted(tuple: &[Value], sorts: &[Sort]) -> bool {
        tuple.iter().zip(sorts).all(|(v, s)| {
            matches!((v, s), (Value::Elem(_), Sort::Elem) | (Value::Num(_), Sort::Num))
        })
    }
}

/// Display name of a node tuple, e.g. `(a,#2)`.
pub fn node_name(s: &Structure, tuple: &[Value]) -> String {
    let parts: Vec<String> = tuple.iter().map(|v| s.value_name(*v)).collect();
    format!("({})", parts.join(","))
}

/// JSON form: vertices plus relations `E`, `SIM` and `C`, where `C` pairs a
/// vertex with a number written `#n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiGraphFile {
    pub universe: Vec<String>,
    pub relations: BTreeMap<String, RelationFile>,
}

impl SemiGraph {
    pub fn to_file(&self, names: &[String]) -> SemiGraphFile {
        let pairs = |list: &[(u32, u32)]| RelationFile {
            arity: 2,
            tuples: list
                .iter()
                .map(|&(a, b)| vec![names[a as usize].clone(), names[b as usize].clone()])
                .collect(),
        };
        let c = RelationFile {
            arity: 2,
            tuples: self
                .labels
                .iter()
                .enumerate()
                .flat_map(|(v, set)| set.iter().map(move |m| vec![names[v].clone(), format!("#{m}")]))
                .collect(),
        };
        SemiGraphFile {
            universe: names.to_vec(),
            relations: [
                ("E".to_string(), pairs(&self.edges)),
                ("SIM".to_string(), pairs(&self.sim)),
                ("C".to_string(), c),
            ]
            .into_iter()
            .collect(),
        }
    }

    /// Reads the JSON form; vertices keep their listed order.
    pub fn from_file(file: &SemiGraphFile) -> Result<SemiGraph, String> {
        let index: HashMap<&str, u32> = file
            .universe
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as u32))
            .collect();
        if index.len() != file.universe.len() {
            return Err("duplicate vertex".into());
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| format!("unknown element {name:?}"))
        };
        let mut g = SemiGraph::new(file.universe.len());
        for (rel, body) in &file.relations {
            for t in &body.tuples {
                if t.len() != 2 {
                    return Err(format!("arity mismatch in relation {rel}"));
                }
                match rel.as_str() {
                    "E" => g.edges.push((lookup(&t[0])?, lookup(&t[1])?)),
                    "SIM" => g.sim.push((lookup(&t[0])?, lookup(&t[1])?)),
                    "C" => {
                        let v = lookup(&t[0])?;
                        let m = t[1]
                            .strip_prefix('#')
                            .and_then(|x| x.parse::<u64>().ok())
                            .ok_or_else(|| format!("bad label {:?}", t[1]))?;
                        g.labels[v as usize].insert(m);
                    }
                    other => return Err(format!("unexpected relation {other}")),
                }
            }
        }
        g.normalize();
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::chi::chi;
    use crate::oracle::{naive_chi, union_find_quotient};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_semigraph(rng: &mut ChaCha8Rng, max_n: usize) -> SemiGraph {
        let n = rng.gen_range(1..=max_n);
        let mut g = SemiGraph::new(n);
        for _ in 0..rng.gen_range(0..=2 * n) {
            g.edges.push((rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32));
        }
        for _ in 0..rng.gen_range(0..=n) {
            g.sim.push((rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32));
        }
        for l in g.labels.iter_mut() {
            *l = (0..=6).filter(|_| rng.gen_bool(0.3)).collect();
        }
        g.normalize();
        g
    }

    #[test]
    fn empty_sim_gives_singletons() {
        let mut g = SemiGraph::new(3);
        g.edges = vec![(0, 1), (1, 2)];
        let q = quotient(&g);
        assert_eq!(q.classes, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(q.graph.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn merged_class_carries_edge() {
        let mut g = SemiGraph::new(3);
        g.sim = vec![(0, 1)];
        g.edges = vec![(1, 2)];
        let q = quotient(&g);
        assert_eq!(q.classes, vec![vec![0, 1], vec![2]]);
        assert!(q.class_edge(0, 2));
        assert_eq!(q.graph.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn merged_labels_union() {
        let mut g = SemiGraph::new(2);
        g.sim = vec![(1, 0)];
        g.labels = vec![[0].into_iter().collect(), BTreeSet::new()];
        for l in 0..5 {
            assert!(chi_hat(&g, 0, &BigInt::from(l)));
            assert!(chi_hat(&g, 1, &BigInt::from(l)));
        }
    }

    #[test]
    fn quotient_matches_union_find() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let g = random_semigraph(&mut rng, 10);
            assert_eq!(quotient(&g), union_find_quotient(&g));
        }
    }

    #[test]
    fn chi_hat_matches_explicit_quotient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let g = random_semigraph(&mut rng, 6);
            let q = union_find_quotient(&g);
            for u in 0..g.n {
                for l in 0..=12 {
                    assert_eq!(chi_hat(&g, u, &BigInt::from(l)), naive_chi(&q.graph, q.class(u), l));
                }
            }
        }
    }

    #[test]
    fn empty_sim_chi_hat_is_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let mut g = random_semigraph(&mut rng, 7);
            g.sim.clear();
            let plain = g.as_graph();
            for u in 0..g.n {
                for l in 0..10 {
                    let l = BigInt::from(l);
                    assert_eq!(chi_hat(&g, u, &l), chi(&plain, u, &l));
                }
            }
        }
    }

    #[test]
    fn partition_is_coarsest_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let g = random_semigraph(&mut rng, 10);
            let q = quotient(&g);
            for &(a, b) in &g.sim {
                assert_eq!(q.class_of[a as usize], q.class_of[b as usize]);
            }
            // Each class is connected through ∼ pairs inside it.
            for members in &q.classes {
                let mut seen: BTreeSet<u32> = [members[0]].into_iter().collect();
                loop {
                    let before = seen.len();
                    for &(a, b) in &g.sim {
                        if seen.contains(&a) || seen.contains(&b) {
                            seen.insert(a);
                            seen.insert(b);
                        }
                    }
                    if seen.len() == before {
                        break;
                    }
                }
                assert_eq!(seen.into_iter().collect::<Vec<_>>(), *members);
            }
        }
    }

    #[test]
    fn node_space_round_trip() {
        let sp = NodeSpace {
            positions: vec![PosKind::Any, PosKind::Sorted(Sort::Num), PosKind::Sorted(Sort::Elem)],
            n: 3,
        };
        assert_eq!(sp.size(), Some(7 * 4 * 3));
        for i in 0..sp.size().unwrap() {
            assert_eq!(sp.index(&sp.tuple(i)), Some(i));
        }
        assert_eq!(NodeSpace::untyped(1, 2).size(), Some(5));
        assert_eq!(sp.index(&[Value::Num(0), Value::Elem(Elem(0)), Value::Elem(Elem(0))]), None);
    }

    #[test]
    fn file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let g = random_semigraph(&mut rng, 6);
        let names: Vec<String> = (0..g.n).map(|i| format!("v{i}")).collect();
        let back = SemiGraph::from_file(&g.to_file(&names)).unwrap();
        assert_eq!(back, g);
    }
}
