//! Path-systems instances over a complete binary tree crossed with `Z_p`.
//!
//! Tree nodes use heap numbering: the root is 0 and node `v` has children
//! `2v+1` and `2v+2`. Element `(v, a)` is named `n<v>_r<a>` with both fields
//! zero-padded to a fixed width, so the lexicographic element order is
//! node-major and element index `v·p + a`.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{eval_formula, Assignment};
use crate::logic::psp_lfp_sentence;
use crate::structure::{Elem, RelationFile, Structure, StructureFile};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeGroupSpec {
    pub h: u32,
    pub p: u64,
    /// Leaf values in left-to-right order.
    pub sigma: Vec<u64>,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PspError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("tree height must be at least 1")]
    HeightTooSmall,
    #[error("tree height {0} is too large")]
    HeightTooLarge(u32),
    #[error("sigma has {found} entries, expected {expected}")]
    SigmaLength { expected: usize, found: usize },
    #[error("value {0} is not a residue modulo p")]
    ResidueOutOfRange(u64),
    #[error("structure is not a tree-group instance: {0}")]
    NotTreeGroup(String),
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl TreeGroupSpec {
    pub fn new(h: u32, p: u64, sigma: Vec<u64>, t: u64) -> TreeGroupSpec {
        TreeGroupSpec { h, p, sigma, t }
    }

    pub fn validate(&self) -> Result<(), PspError> {
        if self.h < 1 {
            return Err(PspError::HeightTooSmall);
        }
        if self.h > 20 {
            return Err(PspError::HeightTooLarge(self.h));
        }
        if !is_prime(self.p) {
            return Err(PspError::NotPrime(self.p));
        }
        let leaves = 1usize << self.h;
        if self.sigma.len() != leaves {
            return Err(PspError::SigmaLength {
                expected: leaves,
                found: self.sigma.len(),
            });
        }
        if let Some(&bad) = self.sigma.iter().chain([&self.t]).find(|&&v| v >= self.p) {
            return Err(PspError::ResidueOutOfRange(bad));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn layout(&self) -> PspLayout {
        PspLayout::new(self.h, self.p)
    }
}

/// Element naming and indexing for tree-group instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PspLayout {
    pub h: u32,
    pub p: u64,
}

fn digits(mut x: u64) -> usize {
    let mut d = 1;
    while x >= 10 {
        x /= 10;
        d += 1;
    }
    d
}

impl PspLayout {
    pub fn new(h: u32, p: u64) -> PspLayout {
        PspLayout { h, p }
    }

    pub fn nodes(&self) -> u32 {
        (1u32 << (self.h + 1)) - 1
    }

    pub fn size(&self) -> usize {
        self.nodes() as usize * self.p as usize
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn leaf(&self, i: usize) -> u32 {
        (1u32 << self.h) - 1 + i as u32
    }

    pub fn elem(&self, node: u32, a: u64) -> Elem {
        Elem((node as u64 * self.p + a % self.p) as u32)
    }

    pub fn decode(&self, e: Elem) -> (u32, u64) {
        let i = e.0 as u64;
        ((i / self.p) as u32, i % self.p)
    }

    pub fn name(&self, node: u32, a: u64) -> String {
        let nw = digits(self.nodes() as u64 - 1);
        let rw = digits(self.p - 1);
        format!("n{node:0nw$}_r{a:0rw$}")
    }

    /// Recovers the layout of a generated instance from its element names.
    pub fn detect(s: &Structure) -> Result<PspLayout, PspError> {
        let bad = |m: &str| PspError::NotTreeGroup(m.to_string());
        let last = s.names().last().ok_or_else(|| bad("empty universe"))?;
        let parse = |name: &str| -> Option<(u64, u64)> {
            let rest = name.strip_prefix('n')?;
            let (a, b) = rest.split_once("_r")?;
            Some((a.parse().ok()?, b.parse().ok()?))
        };
        let (max_node, max_res) = parse(last).ok_or_else(|| bad("element names do not follow n<node>_r<residue>"))?;
        let p = max_res + 1;
        let nodes = max_node + 1;
        if !is_prime(p) || !(nodes + 1).is_power_of_two() || nodes < 3 {
            return Err(bad("universe is not a complete tree times Z_p"));
        }
        let layout = PspLayout::new((nodes + 1).trailing_zeros() - 1, p);
        if s.size() != layout.size() {
            return Err(bad("universe size does not match the tree"));
        }
        for (i, name) in s.names().iter().enumerate() {
            let (v, a) = layout.decode(Elem(i as u32));
            if *name != layout.name(v, a) {
                return Err(bad("element names are not canonical"));
            }
        }
        Ok(layout)
    }
}

/// How the ternary relation treats the two children of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChildRule {
    /// `u` and `v` are the two distinct children of `w`.
    Distinct,
    /// `u` and `v` are any children of `w`, possibly equal.
    AllowEqual,
}

pub fn generate_instance(spec: &TreeGroupSpec) -> Result<Structure, PspError> {
    generate_instance_with(spec, ChildRule::Distinct)
}

pub fn generate_instance_with(spec: &TreeGroupSpec, rule: ChildRule) -> Result<Structure, PspError> {
    spec.validate()?;
    let lay = spec.layout();
    let p = spec.p;
    let mut universe = Vec::with_capacity(lay.size());
    for v in 0..lay.nodes() {
        for a in 0..p {
            universe.push(lay.name(v, a));
        }
    }
    let internal = (1u32 << spec.h) - 1;
    let mut r = Vec::new();
    for w in 0..internal {
        let kids = [2 * w + 1, 2 * w + 2];
        for &u in &kids {
            for &v in &kids {
                if u == v && rule == ChildRule::Distinct {
                    continue;
                }
                for a in 0..p {
                    for b in 0..p {
                        r.push(vec![lay.name(u, a), lay.name(v, b), lay.name(w, (a + b) % p)]);
                    }
                }
            }
        }
    }
    r.sort();
    let s: Vec<Vec<String>> = spec
        .sigma
        .iter()
        .enumerate()
        .map(|(i, &a)| vec![lay.name(lay.leaf(i), a)])
        .collect();
    let mut relations = BTreeMap::new();
    relations.insert("R".to_string(), RelationFile { arity: 3, tuples: r });
    relations.insert("S".to_string(), RelationFile { arity: 1, tuples: s });
    let file = StructureFile {
        universe,
        relations,
        constants: [("t".to_string(), lay.name(0, spec.t))].into_iter().collect(),
    };
    Ok(Structure::from_file(&file).expect("generated instance is well-formed"))
}

/// Membership in the upward closure of `S` under `R`, by worklist.
pub fn upward_closure(inst: &Structure) -> Vec<bool> {
    let mut inside = vec![false; inst.size()];
    let (Some(r), Some(s)) = (inst.relation("R"), inst.relation("S")) else {
        return inside;
    };
    let mut queue: VecDeque<Elem> = VecDeque::new();
    for t in s.tuples() {
        if !inside[t[0].index()] {
            inside[t[0].index()] = true;
            queue.push_back(t[0]);
        }
    }
    while let Some(a) = queue.pop_front() {
        for pos in 0..2 {
            for t in r.with_at(pos, a) {
                if inside[t[0].index()] && inside[t[1].index()] && !inside[t[2].index()] {
                    inside[t[2].index()] = true;
                    queue.push_back(t[2]);
                }
            }
        }
    }
    inside
}

pub fn solve_direct(inst: &Structure) -> bool {
    let closure = upward_closure(inst);
    inst.constant("t").is_some_and(|t| closure[t.index()])
}

pub fn solve_via_lfp(inst: &Structure) -> bool {
    eval_formula(&psp_lfp_sentence(), inst, &Assignment::new()).expect("PSP sentence evaluates on PSP instances")
}

pub fn expected_positivity(spec: &TreeGroupSpec) -> bool {
    spec.sigma.iter().fold(0, |acc, &s| (acc + s) % spec.p) == spec.t % spec.p
}

/// Tree nodes holding more than one residue in the upward closure.
pub fn ambiguous_nodes(inst: &Structure, lay: PspLayout) -> Vec<u32> {
    let closure = upward_closure(inst);
    (0..lay.nodes())
        .filter(|&v| (0..lay.p).filter(|&a| closure[lay.elem(v, a).index()]).count() > 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smallest_instance_has_six_elements() {
        let inst = generate_instance(&TreeGroupSpec::new(1, 2, vec![1, 1], 0)).unwrap();
        assert_eq!(inst.size(), 6);
        let s: Vec<&str> = inst.relation("S").unwrap().tuples().iter().map(|t| inst.name(t[0])).collect();
        assert_eq!(s, vec!["n1_r1", "n2_r1"]);
        assert_eq!(inst.name(inst.constant("t").unwrap()), "n0_r0");
    }

    #[test]
    fn ternary_relation_sums_children() {
        let inst = generate_instance(&TreeGroupSpec::new(1, 3, vec![0, 0], 0)).unwrap();
        let e = |n: &str| inst.elem(n).unwrap();
        let r = inst.relation("R").unwrap();
        assert!(r.contains(&[e("n1_r1"), e("n2_r1"), e("n0_r2")]));
        assert!(!r.contains(&[e("n1_r1"), e("n1_r1"), e("n0_r2")]));
        assert_eq!(r.len(), 2 * 9);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert_eq!(
            generate_instance(&TreeGroupSpec::new(1, 4, vec![0, 0], 0)).unwrap_err(),
            PspError::NotPrime(4)
        );
        assert_eq!(
            generate_instance(&TreeGroupSpec::new(0, 2, vec![0], 0)).unwrap_err(),
            PspError::HeightTooSmall
        );
        assert!(matches!(
            generate_instance(&TreeGroupSpec::new(2, 3, vec![0, 0], 0)),
            Err(PspError::SigmaLength { .. })
        ));
    }

    #[test]
    fn solver_examples() {
        assert!(solve_direct(&generate_instance(&TreeGroupSpec::new(1, 2, vec![1, 1], 0)).unwrap()));
        assert!(expected_positivity(&TreeGroupSpec::new(2, 3, vec![0; 4], 0)));
        assert!(expected_positivity(&TreeGroupSpec::new(1, 5, vec![2, 2], 4)));
        let empty_s = Structure::from_json(
            r#"{"universe":["a","b","c"],"relations":{"R":{"arity":3,"tuples":[["a","b","c"]]},"S":{"arity":1,"tuples":[]}},"constants":{"t":"c"}}"#,
        )
        .unwrap();
        assert!(!solve_direct(&empty_s));
    }

    #[test]
    fn layout_detection_round_trips() {
        let spec = TreeGroupSpec::new(3, 5, vec![1, 2, 3, 4, 0, 1, 2, 3], 2);
        let inst = generate_instance(&spec).unwrap();
        let lay = PspLayout::detect(&inst).unwrap();
        assert_eq!(lay, spec.layout());
        for e in inst.elems() {
            let (v, a) = lay.decode(e);
            assert_eq!(inst.name(e), lay.name(v, a));
        }
    }

    #[test]
    fn three_solvers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let h = rng.gen_range(1..=3);
            let p = [2u64, 3, 5][rng.gen_range(0..3)];
            let spec = TreeGroupSpec::new(h, p, (0..1 << h).map(|_| rng.gen_range(0..p)).collect(), rng.gen_range(0..p));
            let inst = generate_instance(&spec).unwrap();
            let d = solve_direct(&inst);
            assert_eq!(d, solve_via_lfp(&inst));
            assert_eq!(d, expected_positivity(&spec));
        }
    }

    #[test]
    fn closure_residues_are_unique_only_with_distinct_children() {
        let spec = TreeGroupSpec::new(2, 3, vec![1, 1, 2, 0], 0);
        let lay = spec.layout();
        assert!(ambiguous_nodes(&generate_instance(&spec).unwrap(), lay).is_empty());
        let loose = generate_instance_with(&spec, ChildRule::AllowEqual).unwrap();
        assert!(!ambiguous_nodes(&loose, lay).is_empty());
    }

    #[test]
    fn generation_is_byte_identical() {
        let spec = TreeGroupSpec::new(2, 5, vec![1, 2, 3, 4], 0);
        assert_eq!(
            generate_instance(&spec).unwrap().to_json(),
            generate_instance(&spec).unwrap().to_json()
        );
    }
}
