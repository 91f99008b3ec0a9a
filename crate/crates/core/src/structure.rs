//! Finite relational structures with an implicit number domain.
//!
//! Element ids are strings. A structure stores its universe sorted
//! lexicographically and refers to elements by their position in that order,
//! so iteration, hashing and serialization are deterministic. The number
//! domain `{0, ..., |A|}` is derived from the universe size and never stored.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An element of a structure's universe, identified by its canonical index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elem(pub u32);

impl Elem {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A value of either sort. Elements order before numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Elem(Elem),
    Num(u64),
}

impl Value {
    pub fn as_elem(self) -> Option<Elem> {
        match self {
            Value::Elem(e) => Some(e),
            Value::Num(_) => None,
        }
    }

    pub fn as_num(self) -> Option<u64> {
        match self {
            Value::Num(n) => Some(n),
            Value::Elem(_) => None,
        }
    }
}

/// A tuple over `A ∪ N(A)`.
pub type MixedTuple = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("empty universe")]
    EmptyUniverse,
    #[error("duplicate element {0:?} in universe")]
    DuplicateElement(String),
    #[error("arity mismatch in relation {relation}: expected {expected}, found tuple of length {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown element {name:?} in {context}")]
    UnknownElement { context: String, name: String },
    #[error("number {value} outside the number domain 0..={max}")]
    NumberOutOfRange { value: u64, max: u64 },
    #[error("structures have different universes")]
    UniverseMismatch,
    #[error("structures have different vocabularies")]
    VocabularyMismatch,
}

/// Serialized form of a relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFile {
    pub arity: usize,
    pub tuples: Vec<Vec<String>>,
}

/// The JSON structure file format.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructureFile {
    pub universe: Vec<String>,
    #[serde(default)]
    pub relations: BTreeMap<String, RelationFile>,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
}

impl StructureFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("structure files always serialize")
    }
}

/// Checks every structure invariant and lists each violation.
pub fn validate_structure(file: &StructureFile) -> Result<(), Vec<StructureError>> {
    let mut errors = Vec::new();
    if file.universe.is_empty() {
        errors.push(StructureError::EmptyUniverse);
    }
    let mut seen = HashSet::new();
    for name in &file.universe {
        if !seen.insert(name.as_str()) {
            errors.push(StructureError::DuplicateElement(name.clone()));
        }
    }
    for (rel, body) in &file.relations {
        for tuple in &body.tuples {
            if tuple.len() != body.arity {
                errors.push(StructureError::ArityMismatch {
                    relation: rel.clone(),
                    expected: body.arity,
                    found: tuple.len(),
                });
            }
            for name in tuple {
                if !seen.contains(name.as_str()) {
                    errors.push(StructureError::UnknownElement {
                        context: format!("relation {rel}"),
                        name: name.clone(),
                    });
                }
            }
        }
    }
    for (c, name) in &file.constants {
        if !seen.contains(name.as_str()) {
            errors.push(StructureError::UnknownElement {
                context: format!("constant {c}"),
                name: name.clone(),
            });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// A relation with per-position lookup indexes.
#[derive(Debug, Clone)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<Elem>>,
    members: HashSet<Vec<Elem>>,
    by_position: Vec<HashMap<Elem, Vec<u32>>>,
}

impl Relation {
    fn new(arity: usize, tuples: BTreeSet<Vec<Elem>>) -> Self {
        let tuples: Vec<Vec<Elem>> = tuples.into_iter().collect();
        let mut by_position = vec![HashMap::new(); arity];
        for (id, t) in tuples.iter().enumerate() {
            for (pos, e) in t.iter().enumerate() {
                by_position[pos]
                    .entry(*e)
                    .or_insert_with(Vec::new)
                    .push(id as u32);
            }
        }
        let members = tuples.iter().cloned().collect();
        Relation {
            arity,
            tuples,
            members,
            by_position,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[Elem]) -> bool {
        self.members.contains(tuple)
    }

    /// Tuples in canonical order.
    pub fn tuples(&self) -> &[Vec<Elem>] {
        &self.tuples
    }

    /// Tuples having `e` at position `pos`.
    pub fn with_at(&self, pos: usize, e: Elem) -> impl Iterator<Item = &[Elem]> + '_ {
        self.by_position[pos]
            .get(&e)
            .map(|ids| ids.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&id| self.tuples[id as usize].as_slice())
    }
}

/// A finite relational structure. Immutable once built.
#[derive(Debug, Clone)]
pub struct Structure {
    universe: Vec<String>,
    index: HashMap<String, Elem>,
    relations: BTreeMap<String, Relation>,
    constants: BTreeMap<String, Elem>,
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe
            && self.constants == other.constants
            && self.relations.len() == other.relations.len()
            && self.relations.iter().zip(&other.relations).all(|((n1, r1), (n2, r2))| {
                n1 == n2 && r1.arity == r2.arity && r1.tuples == r2.tuples
            })
    }
}

impl Eq for Structure {}

impl Structure {
    pub fn from_file(file: &StructureFile) -> Result<Self, Vec<StructureError>> {
        validate_structure(file)?;
        let mut universe = file.universe.clone();
        universe.sort();
        let index: HashMap<String, Elem> = universe
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), Elem(i as u32)))
            .collect();
        let relations = file
            .relations
            .iter()
            .map(|(name, body)| {
                let tuples = body
                    .tuples
                    .iter()
                    .map(|t| t.iter().map(|n| index[n]).collect())
                    .collect();
                (name.clone(), Relation::new(body.arity, tuples))
            })
            .collect();
        let constants = file
            .constants
            .iter()
            .map(|(c, n)| (c.clone(), index[n]))
            .collect();
        Ok(Structure {
            universe,
            index,
            relations,
            constants,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file = StructureFile::from_json(text).map_err(|e| e.to_string())?;
        Structure::from_file(&file).map_err(|errs| {
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        })
    }

    /// Canonical serialized form: universe and tuples in element order.
    pub fn to_file(&self) -> StructureFile {
        StructureFile {
            universe: self.universe.clone(),
            relations: self
                .relations
                .iter()
                .map(|(name, rel)| {
                    let tuples = rel
                        .tuples
                        .iter()
                        .map(|t| t.iter().map(|e| self.name(*e).to_string()).collect())
                        .collect();
                    (
                        name.clone(),
                        RelationFile {
                            arity: rel.arity,
                            tuples,
                        },
                    )
                })
                .collect(),
            constants: self
                .constants
                .iter()
                .map(|(c, e)| (c.clone(), self.name(*e).to_string()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    /// Largest member of the number domain, `|A|`.
    pub fn number_max(&self) -> u64 {
        self.universe.len() as u64
    }

    pub fn elems(&self) -> impl Iterator<Item = Elem> + Clone {
        (0..self.universe.len() as u32).map(Elem)
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.universe[e.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.universe
    }

    pub fn elem(&self, name: &str) -> Option<Elem> {
        self.index.get(name).copied()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    pub fn constant(&self, name: &str) -> Option<Elem> {
        self.constants.get(name).copied()
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, Elem)> {
        self.constants.iter().map(|(n, e)| (n.as_str(), *e))
    }

    pub fn value_name(&self, v: Value) -> String {
        match v {
            Value::Elem(e) => self.name(e).to_string(),
            Value::Num(n) => format!("#{n}"),
        }
    }

    /// Parses an element name or a `#n` number.
    pub fn parse_value(&self, text: &str) -> Result<Value, StructureError> {
        if let Some(num) = text.strip_prefix('#') {
            let n: u64 = num.parse().map_err(|_| StructureError::UnknownElement {
                context: "value".into(),
                name: text.into(),
            })?;
            if n > self.number_max() {
                return Err(StructureError::NumberOutOfRange {
                    value: n,
                    max: self.number_max(),
                });
            }
            return Ok(Value::Num(n));
        }
        self.elem(text)
            .map(Value::Elem)
            .ok_or_else(|| StructureError::UnknownElement {
                context: "value".into(),
                name: text.into(),
            })
    }

    /// Checks that a mixed tuple stays within `A ∪ N(A)`.
    pub fn check_tuple(&self, tuple: &[Value]) -> Result<(), StructureError> {
        for v in tuple {
            match *v {
                Value::Elem(e) if e.index() >= self.size() => {
                    return Err(StructureError::UnknownElement {
                        context: "tuple".into(),
                        name: format!("#elem{}", e.0),
                    })
                }
                Value::Num(n) if n > self.number_max() => {
                    return Err(StructureError::NumberOutOfRange {
                        value: n,
                        max: self.number_max(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Relation names with arities and constant names.
    pub fn signature(&self) -> (BTreeMap<String, usize>, BTreeSet<String>) {
        (
            self.relations
                .iter()
                .map(|(n, r)| (n.clone(), r.arity))
                .collect(),
            self.constants.keys().cloned().collect(),
        )
    }

    /// Same universe (element names) as `other`.
    pub fn same_universe(&self, other: &Structure) -> bool {
        self.universe == other.universe
    }
}

/// Encodes `r̄` as `Σ (n+1)^(i-1) r_i`.
pub fn encode_number_tuple(r: &[u64], n: u64) -> Result<BigUint, StructureError> {
    let base = BigUint::from(n) + 1u32;
    let mut acc = BigUint::from(0u32);
    let mut weight = BigUint::from(1u32);
    for &ri in r {
        if ri > n {
            return Err(StructureError::NumberOutOfRange { value: ri, max: n });
        }
        acc += &weight * ri;
        weight *= &base;
    }
    Ok(acc)
}

/// Inverse of [`encode_number_tuple`] for a fixed length; `None` when the
/// value needs more than `len` digits.
pub fn decode_number_tuple(value: &BigUint, n: u64, len: usize) -> Option<Vec<u64>> {
    let base = BigUint::from(n) + 1u32;
    let mut rest = value.clone();
    let mut digits = Vec::with_capacity(len);
    for _ in 0..len {
        let digit = &rest % &base;
        digits.push(u64::try_from(&digit).expect("digit below base"));
        rest /= &base;
    }
    if rest == BigUint::from(0u32) {
        Some(digits)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectionError {
    #[error("maps disagree on element {0}")]
    Disagreement(u32),
    #[error("not injective: two elements map to {0}")]
    NotInjective(u32),
}

/// A finite injective map between elements of one universe.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialInjection {
    forward: BTreeMap<Elem, Elem>,
    backward: BTreeMap<Elem, Elem>,
}

impl PartialInjection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Elem, Elem)>>(pairs: I) -> Result<Self, InjectionError> {
        let mut f = PartialInjection::new();
        for (a, b) in pairs {
            f.insert(a, b)?;
        }
        Ok(f)
    }

    pub fn identity_on<I: IntoIterator<Item = Elem>>(elems: I) -> Self {
        Self::from_pairs(elems.into_iter().map(|e| (e, e))).expect("identity is injective")
    }

    /// Adds `a ↦ b`; re-inserting an existing pair is a no-op.
    pub fn insert(&mut self, a: Elem, b: Elem) -> Result<(), InjectionError> {
        match (self.forward.get(&a), self.backward.get(&b)) {
            (Some(&b0), _) if b0 != b => Err(InjectionError::Disagreement(a.0)),
            (_, Some(&a0)) if a0 != a => Err(InjectionError::NotInjective(b.0)),
            _ => {
                self.forward.insert(a, b);
                self.backward.insert(b, a);
                Ok(())
            }
        }
    }

    pub fn get(&self, a: Elem) -> Option<Elem> {
        self.forward.get(&a).copied()
    }

    pub fn preimage(&self, b: Elem) -> Option<Elem> {
        self.backward.get(&b).copied()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = Elem> + '_ {
        self.forward.keys().copied()
    }

    pub fn range(&self) -> impl Iterator<Item = Elem> + '_ {
        self.backward.keys().copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        self.forward.iter().map(|(a, b)| (*a, *b))
    }

    pub fn contains(&self, a: Elem) -> bool {
        self.forward.contains_key(&a)
    }

    pub fn inverse(&self) -> PartialInjection {
        PartialInjection {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    /// Applies the map to a mixed value; numbers are fixed.
    pub fn apply(&self, v: Value) -> Option<Value> {
        match v {
            Value::Elem(e) => self.get(e).map(Value::Elem),
            Value::Num(n) => Some(Value::Num(n)),
        }
    }

    pub fn apply_tuple(&self, t: &[Value]) -> Option<MixedTuple> {
        t.iter().map(|v| self.apply(*v)).collect()
    }

    /// `self ∪ other`: `self` on its domain, `other` elsewhere. The two maps
    /// must agree on the overlap and the result must stay injective.
    pub fn compose(&self, other: &PartialInjection) -> Result<PartialInjection, InjectionError> {
        let mut out = self.clone();
        for (a, b) in other.pairs() {
            out.insert(a, b)?;
        }
        Ok(out)
    }
}

impl fmt::Display for PartialInjection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.pairs().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}->{}", a.0, b.0)?;
        }
        write!(f, "}}")
    }
}

/// Whether `f` is a partial isomorphism from `a` to `b`.
///
/// Tuples are checked in both directions, so the answer is symmetric under
/// swapping the structures and inverting `f`. Constants are constrained only
/// when they are pebbled.
pub fn is_partial_isomorphism(
    f: &PartialInjection,
    a: &Structure,
    b: &Structure,
) -> Result<bool, StructureError> {
    if !a.same_universe(b) {
        return Err(StructureError::UniverseMismatch);
    }
    if a.signature() != b.signature() {
        return Err(StructureError::VocabularyMismatch);
    }
    for (c, ea) in a.constants() {
        let eb = b.constant(c).expect("same signature");
        if let Some(img) = f.get(ea) {
            if img != eb {
                return Ok(false);
            }
        }
        if let Some(pre) = f.preimage(eb) {
            if pre != ea {
                return Ok(false);
            }
        }
    }
    let inverse = f.inverse();
    for (name, ra) in a.relations() {
        let rb = b.relation(name).expect("same signature");
        if !maps_into(f, ra, rb) || !maps_into(&inverse, rb, ra) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn maps_into(f: &PartialInjection, from: &Relation, to: &Relation) -> bool {
    let mut image = Vec::with_capacity(from.arity());
    if from.arity() == 0 {
        return from.is_empty() == to.is_empty();
    }
    // Only tuples whose first entry is pebbled can be fully pebbled.
    for a in f.domain() {
        for t in from.with_at(0, a) {
            image.clear();
            let mut all = true;
            for e in t {
                match f.get(*e) {
                    Some(x) => image.push(x),
                    None => {
                        all = false;
                        break;
                    }
                }
            }
            if all && !to.contains(&image) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(universe: &[&str], rels: &[(&str, usize, &[&[&str]])], consts: &[(&str, &str)]) -> StructureFile {
        StructureFile {
            universe: universe.iter().map(|s| s.to_string()).collect(),
            relations: rels
                .iter()
                .map(|(n, a, ts)| {
                    (
                        n.to_string(),
                        RelationFile {
                            arity: *a,
                            tuples: ts
                                .iter()
                                .map(|t| t.iter().map(|s| s.to_string()).collect())
                                .collect(),
                        },
                    )
                })
                .collect(),
            constants: consts
                .iter()
                .map(|(c, e)| (c.to_string(), e.to_string()))
                .collect(),
        }
    }

    #[test]
    fn smallest_structure_is_valid() {
        assert_eq!(validate_structure(&file(&["a"], &[], &[])), Ok(()));
    }

    #[test]
    fn arity_mismatch_reported() {
        let errs = validate_structure(&file(&["a", "b"], &[("R", 3, &[&["a", "b"]])], &[])).unwrap_err();
        assert!(matches!(errs[0], StructureError::ArityMismatch { expected: 3, found: 2, .. }));
        assert!(errs[0].to_string().contains("arity mismatch"));
    }

    #[test]
    fn unknown_constant_reported() {
        let errs = validate_structure(&file(&["a"], &[], &[("t", "z")])).unwrap_err();
        assert!(errs[0].to_string().contains("unknown element"));
    }

    #[test]
    fn empty_universe_and_multiple_errors() {
        let errs = validate_structure(&file(&[], &[("R", 1, &[&["q"]])], &[("c", "q")])).unwrap_err();
        assert_eq!(errs.len(), 3);
        assert_eq!(errs[0], StructureError::EmptyUniverse);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_number_tuple(&[0], 7).unwrap(), BigUint::from(0u32));
        assert_eq!(encode_number_tuple(&[2, 1], 2).unwrap(), BigUint::from(5u32));
        assert_eq!(encode_number_tuple(&[3, 3, 3], 3).unwrap(), BigUint::from(63u32));
        assert!(encode_number_tuple(&[4], 3).is_err());
        assert_eq!(encode_number_tuple(&[], 3).unwrap(), BigUint::from(0u32));
    }

    #[test]
    fn encode_is_injective_exhaustively() {
        for n in 0..=4u64 {
            for m in 1..=3usize {
                let mut seen = HashSet::new();
                let total = (n + 1).pow(m as u32);
                for code in 0..total {
                    let digits: Vec<u64> = (0..m).map(|i| (code / (n + 1).pow(i as u32)) % (n + 1)).collect();
                    let enc = encode_number_tuple(&digits, n).unwrap();
                    assert!(seen.insert(enc.clone()));
                    assert_eq!(decode_number_tuple(&enc, n, m), Some(digits));
                }
            }
        }
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let s = Structure::from_file(&file(&["b", "a", "c"], &[("E", 2, &[&["c", "a"]])], &[])).unwrap();
        assert_eq!(s.names(), ["a", "b", "c"]);
        assert_eq!(s.relation("E").unwrap().tuples(), &[vec![Elem(2), Elem(0)]]);
    }

    #[test]
    fn compose_examples() {
        let g = PartialInjection::from_pairs([(Elem(1), Elem(2)), (Elem(3), Elem(0))]).unwrap();
        assert_eq!(PartialInjection::new().compose(&g).unwrap(), g);
        let f = PartialInjection::from_pairs([(Elem(1), Elem(2))]).unwrap();
        let h = PartialInjection::from_pairs([(Elem(3), Elem(4))]).unwrap();
        let u = f.compose(&h).unwrap();
        assert_eq!(u.pairs().collect::<Vec<_>>(), vec![(Elem(1), Elem(2)), (Elem(3), Elem(4))]);
        let bad = PartialInjection::from_pairs([(Elem(3), Elem(2))]).unwrap();
        assert_eq!(f.compose(&bad), Err(InjectionError::NotInjective(2)));
        let clash = PartialInjection::from_pairs([(Elem(1), Elem(5))]).unwrap();
        assert_eq!(f.compose(&clash), Err(InjectionError::Disagreement(1)));
    }

    #[test]
    fn partial_isomorphism_examples() {
        let a = Structure::from_file(&file(&["x", "y", "z"], &[("R", 2, &[&["x", "y"]])], &[("c", "z")])).unwrap();
        let b = Structure::from_file(&file(&["x", "y", "z"], &[("R", 2, &[])], &[("c", "z")])).unwrap();
        assert!(is_partial_isomorphism(&PartialInjection::new(), &a, &b).unwrap());
        let id = PartialInjection::identity_on(a.elems());
        assert!(is_partial_isomorphism(&id, &a, &a).unwrap());
        let xy = PartialInjection::identity_on([Elem(0), Elem(1)]);
        assert!(!is_partial_isomorphism(&xy, &a, &b).unwrap());
        // Constant pebbled to the wrong element.
        let wrong = PartialInjection::from_pairs([(Elem(2), Elem(0))]).unwrap();
        assert!(!is_partial_isomorphism(&wrong, &a, &a).unwrap());
    }

    #[test]
    fn mismatched_universes_error() {
        let a = Structure::from_file(&file(&["x"], &[], &[])).unwrap();
        let b = Structure::from_file(&file(&["y"], &[], &[])).unwrap();
        assert_eq!(
            is_partial_isomorphism(&PartialInjection::new(), &a, &b),
            Err(StructureError::UniverseMismatch)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_structure(n: usize) -> impl Strategy<Value = Structure> {
            proptest::collection::vec((0..n, 0..n), 0..8).prop_map(move |edges| {
                let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
                let f = StructureFile {
                    universe: names.clone(),
                    relations: [(
                        "E".to_string(),
                        RelationFile {
                            arity: 2,
                            tuples: edges
                                .iter()
                                .map(|(x, y)| vec![names[*x].clone(), names[*y].clone()])
                                .collect(),
                        },
                    )]
                    .into_iter()
                    .collect(),
                    constants: BTreeMap::new(),
                };
                Structure::from_file(&f).unwrap()
            })
        }

        fn arb_injection(n: usize) -> impl Strategy<Value = PartialInjection> {
            (Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle(), 0..=n).prop_map(move |(perm, k)| {
                PartialInjection::from_pairs((0..k).map(|i| (Elem(i as u32), Elem(perm[i])))).unwrap()
            })
        }

        proptest! {
            #[test]
            fn partial_iso_symmetric(a in arb_structure(4), b in arb_structure(4), f in arb_injection(4)) {
                prop_assert_eq!(
                    is_partial_isomorphism(&f, &a, &b).unwrap(),
                    is_partial_isomorphism(&f.inverse(), &b, &a).unwrap()
                );
            }

            #[test]
            fn compose_associative(f in arb_injection(5), g in arb_injection(5), h in arb_injection(5)) {
                let left = f.compose(&g).and_then(|fg| fg.compose(&h));
                let right = g.compose(&h).and_then(|gh| f.compose(&gh));
                if let (Ok(l), Ok(r)) = (left, right) {
                    prop_assert_eq!(l, r);
                }
            }
        }
    }
}
