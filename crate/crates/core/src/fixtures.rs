//! Deterministic generators and hand-built structures shared by the unit
//! tests, the verify suites and the acceptance gate.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::eval::{LabelledGraph, SemiGraph};
use crate::logic::{Formula, Lrec, Term, Var, Vocabulary};
use crate::structure::{Elem, RelationFile, Structure, StructureFile};
use crate::treecomb::{BinTree, Node, NodeSet, OffsetFn};

const ELEM_VARS: [&str; 3] = ["x", "y", "z"];
const NUM_VARS: [&str; 2] = ["m", "n"];

fn elem_term<R: Rng>(rng: &mut R, vocab: &Vocabulary) -> Term {
    let consts: Vec<&String> = vocab.constants.iter().collect();
    if !consts.is_empty() && rng.gen_bool(0.2) {
        Term::Const(consts[rng.gen_range(0..consts.len())].clone())
    } else {
        Term::Var(Var::elem(ELEM_VARS[rng.gen_range(0..ELEM_VARS.len())]))
    }
}

fn num_term<R: Rng>(rng: &mut R) -> Term {
    if rng.gen_bool(0.3) {
        Term::Num(rng.gen_range(0..=1))
    } else {
        Term::Var(Var::num(NUM_VARS[rng.gen_range(0..NUM_VARS.len())]))
    }
}

fn random_atom<R: Rng>(rng: &mut R, vocab: &Vocabulary) -> Formula {
    let rels: Vec<(&String, &usize)> = vocab.relations.iter().collect();
    match rng.gen_range(0..6) {
        0 => Formula::Eq(elem_term(rng, vocab), elem_term(rng, vocab)),
        1 => Formula::Eq(num_term(rng), num_term(rng)),
        _ if !rels.is_empty() => {
            let (name, &arity) = rels[rng.gen_range(0..rels.len())];
            Formula::atom(name, (0..arity).map(|_| elem_term(rng, vocab)).collect())
        }
        _ => Formula::True,
    }
}

/// A random formula over `vocab` with connective depth at most `depth`.
/// Number literals stay in `{0, 1}` so they are in range on every
/// non-empty structure.
pub fn random_formula<R: Rng>(rng: &mut R, vocab: &Vocabulary, depth: usize) -> Formula {
    if depth == 0 {
        return match rng.gen_range(0..12) {
            0 => Formula::True,
            1 => Formula::False,
            _ => random_atom(rng, vocab),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 | 1 => random_atom(rng, vocab),
        2 => Formula::not(random_formula(rng, vocab, d)),
        3 => Formula::and(random_formula(rng, vocab, d), random_formula(rng, vocab, d)),
        4 => Formula::or(random_formula(rng, vocab, d), random_formula(rng, vocab, d)),
        5 => Formula::exists(random_var(rng), random_formula(rng, vocab, d)),
        6 => Formula::forall(random_var(rng), random_formula(rng, vocab, d)),
        7 => Formula::Count {
            var: Var::elem(ELEM_VARS[rng.gen_range(0..ELEM_VARS.len())]),
            body: Box::new(random_formula(rng, vocab, d)),
            rhs: num_term(rng),
        },
        8 => random_lfp(rng, vocab, d),
        9 if vocab.relations.values().any(|&a| a >= 2) => random_lrec(rng, vocab),
        _ => random_atom(rng, vocab),
    }
}

fn random_var<R: Rng>(rng: &mut R) -> Var {
    if rng.gen_bool(0.75) {
        Var::elem(ELEM_VARS[rng.gen_range(0..ELEM_VARS.len())])
    } else {
        Var::num(NUM_VARS[rng.gen_range(0..NUM_VARS.len())])
    }
}

/// `lfp[P,x](φ | ∃y (P(y) & ψ))(τ)` with `P` occurring positively.
fn random_lfp<R: Rng>(rng: &mut R, vocab: &Vocabulary, depth: usize) -> Formula {
    let x = Var::elem("x");
    let y = Var::elem("y");
    let base = random_formula(rng, vocab, depth.min(1));
    let step = random_formula(rng, vocab, depth.min(1));
    let body = Formula::or(
        base,
        Formula::exists(
            y.clone(),
            Formula::and(Formula::atom("P", vec![Term::Var(y)]), step),
        ),
    );
    Formula::Lfp {
        rel: "P".into(),
        vars: vec![x],
        body: Box::new(body),
        args: vec![elem_term(rng, vocab)],
    }
}

/// A unary lrec whose edge and similarity formulas are binary atoms or
/// equalities over `u`, `v`, and whose label is quantifier-free.
fn random_lrec<R: Rng>(rng: &mut R, vocab: &Vocabulary) -> Formula {
    let u = Var::elem("u");
    let v = Var::elem("v");
    let p = Var::num("p");
    let binary: Vec<(&String, &usize)> = vocab.relations.iter().filter(|(_, &a)| a >= 2).collect();
    let rel_uv = |rng: &mut R| {
        let (name, &arity) = binary[rng.gen_range(0..binary.len())];
        let mut args = vec![Term::Var(u.clone()), Term::Var(v.clone())];
        args.shuffle(rng);
        while args.len() < arity {
            args.push(elem_term(rng, vocab));
        }
        Formula::atom(name, args)
    };
    let edge = rel_uv(rng);
    let sim = if rng.gen_bool(0.5) {
        Formula::False
    } else {
        rel_uv(rng)
    };
    let unary: Vec<&String> = vocab.relations.iter().filter(|(_, &a)| a == 1).map(|(n, _)| n).collect();
    let guard = match unary.first() {
        Some(name) if rng.gen_bool(0.5) => Formula::atom(name, vec![Term::Var(u.clone())]),
        _ => Formula::Eq(Term::Var(u.clone()), elem_term(rng, vocab)),
    };
    let label = if rng.gen_bool(0.5) {
        Formula::or(guard, Formula::not(Formula::Eq(Term::Var(p.clone()), Term::Num(0))))
    } else {
        Formula::and(guard, Formula::Eq(Term::Var(p.clone()), Term::Num(rng.gen_range(0..=1))))
    };
    Formula::Lrec(Box::new(Lrec {
        u: vec![u],
        v: vec![v],
        p: vec![p],
        edge,
        sim,
        label,
        w: vec![elem_term(rng, vocab)],
        r: vec![num_term(rng)],
    }))
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// A random structure over the path-systems vocabulary `{R/3, S/1, t}`
/// with between 1 and `max_n` elements.
pub fn random_structure<R: Rng>(rng: &mut R, max_n: usize) -> Structure {
    let n = rng.gen_range(1..=max_n.max(1));
    let universe = names(n);
    let pick = |rng: &mut R| universe[rng.gen_range(0..n)].clone();
    let r_count = rng.gen_range(0..=2 * n);
    let r_tuples: Vec<Vec<String>> = (0..r_count).map(|_| vec![pick(rng), pick(rng), pick(rng)]).collect();
    let s_tuples: Vec<Vec<String>> = universe.iter().filter(|_| rng.gen_bool(0.4)).map(|a| vec![a.clone()]).collect();
    let t = pick(rng);
    build(universe, [("R", 3, r_tuples), ("S", 1, s_tuples)], [("t", t)])
}

fn build<const R: usize, const C: usize>(
    universe: Vec<String>,
    rels: [(&str, usize, Vec<Vec<String>>); R],
    consts: [(&str, String); C],
) -> Structure {
    let mut relations = BTreeMap::new();
    for (name, arity, mut tuples) in rels {
        tuples.sort();
        tuples.dedup();
        relations.insert(name.to_string(), RelationFile { arity, tuples });
    }
    let file = StructureFile {
        universe,
        relations,
        constants: consts.into_iter().map(|(c, e)| (c.to_string(), e)).collect(),
    };
    Structure::from_file(&file).expect("fixture structure is valid")
}

/// `s` with its elements renamed by a random permutation, over the same
/// universe. `perm[i]` is the image of element `i`.
pub fn permuted<R: Rng>(rng: &mut R, s: &Structure) -> (Structure, Vec<Elem>) {
    let mut perm: Vec<Elem> = s.elems().collect();
    perm.shuffle(rng);
    (apply_permutation(s, &perm), perm)
}

/// The image of `s` under the permutation `perm` of its universe.
pub fn apply_permutation(s: &Structure, perm: &[Elem]) -> Structure {
    let name = |e: Elem| s.name(perm[e.index()]).to_string();
    let mut file = s.to_file();
    for (rel_name, rel) in s.relations() {
        let mut tuples: Vec<Vec<String>> = rel.tuples().iter().map(|t| t.iter().map(|&e| name(e)).collect()).collect();
        tuples.sort();
        file.relations.get_mut(rel_name).expect("same relations").tuples = tuples;
    }
    for (c, e) in s.constants() {
        file.constants.insert(c.to_string(), name(e));
    }
    Structure::from_file(&file).expect("permuted structure is valid")
}

/// A directed path `a0 → a1 → … → a(n-1)` with constant `s` at the end.
pub fn path_structure(n: usize) -> Structure {
    let universe = names(n);
    let edges = (1..n).map(|i| vec![universe[i - 1].clone(), universe[i].clone()]).collect();
    let end = universe[n - 1].clone();
    build(universe, [("E", 2, edges)], [("s", end)])
}

/// A five-vertex digraph: a triangle, a pendant edge and an isolated vertex.
pub fn small_graph() -> Structure {
    let universe = names(5);
    let e = |a: usize, b: usize| vec![format!("a{a}"), format!("a{b}")];
    build(universe, [("E", 2, vec![e(0, 1), e(1, 2), e(2, 0), e(2, 3)])], [])
}

/// A structure on `a0..a(n-1)` from index tuples.
pub fn indexed(n: usize, rels: &[(&str, usize, &[&[usize]])], consts: &[(&str, usize)]) -> Structure {
    let universe = names(n);
    let mut relations = BTreeMap::new();
    for (name, arity, tuples) in rels {
        let mut tuples: Vec<Vec<String>> = tuples
            .iter()
            .map(|t| t.iter().map(|&i| universe[i].clone()).collect())
            .collect();
        tuples.sort();
        tuples.dedup();
        relations.insert(name.to_string(), RelationFile { arity: *arity, tuples });
    }
    let file = StructureFile {
        universe: universe.clone(),
        relations,
        constants: consts.iter().map(|(c, i)| (c.to_string(), universe[*i].clone())).collect(),
    };
    Structure::from_file(&file).expect("fixture structure is valid")
}

/// A pair of structures and a sentence true in exactly one of them.
pub struct GameFixture {
    pub name: &'static str,
    pub a: Structure,
    pub b: Structure,
    pub formula: &'static str,
    pub q: usize,
}

impl GameFixture {
    pub fn formula(&self) -> Formula {
        crate::logic::parse_formula(self.formula, &Vocabulary::of(&self.a)).expect("fixture formula parses")
    }

    /// Pebbles for the constants plus the formula's rank.
    pub fn k(&self) -> usize {
        self.a.constants().count() + crate::logic::rank(&self.formula())
    }
}

fn fx(name: &'static str, formula: &'static str, q: usize, a: Structure, b: Structure) -> GameFixture {
    GameFixture { name, a, b, formula, q }
}

const ALL3: &[&[usize]] = &[&[0], &[1], &[2]];

/// Distinguishing sentences of rank at most 3 and degree at most 1 on
/// universes of at most 12 elements.
pub fn formula_fixtures() -> Vec<GameFixture> {
    let g = |n: usize, e: &[&[usize]]| indexed(n, &[("E", 2, e)], &[]);
    let gs = |n: usize, e: &[&[usize]], s: &[&[usize]]| indexed(n, &[("E", 2, e), ("S", 1, s)], &[]);
    let gc = |n: usize, e: &[&[usize]], c: &[(&str, usize)]| indexed(n, &[("E", 2, e)], c);
    let gsc = |n: usize, e: &[&[usize]], s: &[&[usize]], c: &[(&str, usize)]| indexed(n, &[("E", 2, e), ("S", 1, s)], c);
    let st = |n: usize, s: &[&[usize]], t: &[&[usize]]| indexed(n, &[("S", 1, s), ("T", 1, t)], &[]);
    let reach = "lrec[u;v;%p](E(u,v); false; u = t | !(%p = 0))(s; 4)";
    vec![
        fx("some-s", "exists x. S(x)", 0, gs(3, &[], &[&[0]]), gs(3, &[], &[])),
        fx("all-s", "forall x. S(x)", 0, gs(3, &[], ALL3), gs(3, &[], &[&[0], &[1]])),
        fx("count-s", "count{x : S(x)} = 2", 0, gs(4, &[], &[&[0], &[1]]), gs(4, &[], &[&[0], &[1], &[2]])),
        fx("loop", "exists x. E(x,x)", 0, g(3, &[&[1, 1]]), g(3, &[&[1, 2]])),
        fx(
            "two-cycle",
            "exists x. exists y. (E(x,y) & E(y,x))",
            0,
            g(4, &[&[0, 1], &[1, 0], &[2, 3]]),
            g(4, &[&[0, 1], &[1, 2], &[2, 3]]),
        ),
        fx(
            "total",
            "forall x. exists y. E(x,y)",
            0,
            g(4, &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]]),
            g(4, &[&[0, 1], &[1, 2], &[2, 3]]),
        ),
        fx(
            "source",
            "exists x. forall y. !E(y,x)",
            0,
            g(4, &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]]),
            g(4, &[&[0, 1], &[1, 2], &[2, 3]]),
        ),
        fx(
            "triangle",
            "exists x. exists y. exists z. (E(x,y) & E(y,z) & E(z,x))",
            0,
            g(6, &[&[0, 1], &[1, 2], &[2, 0], &[3, 4], &[4, 5], &[5, 3]]),
            g(6, &[&[0, 1], &[1, 2], &[2, 3], &[3, 4], &[4, 5], &[5, 0]]),
        ),
        fx("constant-loop", "E(c,c)", 0, gc(2, &[&[0, 0]], &[("c", 0)]), gc(2, &[&[1, 1]], &[("c", 0)])),
        fx("constant-out", "exists x. E(c,x)", 0, gc(3, &[&[0, 1]], &[("c", 0)]), gc(3, &[&[1, 0]], &[("c", 0)])),
        fx(
            "equal-sizes",
            "exists %n. (count{x : S(x)} = %n & count{y : T(y)} = %n)",
            0,
            st(6, &[&[0], &[1]], &[&[2], &[3]]),
            st(6, &[&[0], &[1]], &[&[2], &[3], &[4]]),
        ),
        fx(
            "count-sources",
            "count{x : exists y. E(x,y)} = 3",
            0,
            g(5, &[&[0, 4], &[1, 4], &[2, 4]]),
            g(5, &[&[0, 4], &[1, 4]]),
        ),
        fx(
            "cover",
            "forall x. (S(x) | T(x))",
            0,
            st(4, &[&[0], &[1]], &[&[2], &[3]]),
            st(4, &[&[0], &[1]], &[&[2]]),
        ),
        fx(
            "s-edge",
            "exists x. exists y. (!(x = y) & S(x) & S(y) & E(x,y))",
            0,
            gs(4, &[&[0, 1], &[2, 3]], &[&[0], &[1]]),
            gs(4, &[&[0, 2], &[1, 3]], &[&[0], &[1]]),
        ),
        fx(
            "closed-s",
            "exists x. (S(x) & forall y. (!E(x,y) | S(y)))",
            0,
            gs(4, &[&[0, 1], &[2, 3]], &[&[0], &[1], &[2]]),
            gs(4, &[&[0, 3], &[1, 3], &[2, 3]], &[&[0], &[1], &[2]]),
        ),
        fx(
            "reach-path",
            reach,
            1,
            gc(4, &[&[0, 1], &[1, 2], &[2, 3]], &[("s", 0), ("t", 3)]),
            gc(4, &[&[0, 1], &[2, 1], &[2, 3]], &[("s", 0), ("t", 3)]),
        ),
        fx(
            "reach-branch",
            reach,
            1,
            gc(7, &[&[0, 1], &[0, 2], &[2, 3], &[3, 4], &[4, 6], &[1, 5]], &[("s", 0), ("t", 6)]),
            gc(7, &[&[0, 1], &[0, 2], &[2, 3], &[4, 3], &[4, 6], &[1, 5]], &[("s", 0), ("t", 6)]),
        ),
        fx(
            "reach-unreached",
            reach,
            1,
            gc(5, &[&[0, 1], &[1, 4]], &[("s", 0), ("t", 4)]),
            gc(5, &[&[0, 1], &[1, 2], &[3, 4]], &[("s", 0), ("t", 4)]),
        ),
        fx(
            "reach-moved-target",
            "lrec[u;v;%p](E(u,v); false; u = t | !(%p = 0))(s; 2)",
            1,
            gc(4, &[&[0, 1], &[1, 2], &[2, 3]], &[("s", 0), ("t", 3)]),
            gc(4, &[&[0, 1], &[1, 2], &[2, 3]], &[("s", 0), ("t", 2)]),
        ),
        fx(
            "s-leaf-children",
            "lrec[u;v;%p](E(u,v); false; S(u) & %p = 0)(c; 1)",
            1,
            gsc(3, &[&[0, 1]], &[&[0]], &[("c", 0)]),
            gsc(3, &[&[0, 1]], &[&[0], &[1]], &[("c", 0)]),
        ),
        fx(
            "kernel-depth",
            "lrec[u;v;%p](E(u,v); false; %p = 0)(c; 3)",
            1,
            gc(4, &[&[0, 1]], &[("c", 0)]),
            gc(4, &[&[0, 1], &[1, 2]], &[("c", 0)]),
        ),
        fx(
            "merged-reach",
            "lrec[u;v;%p](E(u,v); S(u) & S(v); u = t | !(%p = 0))(s; 4)",
            1,
            gsc(4, &[&[0, 1], &[2, 3]], &[&[1], &[2]], &[("s", 0), ("t", 3)]),
            gsc(4, &[&[0, 1], &[2, 3]], &[&[1]], &[("s", 0), ("t", 3)]),
        ),
        fx(
            "cut-vertex",
            "exists x. (!(x = s) & !(x = t) & !lrec[u;v;%p](E(u,v) & !(v = x); false; u = t | !(%p = 0))(s; 4))",
            1,
            gc(4, &[&[0, 1], &[1, 3], &[0, 2], &[2, 3]], &[("s", 0), ("t", 3)]),
            gc(4, &[&[0, 1], &[1, 3], &[2, 3]], &[("s", 0), ("t", 3)]),
        ),
    ]
}

/// A pair and round count with the hand-worked outcome of the plain
/// bijection game from the constant map.
pub struct BijectionCase {
    pub name: &'static str,
    pub a: Structure,
    pub b: Structure,
    pub rounds: usize,
    pub duplicator_wins: bool,
}

fn bc(name: &'static str, a: Structure, b: Structure, rounds: usize, duplicator_wins: bool) -> BijectionCase {
    BijectionCase {
        name,
        a,
        b,
        rounds,
        duplicator_wins,
    }
}

fn as_refs(v: &[Vec<usize>]) -> Vec<&[usize]> {
    v.iter().map(|t| t.as_slice()).collect()
}

/// Ten hand-classified bijection-game positions.
pub fn bijection_cases() -> Vec<BijectionCase> {
    let g = |n: usize, e: &[&[usize]]| indexed(n, &[("E", 2, e)], &[]);
    let sym = |cycles: &[&[usize]]| -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for c in cycles {
            for i in 0..c.len() {
                let (x, y) = (c[i], c[(i + 1) % c.len()]);
                out.push(vec![x, y]);
                out.push(vec![y, x]);
            }
        }
        out
    };
    let c6 = sym(&[&[0, 1, 2, 3, 4, 5]]);
    let c33 = sym(&[&[0, 1, 2], &[3, 4, 5]]);
    let c6 = indexed(6, &[("E", 2, &as_refs(&c6))], &[]);
    let c33 = indexed(6, &[("E", 2, &as_refs(&c33))], &[]);
    let s = |n: usize, s: &[&[usize]]| indexed(n, &[("S", 1, s)], &[]);
    let path_c = |c: usize| indexed(3, &[("E", 2, &[&[0, 1], &[1, 2]])], &[("c", c)]);
    vec![
        bc("same-graph", small_graph(), small_graph(), 3, true),
        bc("hexagon-vs-triangles-2", c6.clone(), c33.clone(), 2, true),
        bc("hexagon-vs-triangles-3", c6, c33, 3, false),
        bc("s-sizes-0", s(4, &[&[0], &[1]]), s(4, &[&[0], &[1], &[2]]), 0, true),
        bc("s-sizes-1", s(4, &[&[0], &[1]]), s(4, &[&[0], &[1], &[2]]), 1, false),
        bc("cycle-vs-loops-1", g(3, &[&[0, 1], &[1, 2], &[2, 0]]), g(3, &[&[0, 0], &[1, 1], &[2, 2]]), 1, false),
        bc("edge-count-1", g(3, &[&[0, 1], &[1, 2]]), g(3, &[&[0, 1]]), 1, true),
        bc("edge-count-2", g(3, &[&[0, 1], &[1, 2]]), g(3, &[&[0, 1]]), 2, false),
        bc("moved-constant-0", path_c(0), path_c(2), 0, true),
        bc("moved-constant-1", path_c(0), path_c(2), 1, false),
    ]
}

/// A tree-group pair `P(h,p,σ,t)`, `P(h,p,σ,t+1)` with random leaves and
/// `t` the leaf sum, so the first is a positive instance.
pub fn psp_game_pair<R: Rng>(rng: &mut R, h: u32, p: u64) -> (Structure, Structure) {
    use crate::psp::{generate_instance, TreeGroupSpec};
    let sigma: Vec<u64> = (0..1usize << h).map(|_| rng.gen_range(0..p)).collect();
    let t = sigma.iter().sum::<u64>() % p;
    let a = generate_instance(&TreeGroupSpec::new(h, p, sigma.clone(), t)).expect("valid spec");
    let b = generate_instance(&TreeGroupSpec::new(h, p, sigma, (t + 1) % p)).expect("valid spec");
    (a, b)
}

/// LREC= sentences of rank at most 3 and degree at most 1 over the
/// tree-group vocabulary.
pub const PSP_SENTENCES: [&str; 16] = [
    "exists x. S(x)",
    "forall x. (S(x) | !S(x))",
    "exists x. R(x, x, t)",
    "exists x. exists y. R(x, y, t)",
    "forall x. (!(x = t) | !S(x))",
    "count{x : R(x, x, t)} = 0",
    "exists x. exists y. (R(x, y, t) & S(x))",
    "!(exists x. R(t, x, t))",
    "exists x. (S(x) & exists y. R(x, y, t))",
    "lrec[u;v;%p](false; false; %p = 0)(t; 0)",
    "lrec[u;v;%p](R(u, v, t); false; %p = 0)(t; 1)",
    "lrec[u;v;%p](R(u, v, t); u = v; %p = 0 | %p = 1)(t; 3)",
    "lrec[u;v;%p](R(v, u, t); false; !(%p = 0))(t; 2)",
    "exists x. lrec[u;v;%p](R(u, v, x); false; %p = 0)(x; 2)",
    "forall x. (exists y. R(x, y, t) | !(exists y. R(y, x, t)))",
    "exists x. (R(x, x, t) | S(t))",
];

/// A random labelled graph on `1..=max_n` vertices with labels in `0..=8`.
pub fn random_labelled_graph<R: Rng>(rng: &mut R, max_n: usize) -> LabelledGraph {
    let n = rng.gen_range(1..=max_n);
    let edges: Vec<(u32, u32)> = (0..rng.gen_range(0..=n * 2))
        .map(|_| (rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32))
        .collect();
    let labels: Vec<BTreeSet<u64>> = (0..n).map(|_| (0..=8).filter(|_| rng.gen_bool(0.3)).collect()).collect();
    LabelledGraph::new(n, edges, labels)
}

/// A random normalized semi-graph on `1..=max_n` vertices with labels in
/// `0..=6`.
pub fn random_semigraph<R: Rng>(rng: &mut R, max_n: usize) -> SemiGraph {
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

/// At most `max` random nodes of `t`.
pub fn random_node_set<R: Rng>(rng: &mut R, t: &BinTree, max: usize) -> NodeSet {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| rng.gen_range(0..t.len() as Node)).collect()
}

/// A random offset function with domain `dom`.
pub fn random_offsets_on<R: Rng>(rng: &mut R, p: u64, dom: &NodeSet) -> OffsetFn {
    OffsetFn::from_pairs(p, dom.iter().map(|&v| (v, rng.gen_range(0..p))))
}
