//! First-order interpretations producing structures.
//!
//! Universe elements are `d`-tuples over the sorted product fixed by the
//! interpretation variables, restricted by `δ` and quotiented by `ε`. The
//! semi-graph target used by lrec lives in [`super::interpret_semigraph`].

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{Assignment, Budget, EvalError, EvalResult, Evaluator, NodeSpace};
use crate::logic::{Formula, Sort, Var};
use crate::structure::{RelationFile, Structure, StructureFile};

/// Defines relation `name` by `formula` with free variables `args`, one
/// `d`-tuple per argument position.
#[derive(Clone, Debug)]
pub struct InterpretedRelation {
    pub name: String,
    pub args: Vec<Vec<Var>>,
    pub formula: Formula,
}

#[derive(Clone, Debug)]
pub struct Interpretation {
    /// The `d` universe variables.
    pub vars: Vec<Var>,
    pub delta: Option<Formula>,
    /// A second `d`-tuple and the congruence formula over both tuples.
    pub eps: Option<(Vec<Var>, Formula)>,
    pub relations: Vec<InterpretedRelation>,
}

impl Interpretation {
    /// The identity interpretation of `s`'s relations, dimension 1.
    pub fn identity(s: &Structure) -> Interpretation {
        let relations = s
            .relations()
            .map(|(name, r)| {
                let args: Vec<Vec<Var>> = (0..r.arity()).map(|i| vec![Var::elem(&format!("x{i}"))]).collect();
                let terms = args.iter().map(|a| crate::logic::Term::Var(a[0].clone())).collect();
                InterpretedRelation {
                    name: name.to_string(),
                    args,
                    formula: Formula::atom(name, terms),
                }
            })
            .collect();
        Interpretation {
            vars: vec![Var::elem("x")],
            delta: None,
            eps: None,
            relations,
        }
    }
}

fn check_shape(i: &Interpretation) -> EvalResult<()> {
    let d = i.vars.len();
    if d == 0 {
        return Err(EvalError::Interpretation("dimension must be at least 1".into()));
    }
    if let Some((v, _)) = &i.eps {
        if v.len() != d || v.iter().zip(&i.vars).any(|(a, b)| a.sort != b.sort) {
            return Err(EvalError::Interpretation("ε tuple does not match the universe variables".into()));
        }
    }
    for r in &i.relations {
        if r.args.is_empty() {
            return Err(EvalError::Interpretation(format!("relation {} has arity 0", r.name)));
        }
        for a in &r.args {
            if a.len() != d || a.iter().zip(&i.vars).any(|(x, y)| x.sort != y.sort) {
                return Err(EvalError::Interpretation(format!(
                    "argument tuple of {} does not match the universe variables",
                    r.name
                )));
            }
        }
    }
    Ok(())
}

/// Applies `i` to `s` with parameters `params`. Output elements are named
/// after their tuples; an `ε`-class is named after its least member.
pub fn apply_interpretation(i: &Interpretation, s: &Structure, params: &Assignment) -> EvalResult<Structure> {
    apply_interpretation_with(i, s, params, Budget::default())
}

pub fn apply_interpretation_with(
    i: &Interpretation,
    s: &Structure,
    params: &Assignment,
    budget: Budget,
) -> EvalResult<Structure> {
    check_shape(i)?;
    let sorts: Vec<Sort> = i.vars.iter().map(|v| v.sort).collect();
    let space = NodeSpace::typed(&sorts, s.size());
    let size = space
        .size()
        .filter(|&n| n <= budget.max_nodes)
        .ok_or_else(|| EvalError::Budget(format!("more than {} interpreted elements", budget.max_nodes)))?;
    // Variable lists must outlive the evaluator.
    let eps_vars: Vec<Var> = match &i.eps {
        Some((other, _)) => i.vars.iter().chain(other).cloned().collect(),
        None => Vec::new(),
    };
    let rel_vars: Vec<Vec<Var>> = i.relations.iter().map(|r| r.args.iter().flatten().cloned().collect()).collect();
    let mut ev = Evaluator::new(s).with_budget(budget);
    ev.set_env(params)?;

    let nodes: Vec<usize> = match &i.delta {
        None => (0..size).collect(),
        Some(delta) => ev
            .solve_tuple(delta, &i.vars)?
            .into_iter()
            .map(|t| space.index(&t).expect("sorted tuple"))
            .collect(),
    };
    if nodes.is_empty() {
        return Err(EvalError::Interpretation("δ defines an empty universe".into()));
    }
    let in_universe: HashSet<usize> = nodes.iter().copied().collect();

    // Class representative per node.
    let mut rep: HashMap<usize, usize> = nodes.iter().map(|&a| (a, a)).collect();
    let mut class_size: HashMap<usize, usize> = nodes.iter().map(|&a| (a, 1)).collect();
    if let Some((_, eps)) = &i.eps {
        let mut related: HashSet<(usize, usize)> = HashSet::new();
        for t in ev.solve_tuple(eps, &eps_vars)? {
            let (a, b) = t.split_at(i.vars.len());
            let (a, b) = (space.index(a).expect("sorted"), space.index(b).expect("sorted"));
            if in_universe.contains(&a) && in_universe.contains(&b) {
                related.insert((a, b));
            }
        }
        for &a in &nodes {
            if !related.contains(&(a, a)) {
                return Err(EvalError::Interpretation("ε is not reflexive".into()));
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &a in &nodes {
            let least = nodes.iter().copied().find(|&b| related.contains(&(a, b))).expect("reflexive");
            classes.entry(least).or_default().push(a);
        }
        for (least, members) in &classes {
            for &a in members {
                for &b in &nodes {
                    let same = members.contains(&b);
                    if related.contains(&(a, b)) != same {
                        return Err(EvalError::Interpretation("ε is not an equivalence relation".into()));
                    }
                }
                rep.insert(a, *least);
            }
            class_size.insert(*least, members.len());
        }
    }

    let mut reps: Vec<usize> = rep.values().copied().collect();
    reps.sort_unstable();
    reps.dedup();
    let name = |a: usize| super::node_name(s, &space.tuple(a));
    let universe: Vec<String> = reps.iter().map(|&a| name(a)).collect();

    let mut relations = BTreeMap::new();
    for (r, vars) in i.relations.iter().zip(&rel_vars) {
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for t in ev.solve_tuple(&r.formula, vars)? {
            let mut tuple = Vec::with_capacity(r.args.len());
            let mut inside = true;
            for chunk in t.chunks(i.vars.len()) {
                let idx = space.index(chunk).expect("sorted");
                match rep.get(&idx) {
                    Some(&c) => tuple.push(c),
                    None => inside = false,
                }
            }
            if inside {
                *counts.entry(tuple).or_default() += 1;
            }
        }
        let mut tuples = Vec::with_capacity(counts.len());
        for (tuple, count) in counts {
            let expected: usize = tuple.iter().map(|c| class_size[c]).product();
            if count != expected {
                return Err(EvalError::Interpretation(format!("ε is not a congruence for {}", r.name)));
            }
            tuples.push(tuple.into_iter().map(name).collect::<Vec<String>>());
        }
        tuples.sort();
        relations.insert(
            r.name.clone(),
            RelationFile {
                arity: r.args.len(),
                tuples,
            },
        );
    }
    let file = StructureFile {
        universe,
        relations,
        constants: BTreeMap::new(),
    };
    Structure::from_file(&file).map_err(|e| EvalError::Interpretation(format!("{e:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::small_graph;
    use crate::logic::{parse_formula, Vocabulary};

    #[test]
    fn identity_interpretation_copies_structure() {
        let s = small_graph();
        let out = apply_interpretation(&Interpretation::identity(&s), &s, &Assignment::new()).unwrap();
        assert_eq!(out.size(), s.size());
        let r = out.relation("E").unwrap();
        assert_eq!(r.len(), s.relation("E").unwrap().len());
        for t in s.relation("E").unwrap().tuples() {
            let names: Vec<String> = t.iter().map(|e| format!("({})", s.name(*e))).collect();
            let mapped: Vec<_> = names.iter().map(|n| out.elem(n).unwrap()).collect();
            assert!(r.contains(&mapped));
        }
    }

    #[test]
    fn untyped_unary_space_counts_numbers() {
        let s = Structure::from_json(r#"{"universe":["a","b"],"relations":{},"constants":{}}"#).unwrap();
        assert_eq!(NodeSpace::untyped(1, s.size()).size(), Some(5));
    }

    #[test]
    fn quotient_by_edge_symmetric_closure() {
        // Two isolated edges; ε identifies the endpoints of each edge.
        let s = Structure::from_json(
            r#"{"universe":["a","b","c","d"],"relations":{"E":{"arity":2,"tuples":[["a","b"],["c","d"]]}},"constants":{}}"#,
        )
        .unwrap();
        let vocab = Vocabulary::of(&s);
        let eps = parse_formula("x = y | E(x,y) | E(y,x)", &vocab).unwrap();
        let mark = parse_formula("exists z. E(x,z) | E(z,x)", &vocab).unwrap();
        let i = Interpretation {
            vars: vec![Var::elem("x")],
            delta: None,
            eps: Some((vec![Var::elem("y")], eps)),
            relations: vec![InterpretedRelation {
                name: "M".into(),
                args: vec![vec![Var::elem("x")]],
                formula: mark,
            }],
        };
        let out = apply_interpretation(&i, &s, &Assignment::new()).unwrap();
        assert_eq!(out.size(), 2);
        assert_eq!(out.relation("M").unwrap().len(), 2);
    }

    #[test]
    fn non_congruence_is_rejected() {
        let s = Structure::from_json(
            r#"{"universe":["a","b"],"relations":{"S":{"arity":1,"tuples":[["a"]]}},"constants":{}}"#,
        )
        .unwrap();
        let vocab = Vocabulary::of(&s);
        let i = Interpretation {
            vars: vec![Var::elem("x")],
            delta: None,
            eps: Some((vec![Var::elem("y")], parse_formula("true", &vocab).unwrap())),
            relations: vec![InterpretedRelation {
                name: "S".into(),
                args: vec![vec![Var::elem("x")]],
                formula: parse_formula("S(x)", &vocab).unwrap(),
            }],
        };
        let e = apply_interpretation(&i, &s, &Assignment::new()).unwrap_err();
        assert!(matches!(e, EvalError::Interpretation(m) if m.contains("congruence")));
    }
}
