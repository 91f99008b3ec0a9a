//! Exhaustive solver for the plain bijection game on small structures.
//!
//! A round: Duplicator picks a bijection `g ⊇ f`, Spoiler picks `a`, and
//! the position becomes `f ∪ {a ↦ g(a)}`. Duplicator survives `r` rounds
//! from `f` iff `f` is a partial isomorphism and, for `r > 0`, the bipartite
//! graph `a → {b : survives r-1 rounds from f ∪ {a ↦ b}}` has a perfect
//! matching extending `f`.

use std::collections::HashMap;

use crate::structure::{is_partial_isomorphism, Elem, PartialInjection, Structure};

/// Whether Duplicator survives `rounds` rounds from `f0`.
///
/// Exponential in `|U|`; intended for `|U| ≤ 6` and `rounds ≤ 3`.
pub fn bijection_game_oracle(a: &Structure, b: &Structure, f0: &PartialInjection, rounds: usize) -> bool {
    let mut memo = HashMap::new();
    survives(a, b, f0, rounds, &mut memo)
}

fn survives(
    a: &Structure,
    b: &Structure,
    f: &PartialInjection,
    r: usize,
    memo: &mut HashMap<(PartialInjection, usize), bool>,
) -> bool {
    if let Some(&v) = memo.get(&(f.clone(), r)) {
        return v;
    }
    let iso = is_partial_isomorphism(f, a, b).expect("compatible structures");
    let result = iso && (r == 0 || {
        let n = a.size();
        let allowed: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let x = Elem(i as u32);
                (0..n)
                    .filter(|&j| {
                        let mut g = f.clone();
                        g.insert(x, Elem(j as u32)).is_ok() && survives(a, b, &g, r - 1, memo)
                    })
                    .collect()
            })
            .collect();
        has_perfect_matching(&allowed, n)
    });
    memo.insert((f.clone(), r), result);
    result
}

/// Kuhn's augmenting-path matching of left vertices into `0..n`.
pub fn has_perfect_matching(allowed: &[Vec<usize>], n: usize) -> bool {
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
    (0..allowed.len()).all(|u| augment(u, allowed, &mut vec![false; n], &mut owner))
}
