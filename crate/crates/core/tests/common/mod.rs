//! Brute-force oracles shared by the integration tests.
//!
//! Nothing here calls into the algorithms it checks: relations are plain
//! boolean matrices, ordinals below w^3 are coefficient triples, and words
//! are enumerated as strings.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::Rng;
use rankcore::cb_spaces::{CbSpace, DivisibilitySet, IntervalSet, IntervalSpace};
use rankcore::Ordinal;

pub type Matrix = Vec<Vec<bool>>;

pub fn matrix_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Matrix {
    let mut m = vec![vec![false; n]; n];
    for &(i, j) in pairs {
        m[i][j] = true;
    }
    m
}

pub fn random_pairs(rng: &mut StdRng, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(density) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Equivalence closure by symmetrizing and running Warshall's algorithm.
pub fn warshall_equivalence(n: usize, pairs: &[(usize, usize)]) -> Matrix {
    let mut m = matrix_from_pairs(n, pairs);
    for i in 0..n {
        m[i][i] = true;
        for j in 0..n {
            if m[i][j] {
                m[j][i] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    m
}

pub fn is_equivalence(m: &Matrix) -> bool {
    let n = m.len();
    (0..n).all(|i| m[i][i])
        && (0..n).all(|i| (0..n).all(|j| m[i][j] == m[j][i]))
        && (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| !(m[i][j] && m[j][k]) || m[i][k])))
}

/// Pairs `(x0, xk)` joined by some sequence `x0 r x1 r ... r xk`, found by
/// enumerating every sequence.
pub fn chains_by_paths(m: &Matrix, k: usize) -> Matrix {
    let n = m.len();
    let mut out = vec![vec![false; n]; n];
    fn walk(m: &Matrix, start: usize, at: usize, left: usize, out: &mut Matrix) {
        if left == 0 {
            out[start][at] = true;
            return;
        }
        for next in 0..m.len() {
            if m[at][next] {
                walk(m, start, next, left - 1, out);
            }
        }
    }
    for s in 0..n {
        walk(m, s, s, k, &mut out);
    }
    out
}

/// An ordinal `w^2*a + w*b + c` as `[a, b, c]`; lexicographic order on
/// triples is the ordinal order.
pub type Coord = [u64; 3];

pub fn coord_ordinal(c: Coord) -> Ordinal {
    Ordinal::from_terms([(Ordinal::from(2), c[0]), (Ordinal::one(), c[1]), (Ordinal::zero(), c[2])])
}

pub fn coord_grid(max: u64) -> Vec<Coord> {
    let mut out = Vec::new();
    for a in 0..=max {
        for b in 0..=max {
            for c in 0..=max {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Index of the lowest nonzero coefficient (0 for `w^2`, 2 for units),
/// read as the least exponent `2 - index`.
pub fn coord_least_exponent(c: Coord) -> Option<u64> {
    (0..3).rev().find(|&i| c[i] != 0).map(|i| 2 - i as u64)
}

/// Membership in `{δ ≥ 1 : least_exponent(δ) ≥ beta}`.
pub fn coord_in_stage(c: Coord, beta: u64) -> bool {
    coord_least_exponent(c).is_some_and(|e| e >= beta)
}

/// Whether `delta` is a limit point of the stage-`beta` set, straight from
/// the definition: every `ε < delta` in the grid of coefficients
/// `≤ eps_max` has a member strictly between `ε` and `delta` among the
/// triples with coefficients `≤ eps_max + 1`.
pub fn coord_is_limit_point(delta: Coord, beta: u64, eps_max: u64) -> bool {
    let witnesses = coord_grid(eps_max + 1);
    let candidates: Vec<Coord> = witnesses
        .iter()
        .copied()
        .filter(|s| s < &delta && coord_in_stage(*s, beta))
        .collect();
    delta != [0, 0, 0]
        && coord_grid(eps_max)
            .into_iter()
            .filter(|e| e < &delta)
            .all(|e| candidates.iter().any(|s| s > &e))
}

pub fn fibonacci(n: usize) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

/// Words of length `len` containing no forbidden factor.
pub fn admissible_words(alphabet: &[char], forbidden: &[&str], len: usize) -> Vec<String> {
    let mut words = vec![String::new()];
    for _ in 0..len {
        words = words
            .into_iter()
            .flat_map(|w| alphabet.iter().map(move |c| format!("{w}{c}")))
            .filter(|w| !forbidden.iter().any(|f| w.contains(f)))
            .collect();
    }
    words
}

/// Every assignment of `u` / `v` to the single-symbol offsets occurs in
/// some word of the list.
pub fn brute_independent(words: &[String], u: char, v: char, offsets: &[usize]) -> bool {
    let words: Vec<Vec<char>> = words.iter().map(|w| w.chars().collect()).collect();
    (0..1usize << offsets.len()).all(|mask| {
        words.iter().any(|w| {
            offsets
                .iter()
                .enumerate()
                .all(|(bit, &p)| w[p] == if mask >> bit & 1 == 1 { v } else { u })
        })
    })
}

/// Words that occur in some infinite point: admissible words that extend
/// by more steps than there are length-`m` contexts, so the extension
/// revisits a context and can loop forever.
pub fn language(alphabet: &[char], forbidden: &[&str], len: usize) -> BTreeSet<String> {
    let m = forbidden.iter().map(|f| f.chars().count()).max().unwrap_or(1).saturating_sub(1).max(1);
    let slack = alphabet.len().pow(m as u32) + 1;
    admissible_words(alphabet, forbidden, len + slack)
        .into_iter()
        .map(|w| w.chars().take(len).collect())
        .collect()
}

/// Random canonical ordinal of nesting depth at most `depth`.
pub fn random_ordinal(rng: &mut StdRng, depth: usize) -> Ordinal {
    if depth <= 1 {
        return Ordinal::from(rng.gen_range(0..50u64));
    }
    let terms = rng.gen_range(0..4);
    Ordinal::from_terms((0..terms).map(|_| (random_ordinal(rng, depth - 1), rng.gen_range(1..6u64))))
}

/// Random `gamma` below `w^w` with up to three terms.
pub fn random_gamma(rng: &mut StdRng) -> Ordinal {
    let mut exps: Vec<u64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..6)).collect();
    exps.sort_unstable_by(|a, b| b.cmp(a));
    exps.dedup();
    Ordinal::from_terms(exps.into_iter().map(|e| (Ordinal::from(e), rng.gen_range(1..5u64))))
}

/// Pairs of CB iterates of `[0, gamma]`: the full space, `S_β` for
/// `β ≤ 6`, or the empty set.
pub fn cb_law_samples(rng: &mut StdRng, count: usize) -> Vec<(CbSpace, DivisibilitySet, DivisibilitySet)> {
    (0..count)
        .map(|_| {
            let gamma = random_gamma(rng);
            let pick = |rng: &mut StdRng| match rng.gen_range(0..9u64) {
                0 => DivisibilitySet::full(gamma.clone()),
                8 => DivisibilitySet::empty(gamma.clone()),
                b => DivisibilitySet::stage(gamma.clone(), Ordinal::from(b - 1)),
            };
            let (a, b) = (pick(rng), pick(rng));
            (CbSpace::new(gamma), a, b)
        })
        .collect()
}

/// Pairs of intervals of `[0, w^k]` with endpoints `w^i * c + j`.
pub fn interval_law_samples(rng: &mut StdRng, count: usize) -> Vec<(IntervalSpace, IntervalSet, IntervalSet)> {
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=6u64);
            let gamma = Ordinal::omega_pow(Ordinal::from(k));
            let pick = |rng: &mut StdRng| {
                if rng.gen_bool(0.1) {
                    return IntervalSet::empty(gamma.clone());
                }
                let i = rng.gen_range(0..=k);
                let e = Ordinal::from_terms([(Ordinal::from(i), rng.gen_range(1..4u64)), (Ordinal::zero(), rng.gen_range(0..3u64))]);
                IntervalSet::new(gamma.clone(), e.min(gamma.clone())).unwrap()
            };
            let (a, b) = (pick(rng), pick(rng));
            (IntervalSpace::new(gamma), a, b)
        })
        .collect()
}

/// Pairs of relations on up to 8 cells; half the pairs are nested.
pub fn relation_law_samples(rng: &mut StdRng, count: usize) -> Vec<(usize, Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let a = random_pairs(rng, n, 0.2);
            let b = if rng.gen_bool(0.5) {
                let mut b = a.clone();
                b.extend(random_pairs(rng, n, 0.1));
                b
            } else {
                random_pairs(rng, n, 0.2)
            };
            (n, a, b)
        })
        .collect()
}
