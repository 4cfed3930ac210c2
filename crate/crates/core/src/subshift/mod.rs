//! One-sided subshifts of finite type.
//!
//! A [`SubshiftSpec`] lists an alphabet of single-character symbols and a set
//! of forbidden words; [`Subshift`] pairs it with its pruned transition graph
//! and answers word-count, entropy, realizability and independence queries.

mod independence;
mod report;

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use thiserror::Error;

pub use independence::{
    required_size, IeRelation, IndependenceCertificate, IndependenceSearch, DEFAULT_NODE_BUDGET,
};
pub use report::{EntropyRankReport, EvidenceParams, LevelReport, Verdict};

/// A word as a sequence of symbol indices.
pub type Word = Vec<u8>;

/// Upper bound on `|alphabet|^order` when enumerating graph states.
const MAX_STATES: usize = 1 << 20;
const POWER_ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubshiftError {
    #[error("empty subshift")]
    Empty,
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("symbol `{0}` must be a single character")]
    SymbolLength(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("forbidden word at index {0} is empty")]
    EmptyForbidden(usize),
    #[error("`{word}` uses symbol `{symbol}` outside the alphabet")]
    UnknownSymbol { word: String, symbol: char },
    #[error("graph would need {0} states")]
    TooLarge(usize),
    #[error("word count overflows at length {0}")]
    Overflow(usize),
    #[error("length must be at least 1")]
    ZeroLength,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("density must lie in (0, 1], got {0}")]
    BadDensity(f64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("words `{0}` and `{1}` differ in length")]
    LengthMismatch(String, String),
    #[error("power iteration did not converge within {iterations} iterations (partial value {partial})")]
    Tolerance { iterations: usize, partial: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubshiftSpec {
    pub alphabet: Vec<char>,
    pub forbidden: Vec<Word>,
}

impl SubshiftSpec {
    pub fn new<S: AsRef<str>, F: AsRef<str>>(alphabet: &[S], forbidden: &[F]) -> Result<Self, SubshiftError> {
        if alphabet.is_empty() {
            return Err(SubshiftError::EmptyAlphabet);
        }
        let mut symbols = Vec::with_capacity(alphabet.len());
        for s in alphabet {
            let s = s.as_ref();
            let mut chars = s.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(SubshiftError::SymbolLength(s.to_string()));
            };
            if symbols.contains(&c) {
                return Err(SubshiftError::DuplicateSymbol(s.to_string()));
            }
            symbols.push(c);
        }
        if symbols.len() > u8::MAX as usize {
            return Err(SubshiftError::Invalid("alphabet larger than 255 symbols".into()));
        }
        let mut spec = SubshiftSpec {
            alphabet: symbols,
            forbidden: Vec::new(),
        };
        for (i, f) in forbidden.iter().enumerate() {
            let f = f.as_ref();
            if f.is_empty() {
                return Err(SubshiftError::EmptyForbidden(i));
            }
            let w = spec.encode(f)?;
            spec.forbidden.push(w);
        }
        Ok(spec)
    }

    pub fn encode(&self, text: &str) -> Result<Word, SubshiftError> {
        text.chars()
            .map(|c| {
                self.alphabet
                    .iter()
                    .position(|&a| a == c)
                    .map(|i| i as u8)
                    .ok_or_else(|| SubshiftError::UnknownSymbol {
                        word: text.to_string(),
                        symbol: c,
                    })
            })
            .collect()
    }

    pub fn decode(&self, word: &[u8]) -> String {
        word.iter().map(|&i| self.alphabet[i as usize]).collect()
    }

    /// Graph order: longest forbidden word minus one, at least 1.
    pub fn order(&self) -> usize {
        self.forbidden
            .iter()
            .map(|f| f.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
            .max(1)
    }

    pub fn avoids_forbidden(&self, word: &[u8]) -> bool {
        !self
            .forbidden
            .iter()
            .any(|f| f.len() <= word.len() && word.windows(f.len()).any(|w| w == f.as_slice()))
    }
}

/// States are allowed words of length `order` with an infinite right
/// extension; `(u, v)` is an edge when `u[1..] == v[..order-1]` and the
/// joined word avoids every forbidden word.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionGraph {
    pub order: usize,
    pub states: Vec<Word>,
    pub successors: Vec<Vec<usize>>,
}

impl TransitionGraph {
    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }
}

pub fn build_graph(spec: &SubshiftSpec) -> Result<TransitionGraph, SubshiftError> {
    let m = spec.order();
    let k = spec.alphabet.len();
    let total = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(k)).unwrap_or(usize::MAX);
    if total > MAX_STATES {
        return Err(SubshiftError::TooLarge(total));
    }
    let mut words: Vec<Word> = vec![Vec::new()];
    for _ in 0..m {
        words = words
            .into_iter()
            .flat_map(|w| {
                (0..k as u8).map(move |c| {
                    let mut w = w.clone();
                    w.push(c);
                    w
                })
            })
            .filter(|w| spec.avoids_forbidden(w))
            .collect();
    }
    let index: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); words.len()];
    for (i, u) in words.iter().enumerate() {
        for c in 0..k as u8 {
            let mut joined = u.clone();
            joined.push(c);
            if !spec.avoids_forbidden(&joined) {
                continue;
            }
            if let Some(&j) = index.get(&joined[1..].to_vec()) {
                successors[i].push(j);
            }
        }
    }

    // prune states without infinite right extensions
    let mut alive = vec![true; words.len()];
    loop {
        let mut changed = false;
        for i in 0..words.len() {
            if alive[i] && !successors[i].iter().any(|&j| alive[j]) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let remap: Vec<Option<usize>> = alive
        .iter()
        .scan(0usize, |next, &a| {
            Some(a.then(|| {
                *next += 1;
                *next - 1
            }))
        })
        .collect();
    let states: Vec<Word> = words
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(w, _)| w.clone())
        .collect();
    if states.is_empty() {
        return Err(SubshiftError::Empty);
    }
    let successors = successors
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(succ, _)| succ.iter().filter_map(|&j| remap[j]).collect())
        .collect();
    Ok(TransitionGraph {
        order: m,
        states,
        successors,
    })
}

/// A subshift of finite type together with its pruned graph.
#[derive(Debug, Clone)]
pub struct Subshift {
    pub spec: SubshiftSpec,
    pub graph: TransitionGraph,
}

impl Subshift {
    pub fn new(spec: SubshiftSpec) -> Result<Self, SubshiftError> {
        let graph = build_graph(&spec)?;
        Ok(Subshift { spec, graph })
    }

    /// Convenience constructor from symbol and forbidden-word strings.
    pub fn from_strs(alphabet: &[&str], forbidden: &[&str]) -> Result<Self, SubshiftError> {
        Subshift::new(SubshiftSpec::new(alphabet, forbidden)?)
    }

    pub fn order(&self) -> usize {
        self.graph.order
    }

    /// Number of length-`n` words that occur in some point of the subshift.
    pub fn count_words(&self, n: usize) -> Result<u128, SubshiftError> {
        if n == 0 {
            return Err(SubshiftError::ZeroLength);
        }
        let m = self.order();
        if n < m {
            let mut prefixes: Vec<&[u8]> = self.graph.states.iter().map(|s| &s[..n]).collect();
            prefixes.sort();
            prefixes.dedup();
            return Ok(prefixes.len() as u128);
        }
        let mut counts = vec![1u128; self.graph.states.len()];
        for len in m..n {
            let mut next = vec![0u128; counts.len()];
            for (i, succ) in self.graph.successors.iter().enumerate() {
                for &j in succ {
                    next[j] = next[j].checked_add(counts[i]).ok_or(SubshiftError::Overflow(len + 1))?;
                }
            }
            counts = next;
        }
        counts
            .iter()
            .try_fold(0u128, |acc, &c| acc.checked_add(c))
            .ok_or(SubshiftError::Overflow(n))
    }

    /// All extendable words of length `n`, sorted.
    pub fn words(&self, n: usize) -> Result<Vec<Word>, SubshiftError> {
        if n == 0 {
            return Err(SubshiftError::ZeroLength);
        }
        let m = self.order();
        let mut out: Vec<Word> = if n <= m {
            self.graph.states.iter().map(|s| s[..n].to_vec()).collect()
        } else {
            let mut paths: Vec<(usize, Word)> = self
                .graph
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| (i, s.clone()))
                .collect();
            for _ in m..n {
                paths = paths
                    .into_iter()
                    .flat_map(|(i, w)| {
                        self.graph.successors[i].iter().map(move |&j| {
                            let mut w = w.clone();
                            w.push(*self.graph.states[j].last().expect("order >= 1"));
                            (j, w)
                        })
                    })
                    .collect();
            }
            paths.into_iter().map(|(_, w)| w).collect()
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// `log(count_words(n)) / n`.
    pub fn entropy_estimate(&self, n: usize) -> Result<f64, SubshiftError> {
        let count = self.count_words(n)?;
        Ok((count as f64).ln() / n as f64)
    }

    /// Log of the spectral radius of the transition graph, maximized over
    /// strongly connected components.
    ///
    /// Each component is iterated with `A + I` (primitive whenever `A` is
    /// irreducible) and stopped once the Collatz-Wielandt bounds pin
    /// `log ρ(A)` to within `tol`.
    pub fn entropy_spectral(&self, tol: f64) -> Result<f64, SubshiftError> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(SubshiftError::BadTolerance);
        }
        let mut g: DiGraph<(), ()> = DiGraph::new();
        let nodes: Vec<_> = (0..self.graph.states.len()).map(|_| g.add_node(())).collect();
        for (i, succ) in self.graph.successors.iter().enumerate() {
            for &j in succ {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        let mut best: Option<f64> = None;
        for component in tarjan_scc(&g) {
            let members: Vec<usize> = component.iter().map(|n| n.index()).collect();
            let local: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let edges: Vec<(usize, usize)> = members
                .iter()
                .flat_map(|&i| {
                    let local = &local;
                    self.graph.successors[i]
                        .iter()
                        .filter_map(move |j| local.get(j).map(|&lj| (local[&i], lj)))
                })
                .collect();
            if edges.is_empty() {
                continue;
            }
            let value = log_spectral_radius(members.len(), &edges, tol)?;
            best = Some(best.map_or(value, |b: f64| b.max(value)));
        }
        best.ok_or(SubshiftError::Empty)
    }
}

/// `log ρ(A)` for an irreducible 0/1 matrix with at least one edge.
fn log_spectral_radius(n: usize, edges: &[(usize, usize)], tol: f64) -> Result<f64, SubshiftError> {
    let mut x = vec![1.0f64; n];
    let mut partial = f64::NAN;
    for _ in 0..POWER_ITERATION_CAP {
        let mut y = x.clone();
        for &(i, j) in edges {
            y[i] += x[j];
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let ratio = yi / xi;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        // bounds on ρ(A + I) = ρ(A) + 1, with ρ(A) ≥ 1 on a cycle
        let (lo, hi) = ((lo - 1.0).max(1.0), hi - 1.0);
        partial = (0.5 * (lo + hi)).ln();
        if hi.ln() - lo.ln() < tol {
            return Ok(partial);
        }
        let scale = y.iter().cloned().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / scale).collect();
    }
    Err(SubshiftError::Tolerance {
        iterations: POWER_ITERATION_CAP,
        partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Subshift {
        Subshift::from_strs(&["0", "1"], &["11"]).unwrap()
    }

    #[test]
    fn graph_examples() {
        let g = golden().graph;
        assert_eq!((g.states.len(), g.edge_count()), (2, 3));
        let full = Subshift::from_strs(&["0", "1"], &[]).unwrap().graph;
        assert_eq!((full.states.len(), full.edge_count()), (2, 4));
        assert_eq!(
            Subshift::from_strs(&["0", "1"], &["0", "1"]).unwrap_err(),
            SubshiftError::Empty
        );
    }

    #[test]
    fn pruning_removes_dead_ends() {
        // "1" can only be followed by "1", which is forbidden after "11"
        let s = Subshift::from_strs(&["0", "1"], &["10", "11"]).unwrap();
        assert_eq!(s.graph.states, vec![vec![0]]);
        assert_eq!(s.count_words(4).unwrap(), 1);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(SubshiftSpec::new::<&str, &str>(&[], &[]).unwrap_err(), SubshiftError::EmptyAlphabet);
        assert!(matches!(SubshiftSpec::new(&["ab"], &["a"]), Err(SubshiftError::SymbolLength(_))));
        assert!(matches!(SubshiftSpec::new(&["0", "0"], &["0"]), Err(SubshiftError::DuplicateSymbol(_))));
        assert!(matches!(SubshiftSpec::new(&["0"], &[""]), Err(SubshiftError::EmptyForbidden(0))));
        assert!(matches!(SubshiftSpec::new(&["0"], &["2"]), Err(SubshiftError::UnknownSymbol { .. })));
    }

    #[test]
    fn word_counts() {
        assert_eq!(Subshift::from_strs(&["0", "1"], &[]).unwrap().count_words(5).unwrap(), 32);
        assert_eq!(golden().count_words(5).unwrap(), 13);
        assert_eq!(Subshift::from_strs(&["0", "1"], &["01"]).unwrap().count_words(4).unwrap(), 5);
        assert_eq!(golden().count_words(0).unwrap_err(), SubshiftError::ZeroLength);
    }

    #[test]
    fn short_words_below_order() {
        let s = Subshift::from_strs(&["a", "b", "c"], &["abc", "cc"]).unwrap();
        assert_eq!(s.order(), 2);
        assert_eq!(s.count_words(1).unwrap(), 3);
        assert_eq!(s.words(1).unwrap().len(), 3);
        for n in 1..7 {
            assert_eq!(s.words(n).unwrap().len() as u128, s.count_words(n).unwrap());
        }
    }

    #[test]
    fn entropy_values() {
        let full = Subshift::from_strs(&["0", "1"], &[]).unwrap();
        assert_eq!(full.entropy_estimate(7).unwrap(), 2f64.ln());
        assert!((full.entropy_spectral(1e-12).unwrap() - 2f64.ln()).abs() < 1e-12);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((golden().entropy_spectral(1e-9).unwrap() - phi.ln()).abs() < 1e-9);
        let stair = Subshift::from_strs(&["0", "1"], &["01"]).unwrap();
        assert!(stair.entropy_spectral(1e-9).unwrap().abs() < 1e-9);
        assert_eq!(golden().entropy_spectral(0.0).unwrap_err(), SubshiftError::BadTolerance);
    }
}
