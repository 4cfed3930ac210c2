use std::collections::BTreeMap;

use serde::Serialize;

use super::{Subshift, SubshiftError, Word};
use crate::gamma::{BoolMatrix, CellRelation};

/// Default cap on search nodes (independence tests) per word pair.
pub const DEFAULT_NODE_BUDGET: usize = 50_000;

/// Positions `I ⊆ [0, horizon)` at which `u` and `v` can be placed in every
/// combination. Only constructed through verification.
///
/// Positions count blocks of the word length: position `p` places the word at
/// symbol offset `p * stride`, where `stride = |u|`. Density is `|I| / horizon`
/// in these units, which differs from the symbol-level density by the
/// constant factor `stride` and so preserves positivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndependenceCertificate {
    pub u: Word,
    pub v: Word,
    pub horizon: usize,
    pub positions: Vec<usize>,
    pub stride: usize,
}

impl IndependenceCertificate {
    /// Builds a certificate after checking every assignment.
    pub fn verified(
        shift: &Subshift,
        u: &[u8],
        v: &[u8],
        horizon: usize,
        positions: Vec<usize>,
    ) -> Option<Self> {
        let ok = u.len() == v.len()
            && positions.iter().all(|&p| p < horizon)
            && positions.windows(2).all(|w| w[0] < w[1])
            && shift.is_independent(u, v, &offsets(&positions, u.len()));
        ok.then(|| IndependenceCertificate {
            u: u.to_vec(),
            v: v.to_vec(),
            horizon,
            positions,
            stride: u.len(),
        })
    }

    /// Symbol offsets of the certified positions.
    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.positions, self.stride)
    }

    /// `|I| / horizon` as `(numerator, denominator)`.
    pub fn density(&self) -> (usize, usize) {
        (self.positions.len(), self.horizon)
    }

    pub fn density_f64(&self) -> f64 {
        self.positions.len() as f64 / self.horizon as f64
    }

    pub fn reverify(&self, shift: &Subshift) -> bool {
        self.stride == self.u.len() && shift.is_independent(&self.u, &self.v, &self.offsets())
    }
}

fn offsets(positions: &[usize], stride: usize) -> Vec<usize> {
    positions.iter().map(|p| p * stride).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndependenceSearch {
    Found(IndependenceCertificate),
    /// Every candidate set was examined; none is large enough.
    Exhausted,
    BudgetExceeded,
}

/// Minimum certificate size for density `r` at `horizon`.
///
/// A single position only witnesses that both cylinders are nonempty, so at
/// least two positions are required.
pub fn required_size(horizon: usize, density: f64) -> usize {
    let raw = (density * horizon as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.max(2)
}

impl Subshift {
    /// Whether some point satisfies `x[p..p+len(w)] = w` for every
    /// constraint `(p, w)`.
    pub fn realizable(&self, constraints: &[(usize, &[u8])]) -> bool {
        let m = self.order();
        let width = constraints
            .iter()
            .map(|(p, w)| p + w.len())
            .max()
            .unwrap_or(0)
            .max(m);
        let mut pattern: Vec<Option<u8>> = vec![None; width];
        for (p, w) in constraints {
            for (k, &c) in w.iter().enumerate() {
                match pattern[p + k] {
                    Some(existing) if existing != c => return false,
                    _ => pattern[p + k] = Some(c),
                }
            }
        }
        let fits = |state: &Word, at: usize| {
            state
                .iter()
                .zip(&pattern[at..at + m])
                .all(|(s, p)| p.is_none_or(|p| p == *s))
        };
        let states = &self.graph.states;
        let mut live: Vec<bool> = states.iter().map(|s| fits(s, 0)).collect();
        for at in 1..=width - m {
            if !live.iter().any(|&b| b) {
                return false;
            }
            let mut next = vec![false; states.len()];
            for (i, succ) in self.graph.successors.iter().enumerate() {
                if !live[i] {
                    continue;
                }
                for &j in succ {
                    if !next[j] && fits(&states[j], at) {
                        next[j] = true;
                    }
                }
            }
            live = next;
        }
        live.iter().any(|&b| b)
    }

    /// All `2^|offsets|` placements of `u`/`v` at the given symbol offsets
    /// are realizable.
    pub fn is_independent(&self, u: &[u8], v: &[u8], positions: &[usize]) -> bool {
        if u.len() != v.len() {
            return false;
        }
        let k = positions.len();
        if k >= usize::BITS as usize {
            return false;
        }
        if u == v {
            let constraints: Vec<(usize, &[u8])> = positions.iter().map(|&p| (p, u)).collect();
            return self.realizable(&constraints);
        }
        (0..1usize << k).all(|mask| {
            let constraints: Vec<(usize, &[u8])> = positions
                .iter()
                .enumerate()
                .map(|(bit, &p)| (p, if mask >> bit & 1 == 1 { v } else { u }))
                .collect();
            self.realizable(&constraints)
        })
    }

    /// Depth-first search over block positions `[0, horizon)`, trying
    /// inclusion first, for a set of at least `required` independent
    /// positions.
    ///
    /// Independence is hereditary, so a position that fails against the
    /// current set is never retried below it.
    pub fn search_independence_set(
        &self,
        u: &[u8],
        v: &[u8],
        horizon: usize,
        required: usize,
        node_budget: usize,
    ) -> IndependenceSearch {
        if u.len() != v.len() || required > horizon {
            return IndependenceSearch::Exhausted;
        }
        struct Dfs<'a> {
            shift: &'a Subshift,
            u: &'a [u8],
            v: &'a [u8],
            horizon: usize,
            required: usize,
            nodes: usize,
            budget: usize,
        }
        impl Dfs<'_> {
            fn go(&mut self, pos: usize, current: &mut Vec<usize>) -> Option<bool> {
                if current.len() >= self.required {
                    return Some(true);
                }
                if current.len() + (self.horizon - pos) < self.required {
                    return Some(false);
                }
                self.nodes += 1;
                if self.nodes > self.budget {
                    return None;
                }
                current.push(pos);
                let placed = offsets(current, self.u.len());
                if self.shift.is_independent(self.u, self.v, &placed) && self.go(pos + 1, current)? {
                    return Some(true);
                }
                current.pop();
                self.go(pos + 1, current)
            }
        }
        let mut dfs = Dfs {
            shift: self,
            u,
            v,
            horizon,
            required,
            nodes: 0,
            budget: node_budget,
        };
        let mut current = Vec::new();
        match dfs.go(0, &mut current) {
            Some(true) => match IndependenceCertificate::verified(self, u, v, horizon, current) {
                Some(cert) => IndependenceSearch::Found(cert),
                None => unreachable!("search only extends independent sets"),
            },
            Some(false) => IndependenceSearch::Exhausted,
            None => IndependenceSearch::BudgetExceeded,
        }
    }

    /// Validated search for a set of density at least `r` under a node budget.
    pub fn independence_search(
        &self,
        u: &[u8],
        v: &[u8],
        horizon: usize,
        density: f64,
        node_budget: usize,
    ) -> Result<IndependenceSearch, SubshiftError> {
        check_evidence(horizon, density)?;
        check_lengths(self, u, v)?;
        Ok(self.search_independence_set(u, v, horizon, required_size(horizon, density), node_budget))
    }

    /// Independence set of density at least `r` in `[0, horizon)`, searched
    /// without a node budget.
    pub fn find_independence_set(
        &self,
        u: &[u8],
        v: &[u8],
        horizon: usize,
        density: f64,
    ) -> Result<Option<IndependenceCertificate>, SubshiftError> {
        check_evidence(horizon, density)?;
        check_lengths(self, u, v)?;
        Ok(
            match self.search_independence_set(u, v, horizon, required_size(horizon, density), usize::MAX) {
                IndependenceSearch::Found(c) => Some(c),
                _ => None,
            },
        )
    }

    /// Evidence relations on length-`n` cylinders: `lower` holds pairs with a
    /// verified certificate, `upper` the pairs not refuted by exhaustive
    /// search.
    pub fn ie_relation(&self, n: usize, horizon: usize, density: f64) -> Result<IeRelation, SubshiftError> {
        self.ie_relation_with_budget(n, horizon, density, DEFAULT_NODE_BUDGET)
    }

    pub fn ie_relation_with_budget(
        &self,
        n: usize,
        horizon: usize,
        density: f64,
        node_budget: usize,
    ) -> Result<IeRelation, SubshiftError> {
        check_evidence(horizon, density)?;
        let cells = self.words(n)?;
        let k = cells.len();
        let required = required_size(horizon, density);
        let mut lower = BoolMatrix::new(k);
        let mut upper = BoolMatrix::new(k);
        let mut certificates = BTreeMap::new();
        let mut undecided = Vec::new();
        for i in 0..k {
            for j in i..k {
                match self.search_independence_set(&cells[i], &cells[j], horizon, required, node_budget) {
                    IndependenceSearch::Found(cert) => {
                        for (a, b) in [(i, j), (j, i)] {
                            lower.set(a, b, true);
                            upper.set(a, b, true);
                        }
                        certificates.insert((i, j), cert);
                    }
                    IndependenceSearch::BudgetExceeded => {
                        upper.set(i, j, true);
                        upper.set(j, i, true);
                        undecided.push((i, j));
                    }
                    IndependenceSearch::Exhausted => {}
                }
            }
        }
        Ok(IeRelation {
            n,
            horizon,
            density,
            required,
            cells,
            lower: CellRelation::new(lower),
            upper: CellRelation::new(upper),
            certificates,
            undecided,
        })
    }
}

fn check_evidence(horizon: usize, density: f64) -> Result<(), SubshiftError> {
    if horizon == 0 {
        return Err(SubshiftError::ZeroHorizon);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(SubshiftError::BadDensity(density));
    }
    Ok(())
}

fn check_lengths(shift: &Subshift, u: &[u8], v: &[u8]) -> Result<(), SubshiftError> {
    if u.len() != v.len() {
        return Err(SubshiftError::LengthMismatch(shift.spec.decode(u), shift.spec.decode(v)));
    }
    Ok(())
}

/// Lower and upper IE evidence on the cylinders of one word length.
#[derive(Debug, Clone)]
pub struct IeRelation {
    pub n: usize,
    pub horizon: usize,
    pub density: f64,
    /// Positions a certificate must contain.
    pub required: usize,
    pub cells: Vec<Word>,
    pub lower: CellRelation,
    pub upper: CellRelation,
    /// Certificates keyed by `(i, j)` with `i ≤ j`.
    pub certificates: BTreeMap<(usize, usize), IndependenceCertificate>,
    /// Pairs whose search ran out of budget; present in `upper` only.
    pub undecided: Vec<(usize, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Subshift {
        Subshift::from_strs(&["0", "1"], &["11"]).unwrap()
    }

    fn stair() -> Subshift {
        Subshift::from_strs(&["0", "1"], &["01"]).unwrap()
    }

    fn w(s: &Subshift, t: &str) -> Word {
        s.spec.encode(t).unwrap()
    }

    #[test]
    fn realizability_examples() {
        let g = golden();
        let one = w(&g, "1");
        assert!(g.realizable(&[(0, &one), (2, &one)]));
        assert!(!g.realizable(&[(0, &one), (1, &one)]));
        let s = stair();
        assert!(!s.realizable(&[(0, &w(&s, "0")), (2, &w(&s, "1"))]));
        // overlapping constraints must agree symbol by symbol
        assert!(!g.realizable(&[(0, &w(&g, "01")), (1, &w(&g, "0"))]));
        assert!(g.realizable(&[(0, &w(&g, "01")), (1, &w(&g, "10"))]));
        assert!(g.realizable(&[]));
    }

    #[test]
    fn independence_examples() {
        let full = Subshift::from_strs(&["0", "1"], &[]).unwrap();
        assert!(full.is_independent(&[0], &[1], &[0, 1, 2, 5, 9]));
        let g = golden();
        assert!(!g.is_independent(&[0], &[1], &[0, 1]));
        assert!(g.is_independent(&[0], &[1], &[0, 2]));
        assert!(!g.is_independent(&[0], &[1, 0], &[0]));
    }

    #[test]
    fn search_examples() {
        let full = Subshift::from_strs(&["0", "1"], &[]).unwrap();
        let c = full.find_independence_set(&[0], &[1], 8, 1.0).unwrap().unwrap();
        assert_eq!(c.positions, (0..8).collect::<Vec<_>>());
        assert_eq!(c.density(), (8, 8));

        let g = golden();
        let c = g.find_independence_set(&[0], &[1], 8, 0.5).unwrap().unwrap();
        assert_eq!(c.positions, vec![0, 2, 4, 6]);
        assert!(c.reverify(&g));

        let s = stair();
        for r in [0.01, 0.125, 0.5, 1.0] {
            assert_eq!(s.find_independence_set(&[0], &[1], 8, r).unwrap(), None, "r = {r}");
        }
        assert!(g.find_independence_set(&[0], &[1], 8, 0.0).is_err());
        assert!(g.find_independence_set(&[0], &[1], 0, 0.5).is_err());
        assert!(g.find_independence_set(&[0], &[1, 0], 8, 0.5).is_err());
    }

    #[test]
    fn budget_is_reported() {
        let g = golden();
        // "01" then "10" in adjacent blocks spells "0110", so at most every
        // other block of eight can be used
        assert_eq!(
            g.search_independence_set(&[0, 1], &[1, 0], 8, 5, 3),
            IndependenceSearch::BudgetExceeded
        );
        assert_eq!(
            g.search_independence_set(&[0, 1], &[1, 0], 8, 5, usize::MAX),
            IndependenceSearch::Exhausted
        );
        match g.search_independence_set(&[0, 1], &[1, 0], 8, 4, usize::MAX) {
            IndependenceSearch::Found(c) => {
                assert_eq!(c.positions, vec![0, 2, 4, 6]);
                assert_eq!(c.offsets(), vec![0, 4, 8, 12]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn required_size_floor() {
        assert_eq!(required_size(8, 0.5), 4);
        assert_eq!(required_size(8, 0.01), 2);
        assert_eq!(required_size(8, 1.0), 8);
        assert_eq!(required_size(10, 0.3), 3);
    }

    #[test]
    fn relation_examples() {
        let full = Subshift::from_strs(&["0", "1"], &[]).unwrap();
        let rel = full.ie_relation(1, 8, 1.0).unwrap();
        assert_eq!(rel.lower.matrix.count(), 4);
        assert_eq!(rel.lower, rel.upper);

        let rel = stair().ie_relation(1, 8, 0.5).unwrap();
        assert!(!rel.upper.contains(0, 1) && !rel.upper.contains(1, 0));
        assert!(rel.lower.is_subset(&rel.upper));
        assert!(rel.lower.contains(0, 0) && rel.lower.contains(1, 1));
    }
}
