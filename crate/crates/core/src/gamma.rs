//! The Γ operator on finite cell relations.
//!
//! At a fixed finite resolution cells are clopen, so topological closure is
//! the identity and `Γ(R)` is just the equivalence closure of `R`. The
//! transfinite behaviour of a closed relation on a compact space lives
//! across resolutions; a [`RelationTower`] records one relation per
//! resolution and [`gamma_tower_iterate`] reports per-level numbers only.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{iterate_steps, DomainError, EngineError, MonotoneOperator, OperatorKind, SetDomain};
use crate::ordinal::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("duplicate cell `{0}`")]
    DuplicateCell(String),
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
    #[error("parent map has {found} entries for {expected} cells")]
    ParentLength { expected: usize, found: usize },
    #[error("parent index {0} out of range")]
    ParentRange(usize),
    #[error("relation has dimension {found}, space has {expected} cells")]
    Dimension { expected: usize, found: usize },
    #[error("tower has no levels")]
    EmptyTower,
    #[error("level {0} has no parent map")]
    MissingParent(usize),
    #[error("tower is inconsistent at level {level}: ({u}, {v})")]
    Inconsistent { level: usize, u: String, v: String },
}

/// Square boolean matrix stored as bitset rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BoolMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BoolMatrix::new(n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn full(n: usize) -> Self {
        let mut m = BoolMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, true);
            }
        }
        m
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = BoolMatrix::new(n);
        for (i, j) in pairs {
            m.set(i, j, true);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let words = self.words;
        let w = &mut self.bits[i * words + j / 64];
        if value {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| self.get(i, j)).map(move |j| (i, j)))
    }

    pub fn is_subset(&self, other: &BoolMatrix) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &BoolMatrix) -> BoolMatrix {
        let mut out = self.clone();
        for (a, b) in out.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        out
    }

    pub fn transpose(&self) -> BoolMatrix {
        let mut t = BoolMatrix::new(self.n);
        for (i, j) in self.pairs() {
            t.set(j, i, true);
        }
        t
    }

    /// Relational composition: `(i,k)` iff some `j` has `(i,j)` in self and
    /// `(j,k)` in other.
    pub fn compose(&self, other: &BoolMatrix) -> BoolMatrix {
        let mut out = BoolMatrix::new(self.n);
        for i in 0..self.n {
            for j in (0..self.n).filter(|&j| self.get(i, j)) {
                let src = other.row(j).to_vec();
                for (d, s) in out.row_mut(i).iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
        out
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i))
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs().all(|(i, j)| self.get(j, i))
    }

    pub fn is_transitive(&self) -> bool {
        self.compose(self).is_subset(self)
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_reflexive() && self.is_symmetric() && self.is_transitive()
    }

    pub fn without_diagonal(&self) -> BoolMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.set(i, i, false);
        }
        m
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// A finite quotient of the ambient space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FinitePointSpace {
    cells: Vec<String>,
    parent: Option<Vec<usize>>,
}

impl FinitePointSpace {
    pub fn new(cells: Vec<String>) -> Result<Self, RelationError> {
        let mut seen = std::collections::HashSet::new();
        for c in &cells {
            if !seen.insert(c) {
                return Err(RelationError::DuplicateCell(c.clone()));
            }
        }
        Ok(FinitePointSpace { cells, parent: None })
    }

    /// Attaches the map to the cells of the next coarser space.
    pub fn with_parent(mut self, parent: Vec<usize>, coarser_len: usize) -> Result<Self, RelationError> {
        if parent.len() != self.cells.len() {
            return Err(RelationError::ParentLength {
                expected: self.cells.len(),
                found: parent.len(),
            });
        }
        if let Some(&p) = parent.iter().find(|&&p| p >= coarser_len) {
            return Err(RelationError::ParentRange(p));
        }
        self.parent = Some(parent);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[String] {
        &self.cells
    }

    pub fn parent(&self) -> Option<&[usize]> {
        self.parent.as_deref()
    }

    pub fn index_of(&self, cell: &str) -> Result<usize, RelationError> {
        self.cells
            .iter()
            .position(|c| c == cell)
            .ok_or_else(|| RelationError::UnknownCell(cell.to_string()))
    }

    /// Relation from named pairs.
    pub fn relation<S: AsRef<str>>(&self, pairs: &[(S, S)]) -> Result<CellRelation, RelationError> {
        let mut m = BoolMatrix::new(self.len());
        for (a, b) in pairs {
            m.set(self.index_of(a.as_ref())?, self.index_of(b.as_ref())?, true);
        }
        Ok(CellRelation { matrix: m })
    }
}

/// A relation on the cells of a [`FinitePointSpace`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CellRelation {
    pub matrix: BoolMatrix,
}

impl fmt::Debug for CellRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.matrix.fmt(f)
    }
}

impl CellRelation {
    pub fn new(matrix: BoolMatrix) -> Self {
        CellRelation { matrix }
    }

    pub fn empty(n: usize) -> Self {
        CellRelation::new(BoolMatrix::new(n))
    }

    pub fn all_pairs(n: usize) -> Self {
        CellRelation::new(BoolMatrix::full(n))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.matrix.get(i, j)
    }

    pub fn is_subset(&self, other: &CellRelation) -> bool {
        self.matrix.is_subset(&other.matrix)
    }

    pub fn named_pairs(&self, space: &FinitePointSpace) -> Vec<(String, String)> {
        self.matrix
            .pairs()
            .map(|(i, j)| (space.cells[i].clone(), space.cells[j].clone()))
            .collect()
    }
}

/// `R ∪ Rᵀ ∪ id`.
pub fn sym_refl(r: &CellRelation) -> CellRelation {
    let n = r.dim();
    CellRelation::new(r.matrix.union(&r.matrix.transpose()).union(&BoolMatrix::identity(n)))
}

/// Pairs joined by a chain of exactly `n` steps of `r` (`n ≥ 1`).
pub fn chain_n(r: &CellRelation, n: usize) -> CellRelation {
    assert!(n >= 1, "chain length must be at least 1");
    let mut acc = r.matrix.clone();
    for _ in 1..n {
        acc = acc.compose(&r.matrix);
    }
    CellRelation::new(acc)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Least equivalence relation containing `r`, via union-find.
pub fn equiv_closure(r: &CellRelation) -> CellRelation {
    let n = r.dim();
    let mut uf = UnionFind::new(n);
    for (i, j) in r.matrix.pairs() {
        uf.union(i, j);
    }
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    let mut m = BoolMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            if roots[i] == roots[j] {
                m.set(i, j, true);
            }
        }
    }
    CellRelation::new(m)
}

/// Γ at a finite resolution: closure is the identity on clopen cells.
pub fn gamma_finite(r: &CellRelation) -> CellRelation {
    equiv_closure(r)
}

/// Lattice of relations on `n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationDomain {
    pub cells: usize,
}

impl RelationDomain {
    pub fn new(cells: usize) -> Self {
        RelationDomain { cells }
    }

    fn check(&self, r: &CellRelation) -> Result<(), DomainError> {
        if r.dim() != self.cells {
            return Err(DomainError(format!(
                "relation of dimension {} in a {}-cell space",
                r.dim(),
                self.cells
            )));
        }
        Ok(())
    }
}

impl SetDomain for RelationDomain {
    type Elem = CellRelation;

    fn equal(&self, a: &CellRelation, b: &CellRelation) -> bool {
        a.matrix == b.matrix
    }

    fn leq(&self, a: &CellRelation, b: &CellRelation) -> bool {
        a.is_subset(b)
    }

    fn bottom(&self) -> CellRelation {
        CellRelation::empty(self.cells)
    }

    fn top(&self) -> CellRelation {
        CellRelation::all_pairs(self.cells)
    }

    fn finite_join(&self, items: &[CellRelation]) -> CellRelation {
        items
            .iter()
            .fold(self.bottom(), |acc, r| CellRelation::new(acc.matrix.union(&r.matrix)))
    }

    fn finite_meet(&self, items: &[CellRelation]) -> CellRelation {
        let mut out = self.top();
        for r in items {
            for (a, b) in out.matrix.bits.iter_mut().zip(&r.matrix.bits) {
                *a &= b;
            }
        }
        out
    }

    fn size_metric(&self, a: &CellRelation) -> String {
        a.matrix.count().to_string()
    }
}

/// [`gamma_finite`] as an engine operator.
#[derive(Debug, Clone, Copy, Default)]
pub struct GammaOperator;

impl MonotoneOperator<RelationDomain> for GammaOperator {
    fn kind(&self) -> OperatorKind {
        OperatorKind::Expansion
    }

    fn name(&self) -> &str {
        "gamma"
    }

    fn apply(&self, domain: &RelationDomain, a: &CellRelation) -> Result<CellRelation, DomainError> {
        domain.check(a)?;
        Ok(gamma_finite(a))
    }
}

#[derive(Debug, Clone)]
pub struct TowerLevel {
    pub space: FinitePointSpace,
    pub relation: CellRelation,
}

/// One relation per resolution, coarsest first. Every level after the first
/// carries a parent map into the previous level.
#[derive(Debug, Clone)]
pub struct RelationTower {
    pub levels: Vec<TowerLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TowerViolation {
    /// Index of the finer level holding the pair.
    pub level: usize,
    pub u: String,
    pub v: String,
}

/// Projects relation `r` on a space with a parent map onto the coarser space.
fn project(space: &FinitePointSpace, r: &CellRelation, coarser: usize) -> Result<CellRelation, RelationError> {
    let parent = space.parent().ok_or(RelationError::MissingParent(0))?;
    Ok(CellRelation::new(BoolMatrix::from_pairs(
        coarser,
        r.matrix.pairs().map(|(i, j)| (parent[i], parent[j])),
    )))
}

impl RelationTower {
    pub fn new(levels: Vec<TowerLevel>) -> Result<Self, RelationError> {
        if levels.is_empty() {
            return Err(RelationError::EmptyTower);
        }
        for (i, l) in levels.iter().enumerate() {
            if l.relation.dim() != l.space.len() {
                return Err(RelationError::Dimension {
                    expected: l.space.len(),
                    found: l.relation.dim(),
                });
            }
            if i > 0 {
                let parent = l.space.parent().ok_or(RelationError::MissingParent(i))?;
                if let Some(&p) = parent.iter().find(|&&p| p >= levels[i - 1].space.len()) {
                    return Err(RelationError::ParentRange(p));
                }
            }
        }
        Ok(RelationTower { levels })
    }

    /// Pushes the relation of `level` (≥ 1) to the space of `level - 1`.
    pub fn refine_project(&self, level: usize) -> Result<CellRelation, RelationError> {
        let fine = self.levels.get(level).ok_or(RelationError::MissingParent(level))?;
        if level == 0 {
            return Err(RelationError::MissingParent(0));
        }
        project(&fine.space, &fine.relation, self.levels[level - 1].space.len())
            .map_err(|_| RelationError::MissingParent(level))
    }

    /// Projection consistency: each pair of a finer level maps into the
    /// coarser relation or onto the diagonal. Diagonal pairs are implicit
    /// since every Γ stage after the first is reflexive.
    pub fn check(&self) -> Vec<TowerViolation> {
        let mut out = Vec::new();
        for level in 1..self.levels.len() {
            let fine = &self.levels[level];
            let coarse = &self.levels[level - 1];
            let parent = fine.space.parent().expect("validated on construction");
            for (i, j) in fine.relation.matrix.pairs() {
                let (pi, pj) = (parent[i], parent[j]);
                if pi != pj && !coarse.relation.contains(pi, pj) {
                    out.push(TowerViolation {
                        level,
                        u: fine.space.cells[i].clone(),
                        v: fine.space.cells[j].clone(),
                    });
                }
            }
        }
        out
    }
}

pub fn check_tower(t: &RelationTower) -> Vec<TowerViolation> {
    t.check()
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub cells: usize,
    pub reach_top: bool,
    /// Exact stabilization stage, or the step budget when exhausted.
    pub stabilization_stage: Ordinal,
    pub budget_exhausted: bool,
    /// Pair count at each recorded stage.
    pub stage_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TowerSummary {
    pub levels: Vec<LevelSummary>,
    /// Some level stabilized strictly below all pairs.
    pub gamma_limit_not_top: bool,
    pub any_budget_exhausted: bool,
    pub verdict: &'static str,
}

pub const VERDICT_NOT_TOP: &str = "gamma-limit-not-top";
pub const VERDICT_ALL_TOP: &str = "all-levels-reach-top";
pub const VERDICT_INDETERMINATE: &str = "indeterminate";

/// Runs Γ to a fixpoint on every level of a consistent tower.
pub fn gamma_tower_iterate(t: &RelationTower, budget: usize) -> Result<TowerSummary, TowerError> {
    if let Some(v) = t.check().into_iter().next() {
        return Err(TowerError::Relation(RelationError::Inconsistent {
            level: v.level,
            u: v.u,
            v: v.v,
        }));
    }
    let mut levels = Vec::with_capacity(t.levels.len());
    for (i, level) in t.levels.iter().enumerate() {
        let domain = RelationDomain::new(level.space.len());
        let trace = iterate_steps(&domain, &GammaOperator, &level.relation, budget)?;
        levels.push(LevelSummary {
            level: i,
            cells: level.space.len(),
            reach_top: trace.reached_extreme,
            stabilization_stage: trace.rank.clone().unwrap_or_default(),
            budget_exhausted: trace.rank_is_lower_bound,
            stage_sizes: trace.stages.iter().map(|s| s.value.matrix.count()).collect(),
        });
    }
    let not_top = levels.iter().any(|l| !l.budget_exhausted && !l.reach_top);
    let exhausted = levels.iter().any(|l| l.budget_exhausted);
    let verdict = if not_top {
        VERDICT_NOT_TOP
    } else if exhausted {
        VERDICT_INDETERMINATE
    } else {
        VERDICT_ALL_TOP
    };
    Ok(TowerSummary {
        levels,
        gamma_limit_not_top: not_top,
        any_budget_exhausted: exhausted,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TowerError {
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> FinitePointSpace {
        FinitePointSpace::new(vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn sym_refl_example() {
        let s = abc();
        let r = s.relation(&[("a", "b")]).unwrap();
        let got = sym_refl(&r).named_pairs(&s);
        let want: Vec<(String, String)> = [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b"), ("c", "c")]
            .iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert_eq!(got, want);
        let id = CellRelation::new(BoolMatrix::identity(3));
        assert_eq!(sym_refl(&id), id);
    }

    #[test]
    fn chain_examples() {
        let s = abc();
        let r = s.relation(&[("a", "b"), ("b", "c")]).unwrap();
        assert!(chain_n(&r, 2).contains(0, 2));
        assert_eq!(chain_n(&r, 1), r);
        assert_eq!(chain_n(&r, 3).matrix.count(), 0);
    }

    #[test]
    fn closure_examples() {
        let s = abc();
        let r = s.relation(&[("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(equiv_closure(&r).matrix.count(), 9);
        let e = equiv_closure(&s.relation(&[("a", "c")]).unwrap());
        assert!(e.matrix.is_equivalence());
        assert_eq!(equiv_closure(&e), e);
        assert_eq!(gamma_finite(&gamma_finite(&r)), gamma_finite(&r));
    }

    #[test]
    fn single_pair_has_rank_one() {
        let s = abc();
        let r = s.relation(&[("a", "b")]).unwrap();
        let t = iterate_steps(&RelationDomain::new(3), &GammaOperator, &r, 8).unwrap();
        assert_eq!(t.rank, Some(Ordinal::one()));
        assert!(!t.rank_is_lower_bound);
        assert!(!t.reached_extreme);
    }

    fn two_level(fine_pairs: &[(&str, &str)]) -> RelationTower {
        let coarse = FinitePointSpace::new(vec!["0".into(), "1".into()]).unwrap();
        let coarse_rel = coarse.relation(&[("0", "1")]).unwrap();
        let fine = FinitePointSpace::new(vec!["00".into(), "01".into(), "10".into()])
            .unwrap()
            .with_parent(vec![0, 0, 1], 2)
            .unwrap();
        let fine_rel = fine.relation(fine_pairs).unwrap();
        RelationTower::new(vec![
            TowerLevel {
                space: coarse,
                relation: coarse_rel,
            },
            TowerLevel {
                space: fine,
                relation: fine_rel,
            },
        ])
        .unwrap()
    }

    #[test]
    fn tower_checks() {
        let good = two_level(&[("00", "10"), ("00", "01")]);
        assert!(check_tower(&good).is_empty());
        let projected = good.refine_project(1).unwrap();
        assert!(projected.contains(0, 1) && projected.contains(0, 0));

        let bad = two_level(&[("10", "00")]);
        assert_eq!(
            check_tower(&bad),
            vec![TowerViolation {
                level: 1,
                u: "10".into(),
                v: "00".into()
            }]
        );
        assert!(matches!(
            gamma_tower_iterate(&bad, 4),
            Err(TowerError::Relation(RelationError::Inconsistent { level: 1, .. }))
        ));
    }

    #[test]
    fn empty_tower_stabilizes_below_top() {
        let t = two_level(&[]);
        let mut t = t;
        t.levels[0].relation = CellRelation::empty(2);
        let summary = gamma_tower_iterate(&t, 4).unwrap();
        assert!(summary.gamma_limit_not_top);
        assert_eq!(summary.verdict, VERDICT_NOT_TOP);
        assert!(summary.levels.iter().all(|l| l.stabilization_stage == Ordinal::one()));
    }

    #[test]
    fn space_validation() {
        assert_eq!(
            FinitePointSpace::new(vec!["a".into(), "a".into()]).unwrap_err(),
            RelationError::DuplicateCell("a".into())
        );
        assert!(abc().relation(&[("a", "z")]).is_err());
        assert!(abc().with_parent(vec![0, 1], 2).is_err());
        assert!(RelationTower::new(vec![]).is_err());
    }
}
