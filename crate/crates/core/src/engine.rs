//! Transfinite iteration of monotone operators over lattices of closed sets.
//!
//! A [`SetDomain`] supplies the lattice (inclusion, bottom, top, closure of
//! finite unions), and a [`MonotoneOperator`] is either a derivative
//! (`D(A) ⊆ A`) or an expansion (`A ⊆ E(A)`). Two iteration modes exist:
//!
//! * [`iterate_steps`] applies the operator until a fixpoint or a step
//!   budget. Exhausting the budget yields a lower bound, never a guess.
//! * [`rank_closed_form`] asks the operator for its closed-form rank and
//!   stage map, then spot-checks them at sampled ordinals.

use std::collections::BTreeSet;
use std::fmt::{self, Debug};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::ordinal::Ordinal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Derivative,
    Expansion,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Derivative => f.write_str("derivative"),
            OperatorKind::Expansion => f.write_str("expansion"),
        }
    }
}

/// A failed domain operation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct DomainError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("stage {stage}: {source}")]
    Domain { stage: Ordinal, source: DomainError },
    #[error("max_steps must be at least 1")]
    ZeroBudget,
    #[error("stage {stage}: {kind} moved in the wrong direction")]
    WrongDirection { stage: Ordinal, kind: OperatorKind },
    #[error("chain is not monotone at position {0}")]
    NonMonotoneChain(usize),
    #[error("chain is empty")]
    EmptyChain,
    #[error("operator `{0}` has no closed form on this domain")]
    Unsupported(String),
    #[error("limit stage requested at non-limit ordinal {0}")]
    NotALimit(Ordinal),
    #[error("trace is a lower bound; raise the budget to decide membership")]
    Indeterminate,
}

/// The lattice of represented closed sets of one ambient space.
pub trait SetDomain {
    type Elem: Clone + Debug;

    fn equal(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    /// Set inclusion.
    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    fn bottom(&self) -> Self::Elem;
    fn top(&self) -> Self::Elem;
    /// Closure of the union of finitely many elements.
    fn finite_join(&self, items: &[Self::Elem]) -> Self::Elem;
    /// Intersection of finitely many elements.
    fn finite_meet(&self, items: &[Self::Elem]) -> Self::Elem;
    /// Cardinality or cell count, rendered for trace export.
    fn size_metric(&self, a: &Self::Elem) -> String;
}

/// A derivative or expansion on a [`SetDomain`].
///
/// Closed forms are optional; operators that know their stage map at every
/// ordinal implement [`transfinite_stage`](Self::transfinite_stage) and
/// [`closed_form_rank`](Self::closed_form_rank).
pub trait MonotoneOperator<D: SetDomain> {
    fn kind(&self) -> OperatorKind;
    fn name(&self) -> &str;
    fn apply(&self, domain: &D, a: &D::Elem) -> Result<D::Elem, DomainError>;

    fn transfinite_stage(
        &self,
        _domain: &D,
        _a: &D::Elem,
        _alpha: &Ordinal,
    ) -> Option<Result<D::Elem, DomainError>> {
        None
    }

    fn closed_form_rank(&self, _domain: &D, _a: &D::Elem) -> Option<Result<Ordinal, DomainError>> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Stage<E> {
    pub index: Ordinal,
    pub value: E,
}

/// Stagewise record of an iteration.
#[derive(Debug, Clone)]
pub struct IterationTrace<E> {
    pub kind: OperatorKind,
    pub stages: Vec<Stage<E>>,
    pub rank: Option<Ordinal>,
    pub rank_is_lower_bound: bool,
    pub stable_part: Option<E>,
    /// Stable part is bottom (derivative) or top (expansion).
    pub reached_extreme: bool,
    pub budget_steps: usize,
}

impl<E> IterationTrace<E> {
    pub fn is_exact(&self) -> bool {
        self.rank.is_some() && !self.rank_is_lower_bound
    }

    pub fn stage(&self, index: &Ordinal) -> Option<&E> {
        self.stages
            .iter()
            .find(|s| &s.index == index)
            .map(|s| &s.value)
    }
}

/// Renders a trace as CSV with columns `stage_index,size_metric,is_fixpoint`.
///
/// A row is a fixpoint when the next recorded stage is equal to it.
pub fn trace_csv<D: SetDomain>(domain: &D, trace: &IterationTrace<D::Elem>) -> String {
    let mut out = String::from("stage_index,size_metric,is_fixpoint\n");
    for (i, stage) in trace.stages.iter().enumerate() {
        let fixpoint = match trace.stages.get(i + 1) {
            Some(next) => domain.equal(&stage.value, &next.value),
            None => trace.stable_part.is_some(),
        };
        out.push_str(&format!(
            "{},{},{}\n",
            stage.index,
            domain.size_metric(&stage.value),
            fixpoint
        ));
    }
    out
}

fn moves_correctly<D: SetDomain>(domain: &D, kind: OperatorKind, from: &D::Elem, to: &D::Elem) -> bool {
    match kind {
        OperatorKind::Derivative => domain.leq(to, from),
        OperatorKind::Expansion => domain.leq(from, to),
    }
}

/// Applies `op` from `start` until two consecutive stages agree or
/// `max_steps` applications have been made.
pub fn iterate_steps<D, O>(
    domain: &D,
    op: &O,
    start: &D::Elem,
    max_steps: usize,
) -> Result<IterationTrace<D::Elem>, EngineError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    if max_steps == 0 {
        return Err(EngineError::ZeroBudget);
    }
    let kind = op.kind();
    let mut stages = vec![Stage {
        index: Ordinal::zero(),
        value: start.clone(),
    }];
    for n in 0..max_steps {
        let current = &stages[n].value;
        let next = op.apply(domain, current).map_err(|source| EngineError::Domain {
            stage: Ordinal::from(n as u64 + 1),
            source,
        })?;
        if !moves_correctly(domain, kind, current, &next) {
            return Err(EngineError::WrongDirection {
                stage: Ordinal::from(n as u64 + 1),
                kind,
            });
        }
        let fixpoint = domain.equal(current, &next);
        let stable = current.clone();
        stages.push(Stage {
            index: Ordinal::from(n as u64 + 1),
            value: next,
        });
        if fixpoint {
            let reached_extreme = is_extreme(domain, kind, &stable);
            return Ok(IterationTrace {
                kind,
                stages,
                rank: Some(Ordinal::from(n as u64)),
                rank_is_lower_bound: false,
                stable_part: Some(stable),
                reached_extreme,
                budget_steps: max_steps,
            });
        }
    }
    Ok(IterationTrace {
        kind,
        stages,
        rank: Some(Ordinal::from(max_steps as u64)),
        rank_is_lower_bound: true,
        stable_part: None,
        reached_extreme: false,
        budget_steps: max_steps,
    })
}

fn is_extreme<D: SetDomain>(domain: &D, kind: OperatorKind, value: &D::Elem) -> bool {
    match kind {
        OperatorKind::Derivative => domain.equal(value, &domain.bottom()),
        OperatorKind::Expansion => domain.equal(value, &domain.top()),
    }
}

/// A chain handed to [`limit_stage`].
pub enum Chain<'a, E> {
    /// An explicit finite chain, eventually constant in step mode.
    Explicit(&'a [E]),
    /// The iterates of the operator from `start` below the limit ordinal
    /// `limit`, resolved through the operator's closed form.
    Iterates { start: &'a E, limit: &'a Ordinal },
}

/// Limit stage of a monotone chain: the meet for derivatives, the closure of
/// the union for expansions.
pub fn limit_stage<D, O>(domain: &D, op: &O, chain: Chain<'_, D::Elem>) -> Result<D::Elem, EngineError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    let kind = op.kind();
    match chain {
        Chain::Explicit(items) => {
            if items.is_empty() {
                return Err(EngineError::EmptyChain);
            }
            if let Some(i) = items
                .windows(2)
                .position(|w| !moves_correctly(domain, kind, &w[0], &w[1]))
            {
                return Err(EngineError::NonMonotoneChain(i + 1));
            }
            Ok(match kind {
                OperatorKind::Derivative => domain.finite_meet(items),
                OperatorKind::Expansion => domain.finite_join(items),
            })
        }
        Chain::Iterates { start, limit } => {
            if !limit.is_limit() {
                return Err(EngineError::NotALimit(limit.clone()));
            }
            let value = op
                .transfinite_stage(domain, start, limit)
                .ok_or_else(|| EngineError::Unsupported(op.name().to_string()))?
                .map_err(|source| EngineError::Domain {
                    stage: limit.clone(),
                    source,
                })?;
            Ok(value)
        }
    }
}

/// Outcome of a closed-form rank computation.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormRank {
    pub rank: Ordinal,
    pub verified: bool,
    pub sampled: Vec<Ordinal>,
    /// Human-readable description of each failed check.
    pub failures: Vec<String>,
}

/// Ordinal below `bound` drawn from a small structured pool.
fn random_ordinal_below(rng: &mut StdRng, bound: &Ordinal) -> Option<Ordinal> {
    if bound.is_zero() {
        return None;
    }
    if let Some(n) = bound.as_finite() {
        return Some(Ordinal::from(rng.gen_range(0..n)));
    }
    // Perturb the normal form of `bound` downwards: keep a prefix of its
    // terms, lower the next coefficient, and append a random finite tail.
    for _ in 0..32 {
        let terms = bound.terms();
        let keep = rng.gen_range(0..terms.len());
        let mut parts: Vec<(Ordinal, u64)> = terms[..keep]
            .iter()
            .map(|t| (t.exponent.clone(), t.coefficient))
            .collect();
        let t = &terms[keep];
        let coefficient = rng.gen_range(0..t.coefficient);
        if coefficient > 0 {
            parts.push((t.exponent.clone(), coefficient));
        }
        // any tail strictly below w^exponent keeps the result below bound
        if let Some(e) = random_ordinal_below(rng, &t.exponent) {
            parts.push((e, rng.gen_range(1..5)));
        }
        let candidate = Ordinal::from_terms(parts);
        if &candidate < bound {
            return Some(candidate);
        }
    }
    Some(Ordinal::zero())
}

/// Closed-form rank of `start` under `op`, spot-checked at sampled stages.
///
/// The rank is accepted when the stage at the rank equals the stage at its
/// successor, every sampled earlier stage differs from its successor, every
/// sampled stage `α` satisfies `apply(stage(α)) = stage(α + 1)`, and sampled
/// limit stages are bounded by the sampled stages below them.
pub fn rank_closed_form<D, O>(
    domain: &D,
    op: &O,
    start: &D::Elem,
    sample_count: usize,
    seed: u64,
) -> Result<ClosedFormRank, EngineError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    let unsupported = || EngineError::Unsupported(op.name().to_string());
    let rank = op
        .closed_form_rank(domain, start)
        .ok_or_else(unsupported)?
        .map_err(|source| EngineError::Domain {
            stage: Ordinal::zero(),
            source,
        })?;
    let stage = |alpha: &Ordinal| -> Result<D::Elem, EngineError> {
        op.transfinite_stage(domain, start, alpha)
            .ok_or_else(unsupported)?
            .map_err(|source| EngineError::Domain {
                stage: alpha.clone(),
                source,
            })
    };

    let mut samples: BTreeSet<Ordinal> = BTreeSet::new();
    samples.insert(Ordinal::zero());
    samples.insert(Ordinal::one());
    samples.insert(rank.clone());
    samples.insert(rank.succ());
    if let Some(p) = rank.pred() {
        samples.insert(p);
    }
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..sample_count {
        if let Some(a) = random_ordinal_below(&mut rng, &rank) {
            samples.insert(a);
        }
    }

    let kind = op.kind();
    let mut failures = Vec::new();
    let mut values: Vec<(Ordinal, D::Elem)> = Vec::with_capacity(samples.len());
    for alpha in &samples {
        values.push((alpha.clone(), stage(alpha)?));
    }
    if !domain.equal(&stage(&rank)?, &stage(&rank.succ())?) {
        failures.push(format!("stage {rank} differs from stage {}", rank.succ()));
    }
    for (alpha, value) in &values {
        let next = stage(&alpha.succ())?;
        let applied = op.apply(domain, value).map_err(|source| EngineError::Domain {
            stage: alpha.succ(),
            source,
        })?;
        if !domain.equal(&applied, &next) {
            failures.push(format!("operator at stage {alpha} disagrees with stage {}", alpha.succ()));
        }
        if alpha < &rank && domain.equal(value, &next) {
            failures.push(format!("stages {alpha} and {} already agree", alpha.succ()));
        }
        for (beta, earlier) in values.iter().take_while(|(b, _)| b < alpha) {
            if !moves_correctly(domain, kind, earlier, value) {
                failures.push(format!("stage {alpha} is not bounded by stage {beta}"));
            }
        }
    }
    Ok(ClosedFormRank {
        rank,
        verified: failures.is_empty(),
        sampled: samples.into_iter().collect(),
        failures,
    })
}

/// Membership in `{A : D^∞(A) = ∅}`.
pub fn in_c_derivative<D: SetDomain>(domain: &D, trace: &IterationTrace<D::Elem>) -> Result<bool, EngineError> {
    match (&trace.stable_part, trace.is_exact()) {
        (Some(stable), true) => Ok(domain.equal(stable, &domain.bottom())),
        _ => Err(EngineError::Indeterminate),
    }
}

/// Membership in `{A : E^α(A) = X for some α}`.
pub fn in_c_expansion<D: SetDomain>(domain: &D, trace: &IterationTrace<D::Elem>) -> Result<bool, EngineError> {
    match (&trace.stable_part, trace.is_exact()) {
        (Some(stable), true) => Ok(domain.equal(stable, &domain.top())),
        _ => Err(EngineError::Indeterminate),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// `D(A) ⊆ A` failed.
    Contractive,
    /// `A ⊆ E(A)` failed.
    Expansive,
    /// `A ⊆ B` but `op(A) ⊄ op(B)`.
    Monotone,
    /// The operator itself returned an error.
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct LawViolation {
    pub pair_index: usize,
    pub law: LawKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LawReport {
    pub pairs_checked: usize,
    pub comparable_pairs: usize,
    pub violations: Vec<LawViolation>,
}

impl LawReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks contractivity or expansivity on each element of each pair, and
/// monotonicity on pairs related by inclusion (in either direction).
pub fn check_operator_laws<D, O>(domain: &D, op: &O, samples: &[(D::Elem, D::Elem)]) -> LawReport
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    let kind = op.kind();
    let mut report = LawReport {
        pairs_checked: samples.len(),
        ..Default::default()
    };
    for (i, (a, b)) in samples.iter().enumerate() {
        let (fa, fb) = match (op.apply(domain, a), op.apply(domain, b)) {
            (Ok(fa), Ok(fb)) => (fa, fb),
            (Err(e), _) | (_, Err(e)) => {
                report.violations.push(LawViolation {
                    pair_index: i,
                    law: LawKind::Failed,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        for (x, fx) in [(a, &fa), (b, &fb)] {
            if !moves_correctly(domain, kind, x, fx) {
                report.violations.push(LawViolation {
                    pair_index: i,
                    law: match kind {
                        OperatorKind::Derivative => LawKind::Contractive,
                        OperatorKind::Expansion => LawKind::Expansive,
                    },
                    detail: format!("{x:?} -> {fx:?}"),
                });
            }
        }
        for (x, y, fx, fy) in [(a, b, &fa, &fb), (b, a, &fb, &fa)] {
            if domain.leq(x, y) {
                report.comparable_pairs += 1;
                if !domain.leq(fx, fy) {
                    report.violations.push(LawViolation {
                        pair_index: i,
                        law: LawKind::Monotone,
                        detail: format!("{x:?} ⊆ {y:?} but images are not"),
                    });
                }
            }
        }
    }
    report
}
