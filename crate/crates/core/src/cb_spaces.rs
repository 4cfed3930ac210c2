//! Countable compact ordinal spaces `[0, γ]` with exact closed forms.
//!
//! Cantor-Bendixson iterates of `[0, γ]` are the sets
//! `S_β = {δ : 1 ≤ δ ≤ γ, least_exponent(δ) ≥ β}`, so the derivative and its
//! transfinite stages are computed symbolically. [`SuccExpansion`] is a
//! synthetic expansion on initial intervals whose rank can be transfinite.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{DomainError, MonotoneOperator, OperatorKind, SetDomain};
use crate::ordinal::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{delta} lies outside [0,{gamma}]")]
pub struct OutOfSpace {
    pub delta: Ordinal,
    pub gamma: Ordinal,
}

/// A Cantor-Bendixson iterate of `[0, gamma]`.
///
/// `full` marks the whole space (stage 0 together with the point 0) and is
/// only meaningful with `beta = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DivisibilitySet {
    pub gamma: Ordinal,
    pub beta: Ordinal,
    pub full: bool,
}

impl DivisibilitySet {
    pub fn full(gamma: Ordinal) -> Self {
        DivisibilitySet {
            gamma,
            beta: Ordinal::zero(),
            full: true,
        }
    }

    /// `S_beta`; for `beta = 0` this is `[1, gamma]`.
    pub fn stage(gamma: Ordinal, beta: Ordinal) -> Self {
        DivisibilitySet {
            gamma,
            beta,
            full: false,
        }
    }

    pub fn empty(gamma: Ordinal) -> Self {
        // w^(gamma+1) exceeds gamma, so no point qualifies
        let beta = gamma.succ();
        DivisibilitySet::stage(gamma, beta)
    }

    pub fn is_empty(&self) -> bool {
        !self.full && Ordinal::omega_pow(self.beta.clone()) > self.gamma
    }

    pub fn member(&self, delta: &Ordinal) -> Result<bool, OutOfSpace> {
        if delta > &self.gamma {
            return Err(OutOfSpace {
                delta: delta.clone(),
                gamma: self.gamma.clone(),
            });
        }
        Ok(match delta.least_exponent() {
            Err(_) => self.full,
            Ok(e) => e >= self.beta,
        })
    }

    /// Number of points, or `None` when infinite.
    pub fn cardinality(&self) -> Option<u64> {
        let extra = u64::from(self.full);
        if self.is_empty() {
            return Some(extra);
        }
        let lead = self.gamma.leading_exponent();
        // infinitely many multiples of w^beta lie below gamma unless beta is
        // the leading exponent
        if self.beta < lead {
            None
        } else {
            Some(self.gamma.leading_coefficient() + extra)
        }
    }
}

impl fmt::Display for DivisibilitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.full {
            write!(f, "[0,{}]", self.gamma)
        } else if self.is_empty() {
            f.write_str("{}")
        } else {
            write!(f, "S_{} in [0,{}]", self.beta, self.gamma)
        }
    }
}

/// Lattice of Cantor-Bendixson iterates of `[0, gamma]`.
///
/// The iterates form a chain, so joins and meets pick extremes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbSpace {
    pub gamma: Ordinal,
}

impl CbSpace {
    pub fn new(gamma: Ordinal) -> Self {
        CbSpace { gamma }
    }

    pub fn whole(&self) -> DivisibilitySet {
        DivisibilitySet::full(self.gamma.clone())
    }

    fn check(&self, s: &DivisibilitySet) -> Result<(), DomainError> {
        if s.gamma != self.gamma {
            return Err(DomainError(format!(
                "set over [0,{}] used in space [0,{}]",
                s.gamma, self.gamma
            )));
        }
        if s.full && !s.beta.is_zero() {
            return Err(DomainError("full flag requires stage 0".into()));
        }
        Ok(())
    }
}

impl SetDomain for CbSpace {
    type Elem = DivisibilitySet;

    fn equal(&self, a: &DivisibilitySet, b: &DivisibilitySet) -> bool {
        self.leq(a, b) && self.leq(b, a)
    }

    fn leq(&self, a: &DivisibilitySet, b: &DivisibilitySet) -> bool {
        if a.is_empty() && !a.full {
            return true;
        }
        if b.full {
            return true;
        }
        if a.full {
            return false;
        }
        !b.is_empty() && a.beta >= b.beta
    }

    fn bottom(&self) -> DivisibilitySet {
        DivisibilitySet::empty(self.gamma.clone())
    }

    fn top(&self) -> DivisibilitySet {
        self.whole()
    }

    fn finite_join(&self, items: &[DivisibilitySet]) -> DivisibilitySet {
        items
            .iter()
            .fold(self.bottom(), |acc, s| if self.leq(&acc, s) { s.clone() } else { acc })
    }

    fn finite_meet(&self, items: &[DivisibilitySet]) -> DivisibilitySet {
        items
            .iter()
            .fold(self.top(), |acc, s| if self.leq(s, &acc) { s.clone() } else { acc })
    }

    fn size_metric(&self, a: &DivisibilitySet) -> String {
        a.cardinality().map_or_else(|| "inf".to_string(), |n| n.to_string())
    }
}

/// The set of limit points of `s` in the order topology.
pub fn cb_derivative(s: &DivisibilitySet) -> DivisibilitySet {
    if s.is_empty() {
        return s.clone();
    }
    if s.full {
        return DivisibilitySet::stage(s.gamma.clone(), Ordinal::one());
    }
    DivisibilitySet::stage(s.gamma.clone(), s.beta.succ())
}

/// Whether `delta` is a limit point of `s`, decided from the definition:
/// `delta` is a limit ordinal and every sampled `ε < delta` has a member of
/// `s` strictly between `ε` and `delta`.
///
/// Samples are the ordinals `ξ + w^f * k` just below `delta = ξ + w^e`
/// (for `f < e`), and the witnesses tried are `ε + w^g * j`. The sample
/// exponents are the naturals below 6 plus `beta` and its successor.
pub fn limit_point_oracle(delta: &Ordinal, s: &DivisibilitySet) -> bool {
    if !delta.is_limit() || delta > &s.gamma {
        return false;
    }
    let e = delta.least_exponent().expect("limit is nonzero");
    // delta = xi + w^e
    let xi = {
        let mut terms: Vec<(Ordinal, u64)> = delta
            .terms()
            .iter()
            .map(|t| (t.exponent.clone(), t.coefficient))
            .collect();
        let last = terms.last_mut().expect("nonzero");
        last.1 -= 1;
        Ordinal::from_terms(terms)
    };
    let mut exponents: Vec<Ordinal> = (0..6).map(Ordinal::from).collect();
    exponents.push(s.beta.clone());
    exponents.push(s.beta.succ());
    exponents.retain(|f| f < &e);
    exponents.sort();
    exponents.dedup();

    let mut epsilons = vec![xi.clone()];
    for f in &exponents {
        for k in 1..=4 {
            epsilons.push(xi.add(&Ordinal::from_terms([(f.clone(), k)])));
        }
    }
    epsilons.retain(|eps| eps < delta);

    epsilons.iter().all(|eps| {
        exponents.iter().any(|g| {
            (1..=2).any(|j| {
                let witness = eps.add(&Ordinal::from_terms([(g.clone(), j)]));
                &witness > eps && &witness < delta && s.member(&witness).unwrap_or(false)
            })
        })
    })
}

/// Cantor-Bendixson rank of `[0, gamma]`: 1 for `gamma = 0`, otherwise
/// `leading_exponent(gamma) + 1`.
pub fn cb_rank(gamma: &Ordinal) -> Ordinal {
    if gamma.is_zero() {
        Ordinal::one()
    } else {
        gamma.leading_exponent().succ()
    }
}

/// The Cantor-Bendixson derivative as an engine operator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CbDerivative;

impl MonotoneOperator<CbSpace> for CbDerivative {
    fn kind(&self) -> OperatorKind {
        OperatorKind::Derivative
    }

    fn name(&self) -> &str {
        "cb_derivative"
    }

    fn apply(&self, domain: &CbSpace, a: &DivisibilitySet) -> Result<DivisibilitySet, DomainError> {
        domain.check(a)?;
        Ok(cb_derivative(a))
    }

    /// Stage `α` of `S_β` is `S_{β+α}`; limits intersect to the same form.
    fn transfinite_stage(
        &self,
        domain: &CbSpace,
        a: &DivisibilitySet,
        alpha: &Ordinal,
    ) -> Option<Result<DivisibilitySet, DomainError>> {
        Some(domain.check(a).map(|()| {
            if alpha.is_zero() || a.is_empty() {
                a.clone()
            } else {
                DivisibilitySet::stage(a.gamma.clone(), a.beta.add(alpha))
            }
        }))
    }

    /// Iterates shrink strictly while nonempty, so the rank is the least
    /// `α` with `w^(β+α) > γ`, i.e. `(lead(γ) + 1) - β`.
    fn closed_form_rank(&self, domain: &CbSpace, a: &DivisibilitySet) -> Option<Result<Ordinal, DomainError>> {
        Some(domain.check(a).map(|()| {
            if a.is_empty() {
                return Ordinal::zero();
            }
            if a.gamma.is_zero() {
                // only the full set {0} is nonempty here
                return Ordinal::one();
            }
            let bound = a.gamma.leading_exponent().succ();
            a.beta
                .left_sub(&bound)
                .expect("nonempty stage has beta <= lead(gamma)")
        }))
    }
}

/// An initial interval `[0, endpoint]` of `[0, gamma]`, or the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IntervalSet {
    pub gamma: Ordinal,
    pub endpoint: Option<Ordinal>,
}

impl IntervalSet {
    pub fn new(gamma: Ordinal, endpoint: Ordinal) -> Result<Self, OutOfSpace> {
        if endpoint > gamma {
            return Err(OutOfSpace { delta: endpoint, gamma });
        }
        Ok(IntervalSet {
            gamma,
            endpoint: Some(endpoint),
        })
    }

    pub fn empty(gamma: Ordinal) -> Self {
        IntervalSet { gamma, endpoint: None }
    }

    pub fn is_top(&self) -> bool {
        self.endpoint.as_ref() == Some(&self.gamma)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.endpoint {
            Some(e) => write!(f, "[0,{e}]"),
            None => f.write_str("{}"),
        }
    }
}

/// Lattice of initial intervals of `[0, gamma]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSpace {
    pub gamma: Ordinal,
}

impl IntervalSpace {
    pub fn new(gamma: Ordinal) -> Self {
        IntervalSpace { gamma }
    }

    pub fn interval(&self, endpoint: Ordinal) -> Result<IntervalSet, OutOfSpace> {
        IntervalSet::new(self.gamma.clone(), endpoint)
    }

    fn check(&self, s: &IntervalSet) -> Result<(), DomainError> {
        if s.gamma != self.gamma {
            return Err(DomainError(format!(
                "interval over [0,{}] used in space [0,{}]",
                s.gamma, self.gamma
            )));
        }
        match &s.endpoint {
            Some(e) if e > &self.gamma => Err(DomainError(format!("endpoint {e} exceeds {}", self.gamma))),
            _ => Ok(()),
        }
    }
}

impl SetDomain for IntervalSpace {
    type Elem = IntervalSet;

    fn equal(&self, a: &IntervalSet, b: &IntervalSet) -> bool {
        a.endpoint == b.endpoint
    }

    fn leq(&self, a: &IntervalSet, b: &IntervalSet) -> bool {
        match (&a.endpoint, &b.endpoint) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(x), Some(y)) => x <= y,
        }
    }

    fn bottom(&self) -> IntervalSet {
        IntervalSet::empty(self.gamma.clone())
    }

    fn top(&self) -> IntervalSet {
        IntervalSet {
            gamma: self.gamma.clone(),
            endpoint: Some(self.gamma.clone()),
        }
    }

    fn finite_join(&self, items: &[IntervalSet]) -> IntervalSet {
        IntervalSet {
            gamma: self.gamma.clone(),
            endpoint: items.iter().filter_map(|s| s.endpoint.clone()).max(),
        }
    }

    fn finite_meet(&self, items: &[IntervalSet]) -> IntervalSet {
        if items.iter().any(|s| s.endpoint.is_none()) {
            return self.bottom();
        }
        IntervalSet {
            gamma: self.gamma.clone(),
            endpoint: Some(
                items
                    .iter()
                    .filter_map(|s| s.endpoint.clone())
                    .min()
                    .unwrap_or_else(|| self.gamma.clone()),
            ),
        }
    }

    fn size_metric(&self, a: &IntervalSet) -> String {
        match &a.endpoint {
            None => "0".into(),
            Some(e) => e
                .as_finite()
                .map_or_else(|| "inf".to_string(), |n| (n + 1).to_string()),
        }
    }
}

/// `[0, β] ↦ [0, min(γ, β·w)]`; `[0, 0]` and the empty set are fixed.
pub fn succ_expansion(s: &IntervalSet) -> IntervalSet {
    let endpoint = s.endpoint.as_ref().map(|e| {
        if e.is_zero() {
            e.clone()
        } else {
            e.mul_omega().min(s.gamma.clone())
        }
    });
    IntervalSet {
        gamma: s.gamma.clone(),
        endpoint,
    }
}

/// [`succ_expansion`] as an engine operator.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuccExpansion;

impl SuccExpansion {
    /// Least exponent `x` with `w^x ≥ gamma`.
    fn covering_exponent(gamma: &Ordinal) -> Ordinal {
        let lead = gamma.leading_exponent();
        if gamma == &Ordinal::omega_pow(lead.clone()) {
            lead
        } else {
            lead.succ()
        }
    }
}

impl MonotoneOperator<IntervalSpace> for SuccExpansion {
    fn kind(&self) -> OperatorKind {
        OperatorKind::Expansion
    }

    fn name(&self) -> &str {
        "succ_expansion"
    }

    fn apply(&self, domain: &IntervalSpace, a: &IntervalSet) -> Result<IntervalSet, DomainError> {
        domain.check(a)?;
        Ok(succ_expansion(a))
    }

    /// For `[0, e]` with `e ≥ 1` and `L = lead(e)`, stage `α ≥ 1` is
    /// `[0, min(γ, w^(L+α))]`; the exponent is continuous at limits.
    fn transfinite_stage(
        &self,
        domain: &IntervalSpace,
        a: &IntervalSet,
        alpha: &Ordinal,
    ) -> Option<Result<IntervalSet, DomainError>> {
        Some(domain.check(a).map(|()| match &a.endpoint {
            Some(e) if !alpha.is_zero() && !e.is_zero() => {
                let reach = Ordinal::omega_pow(e.leading_exponent().add(alpha));
                IntervalSet {
                    gamma: a.gamma.clone(),
                    endpoint: Some(reach.min(a.gamma.clone())),
                }
            }
            _ => a.clone(),
        }))
    }

    fn closed_form_rank(&self, domain: &IntervalSpace, a: &IntervalSet) -> Option<Result<Ordinal, DomainError>> {
        Some(domain.check(a).map(|()| match &a.endpoint {
            Some(e) if !e.is_zero() && !a.is_top() => {
                let need = SuccExpansion::covering_exponent(&a.gamma);
                e.leading_exponent()
                    .left_sub(&need)
                    .expect("lead(e) <= lead(gamma) <= covering exponent")
            }
            _ => Ordinal::zero(),
        }))
    }
}
