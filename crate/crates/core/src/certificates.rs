//! Finite-support order codes and rank lower-bound certificates.
//!
//! An [`OrderCode`] is a finite 0/1 matrix `x` on pairs of naturals. Its
//! support is `D = {m : x(m,m) = 1}` and `m ≤* n` iff both lie in `D` and
//! `x(m,n) = 1`. A code is valid when `≤*` is a linear order on `D` with 0
//! as its minimum; finite support makes it a well-order of type `|D|`.
//!
//! A [`RankCertificate`] pairs a code with a chain `h : D → closed sets`
//! starting at the target set. The R condition asks that no `h(m)` is the
//! whole space and that the closure of `⋃_{n <* m} E(h(n))` lies inside
//! `h(m)`; accepted R certificates witness `order_type ≤ |A|_E`. The S
//! condition additionally asks that `⋃_m E(h(m))` closes up to the whole
//! space, witnessing `order_type = |A|_E`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{iterate_steps, EngineError, IterationTrace, MonotoneOperator, OperatorKind, SetDomain};
use crate::ordinal::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("invalid order code: {}", .0.join("; "))]
    InvalidCode(Vec<String>),
    #[error("operator `{0}` is not an expansion")]
    NotExpansion(String),
    #[error("assignment is missing support element {0}")]
    MissingAssignment(u64),
    #[error("assignment has element {0} outside the support")]
    ExtraAssignment(u64),
    #[error("certificate refused at stage {stage}: {reason}")]
    Refused { stage: Ordinal, reason: String },
    #[error("certificate length must be at least 1")]
    ZeroLength,
    #[error("embedding unsupported: {0}")]
    Unsupported(String),
    #[error("embedding is not order preserving at {0}")]
    NotOrderPreserving(u64),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A finite code of a linear order on a subset of the naturals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderCode {
    ones: BTreeSet<(u64, u64)>,
}

impl OrderCode {
    /// Code whose ones are exactly `ones`.
    pub fn from_bits(ones: impl IntoIterator<Item = (u64, u64)>) -> Self {
        OrderCode {
            ones: ones.into_iter().collect(),
        }
    }

    /// Code with support `elements`, ordered by position in `order`
    /// (earlier is smaller). Elements missing from `order` only get their
    /// diagonal bit, which the validator reports.
    pub fn from_listing(elements: &[u64], order: &[u64]) -> Self {
        let mut ones: BTreeSet<(u64, u64)> = elements.iter().map(|&m| (m, m)).collect();
        for (i, &m) in order.iter().enumerate() {
            for &n in &order[i..] {
                ones.insert((m, n));
            }
        }
        OrderCode { ones }
    }

    /// `0 <* 1 <* ... <* k-1`.
    pub fn natural(k: u64) -> Self {
        let order: Vec<u64> = (0..k).collect();
        OrderCode::from_listing(&order, &order)
    }

    pub fn bit(&self, m: u64, n: u64) -> bool {
        self.ones.contains(&(m, n))
    }

    pub fn ones(&self) -> impl Iterator<Item = &(u64, u64)> {
        self.ones.iter()
    }

    pub fn support(&self) -> BTreeSet<u64> {
        self.ones.iter().filter(|(m, n)| m == n).map(|&(m, _)| m).collect()
    }

    /// `m ≤* n`.
    pub fn le(&self, m: u64, n: u64) -> bool {
        self.bit(m, m) && self.bit(n, n) && self.bit(m, n)
    }

    /// `m <* n`.
    pub fn lt(&self, m: u64, n: u64) -> bool {
        m != n && self.le(m, n)
    }

    /// Problems preventing the code from lying in LO*; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let d: Vec<u64> = self.support().into_iter().collect();
        let mut out = Vec::new();
        if !d.contains(&0) {
            out.push("0 is not in the support".to_string());
        }
        for &m in &d {
            if d.contains(&0) && !self.le(0, m) {
                out.push(format!("0 is not below {m}"));
            }
            for &n in &d {
                if m < n {
                    match (self.le(m, n), self.le(n, m)) {
                        (true, true) => out.push(format!("{m} and {n} are mutually below each other")),
                        (false, false) => out.push(format!("{m} and {n} are incomparable")),
                        _ => {}
                    }
                }
                for &p in &d {
                    if self.le(m, n) && self.le(n, p) && !self.le(m, p) {
                        out.push(format!("transitivity fails for {m} <= {n} <= {p}"));
                    }
                }
            }
        }
        out
    }

    pub fn validate_lo_star(&self) -> bool {
        self.problems().is_empty()
    }

    fn require_valid(&self) -> Result<(), CertError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CertError::InvalidCode(problems))
        }
    }

    /// Order type `|x|*`; finite support gives `|D|`.
    pub fn order_type(&self) -> Result<Ordinal, CertError> {
        self.require_valid()?;
        Ok(Ordinal::from(self.support().len() as u64))
    }

    /// Support listed in increasing `≤*` order.
    pub fn elements_in_order(&self) -> Result<Vec<u64>, CertError> {
        self.require_valid()?;
        let d = self.support();
        let mut listed: Vec<(usize, u64)> = d
            .iter()
            .map(|&m| (d.iter().filter(|&&n| self.lt(n, m)).count(), m))
            .collect();
        listed.sort();
        Ok(listed.into_iter().map(|(_, m)| m).collect())
    }

    /// Adds the least natural outside the support as a new maximum.
    pub fn successor_code(&self) -> Result<OrderCode, CertError> {
        self.require_valid()?;
        let d = self.support();
        let fresh = (0..).find(|k| !d.contains(k)).expect("support is finite");
        let mut ones = self.ones.clone();
        ones.insert((fresh, fresh));
        for m in d {
            ones.insert((m, fresh));
        }
        Ok(OrderCode { ones })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    R,
    S,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::R => f.write_str("R"),
            Mode::S => f.write_str("S"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankCertificate<E> {
    pub order: OrderCode,
    pub target: E,
    pub assignment: BTreeMap<u64, E>,
    pub mode: Mode,
}

/// Result of checking a certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub accepted: bool,
    /// First failed condition when rejected.
    pub reason: Option<String>,
}

impl Verification {
    fn accept() -> Self {
        Verification {
            accepted: true,
            reason: None,
        }
    }

    fn reject(reason: String) -> Self {
        Verification {
            accepted: false,
            reason: Some(reason),
        }
    }
}

fn require_expansion<D: SetDomain, O: MonotoneOperator<D> + ?Sized>(op: &O) -> Result<(), CertError> {
    if op.kind() == OperatorKind::Expansion {
        Ok(())
    } else {
        Err(CertError::NotExpansion(op.name().to_string()))
    }
}

fn check_assignment<E>(cert: &RankCertificate<E>) -> Result<Vec<u64>, CertError> {
    let listed = cert.order.elements_in_order()?;
    if let Some(&m) = listed.iter().find(|m| !cert.assignment.contains_key(m)) {
        return Err(CertError::MissingAssignment(m));
    }
    if let Some(&m) = cert.assignment.keys().find(|m| !listed.contains(m)) {
        return Err(CertError::ExtraAssignment(m));
    }
    Ok(listed)
}

/// `E(h(n))` for every support element.
fn images<D, O>(domain: &D, op: &O, cert: &RankCertificate<D::Elem>) -> Result<BTreeMap<u64, D::Elem>, CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    cert.assignment
        .iter()
        .map(|(&m, h)| {
            op.apply(domain, h)
                .map(|e| (m, e))
                .map_err(|source| CertError::Engine(EngineError::Domain {
                    stage: Ordinal::from(m),
                    source,
                }))
        })
        .collect()
}

fn verify_chain<D, O>(
    domain: &D,
    op: &O,
    cert: &RankCertificate<D::Elem>,
) -> Result<(Verification, BTreeMap<u64, D::Elem>), CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    require_expansion::<D, O>(op)?;
    let listed = check_assignment(cert)?;
    let imgs = images(domain, op, cert)?;
    if !domain.equal(&cert.assignment[&0], &cert.target) {
        return Ok((Verification::reject("h(0) differs from the target".into()), imgs));
    }
    let top = domain.top();
    if let Some(m) = listed.iter().find(|m| domain.equal(&cert.assignment[m], &top)) {
        return Ok((Verification::reject(format!("h({m}) is the whole space")), imgs));
    }
    for (i, m) in listed.iter().enumerate().skip(1) {
        let below: Vec<D::Elem> = listed[..i].iter().map(|n| imgs[n].clone()).collect();
        let join = domain.finite_join(&below);
        if !domain.leq(&join, &cert.assignment[m]) {
            return Ok((
                Verification::reject(format!("closure of the images below {m} is not inside h({m})")),
                imgs,
            ));
        }
    }
    Ok((Verification::accept(), imgs))
}

/// Checks the R conditions for a given witness chain.
pub fn verify_r<D, O>(domain: &D, op: &O, cert: &RankCertificate<D::Elem>) -> Result<Verification, CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    verify_chain(domain, op, cert).map(|(v, _)| v)
}

/// Checks the R conditions plus `closure(⋃_m E(h(m))) = X`.
pub fn verify_s<D, O>(domain: &D, op: &O, cert: &RankCertificate<D::Elem>) -> Result<Verification, CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    let (v, imgs) = verify_chain(domain, op, cert)?;
    if !v.accepted {
        return Ok(v);
    }
    let all: Vec<D::Elem> = imgs.into_values().collect();
    if !domain.equal(&domain.finite_join(&all), &domain.top()) {
        return Ok(Verification::reject("images do not close up to the whole space".into()));
    }
    Ok(v)
}

/// Verifies according to the certificate's own mode.
pub fn verify<D, O>(domain: &D, op: &O, cert: &RankCertificate<D::Elem>) -> Result<Verification, CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    match cert.mode {
        Mode::R => verify_r(domain, op, cert),
        Mode::S => verify_s(domain, op, cert),
    }
}

/// Certificate of order type `k` with `h(i) = E^i(A)` along `0 <* 1 <* ...`.
///
/// Mode S is chosen when `k` equals the exact rank and the images join to
/// the whole space; otherwise mode R.
pub fn make_certificate<D, O>(
    domain: &D,
    op: &O,
    start: &D::Elem,
    k: u64,
) -> Result<RankCertificate<D::Elem>, CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    require_expansion::<D, O>(op)?;
    if k == 0 {
        return Err(CertError::ZeroLength);
    }
    let trace = iterate_steps(domain, op, start, k as usize + 1)?;
    let rank = trace.rank.clone().expect("step traces always carry a rank");
    if trace.is_exact() && rank < Ordinal::from(k) {
        return Err(CertError::Refused {
            stage: rank.clone(),
            reason: format!("stages {rank} and {} already agree, so the rank is {rank} < {k}", rank.succ()),
        });
    }
    let order = OrderCode::natural(k);
    let assignment: BTreeMap<u64, D::Elem> = (0..k).map(|i| (i, trace.stages[i as usize].value.clone())).collect();
    let mut cert = RankCertificate {
        order,
        target: start.clone(),
        assignment,
        mode: Mode::R,
    };
    if trace.is_exact() && rank == Ordinal::from(k) && verify_s(domain, op, &cert)?.accepted {
        cert.mode = Mode::S;
    }
    Ok(cert)
}

/// The order-preserving map `f : D → |A|_E` read off an accepted
/// certificate: `f(0) = 0` and `f(m)` is the least `α < |A|_E` such that
/// the closure of `⋃_{n <* m} E(h(n))` does not contain `E^{α+1}(A)`.
///
/// `trace` must be an exact trace of `op` from the certificate target.
pub fn extract_embedding<D, O>(
    domain: &D,
    op: &O,
    cert: &RankCertificate<D::Elem>,
    trace: &IterationTrace<D::Elem>,
) -> Result<BTreeMap<u64, Ordinal>, CertError>
where
    D: SetDomain,
    O: MonotoneOperator<D> + ?Sized,
{
    require_expansion::<D, O>(op)?;
    if !trace.is_exact() {
        return Err(CertError::Unsupported("trace is only a lower bound".into()));
    }
    let rank = trace.rank.clone().expect("exact trace has a rank");
    let listed = check_assignment(cert)?;
    let imgs = images(domain, op, cert)?;
    let mut f = BTreeMap::new();
    f.insert(0u64, Ordinal::zero());
    let mut previous = Ordinal::zero();
    for (i, &m) in listed.iter().enumerate().skip(1) {
        let below: Vec<D::Elem> = listed[..i].iter().map(|n| imgs[n].clone()).collect();
        let join = domain.finite_join(&below);
        let alpha = trace
            .stages
            .iter()
            .take_while(|s| s.index < rank)
            .map(|s| &s.index)
            .find(|alpha| {
                trace
                    .stage(&alpha.succ())
                    .is_some_and(|next| !domain.leq(next, &join))
            })
            .cloned()
            .ok_or_else(|| {
                CertError::Unsupported(format!("no stage below the rank escapes the images below {m}"))
            })?;
        if i > 1 && alpha <= previous {
            return Err(CertError::NotOrderPreserving(m));
        }
        previous = alpha.clone();
        f.insert(m, alpha);
    }
    Ok(f)
}
