//! Ordinals below epsilon-zero in Cantor normal form.
//!
//! An [`Ordinal`] is a list of `(exponent, coefficient)` terms with strictly
//! decreasing exponents and positive coefficients; the empty list is zero.
//! Exponents are themselves ordinals, so any finite nesting is representable.
//!
//! Textual form:
//!
//! ```text
//! expr     := '0' | term ('+' term)*
//! term     := 'w' ('^' exponent)? ('*' nat)? | nat
//! exponent := 'w' | nat | '0' | '(' expr ')'
//! nat      := [1-9][0-9]*
//! ```
//!
//! Compound exponents must be parenthesized (`w^(w+1)`); otherwise `w^2+1`
//! would be ambiguous. Output is canonical: exponent `1` and coefficient `1`
//! are omitted, and finite terms are printed as plain naturals.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Nesting limit for parenthesized exponents when parsing.
const MAX_PARSE_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ordinal syntax error at byte {position}: {message}")]
pub struct ParseOrdinalError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("least exponent of 0 is undefined")]
pub struct ZeroOrdinalError;

/// One Cantor-normal-form term `w^exponent * coefficient`.
// Field order matters: the derived `Ord` compares exponent first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub exponent: Ordinal,
    pub coefficient: u64,
}

/// An ordinal below epsilon-zero.
///
/// The derived ordering is lexicographic over terms, which is exactly the
/// ordinal order for normal forms: the first differing term decides, and a
/// proper prefix is smaller.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ordinal {
    terms: Vec<Term>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::from(1u64)
    }

    /// The first infinite ordinal.
    pub fn omega() -> Self {
        Ordinal::omega_pow(Ordinal::one())
    }

    /// `w^exponent`.
    pub fn omega_pow(exponent: Ordinal) -> Self {
        Ordinal {
            terms: vec![Term {
                exponent,
                coefficient: 1,
            }],
        }
    }

    /// Builds an ordinal from terms, normalizing order and merging as ordinal
    /// addition would (terms are summed left to right).
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Ordinal, u64)>,
    {
        terms
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .fold(Ordinal::zero(), |acc, (e, c)| {
                acc.add(&Ordinal {
                    terms: vec![Term {
                        exponent: e,
                        coefficient: c,
                    }],
                })
            })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(n) when the ordinal is a natural number.
    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [t] if t.exponent.is_zero() => Some(t.coefficient),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_finite().is_some()
    }

    pub fn is_successor(&self) -> bool {
        self.terms
            .last()
            .is_some_and(|t| t.exponent.is_zero())
    }

    /// True iff nonzero with least exponent > 0.
    pub fn is_limit(&self) -> bool {
        self.terms.last().is_some_and(|t| !t.exponent.is_zero())
    }

    /// Exponent of the leading term; zero for the ordinal zero.
    pub fn leading_exponent(&self) -> Ordinal {
        self.terms
            .first()
            .map(|t| t.exponent.clone())
            .unwrap_or_default()
    }

    /// Coefficient of the leading term; zero for the ordinal zero.
    pub fn leading_coefficient(&self) -> u64 {
        self.terms.first().map_or(0, |t| t.coefficient)
    }

    /// Exponent of the last term, i.e. the largest `e` with `w^e` dividing
    /// the ordinal on the right.
    pub fn least_exponent(&self) -> Result<Ordinal, ZeroOrdinalError> {
        self.terms
            .last()
            .map(|t| t.exponent.clone())
            .ok_or(ZeroOrdinalError)
    }

    /// Coefficient of the `w^exponent` term, zero when absent.
    pub fn coefficient_of(&self, exponent: &Ordinal) -> u64 {
        self.terms
            .iter()
            .find(|t| &t.exponent == exponent)
            .map_or(0, |t| t.coefficient)
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::one())
    }

    /// The predecessor of a successor ordinal.
    pub fn pred(&self) -> Option<Ordinal> {
        if !self.is_successor() {
            return None;
        }
        let mut terms = self.terms.clone();
        let last = terms.last_mut().expect("successor has a term");
        if last.coefficient == 1 {
            terms.pop();
        } else {
            last.coefficient -= 1;
        }
        Some(Ordinal { terms })
    }

    /// Ordinal sum `self + other`.
    ///
    /// Terms of `self` below the leading exponent of `other` are absorbed; a
    /// term with equal exponent merges coefficients.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(lead) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .take_while(|t| t.exponent >= lead.exponent)
            .cloned()
            .collect();
        let mut rest = other.terms.iter();
        if let Some(last) = terms.last_mut() {
            if last.exponent == lead.exponent {
                last.coefficient = last
                    .coefficient
                    .checked_add(lead.coefficient)
                    .expect("ordinal coefficient overflow");
                rest.next();
            }
        }
        terms.extend(rest.cloned());
        Ordinal { terms }
    }

    /// `self * w`: zero stays zero, otherwise `w^(leading_exponent + 1)`.
    pub fn mul_omega(&self) -> Ordinal {
        if self.is_zero() {
            Ordinal::zero()
        } else {
            Ordinal::omega_pow(self.leading_exponent().succ())
        }
    }

    /// The unique `d` with `self + d = other`, when `self <= other`.
    pub fn left_sub(&self, other: &Ordinal) -> Option<Ordinal> {
        if self > other {
            return None;
        }
        for (i, (a, b)) in self.terms.iter().zip(&other.terms).enumerate() {
            if a == b {
                continue;
            }
            let mut terms = Vec::with_capacity(other.terms.len() - i);
            if a.exponent == b.exponent {
                terms.push(Term {
                    exponent: b.exponent.clone(),
                    coefficient: b.coefficient - a.coefficient,
                });
                terms.extend_from_slice(&other.terms[i + 1..]);
            } else {
                terms.extend_from_slice(&other.terms[i..]);
            }
            return Some(Ordinal { terms });
        }
        // self is a prefix of other
        Some(Ordinal {
            terms: other.terms[self.terms.len()..].to_vec(),
        })
    }

    /// Nesting depth: 0 for zero, 1 for naturals, 2 for polynomials in w, ...
    pub fn depth(&self) -> usize {
        self.terms
            .iter()
            .map(|t| 1 + t.exponent.depth())
            .max()
            .unwrap_or(0)
    }

    fn check_invariants(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient >= 1 && t.exponent.check_invariants())
            && self.terms.windows(2).all(|w| w[0].exponent > w[1].exponent)
    }

    /// True iff the normal-form invariants hold recursively.
    pub fn is_canonical(&self) -> bool {
        self.check_invariants()
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal {
                terms: vec![Term {
                    exponent: Ordinal::zero(),
                    coefficient: n,
                }],
            }
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if t.exponent.is_zero() {
                write!(f, "{}", t.coefficient)?;
                continue;
            }
            f.write_str("w")?;
            match t.exponent.as_finite() {
                Some(1) => {}
                Some(n) => write!(f, "^{n}")?,
                None if t.exponent == Ordinal::omega() => f.write_str("^w")?,
                None => write!(f, "^({})", t.exponent)?,
            }
            if t.coefficient != 1 {
                write!(f, "*{}", t.coefficient)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = ParseOrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ordinal(s)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses an ordinal expression, normalizing non-canonical input such as
/// `w+w` or `1+w`.
pub fn parse_ordinal(text: &str) -> Result<Ordinal, ParseOrdinalError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let value = p.expr(0)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(value)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseOrdinalError {
        ParseOrdinalError {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self, depth: usize) -> Result<Ordinal, ParseOrdinalError> {
        if depth > MAX_PARSE_DEPTH {
            return Err(self.error("exponent nesting too deep"));
        }
        if self.peek() == Some(b'0') {
            self.pos += 1;
            return Ok(Ordinal::zero());
        }
        let mut acc = self.term(depth)?;
        while self.eat(b'+') {
            let t = self.term(depth)?;
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    fn term(&mut self, depth: usize) -> Result<Ordinal, ParseOrdinalError> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let exponent = if self.eat(b'^') {
                    self.exponent(depth)?
                } else {
                    Ordinal::one()
                };
                let coefficient = if self.eat(b'*') { self.nat()? } else { 1 };
                Ok(Ordinal::from_terms([(exponent, coefficient)]))
            }
            Some(b'1'..=b'9') => Ok(Ordinal::from(self.nat()?)),
            Some(b'0') => Err(self.error("'0' is only allowed as a whole expression")),
            Some(_) => Err(self.error("expected 'w' or a natural number")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn exponent(&mut self, depth: usize) -> Result<Ordinal, ParseOrdinalError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr(depth + 1)?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(b'w') => {
                self.pos += 1;
                Ok(Ordinal::omega())
            }
            Some(b'0') => {
                self.pos += 1;
                Ok(Ordinal::zero())
            }
            Some(b'1'..=b'9') => Ok(Ordinal::from(self.nat()?)),
            _ => Err(self.error("expected exponent")),
        }
    }

    fn nat(&mut self) -> Result<u64, ParseOrdinalError> {
        self.skip_ws();
        let start = self.pos;
        if !matches!(self.src.get(self.pos), Some(b'1'..=b'9')) {
            return Err(self.error("expected a natural number without leading zeros"));
        }
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        digits.parse().map_err(|_| ParseOrdinalError {
            position: start,
            message: "natural number too large".into(),
        })
    }
}

/// Three-way comparison, exposed for callers that want an explicit function.
pub fn cmp(a: &Ordinal, b: &Ordinal) -> Ordering {
    a.cmp(b)
}
