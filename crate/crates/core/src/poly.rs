//! Multilinear pseudo-Boolean polynomials.
//!
//! Every variable is binary, so `q * q = q` is applied whenever monomials are
//! merged. Terms live in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! degree first and then lexicographic on variable ids. Iteration order is
//! therefore the canonical order used for evaluation and export.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::PolyError;

/// Index of a decision variable in the canonical variable order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// A product of distinct binary variables. The empty product is the constant 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<VarId>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    /// Builds a monomial from arbitrary ids; duplicates collapse (`q*q = q`).
    pub fn new(vars: impl IntoIterator<Item = VarId>) -> Self {
        let mut v: Vec<VarId> = vars.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Monomial(v)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Variable-set union of two sorted monomials.
    pub fn union(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    fn is_satisfied(&self, a: &Assignment) -> Result<bool, PolyError> {
        for &v in &self.0 {
            if !a.get(v).ok_or(PolyError::MissingVariable(v))? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A 0/1 valuation of variables `0..len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    /// Bit `k` of the string is variable `k`.
    pub fn from_bit_string(s: &str) -> Result<Self, PolyError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(PolyError::BadBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Assignment)
    }

    /// Variable `k` is bit `n - 1 - k` of `index`, so counting up walks the
    /// assignments in lexicographic bit-string order.
    pub fn from_index(index: u64, n: usize) -> Self {
        Assignment((0..n).map(|k| (index >> (n - 1 - k)) & 1 == 1).collect())
    }

    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: VarId) -> Option<bool> {
        self.0.get(v.0).copied()
    }

    pub fn set(&mut self, v: VarId, value: bool) {
        self.0[v.0] = value;
    }

    pub fn flip(&mut self, v: VarId) {
        self.0[v.0] = !self.0[v.0];
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn truncated(&self, n: usize) -> Assignment {
        Assignment(self.0[..n.min(self.0.len())].to_vec())
    }
}

/// Multilinear polynomial with real coefficients in canonical form.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: VarId) -> Self {
        Poly::monomial(Monomial::new([v]), 1.0)
    }

    pub fn monomial(m: Monomial, coeff: f64) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, coeff);
        p
    }

    /// Adds `coeff * m`, dropping the entry if it cancels to exactly zero.
    pub fn add_term(&mut self, m: Monomial, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order (constant first when present).
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Monomial::one())
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms
            .keys()
            .flat_map(|m| m.vars().iter().copied())
            .collect()
    }

    /// One more than the largest variable id mentioned, 0 for constants.
    pub fn var_span(&self) -> usize {
        self.vars().iter().next_back().map_or(0, |v| v.0 + 1)
    }

    pub fn scale(&self, k: f64) -> Poly {
        if k == 0.0 {
            return Poly::zero();
        }
        Poly::from_terms(self.terms.iter().map(|(m, &c)| (m.clone(), c * k)))
    }

    /// `1 - p`.
    pub fn complement(&self) -> Poly {
        Poly::constant(1.0) - self
    }

    /// `p^n` by binary exponentiation; `p^0 = 1`.
    pub fn pow(&self, mut n: u32) -> Poly {
        let mut result = Poly::constant(1.0);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Sums coefficients of satisfied monomials in canonical order.
    pub fn eval(&self, a: &Assignment) -> Result<f64, PolyError> {
        let mut acc = 0.0;
        for (m, &c) in &self.terms {
            if m.is_satisfied(a)? {
                acc += c;
            }
        }
        Ok(acc)
    }

    /// Fixes a subset of variables and re-canonicalizes.
    pub fn substitute(&self, fixes: &BTreeMap<VarId, bool>) -> Poly {
        let mut out = Poly::zero();
        'terms: for (m, &c) in &self.terms {
            let mut kept = Vec::with_capacity(m.degree());
            for &v in m.vars() {
                match fixes.get(&v) {
                    Some(false) => continue 'terms,
                    Some(true) => {}
                    None => kept.push(v),
                }
            }
            out.add_term(Monomial(kept), c);
        }
        out
    }

    /// Renames variables through `f`; products that collide are merged.
    pub fn map_vars(&self, mut f: impl FnMut(VarId) -> VarId) -> Poly {
        Poly::from_terms(
            self.terms
                .iter()
                .map(|(m, &c)| (Monomial::new(m.vars().iter().map(|&v| f(v))), c)),
        )
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn to_hubo(&self) -> HuboDocument {
        HuboDocument {
            offset: self.constant_term(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() > 0)
                .map(|(m, &c)| HuboTerm {
                    vars: m.vars().iter().map(|v| v.0).collect(),
                    coeff: c,
                })
                .collect(),
        }
    }

    pub fn from_hubo(doc: &HuboDocument) -> Poly {
        let mut p = Poly::constant(doc.offset);
        for t in &doc.terms {
            p.add_term(Monomial::new(t.vars.iter().map(|&v| VarId(v))), t.coeff);
        }
        p
    }
}

/// Serialized higher-order form: constant offset plus non-constant terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuboDocument {
    pub offset: f64,
    pub terms: Vec<HuboTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuboTerm {
    pub vars: Vec<usize>,
    pub coeff: f64,
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for v in m.vars() {
                write!(f, "*{v}")?;
            }
        }
        Ok(())
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += &rhs;
        self
    }
}

impl Add<&Poly> for Poly {
    type Output = Poly;
    fn add(mut self, rhs: &Poly) -> Poly {
        self += rhs;
        self
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (m, &c) in &rhs.terms {
            self.add_term(m.clone(), c);
        }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub<&Poly> for Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        &self - rhs
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                *acc.entry(ma.union(mb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Poly { terms: acc }
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Mul<&Poly> for Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        &self * rhs
    }
}
