//! Reduction of a higher-order multilinear polynomial to quadratic form.
//!
//! Each step picks the variable pair shared by the most monomials of degree
//! three or more (ties go to the smallest pair), replaces the product with a
//! fresh auxiliary `y`, and adds `m * (ab - 2ay - 2by + 3y)`. The gadget is 0
//! when `y = ab` and at least `m` otherwise.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::QuboError;
use crate::poly::{Assignment, Monomial, Poly, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxRecord {
    pub id: VarId,
    pub pair: (VarId, VarId),
}

/// Quadratic form over `n_original` switch variables followed by auxiliaries.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboModel {
    pub n_original: usize,
    pub n_vars: usize,
    pub offset: f64,
    pub linear: BTreeMap<VarId, f64>,
    pub quadratic: BTreeMap<(VarId, VarId), f64>,
    pub aux: Vec<AuxRecord>,
    pub reduction_weight: f64,
}

/// `2 * sum |coeff| + 1`, larger than any gain from breaking a substitution.
pub fn default_reduction_weight(p: &Poly) -> f64 {
    2.0 * p.abs_coeff_sum() + 1.0
}

fn most_shared_pair(terms: &BTreeMap<Monomial, f64>) -> Option<(VarId, VarId)> {
    let mut counts: BTreeMap<(VarId, VarId), usize> = BTreeMap::new();
    for m in terms.keys().filter(|m| m.degree() >= 3) {
        let vars = m.vars();
        for (x, &a) in vars.iter().enumerate() {
            for &b in &vars[x + 1..] {
                *counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    // first maximum in ascending pair order wins ties
    let mut best: Option<((VarId, VarId), usize)> = None;
    for (pair, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((pair, count));
        }
    }
    best.map(|(pair, _)| pair)
}

/// Quadratizes `p`, whose variables must all be below `n_original`.
pub fn quadratize(p: &Poly, n_original: usize, m: f64) -> Result<QuboModel, QuboError> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(QuboError::ReductionWeight(m));
    }
    assert!(
        p.var_span() <= n_original,
        "polynomial mentions variables beyond the original range"
    );
    let mut terms: BTreeMap<Monomial, f64> = p.terms().map(|(m, c)| (m.clone(), c)).collect();
    let mut aux = Vec::new();
    let mut next = n_original;

    while let Some((a, b)) = most_shared_pair(&terms) {
        let y = VarId(next);
        next += 1;
        aux.push(AuxRecord {
            id: y,
            pair: (a, b),
        });
        let mut rewritten = Poly::zero();
        for (mono, c) in terms {
            if mono.degree() >= 3 && mono.contains(a) && mono.contains(b) {
                let vars = mono.vars().iter().copied().filter(|&v| v != a && v != b);
                rewritten.add_term(Monomial::new(vars.chain([y])), c);
            } else {
                rewritten.add_term(mono, c);
            }
        }
        terms = rewritten.terms().map(|(m, c)| (m.clone(), c)).collect();
    }

    let mut form = Poly::from_terms(terms);
    for r in &aux {
        let (a, b, y) = (r.pair.0, r.pair.1, r.id);
        form.add_term(Monomial::new([a, b]), m);
        form.add_term(Monomial::new([a, y]), -2.0 * m);
        form.add_term(Monomial::new([b, y]), -2.0 * m);
        form.add_term(Monomial::new([y]), 3.0 * m);
    }

    let mut model = QuboModel {
        n_original,
        n_vars: next,
        offset: 0.0,
        linear: BTreeMap::new(),
        quadratic: BTreeMap::new(),
        aux,
        reduction_weight: m,
    };
    for (mono, c) in form.terms() {
        match *mono.vars() {
            [] => model.offset = c,
            [v] => {
                model.linear.insert(v, c);
            }
            [u, v] => {
                model.quadratic.insert((u, v), c);
            }
            _ => unreachable!("substitution leaves no monomial above degree 2"),
        }
    }
    Ok(model)
}

impl QuboModel {
    pub fn n_aux(&self) -> usize {
        self.aux.len()
    }

    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::constant(self.offset);
        for (&v, &c) in &self.linear {
            p.add_term(Monomial::new([v]), c);
        }
        for (&(u, v), &c) in &self.quadratic {
            p.add_term(Monomial::new([u, v]), c);
        }
        p
    }

    pub fn energy(&self, full: &Assignment) -> f64 {
        self.to_poly()
            .eval(full)
            .expect("assignment covers every model variable")
    }

    /// Extends an original assignment with `y = a * b` in creation order.
    pub fn lift_assignment(&self, original: &Assignment) -> Assignment {
        let mut bits: Vec<bool> = original.bits()[..self.n_original].to_vec();
        bits.resize(self.n_vars, false);
        for r in &self.aux {
            bits[r.id.0] = bits[r.pair.0 .0] && bits[r.pair.1 .0];
        }
        Assignment::from_bools(bits)
    }

    /// Drops auxiliaries; the flag reports whether every `y` equalled its product.
    pub fn project_assignment(&self, full: &Assignment) -> (Assignment, bool) {
        let bits = full.bits();
        let consistent = self
            .aux
            .iter()
            .all(|r| bits[r.id.0] == (bits[r.pair.0 .0] && bits[r.pair.1 .0]));
        (full.truncated(self.n_original), consistent)
    }

    pub fn sidecar(&self) -> AuxSidecar {
        AuxSidecar {
            aux: self
                .aux
                .iter()
                .map(|r| AuxEntry {
                    id: r.id.0,
                    pair: [r.pair.0 .0, r.pair.1 .0],
                })
                .collect(),
            reduction_weight: self.reduction_weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxEntry {
    pub id: usize,
    pub pair: [usize; 2],
}

/// Auxiliary substitution records written next to the `.qubo` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxSidecar {
    pub aux: Vec<AuxEntry>,
    pub reduction_weight: f64,
}

/// Text form: two comment lines, the `p qubo` header, diagonal entries by
/// ascending index, then off-diagonal entries with `i < j` in lexicographic order.
pub fn export_qubo(model: &QuboModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "c offset {}", model.offset);
    let _ = writeln!(out, "c vars {} aux {}", model.n_original, model.n_aux());
    let _ = writeln!(
        out,
        "p qubo 0 {} {} {}",
        model.n_vars,
        model.linear.len(),
        model.quadratic.len()
    );
    for (v, c) in &model.linear {
        let _ = writeln!(out, "{} {} {}", v.0, v.0, c);
    }
    for ((u, v), c) in &model.quadratic {
        let _ = writeln!(out, "{} {} {}", u.0, v.0, c);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> QuboError {
    QuboError::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, QuboError> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

/// Inverse of [`export_qubo`] plus the sidecar.
pub fn parse_qubo(text: &str, sidecar: &AuxSidecar) -> Result<QuboModel, QuboError> {
    let mut offset = None;
    let mut counts = None;
    let mut header = None;
    let mut linear = BTreeMap::new();
    let mut quadratic = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let mut tok = raw.split_whitespace();
        match tok.next() {
            None => continue,
            Some("c") => match tok.next() {
                Some("offset") => offset = Some(field::<f64>(tok.next(), ln, "offset")?),
                Some("vars") => {
                    let n: usize = field(tok.next(), ln, "variable count")?;
                    if tok.next() != Some("aux") {
                        return Err(parse_err(ln, "expected `aux`"));
                    }
                    let a: usize = field(tok.next(), ln, "aux count")?;
                    counts = Some((n, a));
                }
                _ => {}
            },
            Some("p") => {
                if tok.next() != Some("qubo") || tok.next() != Some("0") {
                    return Err(parse_err(ln, "expected `p qubo 0`"));
                }
                let n: usize = field(tok.next(), ln, "maxDiagonals")?;
                let d: usize = field(tok.next(), ln, "nDiagonals")?;
                let e: usize = field(tok.next(), ln, "nElements")?;
                header = Some((n, d, e));
            }
            Some(first) => {
                if header.is_none() {
                    return Err(parse_err(ln, "entry before `p qubo` header"));
                }
                let i: usize = field(Some(first), ln, "row index")?;
                let j: usize = field(tok.next(), ln, "column index")?;
                let w: f64 = field(tok.next(), ln, "weight")?;
                if i == j {
                    linear.insert(VarId(i), w);
                } else if i < j {
                    quadratic.insert((VarId(i), VarId(j)), w);
                } else {
                    return Err(parse_err(ln, "off-diagonal entry must have i < j"));
                }
            }
        }
    }
    let (n_vars, n_diag, n_elem) = header.ok_or_else(|| parse_err(0, "missing `p qubo` header"))?;
    let (n_original, n_aux) = counts.ok_or_else(|| parse_err(0, "missing `c vars` line"))?;
    if linear.len() != n_diag || quadratic.len() != n_elem {
        return Err(parse_err(0, "entry counts disagree with header"));
    }
    if n_original + n_aux != n_vars || sidecar.aux.len() != n_aux {
        return Err(parse_err(
            0,
            "variable counts disagree with header or sidecar",
        ));
    }
    Ok(QuboModel {
        n_original,
        n_vars,
        offset: offset.unwrap_or(0.0),
        linear,
        quadratic,
        aux: sidecar
            .aux
            .iter()
            .map(|e| AuxRecord {
                id: VarId(e.id),
                pair: (VarId(e.pair[0]), VarId(e.pair[1])),
            })
            .collect(),
        reduction_weight: sidecar.reduction_weight,
    })
}
