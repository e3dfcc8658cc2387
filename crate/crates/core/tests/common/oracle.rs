//! Test-only oracles, independent of the quadratizer's internals.

use gridswitch_core::{Assignment, Monomial, Poly, QuboModel};

/// Minimum over every auxiliary assignment, by plain enumeration.
pub fn min_over_aux_exhaustive(model: &QuboModel, originals: &Assignment) -> f64 {
    let k = model.n_aux();
    assert!(k <= 20, "too many aux variables for enumeration");
    let p = model.to_poly();
    let mut best = f64::INFINITY;
    for mask in 0..1u64 << k {
        let mut bits = originals.bits()[..model.n_original].to_vec();
        bits.extend((0..k).map(|t| (mask >> t) & 1 == 1));
        best = best.min(p.eval(&Assignment::from_bools(bits)).unwrap());
    }
    best
}

/// Exact minimum over auxiliaries by depth-first branch and bound.
///
/// The quadratic form is split into substitution gadgets (each >= 0) and the
/// remainder `R`. The bound at a node is the sum of decided gadgets plus a
/// lower bound of `R` given only the original bits; it is valid for every
/// completion, so pruning never discards a better leaf.
pub fn min_over_aux(model: &QuboModel, originals: &Assignment) -> f64 {
    let n0 = model.n_original;
    let m = model.reduction_weight;
    let p = model.to_poly();
    let mut gadgets = Poly::zero();
    for r in &model.aux {
        let (a, b, y) = (r.pair.0, r.pair.1, r.id);
        gadgets.add_term(Monomial::new([a, b]), m);
        gadgets.add_term(Monomial::new([a, y]), -2.0 * m);
        gadgets.add_term(Monomial::new([b, y]), -2.0 * m);
        gadgets.add_term(Monomial::new([y]), 3.0 * m);
    }
    let rest = &p - &gadgets;

    let x = originals.bits();
    let mut lower = 0.0;
    for (mono, c) in rest.terms() {
        let killed = mono.vars().iter().any(|v| v.0 < n0 && !x[v.0]);
        if killed {
            continue;
        }
        if mono.vars().iter().all(|v| v.0 < n0) {
            lower += c;
        } else {
            lower += c.min(0.0);
        }
    }

    let mut bits: Vec<bool> = x[..n0].to_vec();
    bits.resize(model.n_vars, false);
    let lifted = model.lift_assignment(originals);
    let best = p.eval(&lifted).unwrap();
    let mut search = Search {
        model,
        p: &p,
        lower,
        slack: 1e-9 * (best.abs() + m),
        bits,
        best,
    };
    search.dfs(0, 0.0);
    search.best
}

struct Search<'a> {
    model: &'a QuboModel,
    p: &'a Poly,
    lower: f64,
    slack: f64,
    bits: Vec<bool>,
    best: f64,
}

impl Search<'_> {
    fn dfs(&mut self, t: usize, decided: f64) {
        if self.lower + decided > self.best + self.slack {
            return;
        }
        if t == self.model.aux.len() {
            let v = self
                .p
                .eval(&Assignment::from_bools(self.bits.clone()))
                .unwrap();
            self.best = self.best.min(v);
            return;
        }
        let r = self.model.aux[t];
        let ab = self.bits[r.pair.0 .0] && self.bits[r.pair.1 .0];
        for y in [ab, !ab] {
            self.bits[r.id.0] = y;
            let gadget = if y == ab {
                0.0
            } else {
                self.model.reduction_weight
            };
            self.dfs(t + 1, decided + gadget);
        }
        self.bits[r.id.0] = false;
    }
}
