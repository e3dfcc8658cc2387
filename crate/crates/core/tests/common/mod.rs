#![allow(dead_code)]

pub mod oracle;

use gridswitch_core::{Assignment, Poly};

pub fn all_assignments(n: usize) -> impl Iterator<Item = Assignment> {
    (0..1u64 << n).map(move |i| Assignment::from_index(i, n))
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Same monomial set, coefficients within `rel`.
pub fn assert_poly_close(actual: &Poly, expected: &Poly, rel: f64) {
    let a: Vec<_> = actual.terms().map(|(m, _)| m.clone()).collect();
    let e: Vec<_> = expected.terms().map(|(m, _)| m.clone()).collect();
    assert_eq!(
        a, e,
        "monomial sets differ\nactual:   {actual}\nexpected: {expected}"
    );
    for (m, c) in expected.terms() {
        let got = actual.coeff(m);
        assert!(rel_close(got, c, rel), "coefficient of {m:?}: {got} vs {c}");
    }
}
