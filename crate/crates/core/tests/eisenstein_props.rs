mod common;

use common::small_rational;
use padyn::arith::int;
use padyn::eisenstein::{
    coefficients_by_hensel, coefficients_by_recursion, coefficients_up_to, denominator_support, AlgebraicPoly, AlgebraicSeriesSpec,
};
use padyn::{MultiIndex, QSeries, Rational};
use proptest::prelude::*;

/// `F(x, X) = Σ a_ij x^i X^j` with `F(0, 1) = 0` and `F_X(0, 1) ≠ 0`.
fn etale_poly() -> impl Strategy<Value = AlgebraicPoly> {
    proptest::collection::vec(proptest::collection::vec(small_rational(), 3), 3)
        .prop_map(|mut a| {
            let s: Rational = a[0][1..].iter().sum();
            a[0][0] = -s;
            a
        })
        .prop_filter("unit derivative", |a| &a[0][1] + &a[0][2] * int(2) != int(0))
        .prop_map(|a| {
            let terms: Vec<(Vec<u32>, Rational)> =
                (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (vec![i as u32, j as u32], a[i][j].clone())).collect();
            AlgebraicPoly::new(1, &terms).unwrap()
        })
}

fn seed_one() -> QSeries {
    QSeries::q_constant(1, 0, int(1))
}

/// `(X - u)(X - v)` with `u - v` of exact order `s`; the root `u` is the oracle.
fn split_poly() -> impl Strategy<Value = (AlgebraicPoly, QSeries, u32)> {
    (1u32..=2, proptest::collection::vec(small_rational(), 5), proptest::collection::vec(small_rational(), 5), 1i64..=4).prop_map(
        |(s, u, w, lead)| {
            let u: Vec<Rational> = u;
            // v = u - lead x^s - x^{s+1} w(x)
            let mut v = u.clone();
            v[s as usize] -= int(lead);
            for (k, c) in w.iter().enumerate() {
                if s as usize + 1 + k < v.len() {
                    v[s as usize + 1 + k] -= c;
                }
            }
            // (X - u)(X - v) = X^2 - (u + v) X + u v
            let mut terms: Vec<(Vec<u32>, Rational)> = vec![(vec![0, 2], int(1))];
            for i in 0..5 {
                terms.push((vec![i as u32, 1], -(&u[i] + &v[i])));
                for j in 0..5 {
                    terms.push((vec![(i + j) as u32, 0], &u[i] * &v[j]));
                }
            }
            let poly = AlgebraicPoly::new(1, &terms).unwrap();
            let mut root = QSeries::q_zero(1, 4);
            for (i, c) in u.iter().enumerate() {
                root.set_coeff(MultiIndex::new(vec![i as u32]), c.clone());
            }
            (poly, root, s)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn etale_root(poly in etale_poly()) {
        let spec = AlgebraicSeriesSpec::new(poly.clone(), seed_one()).unwrap();
        prop_assert_eq!(spec.s, 0);
        let d = 10;
        let phi = coefficients_up_to(&spec, d).unwrap();
        prop_assert!(poly.eval_series(&phi, d).is_zero());
        prop_assert_eq!(coefficients_by_recursion(&spec, d).unwrap(), coefficients_by_hensel(&spec, d).unwrap());
        let longer = coefficients_up_to(&spec, d + 4).unwrap();
        prop_assert_eq!(longer.truncate(d), phi.clone());
        let (small, big) = (denominator_support(&phi), denominator_support(&longer));
        prop_assert!(small.primes.is_subset(&big.primes));
    }

    #[test]
    fn ramified_root((poly, root, s) in split_poly()) {
        let seed = root.truncate(s);
        let spec = AlgebraicSeriesSpec::new(poly.clone(), seed).unwrap();
        prop_assert_eq!(spec.s, s);
        let d = 4;
        let phi = coefficients_up_to(&spec, d).unwrap();
        prop_assert_eq!(&phi, &root);
        prop_assert!(poly.eval_series(&phi, d + s).is_zero());
    }
}
