mod common;

use std::collections::BTreeSet;

use common::series;
use num_bigint::BigUint;
use padyn::arith::{factorize, int, rat};
use padyn::dynamics::{AnalyticMap, DiophantineParams};
use padyn::linearize::{conjugacy_residual, linearize_newton, linearize_order_by_order};
use padyn::series::in_subspace_ar;
use padyn::{QSeries, Rational, Rationals, SeriesTuple};
use proptest::prelude::*;

/// `Λx + g` with `g` of degree 2..=3 in the ideal `A^(r)`.
fn perturbed(lambda: Vec<Rational>, r: usize, trunc: u32) -> impl Strategy<Value = AnalyticMap> {
    let n = lambda.len();
    proptest::collection::vec(series(n, trunc, 2, 3, 4), n).prop_map(move |tails| {
        let comps = tails
            .into_iter()
            .enumerate()
            .map(|(i, t)| &t.filter_terms(|idx| idx.tail_degree(r) >= 2) + &QSeries::x(n, trunc, i).scale(&lambda[i]))
            .collect();
        AnalyticMap::new(SeriesTuple::new(comps).unwrap(), r).unwrap()
    })
}

/// Nonresonant spectra, with the fixed-locus eigenvalues first.
fn spectrum() -> impl Strategy<Value = (Vec<Rational>, usize)> {
    prop::sample::select(vec![
        (vec![int(2)], 0),
        (vec![rat(1, 3)], 0),
        (vec![int(2), int(3)], 0),
        (vec![int(-3), int(2)], 0),
        (vec![int(1), int(-2)], 1),
        (vec![int(1), int(-2), int(-2)], 1),
        (vec![int(1), int(1), int(3)], 2),
        (vec![int(2), int(3), int(5)], 0),
    ])
}

fn any_map(trunc: u32) -> impl Strategy<Value = AnalyticMap> {
    spectrum().prop_flat_map(move |(l, r)| perturbed(l, r, trunc))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugacy_identity(f in any_map(6)) {
        let res = linearize_order_by_order(&f, 6).unwrap();
        prop_assert_eq!(res.verified_degree, 6);
        prop_assert!(conjugacy_residual(&f, &res.h, &res.lambda).unwrap().is_zero());
        prop_assert_eq!(res.h.compose(&res.h_inverse).unwrap(), SeriesTuple::identity(Rationals, f.dim(), 6));
    }

    #[test]
    fn newton_agrees_with_order_by_order(f in any_map(8)) {
        let a = linearize_order_by_order(&f, 8).unwrap();
        let (b, trace) = linearize_newton(&f, 8, &DiophantineParams::default(), None).unwrap();
        prop_assert_eq!(a.h, b.h);
        let through: Vec<u32> = trace.iterations.iter().map(|i| i.verified_through).collect();
        // quadratic convergence; an exact step can jump further
        prop_assert!(through.first().is_none_or(|&t| t >= 2));
        for w in through.windows(2) {
            prop_assert!(w[1] >= (2 * w[0]).min(8));
        }
        prop_assert!(through.last().is_none_or(|&t| t == 8));
    }

    #[test]
    fn normalization((l, r) in prop::sample::select(vec![(vec![int(1), int(-2), int(-2)], 1usize), (vec![int(1), int(1), int(3)], 2)])
        .prop_flat_map(|(l, r)| (perturbed(l, r, 6), Just(r)))
        .prop_map(|(f, r)| (f, r)))
    {
        let f = l;
        let res = linearize_order_by_order(&f, 6).unwrap();
        let n = f.dim();
        let id = SeriesTuple::identity(Rationals, n, 6);
        let w = res.h.try_sub(&id).unwrap();
        for c in w.components() {
            prop_assert!(in_subspace_ar(c, r));
        }
        // on the locus x_{r+1} = ... = x_n = 0 the conjugacy is the identity
        let tail: Vec<usize> = (r..n).collect();
        for (i, c) in res.h.components().iter().enumerate() {
            let expect = if i < r { QSeries::x(n, 6, i) } else { QSeries::q_zero(n, 6) };
            prop_assert_eq!(c.restrict_zero(&tail), expect);
        }
    }

    #[test]
    fn denominators_come_from_divisors(
        lambda in 2i64..=6,
        coeffs in proptest::collection::vec(-5i64..=5, 3),
    ) {
        let n = 8u32;
        let terms: Vec<(Vec<u32>, Rational)> = std::iter::once((vec![1], int(lambda)))
            .chain(coeffs.iter().enumerate().map(|(k, &c)| (vec![k as u32 + 2], int(c))))
            .collect();
        let f = AnalyticMap::from_polynomials(1, n, &[terms], 0).unwrap();
        let res = linearize_order_by_order(&f, n).unwrap();
        let mut allowed = BTreeSet::new();
        for m in 2..=n {
            let d = BigUint::from((lambda.pow(m) - lambda) as u64);
            allowed.extend(factorize(&d).into_keys());
        }
        let mut seen = BTreeSet::new();
        for (_, c) in res.h.component(0).terms() {
            seen.extend(factorize(c.denom().magnitude()).into_keys());
        }
        prop_assert!(seen.is_subset(&allowed), "{:?} not in {:?}", seen, allowed);
        prop_assert_eq!(&res.denominator_primes, &seen);
    }

    #[test]
    fn square_has_the_same_conjugacy(f in any_map(5)) {
        let a = linearize_order_by_order(&f, 5).unwrap();
        let b = linearize_order_by_order(&f.square(), 5).unwrap();
        prop_assert_eq!(b.lambda, a.lambda.iter().map(|l| l * l).collect::<Vec<_>>());
        prop_assert_eq!(a.h, b.h);
    }
}
