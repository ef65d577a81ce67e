#![allow(dead_code)]

use num_bigint::BigInt;
use padyn::arith::{int, rat};
use padyn::dynamics::AnalyticMap;
use padyn::{MultiIndex, QSeries, Rational};
use proptest::prelude::*;

pub fn map(n: usize, degree: u32, r: usize, polys: &[&[(&[u32], Rational)]]) -> AnalyticMap {
    let polys: Vec<Vec<(Vec<u32>, Rational)>> = polys.iter().map(|c| c.iter().map(|(e, a)| (e.to_vec(), a.clone())).collect()).collect();
    AnalyticMap::from_polynomials(n, degree, &polys, r).expect("valid fixture")
}

/// Named maps with rational, nonresonant linear parts.
pub fn fixture_suite(degree: u32) -> Vec<(&'static str, AnalyticMap)> {
    vec![
        ("2x+x^2", map(1, degree, 0, &[&[(&[1], int(2)), (&[2], int(1))]])),
        ("(x1+x2^2, -2x2)", map(2, degree, 1, &[&[(&[1, 0], int(1)), (&[0, 2], int(1))], &[(&[0, 1], int(-2))]])),
        (
            "diag(1,1,-2,-2)+tail",
            map(
                4,
                degree,
                2,
                &[
                    &[(&[1, 0, 0, 0], int(1)), (&[0, 0, 1, 1], int(1))],
                    &[(&[0, 1, 0, 0], int(1)), (&[1, 0, 2, 0], rat(1, 2))],
                    &[(&[0, 0, 1, 0], int(-2)), (&[0, 0, 2, 0], rat(1, 3))],
                    &[(&[0, 0, 0, 1], int(-2)), (&[0, 0, 1, 1], int(5)), (&[0, 1, 0, 2], int(-1))],
                ],
            ),
        ),
        (
            "lambda=(2,3,5)",
            map(
                3,
                degree,
                0,
                &[
                    &[(&[1, 0, 0], int(2)), (&[0, 1, 1], int(1))],
                    &[(&[0, 1, 0], int(3)), (&[2, 0, 0], int(-1)), (&[1, 0, 1], rat(1, 2))],
                    &[(&[0, 0, 1], int(5)), (&[0, 2, 0], int(1)), (&[1, 1, 1], int(2))],
                ],
            ),
        ),
        ("x/3+x^2+x^3", map(1, degree, 0, &[&[(&[1], rat(1, 3)), (&[2], int(1)), (&[3], int(1))]])),
        (
            "lambda=(-3,2)",
            map(2, degree, 0, &[&[(&[1, 0], int(-3)), (&[1, 1], int(1))], &[(&[0, 1], int(2)), (&[2, 0], int(1)), (&[0, 3], int(-2))]]),
        ),
        (
            "lambda=(1,2,3)",
            map(
                3,
                degree,
                1,
                &[
                    &[(&[1, 0, 0], int(1)), (&[0, 1, 1], int(1))],
                    &[(&[0, 1, 0], int(2)), (&[0, 2, 0], int(1))],
                    &[(&[0, 0, 1], int(3)), (&[1, 0, 2], int(1))],
                ],
            ),
        ),
    ]
}

pub fn small_rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=12).prop_map(|(n, d)| rat(n, d))
}

pub fn nonzero_rational() -> impl Strategy<Value = Rational> {
    small_rational().prop_filter("nonzero", |r| *r != int(0))
}

/// A rational series in `n` variables with terms of degree `lo..=hi`.
pub fn series(n: usize, trunc: u32, lo: u32, hi: u32, max_terms: usize) -> impl Strategy<Value = QSeries> {
    let monos: Vec<MultiIndex> = (lo..=hi).flat_map(|d| MultiIndex::all_of_degree(n, d)).collect();
    proptest::collection::vec((0..monos.len(), small_rational()), 0..=max_terms).prop_map(move |terms| {
        let mut s = QSeries::q_zero(n, trunc);
        for (k, c) in terms {
            s.add_to_coeff(monos[k].clone(), &c);
        }
        s
    })
}

pub fn nonzero_series(n: usize, trunc: u32, lo: u32, hi: u32, max_terms: usize) -> impl Strategy<Value = QSeries> {
    series(n, trunc, lo, hi, max_terms.max(1)).prop_filter("nonzero", |s| !s.is_zero())
}

pub fn to_rational(b: &BigInt) -> Rational {
    Rational::from_integer(b.clone())
}
