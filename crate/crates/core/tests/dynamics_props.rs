mod common;

use padyn::arith::{int, rat, rational_factor_exponents};
use padyn::dynamics::{enumerate_resonances, monomial_value, relation_lattice, symplectic_scaling_check};
use padyn::linalg::{determinant, invert_matrix, mat_mul, rank, transpose};
use num_traits::Signed;
use padyn::{MultiIndex, Rational, Rationals};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn multiplier() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![rat(1, 1), rat(-1, 1), rat(2, 1), rat(-2, 1), rat(4, 1), rat(1, 2), rat(3, 1), rat(9, 1), rat(6, 1), rat(2, 3), rat(-3, 2)])
}

fn brute_resonances(lambda: &[Rational], r: usize, max_degree: u32) -> BTreeSet<(Vec<u32>, usize)> {
    let n = lambda.len();
    let mut out = BTreeSet::new();
    for d in 2..=max_degree {
        for idx in MultiIndex::all_of_degree(n, d) {
            if idx.exponents()[..r].iter().any(|&e| e > 0) {
                continue;
            }
            let v = idx.exponents().iter().zip(lambda).fold(int(1), |acc, (&e, l)| acc * num_traits::pow(l.clone(), e as usize));
            for (j, l) in lambda.iter().enumerate() {
                if &v == l {
                    out.insert((idx.exponents().to_vec(), j));
                }
            }
        }
    }
    out
}

/// Rank of the group generated by the `λ_i` modulo torsion, from prime exponents.
fn factorization_rank(lambda: &[Rational]) -> usize {
    let f: Vec<_> = lambda.iter().map(|l| rational_factor_exponents(l).1).collect();
    let primes: BTreeSet<_> = f.iter().flat_map(|e| e.keys().cloned()).collect();
    let m: Vec<Vec<Rational>> = primes.iter().map(|p| f.iter().map(|e| int(*e.get(p).unwrap_or(&0))).collect()).collect();
    if m.is_empty() {
        0
    } else {
        rank(&Rationals, &m)
    }
}

proptest! {
    #[test]
    fn resonances_match_brute_force(lambda in proptest::collection::vec(multiplier(), 1..=3), r in 0usize..2, d in 2u32..=5) {
        let r = r.min(lambda.len());
        let mut lambda = lambda;
        for l in lambda.iter_mut().take(r) {
            *l = int(1);
        }
        let got: BTreeSet<_> = enumerate_resonances(&lambda, r, d).unwrap().into_iter().map(|res| (res.index.exponents().to_vec(), res.j)).collect();
        prop_assert_eq!(got, brute_resonances(&lambda, r, d));
    }

    #[test]
    fn lattice_relations_hold(lambda in proptest::collection::vec(multiplier(), 1..=4)) {
        let lat = relation_lattice(&lambda, 64).unwrap();
        for v in &lat.basis {
            prop_assert_eq!(monomial_value(&lambda, v), int(1));
        }
        prop_assert_eq!(lat.rank, factorization_rank(&lambda));
        // torsion: some product of the λ_i equals -1 iff a relation of |λ| has odd sign parity
        let abs: Vec<Rational> = lambda.iter().map(|l| l.abs()).collect();
        let odd = relation_lattice(&abs, 64).unwrap().basis.iter().any(|v| monomial_value(&lambda, v) == int(-1));
        prop_assert_eq!(lat.torsion_free, !odd);
    }

    #[test]
    fn symplectic_determinant_identity(
        a in proptest::collection::vec(proptest::collection::vec(-4i64..=4, 2), 2),
        mu in prop::sample::select(vec![rat(-2, 1), rat(3, 1), rat(1, 2), rat(1, 1)]),
    ) {
        let a: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
        prop_assume!(determinant(&a) != int(0));
        // M = diag(A, μ A^{-T}) satisfies Mᵀ σ M = μ σ for the standard form
        let b: Vec<Vec<Rational>> = transpose(&invert_matrix(&Rationals, &a).unwrap()).iter().map(|r| r.iter().map(|x| x * &mu).collect()).collect();
        let mut m = vec![vec![int(0); 4]; 4];
        let mut sigma = vec![vec![int(0); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][j].clone();
                m[i + 2][j + 2] = b[i][j].clone();
            }
            sigma[i][i + 2] = int(1);
            sigma[i + 2][i] = int(-1);
        }
        let rep = symplectic_scaling_check(&m, &sigma, &mu).unwrap();
        prop_assert!(rep.holds);
        let pulled = mat_mul(&Rationals, &mat_mul(&Rationals, &transpose(&m), &sigma), &m);
        prop_assert_eq!(determinant(&pulled), num_traits::pow(mu.clone(), 4) * determinant(&sigma));
        if let (Some(pairs), Some(eig)) = (&rep.pairing, &rep.eigenvalues) {
            for (i, j) in pairs {
                prop_assert_eq!(&eig[*i] * &eig[*j], mu.clone());
            }
        }
    }
}
