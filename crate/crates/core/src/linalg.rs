//! Dense linear algebra: elimination over any `CoeffRing`, characteristic
//! polynomials and rational roots over Q, and integer echelon forms for lattices.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{factorize, biguint_to_bigint, Rational};
use crate::ring::{CoeffRing, Rationals};

pub type Matrix<E> = Vec<Vec<E>>;

pub fn identity<R: CoeffRing>(ring: &R, n: usize) -> Matrix<R::Elem> {
    (0..n).map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect()).collect()
}

pub fn mat_mul<R: CoeffRing>(ring: &R, a: &Matrix<R::Elem>, b: &Matrix<R::Elem>) -> Matrix<R::Elem> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).fold(ring.zero(), |acc, (x, brow)| ring.add(&acc, &ring.mul(x, &brow[j]))))
                .collect()
        })
        .collect()
}

pub fn mat_vec<R: CoeffRing>(ring: &R, a: &Matrix<R::Elem>, v: &[R::Elem]) -> Vec<R::Elem> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(ring.zero(), |acc, (x, y)| ring.add(&acc, &ring.mul(x, y))))
        .collect()
}

pub fn transpose<E: Clone>(a: &Matrix<E>) -> Matrix<E> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Reduced row echelon form; returns the reduced matrix and its pivot columns.
/// Pivots are picked by `CoeffRing::pivot_rank` (smallest valuation over Q_p).
pub fn rref<R: CoeffRing>(ring: &R, m: &Matrix<R::Elem>) -> (Matrix<R::Elem>, Vec<usize>) {
    let mut a = m.clone();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows).filter(|&i| !ring.is_zero(&a[i][c])).min_by_key(|&i| ring.pivot_rank(&a[i][c]));
        let Some(pr) = best else { continue };
        a.swap(r, pr);
        let inv = ring.inv(&a[r][c]).expect("nonzero pivot");
        for x in a[r].iter_mut() {
            *x = ring.mul(x, &inv);
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || ring.is_zero(&row[c]) {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !ring.is_zero(p) {
                    *x = ring.sub(x, &ring.mul(&f, p));
                }
            }
            row[c] = ring.zero();
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank<R: CoeffRing>(ring: &R, m: &Matrix<R::Elem>) -> usize {
    rref(ring, m).1.len()
}

/// Basis of `{v : m v = 0}`, one vector per free column (that coordinate set to 1).
pub fn kernel<R: CoeffRing>(ring: &R, m: &Matrix<R::Elem>, cols: usize) -> Vec<Vec<R::Elem>> {
    if m.is_empty() {
        return identity(ring, cols);
    }
    let (a, pivots) = rref(ring, m);
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivot_set.contains(c)) {
        let mut v = vec![ring.zero(); cols];
        v[free] = ring.one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = ring.neg(&a[r][free]);
        }
        basis.push(v);
    }
    basis
}

pub fn invert_matrix<R: CoeffRing>(ring: &R, m: &Matrix<R::Elem>) -> Option<Matrix<R::Elem>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return None;
    }
    let aug: Matrix<R::Elem> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { ring.one() } else { ring.zero() }));
            r
        })
        .collect();
    let (red, pivots) = rref(ring, &aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(red.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn determinant(m: &Matrix<Rational>) -> Rational {
    let n = m.len();
    let mut a = m.clone();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        let inv = a[c][c].recip();
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..n {
                let t = &f * &a[c][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

/// Characteristic polynomial `det(tI - M)`, coefficients lowest degree first (monic).
pub fn char_poly(m: &Matrix<Rational>) -> Vec<Rational> {
    // Faddeev–LeVerrier
    let n = m.len();
    let ring = Rationals;
    let mut coeffs = vec![Rational::zero(); n + 1];
    coeffs[n] = Rational::one();
    let mut mk: Matrix<Rational> = vec![vec![Rational::zero(); n]; n];
    for k in 1..=n {
        let mut next = mat_mul(&ring, m, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        mk = next;
        let am = mat_mul(&ring, m, &mk);
        let trace: Rational = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -trace / Rational::from_integer(BigInt::from(k));
    }
    coeffs
}

/// Evaluates a polynomial given lowest-degree-first coefficients.
pub fn poly_eval(coeffs: &[Rational], x: &Rational) -> Rational {
    coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let f = factorize(n.magnitude());
    let mut out = vec![BigInt::one()];
    for (p, e) in f {
        let p = biguint_to_bigint(&p);
        let mut next = Vec::new();
        for d in &out {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk *= &p;
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// Rational roots with multiplicity, ascending, plus the degree of the cofactor
/// without rational roots.
pub fn rational_roots(coeffs: &[Rational]) -> (Vec<(Rational, usize)>, usize) {
    let mut poly: Vec<Rational> = coeffs.to_vec();
    while poly.len() > 1 && poly.last().is_some_and(Zero::is_zero) {
        poly.pop();
    }
    let mut roots = Vec::new();
    let mut zero_mult = 0;
    while poly.len() > 1 && poly[0].is_zero() {
        poly.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        roots.push((Rational::zero(), zero_mult));
    }
    if poly.len() > 1 {
        let lcm = poly.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = poly.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let num_cands = divisors(&ints[0]);
        let den_cands = divisors(ints.last().unwrap());
        let mut cands: BTreeSet<Rational> = BTreeSet::new();
        for a in &num_cands {
            for b in &den_cands {
                let q = Rational::new(a.clone(), b.clone());
                cands.insert(q.clone());
                cands.insert(-q);
            }
        }
        for c in cands {
            let mut mult = 0;
            while poly.len() > 1 && poly_eval(&poly, &c).is_zero() {
                poly = synthetic_divide(&poly, &c);
                mult += 1;
            }
            if mult > 0 {
                roots.push((c, mult));
            }
        }
    }
    roots.sort_by(|a, b| a.0.cmp(&b.0));
    (roots, poly.len() - 1)
}

fn synthetic_divide(poly: &[Rational], root: &Rational) -> Vec<Rational> {
    let n = poly.len() - 1;
    let mut out = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for k in (1..=n).rev() {
        carry = &carry * root + &poly[k];
        out[k - 1] = carry.clone();
    }
    out
}

/// Column echelon form over Z: returns `(H, V, rank)` with `M V = H`, `V` unimodular,
/// and the columns of `V` from `rank` onward spanning the integer kernel of `M`.
pub fn column_echelon(m: &Matrix<BigInt>, cols: usize) -> (Matrix<BigInt>, Matrix<BigInt>, usize) {
    let mut a = m.clone();
    let mut v: Matrix<BigInt> =
        (0..cols).map(|i| (0..cols).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    let mut pc = 0;
    let col_op = |a: &mut Matrix<BigInt>, v: &mut Matrix<BigInt>, dst: usize, src: usize, q: &BigInt| {
        for row in a.iter_mut().chain(v.iter_mut()) {
            let t = &row[src] * q;
            row[dst] -= t;
        }
    };
    let swap = |a: &mut Matrix<BigInt>, v: &mut Matrix<BigInt>, x: usize, y: usize| {
        for row in a.iter_mut().chain(v.iter_mut()) {
            row.swap(x, y);
        }
    };
    for i in 0..a.len() {
        if pc == cols {
            break;
        }
        loop {
            let nz: Vec<usize> = (pc..cols).filter(|&j| !a[i][j].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let k = *nz.iter().min_by_key(|&&j| a[i][j].magnitude().clone()).unwrap();
            for &j in &nz {
                if j != k {
                    let q = a[i][j].div_floor(&a[i][k]);
                    col_op(&mut a, &mut v, j, k, &q);
                }
            }
        }
        if let Some(j) = (pc..cols).find(|&j| !a[i][j].is_zero()) {
            swap(&mut a, &mut v, pc, j);
            if a[i][pc].is_negative() {
                for row in a.iter_mut().chain(v.iter_mut()) {
                    row[pc] = -row[pc].clone();
                }
            }
            pc += 1;
        }
    }
    (a, v, pc)
}

/// Reduced row Hermite normal form of integer row vectors (zero rows dropped).
pub fn row_hnf(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let cols = rows[0].len();
    let t = transpose(&rows.to_vec());
    let (h, _, rank) = column_echelon(&t, rows.len());
    let mut out: Vec<Vec<BigInt>> = (0..rank).map(|j| h.iter().map(|row| row[j].clone()).collect()).collect();
    // reduce entries above each pivot into [0, pivot)
    for k in 0..out.len() {
        let Some(pcol) = (0..cols).find(|&c| !out[k][c].is_zero()) else { continue };
        for i in 0..k {
            let q = out[i][pcol].div_floor(&out[k][pcol]);
            if !q.is_zero() {
                let pivot_row = out[k].clone();
                for (x, y) in out[i].iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
            }
        }
    }
    out
}

/// Basis of `{v ∈ Z^cols : m v = 0}` in reduced Hermite form.
pub fn integer_kernel(m: &Matrix<BigInt>, cols: usize) -> Vec<Vec<BigInt>> {
    let (_, v, rank) = column_echelon(m, cols);
    let basis: Vec<Vec<BigInt>> = (rank..cols).map(|j| v.iter().map(|row| row[j].clone()).collect()).collect();
    row_hnf(&basis)
}
