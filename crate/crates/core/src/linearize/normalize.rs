//! Coordinate changes bringing a map with a pointwise fixed locus to the form
//! `f^(i) ≡ λ_i x_i (mod I_F^2)` with constant `λ_i`.

use num_traits::{One, Zero};

use super::LinearizeError;
use crate::arith::Rational;
use crate::dynamics::{rational_eigenvalues, AnalyticMap};
use crate::linalg::{self, Matrix};
use crate::ring::Rationals;
use crate::series::{in_subspace_ar, QSeries, SeriesTuple};

/// A map conjugated to normal form: `map = change⁻¹ ∘ f ∘ change`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub map: AnalyticMap,
    pub change: SeriesTuple<Rationals>,
    pub lambda: Vec<Rational>,
}

impl Normalized {
    pub fn is_identity_change(&self) -> bool {
        self.change == SeriesTuple::identity(Rationals, self.map.dim(), self.change.trunc_degree())
    }
}

/// Full normalization: block-diagonalization along the fixed locus (when `0 < r < n`)
/// followed by diagonalization of the normal block.
pub fn normalize(f: &AnalyticMap) -> Result<Normalized, LinearizeError> {
    let n = f.dim();
    let r = f.fixed_locus_dim();
    let nt = f.trunc_degree();
    let identity = SeriesTuple::identity(Rationals, n, nt);
    if r == n {
        return Ok(Normalized { map: f.clone(), change: identity, lambda: vec![Rational::one(); n] });
    }
    let (f1, c1) = if r > 0 { normalize_mod_if2(f)? } else { (f.clone(), identity.clone()) };
    let (f2, c2, lambda) = diagonalize_normal_part(&f1)?;
    let change = if c1 == identity {
        c2
    } else if c2 == identity {
        c1
    } else {
        c1.compose(&c2)?
    };
    let lin = SeriesTuple::diagonal(Rationals, &lambda, nt);
    let rest = f2.components().try_sub(&lin)?;
    for (j, c) in rest.components().iter().enumerate() {
        if !in_subspace_ar(c, r) {
            return Err(LinearizeError::NotInIdeal(j));
        }
    }
    Ok(Normalized { map: f2, change, lambda })
}

/// `n × (n - r)` matrix whose entry `(i, k)` is the coefficient of `x_{r+k}` in `f_i`,
/// as a series in the locus variables (truncated at `N - 1`).
fn linear_tail_block(f: &AnalyticMap) -> Matrix<QSeries> {
    let n = f.dim();
    let r = f.fixed_locus_dim();
    let nt = f.trunc_degree().saturating_sub(1);
    f.components()
        .components()
        .iter()
        .map(|c| {
            (r..n)
                .map(|k| {
                    let mut out = QSeries::q_zero(n, nt);
                    for (idx, a) in c.terms() {
                        if idx.tail_degree(r) == 1 && idx.get(k) == 1 {
                            out.set_coeff(idx.lower(k), a.clone());
                        }
                    }
                    out
                })
                .collect()
        })
        .collect()
}

fn constant_matrix(m: &Matrix<QSeries>) -> Matrix<Rational> {
    m.iter().map(|row| row.iter().map(QSeries::constant_term).collect()).collect()
}

fn series_mat_mul(a: &Matrix<QSeries>, b: &Matrix<QSeries>, n: usize, nt: u32) -> Matrix<QSeries> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).fold(QSeries::q_zero(n, nt), |acc, (x, brow)| &acc + &(x * &brow[j])))
                .collect()
        })
        .collect()
}

fn constant_series_matrix(m: &Matrix<Rational>, n: usize, nt: u32) -> Matrix<QSeries> {
    m.iter().map(|row| row.iter().map(|c| QSeries::q_constant(n, nt, c.clone())).collect()).collect()
}

/// Inverse of a square matrix of series with invertible constant part (Neumann series).
fn series_matrix_inverse(m: &Matrix<QSeries>, n: usize, nt: u32) -> Option<Matrix<QSeries>> {
    let m0 = constant_matrix(m);
    let m0_inv = linalg::invert_matrix(&Rationals, &m0)?;
    let inv0 = constant_series_matrix(&m0_inv, n, nt);
    // M = M0 (I + T) with T = M0^{-1} (M - M0) of order >= 1
    let rest: Matrix<QSeries> = m
        .iter()
        .zip(&m0)
        .map(|(row, crow)| row.iter().zip(crow).map(|(s, c)| s - &QSeries::q_constant(n, nt, c.clone())).collect())
        .collect();
    let t = series_mat_mul(&inv0, &rest, n, nt);
    let neg_t: Matrix<QSeries> = t.iter().map(|row| row.iter().map(|s| -s).collect()).collect();
    let size = m.len();
    let mut sum = constant_series_matrix(&linalg::identity(&Rationals, size), n, nt);
    let mut power = sum.clone();
    for _ in 0..nt {
        power = series_mat_mul(&power, &neg_t, n, nt);
        if power.iter().flatten().all(QSeries::is_zero) {
            break;
        }
        sum = sum.iter().zip(&power).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
    }
    Some(series_mat_mul(&sum, &inv0, n, nt))
}

fn conjugate(f: &AnalyticMap, h: &SeriesTuple<Rationals>) -> Result<AnalyticMap, LinearizeError> {
    let h_inv = h.invert()?;
    let fh = f.components().compose(h)?;
    let g = h_inv.compose(&fh)?;
    Ok(AnalyticMap::new(g, f.fixed_locus_dim())?)
}

/// Removes the terms of `f^(i) - x_i` (`i <= r`) that are linear in the transverse
/// variables, via `h(x) = (x' + a'(a'')⁻¹ x'', x'')`. Returns `(h⁻¹ ∘ f ∘ h, h)`.
pub fn normalize_mod_if2(f: &AnalyticMap) -> Result<(AnalyticMap, SeriesTuple<Rationals>), LinearizeError> {
    let n = f.dim();
    let r = f.fixed_locus_dim();
    let nt = f.trunc_degree();
    let identity = SeriesTuple::identity(Rationals, n, nt);
    if r == 0 || r == n {
        return Ok((f.clone(), identity));
    }
    let bnt = nt.saturating_sub(1);
    let block = linear_tail_block(f);
    let mut a2: Matrix<QSeries> = block[r..].to_vec();
    for (k, row) in a2.iter_mut().enumerate() {
        row[k] = &row[k] - &QSeries::q_constant(n, bnt, Rational::one());
    }
    let a1: Matrix<QSeries> = block[..r].to_vec();
    if linalg::determinant(&constant_matrix(&a2)).is_zero() {
        return Err(LinearizeError::TailBlockSingular);
    }
    if a1.iter().flatten().all(QSeries::is_zero) {
        return Ok((f.clone(), identity));
    }
    let a2_inv = series_matrix_inverse(&a2, n, bnt).ok_or(LinearizeError::TailBlockSingular)?;
    let b = series_mat_mul(&a1, &a2_inv, n, bnt);
    let mut comps = identity.into_components();
    for (i, row) in b.iter().enumerate() {
        for (k, entry) in row.iter().enumerate() {
            if !entry.is_zero() {
                comps[i] = &comps[i] + &entry.shift_by_variable(r + k);
            }
        }
    }
    let h = SeriesTuple::new(comps)?;
    Ok((conjugate(f, &h)?, h))
}

/// Diagonalizes the normal block `A(x')` (coefficients of `x''` in `f''`) using the
/// spectral projectors `p_k = Π_{l≠k} (A - μ_l)/(μ_k - μ_l)`, which requires `A(x')`
/// semisimple with constant eigenvalues. That is verified exactly: the product
/// `Π_k (A - μ_k)` must vanish as a truncated series matrix.
///
/// Returns `(h⁻¹ ∘ f ∘ h, h, λ)` with `λ = (1, ..., 1, λ_{r+1}, ..., λ_n)`.
pub fn diagonalize_normal_part(f: &AnalyticMap) -> Result<(AnalyticMap, SeriesTuple<Rationals>, Vec<Rational>), LinearizeError> {
    let n = f.dim();
    let r = f.fixed_locus_dim();
    let nt = f.trunc_degree();
    let identity = SeriesTuple::identity(Rationals, n, nt);
    if r == n {
        return Ok((f.clone(), identity, vec![Rational::one(); n]));
    }
    let bnt = nt.saturating_sub(1);
    let a: Matrix<QSeries> = linear_tail_block(f)[r..].to_vec();
    let a0 = constant_matrix(&a);
    let eig = rational_eigenvalues(&a0)?;
    let mut distinct: Vec<Rational> = Vec::new();
    for l in &eig.eigenvalues {
        if !distinct.contains(l) {
            distinct.push(l.clone());
        }
    }
    let m = n - r;
    let shifted = |mu: &Rational| -> Matrix<QSeries> {
        let mut s = a.clone();
        for (k, row) in s.iter_mut().enumerate() {
            row[k] = &row[k] - &QSeries::q_constant(n, bnt, mu.clone());
        }
        s
    };
    let mut annihilator = constant_series_matrix(&linalg::identity(&Rationals, m), n, bnt);
    for mu in &distinct {
        annihilator = series_mat_mul(&annihilator, &shifted(mu), n, bnt);
    }
    if !annihilator.iter().flatten().all(QSeries::is_zero) {
        return Err(if eig.semisimple { LinearizeError::EigenvaluesVary } else { LinearizeError::NotSemisimple });
    }
    let mut lambda = vec![Rational::one(); r];
    lambda.extend(eig.eigenvalues.iter().cloned());
    // eigenbasis of A(0), one vector per eigenvalue slot
    let mut basis: Vec<Vec<Rational>> = vec![Vec::new(); m];
    for mu in &distinct {
        let mut s = a0.clone();
        for (k, row) in s.iter_mut().enumerate() {
            row[k] -= mu;
        }
        let mut vecs = linalg::kernel(&Rationals, &s, m).into_iter();
        for (slot, _) in eig.eigenvalues.iter().enumerate().filter(|(_, x)| *x == mu) {
            basis[slot] = vecs.next().expect("semisimple");
        }
    }
    let projector = |mu: &Rational| -> Matrix<QSeries> {
        let mut p = constant_series_matrix(&linalg::identity(&Rationals, m), n, bnt);
        for other in distinct.iter().filter(|o| *o != mu) {
            let scale = (mu - other).recip();
            let factor: Matrix<QSeries> =
                shifted(other).iter().map(|row| row.iter().map(|s| s.scale(&scale)).collect()).collect();
            p = series_mat_mul(&p, &factor, n, bnt);
        }
        p
    };
    let projectors: Vec<Matrix<QSeries>> = distinct.iter().map(projector).collect();
    // P(x') has columns p_{λ_i}(x') e_i
    let mut p_mat: Matrix<QSeries> = vec![vec![QSeries::q_zero(n, bnt); m]; m];
    for (slot, l) in eig.eigenvalues.iter().enumerate() {
        let proj = &projectors[distinct.iter().position(|d| d == l).unwrap()];
        for (row, prow) in p_mat.iter_mut().zip(proj) {
            let mut acc = QSeries::q_zero(n, bnt);
            for (entry, c) in prow.iter().zip(&basis[slot]) {
                if !c.is_zero() {
                    acc = &acc + &entry.scale(c);
                }
            }
            row[slot] = acc;
        }
    }
    let is_identity = p_mat.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, s)| {
            let expect = if i == j { Rational::one() } else { Rational::zero() };
            *s == QSeries::q_constant(n, bnt, expect)
        })
    });
    if is_identity {
        return Ok((f.clone(), identity, lambda));
    }
    let mut comps = identity.into_components();
    for (a_row, row) in p_mat.iter().enumerate() {
        let mut acc = QSeries::q_zero(n, nt);
        for (b_col, entry) in row.iter().enumerate() {
            if !entry.is_zero() {
                acc = &acc + &entry.shift_by_variable(r + b_col);
            }
        }
        comps[r + a_row] = acc;
    }
    let h = SeriesTuple::new(comps)?;
    Ok((conjugate(f, &h)?, h, lambda))
}
