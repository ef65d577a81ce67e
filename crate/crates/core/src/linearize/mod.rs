//! Linearizing conjugacies `h ∘ Λ = f ∘ h` near a fixed point.
//!
//! Maps are first brought to a normal form whose linear part is diagonal modulo
//! the square of the ideal of the fixed locus ([`normalize_mod_if2`],
//! [`diagonalize_normal_part`]); the conjugacy is then solved degree by degree or
//! by a Newton iteration, and composed back with the normalizing change.

mod newton;
mod normalize;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{factorize, Rational};
use crate::dynamics::{AnalyticMap, DynamicsError};
use crate::ring::Rationals;
use crate::series::{in_subspace_ar, MultiIndex, PowerCache, QSeries, SeriesError, SeriesTuple};

pub use newton::{check_norm_bound, linearize_newton, newton_radius, C1Value, NewtonIteration, NewtonTrace, NormCertificate};
pub use normalize::{diagonalize_normal_part, normalize, normalize_mod_if2, Normalized};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearizeError {
    #[error("resonant monomial {index:?} in component {j}")]
    ResonantMonomial { index: MultiIndex, j: usize },
    #[error("component {0} is not in the ideal A^(r)")]
    NotInIdeal(usize),
    #[error("truncation degree must be at least 2")]
    DegreeTooSmall,
    #[error("tail block a''(0) is singular (eigenvalue 1 transverse to the fixed locus)")]
    TailBlockSingular,
    #[error("linear part along the fixed locus is not semisimple")]
    NotSemisimple,
    #[error("eigenvalues of the normal block vary along the fixed locus")]
    EigenvaluesVary,
    #[error("radius shrink delta must satisfy 0 < delta < rho")]
    BadRadius,
    #[error("eigenvalue vector has length {found}, expected {expected}")]
    EigenvalueCount { expected: usize, found: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A conjugacy `h` with `f ∘ h = h ∘ Λ` through `verified_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyResult {
    pub h: SeriesTuple<Rationals>,
    pub h_inverse: SeriesTuple<Rationals>,
    /// Diagonal of `Λ`, in the order of the coordinates of `h`.
    pub lambda: Vec<Rational>,
    pub verified_degree: u32,
    /// `f ∘ h - h ∘ Λ` at the truncation degree; zero when verification passed.
    pub residual: SeriesTuple<Rationals>,
    pub denominator_primes: BTreeSet<BigUint>,
}

/// `L w = w ∘ Λ - Λ w = g`, solved monomial by monomial: `w_I^(j) = g_I^(j) / (λ^I - λ_j)`.
pub fn solve_homological(g: &SeriesTuple<Rationals>, lambda: &[Rational], r: usize) -> Result<SeriesTuple<Rationals>, LinearizeError> {
    if lambda.len() != g.num_vars() || g.len() != g.num_vars() {
        return Err(LinearizeError::EigenvalueCount { expected: g.num_vars(), found: lambda.len() });
    }
    let mut out = Vec::with_capacity(g.len());
    for (j, c) in g.components().iter().enumerate() {
        if !in_subspace_ar(c, r) {
            return Err(LinearizeError::NotInIdeal(j));
        }
        let mut w = QSeries::q_zero(c.num_vars(), c.trunc_degree());
        for (idx, a) in c.terms() {
            let div = lambda_power(lambda, idx) - &lambda[j];
            if div.is_zero() {
                return Err(LinearizeError::ResonantMonomial { index: idx.clone(), j });
            }
            w.set_coeff(idx.clone(), a / div);
        }
        out.push(w);
    }
    Ok(SeriesTuple::new(out)?)
}

pub(crate) fn lambda_power(lambda: &[Rational], idx: &MultiIndex) -> Rational {
    let mut acc = Rational::one();
    for (l, &e) in lambda.iter().zip(idx.exponents()) {
        for _ in 0..e {
            acc *= l;
        }
    }
    acc
}

/// Conjugacy of a map by degree-by-degree solution of `f ∘ h = h ∘ Λ`.
///
/// The map is normalized first; the returned `h` conjugates the original map.
pub fn linearize_order_by_order(f: &AnalyticMap, degree: u32) -> Result<ConjugacyResult, LinearizeError> {
    if degree < 2 {
        return Err(LinearizeError::DegreeTooSmall);
    }
    let f = f.with_trunc_degree(degree);
    let norm = normalize(&f)?;
    let h = solve_normalized(&norm.map, &norm.lambda)?;
    finish(&f, &norm, h)
}

/// Degree-by-degree solve for a map whose linear part is `diag(λ)` modulo `A^(r)`.
/// Returns `h = x + w` with `w ∈ A^(r)`.
pub fn solve_normalized(g: &AnalyticMap, lambda: &[Rational]) -> Result<SeriesTuple<Rationals>, LinearizeError> {
    let n = g.dim();
    let r = g.fixed_locus_dim();
    let nt = g.trunc_degree();
    let lin = SeriesTuple::diagonal(Rationals, lambda, nt);
    let nonlinear = g.components().try_sub(&lin)?;
    for (j, c) in nonlinear.components().iter().enumerate() {
        if !in_subspace_ar(c, r) {
            return Err(LinearizeError::NotInIdeal(j));
        }
    }
    let mut h: Vec<QSeries> = SeriesTuple::identity(Rationals, n, nt).into_components();
    let mut cache = PowerCache::new(Rationals, n, nonlinear.components().iter().flat_map(|c| c.terms().map(|(i, _)| i.clone())));
    let mut divisors: HashMap<(MultiIndex, usize), Rational> = HashMap::new();
    for d in 2..=nt {
        cache.push_layer(&h, d);
        for j in 0..n {
            let rhs = cache.compose_layer(nonlinear.component(j), &h, d);
            let mut layer = BTreeMap::new();
            for (idx, a) in rhs {
                if idx.tail_degree(r) < 2 {
                    return Err(LinearizeError::NotInIdeal(j));
                }
                let div = divisors.entry((idx.clone(), j)).or_insert_with(|| lambda_power(lambda, &idx) - &lambda[j]);
                if div.is_zero() {
                    return Err(LinearizeError::ResonantMonomial { index: idx, j });
                }
                let c = a / &*div;
                layer.insert(idx, c);
            }
            h[j].set_layer(d, layer);
        }
    }
    Ok(SeriesTuple::new(h)?)
}

/// Composes with the normalizing change, verifies, inverts and collects primes.
pub(crate) fn finish(f: &AnalyticMap, norm: &Normalized, h: SeriesTuple<Rationals>) -> Result<ConjugacyResult, LinearizeError> {
    let nt = f.trunc_degree();
    let full = if norm.is_identity_change() { h.clone() } else { norm.change.compose(&h)? };
    let residual = conjugacy_residual(f, &full, &norm.lambda)?;
    let verified_degree = match residual.order() {
        None => nt,
        Some(d) => d.saturating_sub(1),
    };
    let fast = if residual.is_zero() { inverse_by_conjugacy(&norm.map, &norm.lambda, &h) } else { None };
    let h_inverse = match fast {
        Some(u) if norm.is_identity_change() => u,
        Some(u) => u.compose(&norm.change.invert()?)?,
        None => full.invert()?,
    };
    let denominator_primes = denominator_primes(f, norm, &full);
    Ok(ConjugacyResult { h: full, h_inverse, lambda: norm.lambda.clone(), verified_degree, residual, denominator_primes })
}

/// Inverse of a normalized conjugacy `h = x + O(2)` as the solution of `u ∘ g = Λ ∘ u`.
///
/// Only the powers of `g` are expanded, which stay small when `g` is a sparse
/// polynomial, whereas inverting `h` directly expands powers of a dense series with
/// large coefficients. The solution is unique, hence equal to `h⁻¹` when `h` solves
/// the conjugacy exactly, as long as no divisor `λ^I - λ_j` vanishes. Returns `None`
/// when that fails or when `g` is not exactly diagonal in degree one.
fn inverse_by_conjugacy(g: &AnalyticMap, lambda: &[Rational], h: &SeriesTuple<Rationals>) -> Option<SeriesTuple<Rationals>> {
    let n = g.dim();
    let nt = g.trunc_degree().min(h.trunc_degree());
    let lin = SeriesTuple::diagonal(Rationals, lambda, nt);
    let id = SeriesTuple::identity(Rationals, n, nt);
    if g.components().truncate(1) != lin.truncate(1) || h.truncate(1) != id.truncate(1) {
        return None;
    }
    let resonant = (2..=nt)
        .flat_map(|d| MultiIndex::all_of_degree(n, d))
        .any(|idx| lambda.iter().any(|l| lambda_power(lambda, &idx) == *l));
    if resonant {
        return None;
    }
    let nonlinear = g.components().truncate(nt).try_sub(&lin).ok()?;
    let base = g.components().truncate(nt).into_components();
    let wanted = (2..nt).flat_map(|d| MultiIndex::all_of_degree(n, d));
    let mut cache = PowerCache::new(Rationals, n, wanted);
    let mut v: Vec<QSeries> = (0..n).map(|_| QSeries::q_zero(n, nt)).collect();
    for d in 2..=nt {
        cache.push_layer(&base, d);
        for j in 0..n {
            let mut layer = cache.compose_layer(&v[j], &base, d);
            for (idx, a) in nonlinear.component(j).layer(d) {
                let e = layer.entry(idx.clone()).or_insert_with(Rational::zero);
                *e += a;
            }
            let mut out = BTreeMap::new();
            for (idx, a) in layer {
                if !a.is_zero() {
                    let div = lambda_power(lambda, &idx) - &lambda[j];
                    out.insert(idx, -a / div);
                }
            }
            v[j].set_layer(d, out);
        }
    }
    SeriesTuple::new(v).ok()?.try_add(&id).ok()
}

/// `f ∘ h - h ∘ Λ` at the common truncation degree.
pub fn conjugacy_residual(f: &AnalyticMap, h: &SeriesTuple<Rationals>, lambda: &[Rational]) -> Result<SeriesTuple<Rationals>, LinearizeError> {
    let fh = f.components().compose(h)?;
    let hl = h.scale_variables(lambda);
    Ok(fh.try_sub(&hl)?)
}

fn prime_factors(n: &BigUint, memo: &mut HashMap<BigUint, Vec<BigUint>>) -> Vec<BigUint> {
    if n.is_zero() || n.is_one() {
        return Vec::new();
    }
    memo.entry(n.clone()).or_insert_with(|| factorize(n).into_keys().collect()).clone()
}

/// Primes dividing a coefficient denominator of `h`.
///
/// Candidates come from the inputs of the computation (map coefficients, the
/// normalizing change, the divisors `λ^I - λ_j`), so the large denominators of `h`
/// itself never need to be factored; each candidate is then tested against `h`.
fn denominator_primes(f: &AnalyticMap, norm: &Normalized, h: &SeriesTuple<Rationals>) -> BTreeSet<BigUint> {
    let mut memo = HashMap::new();
    let mut cands: BTreeSet<BigUint> = BTreeSet::new();
    let add_rational = |q: &Rational, memo: &mut HashMap<BigUint, Vec<BigUint>>, cands: &mut BTreeSet<BigUint>| {
        cands.extend(prime_factors(q.numer().magnitude(), memo));
        cands.extend(prime_factors(q.denom().magnitude(), memo));
    };
    for c in f.components().components().iter().chain(norm.change.components()).chain(norm.map.components().components()) {
        for (_, a) in c.terms() {
            cands.extend(prime_factors(a.denom().magnitude(), &mut memo));
        }
    }
    let det = crate::linalg::determinant(&norm.change.linear_part());
    add_rational(&det, &mut memo, &mut cands);
    let n = f.dim();
    let r = f.fixed_locus_dim();
    let lambda = &norm.lambda;
    for l in lambda {
        add_rational(l, &mut memo, &mut cands);
    }
    for d in 2..=f.trunc_degree() {
        for tail in MultiIndex::all_of_degree(n - r, d) {
            let mut full = vec![0u32; r];
            full.extend_from_slice(tail.exponents());
            let val = lambda_power(lambda, &MultiIndex::new(full));
            for l in lambda {
                let div = &val - l;
                if !div.is_zero() {
                    add_rational(&div, &mut memo, &mut cands);
                }
            }
        }
    }
    let denoms: BTreeSet<BigUint> = h.components().iter().flat_map(|c| c.terms().map(|(_, a)| a.denom().magnitude().clone())).collect();
    cands
        .into_iter()
        .filter(|p| denoms.iter().any(|d| (d % p).is_zero()))
        .collect()
}
