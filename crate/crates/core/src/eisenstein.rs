//! Power series roots of polynomial equations `F(x, X) = 0` and their denominators.
//!
//! The coefficient of `φ` in degree `d > s` is `-F(φ_d)_(d+s) / F'(φ_{s+1})_(s)`,
//! where `φ_d` is `φ` truncated below degree `d` and `s` is the order of `F'(φ)`.
//! The division is exact in the polynomial ring and is carried out from the
//! valuation-minimal monomial upward.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use thiserror::Error;

use crate::arith::{factorize, Rational};
use crate::ring::Rationals;
use crate::series::{add_into, MultiIndex, QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EisensteinError {
    #[error("term has {found} exponents, expected {expected}")]
    Arity { expected: usize, found: usize },
    #[error("polynomial does not involve X")]
    ConstantInX,
    #[error("seed has {found} variables, expected {expected}")]
    SeedVars { expected: usize, found: usize },
    #[error("seed is not a root modulo m^{0}")]
    NotARoot(u32),
    #[error("F' vanishes at the seed through degree {0}: seed too short or F not minimal")]
    DerivativeVanishes(u32),
    #[error("pivot does not divide in degree {0}")]
    DivisionFailure(u32),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `F = Σ_k c_k(x) X^k` with rational polynomial coefficients `c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraicPoly {
    num_vars: usize,
    coeffs: Vec<BTreeMap<MultiIndex, Rational>>,
}

impl AlgebraicPoly {
    /// Terms carry `n + 1` exponents, the last one for `X`.
    pub fn new(num_vars: usize, terms: &[(Vec<u32>, Rational)]) -> Result<Self, EisensteinError> {
        let mut coeffs: Vec<BTreeMap<MultiIndex, Rational>> = Vec::new();
        for (e, c) in terms {
            if e.len() != num_vars + 1 {
                return Err(EisensteinError::Arity { expected: num_vars + 1, found: e.len() });
            }
            let k = e[num_vars] as usize;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, BTreeMap::new());
            }
            add_into(&Rationals, &mut coeffs[k], MultiIndex::from_slice(&e[..num_vars]), c);
        }
        while coeffs.last().is_some_and(|m| m.is_empty()) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(EisensteinError::ConstantInX);
        }
        Ok(AlgebraicPoly { num_vars, coeffs })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree_in_x(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `∂F/∂X`.
    pub fn derivative_x(&self) -> AlgebraicPoly {
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, m)| m.iter().map(|(i, c)| (i.clone(), c * Rational::from_integer((k as i64 + 1).into()))).collect())
            .collect();
        AlgebraicPoly { num_vars: self.num_vars, coeffs }
    }

    fn coeff_series(&self, k: usize, cap: u32) -> QSeries {
        let mut s = QSeries::q_zero(self.num_vars, cap);
        if let Some(m) = self.coeffs.get(k) {
            for (i, c) in m {
                if i.degree() <= cap {
                    s.set_coeff(i.clone(), c.clone());
                }
            }
        }
        s
    }

    /// `F(x, φ(x))` through degree `cap`.
    pub fn eval_series(&self, phi: &QSeries, cap: u32) -> QSeries {
        let phi = phi.truncate(cap.min(phi.trunc_degree()));
        let mut phi_cap = QSeries::q_zero(self.num_vars, cap);
        for (i, c) in phi.terms() {
            phi_cap.set_coeff(i.clone(), c.clone());
        }
        let mut acc = self.coeff_series(self.degree_in_x(), cap);
        for k in (0..self.degree_in_x()).rev() {
            acc = &acc.mul_trunc(&phi_cap, cap) + &self.coeff_series(k, cap);
        }
        acc
    }
}

/// A polynomial together with enough of a root to run the coefficient recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraicSeriesSpec {
    pub poly: AlgebraicPoly,
    /// The root through degree `seed.trunc_degree()`.
    pub seed: QSeries,
    /// Order of `F'(φ)`.
    pub s: u32,
    /// `F'(φ_{s+1})_(s)`.
    pub pivot_poly: BTreeMap<MultiIndex, Rational>,
    /// Valuation-minimal monomial of `pivot_poly` and its coefficient.
    pub pivot_index: MultiIndex,
    pub pivot_d: Rational,
}

/// Valuation order where `x_n` outweighs every power of `x_{n-1}`, and so on.
fn v_cmp(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.exponents().iter().rev().cmp(b.exponents().iter().rev())
}

fn v_min(m: &BTreeMap<MultiIndex, Rational>) -> Option<(&MultiIndex, &Rational)> {
    m.iter().min_by(|a, b| v_cmp(a.0, b.0))
}

/// Order `s` of `F'` at the seed, read off the layers the seed determines.
pub fn detect_vanishing_order(poly: &AlgebraicPoly, seed: &QSeries) -> Result<u32, EisensteinError> {
    if seed.num_vars() != poly.num_vars() {
        return Err(EisensteinError::SeedVars { expected: poly.num_vars(), found: seed.num_vars() });
    }
    let t = seed.trunc_degree();
    if !poly.eval_series(seed, t).is_zero() {
        return Err(EisensteinError::NotARoot(t + 1));
    }
    poly.derivative_x().eval_series(seed, t).order().ok_or(EisensteinError::DerivativeVanishes(t))
}

impl AlgebraicSeriesSpec {
    pub fn new(poly: AlgebraicPoly, seed: QSeries) -> Result<Self, EisensteinError> {
        let s = detect_vanishing_order(&poly, &seed)?;
        let t = seed.trunc_degree();
        // a root known modulo m^{t+1} makes F vanish modulo m^{t+s+1}
        if !poly.eval_series(&seed, t + s).is_zero() {
            return Err(EisensteinError::NotARoot(t + s + 1));
        }
        let pivot_poly = poly.derivative_x().eval_series(&seed, s).layer(s).clone();
        let (idx, d) = v_min(&pivot_poly).expect("order is s");
        Ok(AlgebraicSeriesSpec { pivot_index: idx.clone(), pivot_d: d.clone(), poly, seed, s, pivot_poly })
    }

    /// Convenience constructor for `n = 1` with seed coefficients `[a_0, ..., a_t]`.
    pub fn univariate(terms: &[(u32, u32, Rational)], seed: &[Rational]) -> Result<Self, EisensteinError> {
        let terms: Vec<(Vec<u32>, Rational)> = terms.iter().map(|(a, k, c)| (vec![*a, *k], c.clone())).collect();
        let poly = AlgebraicPoly::new(1, &terms)?;
        let t = seed.len().saturating_sub(1) as u32;
        let mut s = QSeries::q_zero(1, t);
        for (i, c) in seed.iter().enumerate() {
            s.set_coeff(MultiIndex::new(vec![i as u32]), c.clone());
        }
        Self::new(poly, s)
    }
}

/// Exact quotient of homogeneous polynomials, eliminating valuation-minimal terms first.
fn divide_homogeneous(
    num: &BTreeMap<MultiIndex, Rational>,
    spec: &AlgebraicSeriesSpec,
    degree: u32,
) -> Result<BTreeMap<MultiIndex, Rational>, EisensteinError> {
    let mut rem = num.clone();
    let mut quot = BTreeMap::new();
    let lead = &spec.pivot_index;
    let inv = spec.pivot_d.recip();
    while let Some((m, c)) = v_min(&rem) {
        if !lead.divides_into(m) {
            return Err(EisensteinError::DivisionFailure(degree));
        }
        let q: Vec<u32> = m.exponents().iter().zip(lead.exponents()).map(|(a, b)| a - b).collect();
        let q = MultiIndex::new(q);
        let c = c * &inv;
        for (i, a) in &spec.pivot_poly {
            add_into(&Rationals, &mut rem, i.add(&q), &-(a * &c));
        }
        quot.insert(q, c);
    }
    Ok(quot)
}

fn extend_to(phi: &QSeries, d: u32) -> QSeries {
    let mut out = QSeries::q_zero(phi.num_vars(), d);
    for (i, c) in phi.terms() {
        if i.degree() <= d {
            out.set_coeff(i.clone(), c.clone());
        }
    }
    out
}

/// `φ` through degree `d` by the graded recursion.
pub fn coefficients_by_recursion(spec: &AlgebraicSeriesSpec, d: u32) -> Result<QSeries, EisensteinError> {
    let t = spec.seed.trunc_degree();
    let mut phi = extend_to(&spec.seed, d);
    for e in t + 1..=d {
        let layer = spec.poly.eval_series(&phi, e + spec.s).layer(e + spec.s).iter().map(|(i, c)| (i.clone(), -c)).collect();
        let q = divide_homogeneous(&layer, spec, e)?;
        phi.set_layer(e, q);
    }
    Ok(phi)
}

/// `φ` through degree `d` by Newton's iteration `X ← X - F(X)/F'(X)`; needs `s = 0`.
pub fn coefficients_by_hensel(spec: &AlgebraicSeriesSpec, d: u32) -> Result<QSeries, EisensteinError> {
    assert_eq!(spec.s, 0, "Hensel lifting needs a unit derivative");
    let dpoly = spec.poly.derivative_x();
    let mut known = spec.seed.trunc_degree();
    let mut phi = extend_to(&spec.seed, d.max(known));
    while known < d {
        let cap = (2 * known + 1).min(d);
        let num = spec.poly.eval_series(&phi, cap);
        let den = dpoly.eval_series(&phi, cap).inverse()?;
        let step = num.mul_trunc(&den, cap);
        phi = phi.try_sub(&extend_to(&step, d))?;
        known = cap;
    }
    Ok(phi.truncate(d))
}

/// `φ` through degree `d`; the étale case `s = 0` uses Hensel lifting.
pub fn coefficients_up_to(spec: &AlgebraicSeriesSpec, d: u32) -> Result<QSeries, EisensteinError> {
    if d <= spec.seed.trunc_degree() {
        return Ok(spec.seed.truncate(d));
    }
    if spec.s == 0 {
        coefficients_by_hensel(spec, d)
    } else {
        coefficients_by_recursion(spec, d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenominatorSupport {
    pub primes: BTreeSet<BigUint>,
    /// Product of the primes.
    pub n: BigUint,
}

/// Primes dividing some coefficient denominator of `φ`.
pub fn denominator_support(phi: &QSeries) -> DenominatorSupport {
    let mut primes: BTreeSet<BigUint> = BTreeSet::new();
    let mut seen: BTreeSet<BigUint> = BTreeSet::new();
    for (_, c) in phi.terms() {
        let mut den = c.denom().magnitude().clone();
        if den.is_one() || !seen.insert(den.clone()) {
            continue;
        }
        for p in &primes {
            while den.is_multiple_of(p) {
                den /= p;
            }
        }
        if !den.is_one() {
            primes.extend(factorize(&den).into_keys());
        }
    }
    let n = primes.iter().fold(BigUint::one(), |a, p| a * p);
    DenominatorSupport { primes, n }
}

impl DenominatorSupport {
    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

impl Default for DenominatorSupport {
    fn default() -> Self {
        DenominatorSupport { primes: BTreeSet::new(), n: BigUint::one() }
    }
}
