//! Truncated multivariate power series over an exact coefficient ring.
//!
//! Coefficients are stored by total degree: layer `d` is a sorted sparse map of the
//! degree-`d` monomials. Every series has a hard truncation degree `N`; terms of
//! degree above `N` are discarded and binary operations work at the smaller `N`.

mod compose;
mod index;
mod norm;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::arith::Rational;
use crate::ring::{CoeffRing, Rationals};

pub use compose::SeriesTuple;
pub(crate) use compose::{product_upto, PowerCache};
pub use index::MultiIndex;
pub use norm::{gauss_norm, in_subspace_ar, GaussNorm, NormError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("variable count mismatch: {0} vs {1}")]
    VarMismatch(usize, usize),
    #[error("tuple has {found} components, expected {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("component {0} has a nonzero constant term")]
    NonZeroConstant(usize),
    #[error("linear part is singular")]
    SingularLinearPart,
    #[error("series inverse needs an invertible constant term")]
    NonInvertibleConstant,
}

/// Series with exact rational coefficients.
pub type QSeries = MultiSeries<Rationals>;

#[derive(Clone, PartialEq)]
pub struct MultiSeries<R: CoeffRing = Rationals> {
    ring: R,
    num_vars: usize,
    trunc_degree: u32,
    layers: Vec<BTreeMap<MultiIndex, R::Elem>>,
}

impl<R: CoeffRing> MultiSeries<R> {
    pub fn zero(ring: R, num_vars: usize, trunc_degree: u32) -> Self {
        MultiSeries {
            ring,
            num_vars,
            trunc_degree,
            layers: vec![BTreeMap::new(); trunc_degree as usize + 1],
        }
    }

    pub fn constant(ring: R, num_vars: usize, trunc_degree: u32, c: R::Elem) -> Self {
        let mut s = Self::zero(ring, num_vars, trunc_degree);
        s.set_coeff(MultiIndex::zeros(num_vars), c);
        s
    }

    pub fn one(ring: R, num_vars: usize, trunc_degree: u32) -> Self {
        let one = ring.one();
        Self::constant(ring, num_vars, trunc_degree, one)
    }

    /// The coordinate function `x_i` (0-based).
    pub fn variable(ring: R, num_vars: usize, trunc_degree: u32, i: usize) -> Self {
        let one = ring.one();
        Self::monomial(ring, trunc_degree, MultiIndex::unit(num_vars, i), one)
    }

    pub fn monomial(ring: R, trunc_degree: u32, index: MultiIndex, c: R::Elem) -> Self {
        let mut s = Self::zero(ring, index.len(), trunc_degree);
        s.set_coeff(index, c);
        s
    }

    /// Builds a series from terms, summing repeated indices and dropping terms above
    /// the truncation degree.
    pub fn from_terms<I>(ring: R, num_vars: usize, trunc_degree: u32, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (MultiIndex, R::Elem)>,
    {
        let mut s = Self::zero(ring, num_vars, trunc_degree);
        for (idx, c) in terms {
            if idx.len() != num_vars {
                return Err(SeriesError::VarMismatch(num_vars, idx.len()));
            }
            s.add_to_coeff(idx, &c);
        }
        Ok(s)
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn trunc_degree(&self) -> u32 {
        self.trunc_degree
    }

    pub fn coeff(&self, index: &MultiIndex) -> R::Elem {
        let d = index.degree();
        if d > self.trunc_degree {
            return self.ring.zero();
        }
        self.layers[d as usize].get(index).cloned().unwrap_or_else(|| self.ring.zero())
    }

    /// Sets a coefficient; zero removes the term, indices above `N` are ignored.
    pub fn set_coeff(&mut self, index: MultiIndex, c: R::Elem) {
        debug_assert_eq!(index.len(), self.num_vars);
        let d = index.degree();
        if d > self.trunc_degree {
            return;
        }
        let layer = &mut self.layers[d as usize];
        if self.ring.is_zero(&c) {
            layer.remove(&index);
        } else {
            layer.insert(index, c);
        }
    }

    pub fn add_to_coeff(&mut self, index: MultiIndex, c: &R::Elem) {
        let d = index.degree();
        if d > self.trunc_degree || self.ring.is_zero(c) {
            return;
        }
        add_into(&self.ring, &mut self.layers[d as usize], index, c);
    }

    /// Homogeneous component of degree `d`. Panics if `d > N`.
    pub fn layer(&self, d: u32) -> &BTreeMap<MultiIndex, R::Elem> {
        &self.layers[d as usize]
    }

    pub fn set_layer(&mut self, d: u32, layer: BTreeMap<MultiIndex, R::Elem>) {
        if d <= self.trunc_degree {
            let ring = self.ring.clone();
            self.layers[d as usize] = layer.into_iter().filter(|(_, c)| !ring.is_zero(c)).collect();
        }
    }

    /// Nonzero terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &R::Elem)> {
        self.layers.iter().flat_map(|l| l.iter())
    }

    pub fn num_terms(&self) -> usize {
        self.layers.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(BTreeMap::is_empty)
    }

    /// Lowest degree carrying a nonzero term.
    pub fn order(&self) -> Option<u32> {
        self.layers.iter().position(|l| !l.is_empty()).map(|d| d as u32)
    }

    /// Highest degree carrying a nonzero term.
    pub fn max_degree(&self) -> Option<u32> {
        self.layers.iter().rposition(|l| !l.is_empty()).map(|d| d as u32)
    }

    pub fn constant_term(&self) -> R::Elem {
        self.coeff(&MultiIndex::zeros(self.num_vars))
    }

    /// Drops everything above degree `n` (no-op when `n >= N`).
    pub fn truncate(&self, n: u32) -> Self {
        let n = n.min(self.trunc_degree);
        MultiSeries {
            ring: self.ring.clone(),
            num_vars: self.num_vars,
            trunc_degree: n,
            layers: self.layers[..=n as usize].to_vec(),
        }
    }

    /// `x_var * self`, with truncation degree `N + 1`.
    pub fn shift_by_variable(&self, var: usize) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.num_vars, self.trunc_degree + 1);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d + 1] = layer.iter().map(|(i, c)| (i.raise(var), c.clone())).collect();
        }
        out
    }

    /// Same coefficients read as a series in more variables (new variables appended).
    pub fn embed(&self, num_vars: usize) -> Self {
        assert!(num_vars >= self.num_vars);
        let mut out = Self::zero(self.ring.clone(), num_vars, self.trunc_degree);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d] = layer.iter().map(|(i, c)| (i.extend(num_vars), c.clone())).collect();
        }
        out
    }

    fn check_vars(&self, other: &Self) -> Result<(), SeriesError> {
        if self.num_vars != other.num_vars {
            Err(SeriesError::VarMismatch(self.num_vars, other.num_vars))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_vars(other)?;
        let n = self.trunc_degree.min(other.trunc_degree);
        let mut out = self.truncate(n);
        for d in 0..=n as usize {
            for (i, c) in &other.layers[d] {
                add_into(&self.ring, &mut out.layers[d], i.clone(), c);
            }
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_add(&other.neg_series())
    }

    pub fn neg_series(&self) -> Self {
        self.map_coeffs(|c| self.ring.neg(c))
    }

    pub fn scale(&self, c: &R::Elem) -> Self {
        self.map_coeffs(|a| self.ring.mul(a, c))
    }

    fn map_coeffs(&self, f: impl Fn(&R::Elem) -> R::Elem) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.num_vars, self.trunc_degree);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d] = layer
                .iter()
                .map(|(i, c)| (i.clone(), f(c)))
                .filter(|(_, c)| !self.ring.is_zero(c))
                .collect();
        }
        out
    }

    /// Applies `f` to every coefficient, landing in another ring.
    pub fn map_ring<S: CoeffRing>(&self, ring: S, f: impl Fn(&R::Elem) -> S::Elem) -> MultiSeries<S> {
        let mut out = MultiSeries::zero(ring.clone(), self.num_vars, self.trunc_degree);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d] = layer
                .iter()
                .map(|(i, c)| (i.clone(), f(c)))
                .filter(|(_, c)| !ring.is_zero(c))
                .collect();
        }
        out
    }

    /// Truncated product at the smaller truncation degree.
    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_vars(other)?;
        Ok(self.mul_trunc(other, self.trunc_degree.min(other.trunc_degree)))
    }

    /// Product keeping degrees `<= cap` (`cap` must not exceed either operand's `N`).
    pub(crate) fn mul_trunc(&self, other: &Self, cap: u32) -> Self {
        let cap = cap.min(self.trunc_degree).min(other.trunc_degree);
        let mut out = Self::zero(self.ring.clone(), self.num_vars, cap);
        for d in 0..=cap {
            out.layers[d as usize] = self.product_layer(other, d);
        }
        out
    }

    /// Degree-`d` component of `self * other`.
    pub fn product_layer(&self, other: &Self, d: u32) -> BTreeMap<MultiIndex, R::Elem> {
        let mut acc = BTreeMap::new();
        let (Some(oa), Some(ob)) = (self.order(), other.order()) else {
            return acc;
        };
        if oa + ob > d {
            return acc;
        }
        for da in oa..=(d - ob) {
            let db = d - da;
            let (la, lb) = (self.layer(da), other.layer(db));
            if la.is_empty() || lb.is_empty() {
                continue;
            }
            for (ia, ca) in la {
                for (ib, cb) in lb {
                    add_into(&self.ring, &mut acc, ia.add(ib), &self.ring.mul(ca, cb));
                }
            }
        }
        acc.retain(|_, c| !self.ring.is_zero(c));
        acc
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut result = Self::one(self.ring.clone(), self.num_vars, self.trunc_degree);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Multiplicative inverse; needs an invertible constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c0 = self.constant_term();
        let inv0 = self.ring.inv(&c0).ok_or(SeriesError::NonInvertibleConstant)?;
        // u = 1 - c0^{-1} * self has order >= 1; 1/self = c0^{-1} * sum u^k, built layer by layer
        let n = self.trunc_degree;
        let mut out = Self::zero(self.ring.clone(), self.num_vars, n);
        out.layers[0].insert(MultiIndex::zeros(self.num_vars), inv0.clone());
        for d in 1..=n {
            // sum_{j=1..d} self_j * out_{d-j} + c0 * out_d = 0
            let mut acc = BTreeMap::new();
            for j in 1..=d {
                let (ls, lo) = (self.layer(j), out.layer(d - j));
                for (ia, ca) in ls {
                    for (ib, cb) in lo {
                        add_into(&self.ring, &mut acc, ia.add(ib), &self.ring.mul(ca, cb));
                    }
                }
            }
            let neg_inv0 = self.ring.neg(&inv0);
            out.layers[d as usize] = acc
                .into_iter()
                .map(|(i, c)| (i, self.ring.mul(&c, &neg_inv0)))
                .filter(|(_, c)| !self.ring.is_zero(c))
                .collect();
        }
        Ok(out)
    }

    /// Partial derivative with respect to `x_var`; the result keeps `N - 1` exact layers.
    pub fn derivative(&self, var: usize) -> Self {
        let n = self.trunc_degree.saturating_sub(1);
        let mut out = Self::zero(self.ring.clone(), self.num_vars, n);
        for layer in self.layers.iter().skip(1) {
            for (i, c) in layer {
                let e = i.get(var);
                if e == 0 {
                    continue;
                }
                let lowered = i.lower(var);
                out.add_to_coeff(lowered, &self.ring.mul(c, &self.ring.from_int(e as i64)));
            }
        }
        out
    }

    /// `self(λ_1 x_1, ..., λ_n x_n)`.
    pub fn scale_variables(&self, scales: &[R::Elem]) -> Self {
        assert_eq!(scales.len(), self.num_vars);
        let mut out = Self::zero(self.ring.clone(), self.num_vars, self.trunc_degree);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d] = layer
                .iter()
                .map(|(i, c)| (i.clone(), self.ring.mul(c, &monomial_value(&self.ring, i, scales))))
                .filter(|(_, c)| !self.ring.is_zero(c))
                .collect();
        }
        out
    }

    /// Evaluates the polynomial truncation at a point.
    pub fn eval(&self, point: &[R::Elem]) -> R::Elem {
        assert_eq!(point.len(), self.num_vars);
        let mut acc = self.ring.zero();
        for (i, c) in self.terms() {
            acc = self.ring.add(&acc, &self.ring.mul(c, &monomial_value(&self.ring, i, point)));
        }
        acc
    }

    /// Substitutes `x_i = 0` for the listed variables.
    pub fn restrict_zero(&self, vars: &[usize]) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.num_vars, self.trunc_degree);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d] = layer
                .iter()
                .filter(|(i, _)| vars.iter().all(|&v| i.get(v) == 0))
                .map(|(i, c)| (i.clone(), c.clone()))
                .collect();
        }
        out
    }

    /// Keeps the terms whose index satisfies `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.num_vars, self.trunc_degree);
        for (d, layer) in self.layers.iter().enumerate() {
            out.layers[d] = layer.iter().filter(|(i, _)| keep(i)).map(|(i, c)| (i.clone(), c.clone())).collect();
        }
        out
    }
}

pub(crate) fn add_into<R: CoeffRing>(ring: &R, map: &mut BTreeMap<MultiIndex, R::Elem>, idx: MultiIndex, c: &R::Elem) {
    use std::collections::btree_map::Entry;
    match map.entry(idx) {
        Entry::Vacant(v) => {
            v.insert(c.clone());
        }
        Entry::Occupied(mut o) => {
            let s = ring.add(o.get(), c);
            if ring.is_zero(&s) {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

pub(crate) fn monomial_value<R: CoeffRing>(ring: &R, index: &MultiIndex, point: &[R::Elem]) -> R::Elem {
    let mut acc = ring.one();
    for (v, &e) in index.exponents().iter().enumerate() {
        for _ in 0..e {
            acc = ring.mul(&acc, &point[v]);
        }
    }
    acc
}

impl QSeries {
    /// Convenience constructor for rational series from `(exponents, coefficient)` pairs.
    pub fn from_rational_terms(num_vars: usize, trunc_degree: u32, terms: &[(&[u32], Rational)]) -> Self {
        Self::from_terms(
            Rationals,
            num_vars,
            trunc_degree,
            terms.iter().map(|(e, c)| (MultiIndex::new(e.to_vec()), c.clone())),
        )
        .expect("consistent variable count")
    }

    pub fn x(num_vars: usize, trunc_degree: u32, i: usize) -> Self {
        Self::variable(Rationals, num_vars, trunc_degree, i)
    }

    pub fn q_zero(num_vars: usize, trunc_degree: u32) -> Self {
        Self::zero(Rationals, num_vars, trunc_degree)
    }

    pub fn q_constant(num_vars: usize, trunc_degree: u32, c: Rational) -> Self {
        Self::constant(Rationals, num_vars, trunc_degree, c)
    }
}

impl<R: CoeffRing> Add for &MultiSeries<R> {
    type Output = MultiSeries<R>;
    fn add(self, rhs: Self) -> MultiSeries<R> {
        self.try_add(rhs).expect("series variable mismatch")
    }
}

impl<R: CoeffRing> Sub for &MultiSeries<R> {
    type Output = MultiSeries<R>;
    fn sub(self, rhs: Self) -> MultiSeries<R> {
        self.try_sub(rhs).expect("series variable mismatch")
    }
}

impl<R: CoeffRing> Mul for &MultiSeries<R> {
    type Output = MultiSeries<R>;
    fn mul(self, rhs: Self) -> MultiSeries<R> {
        self.try_mul(rhs).expect("series variable mismatch")
    }
}

impl<R: CoeffRing> Neg for &MultiSeries<R> {
    type Output = MultiSeries<R>;
    fn neg(self) -> MultiSeries<R> {
        self.neg_series()
    }
}

impl<R: CoeffRing> fmt::Debug for MultiSeries<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiSeries[n={}, N={}](", self.num_vars, self.trunc_degree)?;
        let mut first = true;
        for (i, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}*x^{:?}", i.exponents())?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.terms() {
            let mono: Vec<String> = i
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { format!("x{}", v + 1) } else { format!("x{}^{}", v + 1, e) })
                .collect();
            let sign = if c < &Rational::from_integer(0.into()) { "-" } else { "+" };
            let mag = if c < &Rational::from_integer(0.into()) { -c.clone() } else { c.clone() };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == Rational::from_integer(1.into()) {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{mag}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}
