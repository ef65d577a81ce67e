//! Coefficient rings for series and matrices.
//!
//! A ring is a small context value (`Rationals`, `PAdicField { prime, precision }`)
//! that knows how to build and combine its elements, so p-adic coefficients can carry
//! their prime and precision without a global setting.

use std::fmt::Debug;

use num_traits::{One, Zero};

use crate::arith::{rational_valuation, Rational};
use crate::padic::PAdicNumber;

pub trait CoeffRing: Clone + Debug + PartialEq + Send + Sync {
    type Elem: Clone + Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// `None` when `a` is zero (or not invertible).
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn from_rational(&self, r: &Rational) -> Self::Elem;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn from_int(&self, n: i64) -> Self::Elem {
        self.from_rational(&Rational::from_integer(n.into()))
    }

    /// Pivot preference for elimination: smaller is better.
    fn pivot_rank(&self, a: &Self::Elem) -> i64;

    /// p-adic valuation relative to `p`, where meaningful.
    fn valuation_at(&self, a: &Self::Elem, p: u64) -> Option<i64>;
}

/// The field Q with exact arithmetic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

impl CoeffRing for Rationals {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn inv(&self, a: &Rational) -> Option<Rational> {
        (!a.is_zero()).then(|| a.recip())
    }
    fn from_rational(&self, r: &Rational) -> Rational {
        r.clone()
    }
    fn pivot_rank(&self, a: &Rational) -> i64 {
        // prefer short entries to limit coefficient growth
        (a.numer().bits() + a.denom().bits()) as i64
    }
    fn valuation_at(&self, a: &Rational, p: u64) -> Option<i64> {
        rational_valuation(a, p)
    }
}

/// Q_p at a fixed relative precision cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PAdicField {
    pub prime: u64,
    pub precision: u32,
}

impl PAdicField {
    pub fn new(prime: u64, precision: u32) -> Result<Self, crate::padic::PadicError> {
        crate::padic::check_prime(prime)?;
        if precision == 0 {
            return Err(crate::padic::PadicError::BadPrecision);
        }
        Ok(PAdicField { prime, precision })
    }
}

impl CoeffRing for PAdicField {
    type Elem = PAdicNumber;

    fn zero(&self) -> PAdicNumber {
        PAdicNumber::zero(self.prime)
    }
    fn one(&self) -> PAdicNumber {
        PAdicNumber::one(self.prime, self.precision)
    }
    fn is_zero(&self, a: &PAdicNumber) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &PAdicNumber, b: &PAdicNumber) -> PAdicNumber {
        a.add(b)
    }
    fn neg(&self, a: &PAdicNumber) -> PAdicNumber {
        a.neg()
    }
    fn mul(&self, a: &PAdicNumber, b: &PAdicNumber) -> PAdicNumber {
        a.mul(b)
    }
    fn inv(&self, a: &PAdicNumber) -> Option<PAdicNumber> {
        a.inv().ok()
    }
    fn from_rational(&self, r: &Rational) -> PAdicNumber {
        PAdicNumber::from_rational_trusted(r, self.prime, self.precision)
    }
    fn pivot_rank(&self, a: &PAdicNumber) -> i64 {
        a.valuation().unwrap_or(i64::MAX)
    }
    fn valuation_at(&self, a: &PAdicNumber, p: u64) -> Option<i64> {
        debug_assert_eq!(p, self.prime);
        a.valuation()
    }
}
