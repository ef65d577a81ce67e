//! Capped-precision p-adic numbers.
//!
//! A nonzero value is stored as `p^valuation * unit` where `unit` is known modulo
//! `p^precision` and is prime to `p`. A zero remembers the absolute precision it is
//! known to (`O(p^k)`), or is exact.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{is_prime, mod_inverse, prime_power, split_prime_power, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not an odd prime")]
    BadPrime(u64),
    #[error("precision must be positive")]
    BadPrecision,
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm diverges: valuation of u - 1 is {0:?}, need at least 1")]
    LogDiverges(Option<i64>),
    #[error("exponential diverges: valuation {0:?} is below 1")]
    ExpDiverges(Option<i64>),
    #[error("{0} is not a p-adic unit")]
    NotAUnit(String),
    #[error("operands live in different fields (p = {0} and p = {1})")]
    PrimeMismatch(u64, u64),
}

const EXACT: i64 = i64::MAX;

/// Relative precision given to `exp(0)` when the zero is exact.
pub const EXACT_ONE_PRECISION: u32 = 64;

/// Values of valuation at least this are stored as zero modulo `p^VALUATION_CAP`.
pub const VALUATION_CAP: i64 = 1 << 40;

/// Longest run of trailing zero digits written out by `digit_string`.
const MAX_TRAILING_ZEROS: i64 = 64;

/// An element of Q_p at capped relative precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicNumber {
    prime: u64,
    // For zero: the absolute precision exponent, or EXACT.
    valuation: i64,
    unit: BigInt,
    precision: u32,
}

pub fn check_prime(p: u64) -> Result<(), PadicError> {
    if p == 2 || !is_prime(p) {
        Err(PadicError::BadPrime(p))
    } else {
        Ok(())
    }
}

fn pow_p(p: u64, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

impl PAdicNumber {
    /// Image of `r` in Q_p with `precision` significant digits.
    pub fn from_rational(r: &Rational, prime: u64, precision: u32) -> Result<Self, PadicError> {
        check_prime(prime)?;
        if precision == 0 {
            return Err(PadicError::BadPrecision);
        }
        Ok(Self::from_rational_trusted(r, prime, precision))
    }

    pub(crate) fn from_rational_trusted(r: &Rational, prime: u64, precision: u32) -> Self {
        if r.is_zero() {
            return Self::zero(prime);
        }
        let (vn, un) = split_prime_power(r.numer(), prime);
        let (vd, ud) = split_prime_power(r.denom(), prime);
        let modulus = pow_p(prime, precision);
        let inv = mod_inverse(&ud, &modulus).expect("denominator prime to p");
        let unit = (un * inv).mod_floor(&modulus);
        PAdicNumber {
            prime,
            valuation: vn as i64 - vd as i64,
            unit,
            precision,
        }
    }

    pub fn from_integer(n: i64, prime: u64, precision: u32) -> Result<Self, PadicError> {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)), prime, precision)
    }

    /// Exact zero.
    pub fn zero(prime: u64) -> Self {
        PAdicNumber { prime, valuation: EXACT, unit: BigInt::zero(), precision: 0 }
    }

    /// Zero known only modulo `p^abs_precision`.
    pub fn zero_to(prime: u64, abs_precision: i64) -> Self {
        PAdicNumber { prime, valuation: abs_precision, unit: BigInt::zero(), precision: 0 }
    }

    pub fn one(prime: u64, precision: u32) -> Self {
        PAdicNumber { prime, valuation: 0, unit: BigInt::one(), precision }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.valuation)
        }
    }

    /// Unit part modulo `p^precision` (zero for zero).
    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// Relative precision; zero for zero values.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.is_zero() && self.valuation == EXACT
    }

    /// The `k` with the value known modulo `p^k`; `None` for an exact zero.
    pub fn abs_precision(&self) -> Option<i64> {
        if self.is_zero() {
            (self.valuation != EXACT).then_some(self.valuation)
        } else {
            Some(self.valuation + self.precision as i64)
        }
    }

    /// |x|_p as an exact rational.
    pub fn abs_value(&self) -> Rational {
        match self.valuation() {
            None => Rational::zero(),
            Some(v) => prime_power(self.prime, -v),
        }
    }

    /// Rational representative `p^v * unit`.
    pub fn lift(&self) -> Rational {
        match self.valuation() {
            None => Rational::zero(),
            Some(v) => Rational::from_integer(self.unit.clone()) * prime_power(self.prime, v),
        }
    }

    /// Residue of a p-integral value modulo `p^k`, as an integer in `[0, p^k)`.
    pub fn residue(&self, k: u32) -> Option<BigInt> {
        let modulus = pow_p(self.prime, k);
        if self.is_zero() {
            return Some(BigInt::zero());
        }
        if self.valuation < 0 {
            return None;
        }
        if self.valuation >= k as i64 {
            return Some(BigInt::zero());
        }
        let lifted = self.lift();
        Some(lifted.numer().mod_floor(&modulus))
    }

    /// Re-caps the relative precision (never increases it).
    pub fn truncate(&self, cap: u32) -> Self {
        if self.is_zero() || cap >= self.precision {
            return self.clone();
        }
        PAdicNumber {
            prime: self.prime,
            valuation: self.valuation,
            unit: self.unit.mod_floor(&pow_p(self.prime, cap)),
            precision: cap,
        }
    }

    fn assert_same_field(&self, other: &Self) {
        assert_eq!(self.prime, other.prime, "mixing p-adic numbers over different primes");
    }

    /// Sum; the absolute precision is the smaller of the operands'.
    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        let p = self.prime;
        let abs = self.abs_precision().unwrap().min(other.abs_precision().unwrap());
        let vmin = self.valuation.min(other.valuation);
        if abs <= vmin {
            return Self::zero_to(p, abs);
        }
        let width = (abs - vmin) as u32;
        let scaled = |x: &Self| -> BigInt {
            if x.is_zero() || x.valuation - vmin >= width as i64 {
                BigInt::zero()
            } else {
                &x.unit * pow_p(p, (x.valuation - vmin) as u32)
            }
        };
        let sum = (scaled(self) + scaled(other)).mod_floor(&pow_p(p, width));
        if sum.is_zero() {
            return Self::zero_to(p, abs);
        }
        let (extra, unit) = split_prime_power(&sum, p);
        let precision = width - extra;
        PAdicNumber {
            prime: p,
            valuation: vmin + extra as i64,
            unit: unit.mod_floor(&pow_p(p, precision)),
            precision,
        }
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        PAdicNumber {
            prime: self.prime,
            valuation: self.valuation,
            unit: pow_p(self.prime, self.precision) - &self.unit,
            precision: self.precision,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let p = self.prime;
        if self.is_exact_zero() || other.is_exact_zero() {
            return Self::zero(p);
        }
        let v = (self.valuation + other.valuation).min(VALUATION_CAP);
        match (self.is_zero(), other.is_zero()) {
            (false, false) if v < VALUATION_CAP => {
                let precision = self.precision.min(other.precision);
                PAdicNumber {
                    prime: p,
                    valuation: v,
                    unit: (&self.unit * &other.unit).mod_floor(&pow_p(p, precision)),
                    precision,
                }
            }
            _ => Self::zero_to(p, v),
        }
    }

    pub fn inv(&self) -> Result<Self, PadicError> {
        if self.is_zero() {
            return Err(PadicError::DivisionByZero);
        }
        let modulus = pow_p(self.prime, self.precision);
        Ok(PAdicNumber {
            prime: self.prime,
            valuation: -self.valuation,
            unit: mod_inverse(&self.unit, &modulus).expect("unit part is invertible"),
            precision: self.precision,
        })
    }

    /// Quotient; non-unit divisors shift the valuation.
    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        if self.prime != other.prime {
            return Err(PadicError::PrimeMismatch(self.prime, other.prime));
        }
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut result = PAdicNumber::one(self.prime, self.precision.max(1));
        if self.is_zero() {
            return if e == 0 { result } else { self.mul(&result) };
        }
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        result
    }

    /// True when the two values agree modulo the coarser of their precisions.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// Base-`p` digits of the representative, most significant first, with a radix
    /// point when the valuation is negative. Digits are separated by spaces when
    /// `p > 10`.
    pub fn digit_string(&self) -> String {
        if self.is_zero() {
            return match self.abs_precision() {
                None => "0".to_string(),
                Some(k) => format!("O({}^{})", self.prime, k),
            };
        }
        let p = BigInt::from(self.prime);
        let mut digits: Vec<String> = Vec::new();
        let mut u = self.unit.clone();
        for _ in 0..self.precision {
            let (q, r) = u.div_rem(&p);
            digits.push(r.to_string());
            u = q;
        }
        // digits[i] is the coefficient of p^(valuation + i)
        let mut out: Vec<String> = Vec::new();
        let v = self.valuation;
        if v > MAX_TRAILING_ZEROS {
            digits.reverse();
            let sep = if self.prime > 10 { " " } else { "" };
            return format!("{}*{}^{}", digits.join(sep), self.prime, v);
        }
        let top = v + self.precision as i64 - 1;
        let bottom = v.min(0);
        let mut e = top.max(0);
        while e >= bottom {
            if e == -1 {
                out.push(".".to_string());
            }
            let d = if e >= v && e <= top { digits[(e - v) as usize].clone() } else { "0".to_string() };
            out.push(d);
            e -= 1;
        }
        let sep = if self.prime > 10 { " " } else { "" };
        out.join(sep).replace(&format!("{sep}.{sep}"), ".")
    }
}

impl fmt::Display for PAdicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.valuation() {
            None => write!(f, "{}", self.digit_string()),
            Some(v) => write!(f, "{} * {}^{} + O({}^{})", self.unit, self.prime, v, self.prime, v + self.precision as i64),
        }
    }
}

/// Smallest `M >= 1` with `b^M ≡ 1 (mod p)`; divides `p - 1`.
pub fn stabilizing_exponent(b: &PAdicNumber) -> Result<u64, PadicError> {
    if b.valuation() != Some(0) {
        return Err(PadicError::NotAUnit(b.to_string()));
    }
    let p = b.prime;
    let residue = (b.unit() % BigInt::from(p)).to_u64().expect("residue fits");
    let mut acc = residue;
    let mut m = 1u64;
    while acc != 1 {
        acc = ((acc as u128 * residue as u128) % p as u128) as u64;
        m += 1;
    }
    Ok(m)
}

fn floor_log(k: u64, p: u64) -> i64 {
    let mut e = 0;
    let mut pk = p;
    while pk <= k {
        e += 1;
        pk = pk.saturating_mul(p);
    }
    e
}

fn exact_integer(k: u64, p: u64, precision: u32) -> PAdicNumber {
    PAdicNumber::from_rational_trusted(&Rational::from_integer(BigInt::from(k)), p, precision)
}

/// p-adic logarithm of a principal unit, summed to the input's precision.
pub fn padic_log(u: &PAdicNumber) -> Result<PAdicNumber, PadicError> {
    let p = u.prime;
    if u.valuation() != Some(0) {
        return Err(PadicError::LogDiverges(u.valuation()));
    }
    let x = u.sub(&PAdicNumber::one(p, u.precision));
    if x.is_zero() {
        return Ok(x);
    }
    let v = x.valuation;
    if v < 1 {
        return Err(PadicError::LogDiverges(Some(v)));
    }
    let target = x.abs_precision().expect("inexact input");
    let work = u.precision + 2 * floor_log(target as u64 * 2, p) as u32 + 8;
    let mut sum = PAdicNumber::zero(p);
    let mut power = x.clone();
    let mut k = 1u64;
    while (k as i64) * v - floor_log(k, p) < target {
        let term = power.div(&exact_integer(k, p, work))?;
        sum = if k % 2 == 1 { sum.add(&term) } else { sum.sub(&term) };
        power = power.mul(&x);
        k += 1;
    }
    Ok(sum)
}

/// p-adic exponential; defined for valuation at least 1 (p odd).
pub fn padic_exp(x: &PAdicNumber) -> Result<PAdicNumber, PadicError> {
    let p = x.prime;
    let target = match x.abs_precision() {
        None => return Ok(PAdicNumber::one(p, EXACT_ONE_PRECISION)),
        Some(a) => a,
    };
    if x.is_zero() {
        if target < 1 {
            return Err(PadicError::ExpDiverges(None));
        }
        return Ok(PAdicNumber::one(p, target as u32));
    }
    let v = x.valuation;
    if v < 1 {
        return Err(PadicError::ExpDiverges(Some(v)));
    }
    let work = x.precision + target as u32 + 8;
    let mut sum = PAdicNumber::one(p, target as u32);
    let mut power = x.clone();
    let mut factorial = exact_integer(1, p, work);
    let mut k = 1u64;
    loop {
        factorial = factorial.mul(&exact_integer(k, p, work));
        // v_p(k!) <= (k-1)/(p-1), and this lower bound on the term valuation is increasing
        if (k as i64) * v - ((k as i64 - 1) / (p as i64 - 1)) >= target {
            break;
        }
        sum = sum.add(&power.div(&factorial)?);
        power = power.mul(x);
        k += 1;
    }
    Ok(sum)
}

impl PAdicNumber {
    pub fn log(&self) -> Result<PAdicNumber, PadicError> {
        padic_log(self)
    }

    pub fn exp(&self) -> Result<PAdicNumber, PadicError> {
        padic_exp(self)
    }

    /// Signed integer view of a p-integral value, reduced into `(-p^k/2, p^k/2]`.
    pub fn balanced_residue(&self, k: u32) -> Option<BigInt> {
        let r = self.residue(k)?;
        let m = pow_p(self.prime, k);
        Some(if &r * 2 > m { r - m } else { r })
    }

    pub fn is_negative_lift(&self) -> bool {
        self.lift().is_negative()
    }
}
