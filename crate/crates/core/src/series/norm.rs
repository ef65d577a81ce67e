//! Gauss norms `‖φ‖_ρ = max_I |a_I|_p ρ^{|I|}` and the ideals `A^(r)`.

use num_traits::{Signed, Zero};
use thiserror::Error;

use super::{MultiIndex, MultiSeries};
use crate::arith::{prime_power, rational_pow, Rational};
use crate::ring::CoeffRing;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormError {
    #[error("radius must be positive")]
    NonPositiveRadius,
}

/// Exact Gauss norm: `value = p^{-valuation} · ρ^{degree}` at the witness monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussNorm {
    pub prime: u64,
    pub rho: Rational,
    /// `None` for the zero series.
    pub witness: Option<MultiIndex>,
    pub valuation: i64,
    pub degree: u32,
}

impl GaussNorm {
    pub fn value(&self) -> Rational {
        match self.witness {
            None => Rational::zero(),
            Some(_) => prime_power(self.prime, -self.valuation) * rational_pow(&self.rho, self.degree as i64),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.witness.is_none()
    }
}

/// Gauss norm at radius `rho` with respect to `p`; ties go to the graded-lex first monomial.
pub fn gauss_norm<R: CoeffRing>(phi: &MultiSeries<R>, p: u64, rho: &Rational) -> Result<GaussNorm, NormError> {
    if !rho.is_positive() {
        return Err(NormError::NonPositiveRadius);
    }
    let mut best: Option<(Rational, &MultiIndex, i64)> = None;
    for (i, c) in phi.terms() {
        let Some(v) = phi.ring().valuation_at(c, p) else { continue };
        let value = prime_power(p, -v) * rational_pow(rho, i.degree() as i64);
        if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
            best = Some((value, i, v));
        }
    }
    Ok(match best {
        None => GaussNorm { prime: p, rho: rho.clone(), witness: None, valuation: 0, degree: 0 },
        Some((_, i, v)) => GaussNorm { prime: p, rho: rho.clone(), witness: Some(i.clone()), valuation: v, degree: i.degree() },
    })
}

/// True iff every monomial has degree >= 2 in the variables `x_{r+1}, ..., x_n`.
pub fn in_subspace_ar<R: CoeffRing>(phi: &MultiSeries<R>, r: usize) -> bool {
    phi.terms().all(|(i, _)| i.tail_degree(r) >= 2)
}
