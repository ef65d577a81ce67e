//! Orbits in invariant p-adic neighbourhoods of a fixed point, vanishing of
//! exponential sums `Σ a_i b_i^s`, and finite-sample probes for polynomial
//! relations on orbits.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{rational_pow, rational_valuation, Rational};
use crate::dynamics::{jacobian_at_origin, rational_eigenvalues, relation_lattice, AnalyticMap, DynamicsError, RelationLattice, DEFAULT_EXPONENT_BOUND};
use crate::linalg::{self, column_echelon, determinant, invert_matrix, Matrix};
use crate::padic::{check_prime, stabilizing_exponent, PAdicNumber, PadicError};
use crate::ring::{CoeffRing, PAdicField, Rationals};
use crate::series::MultiIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrbitError {
    #[error("neighbourhood level must be at least 1")]
    BadLevel,
    #[error("point has {found} coordinates, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("coefficient of component {component} is not {p}-integral")]
    NotIntegral { component: usize, p: u64 },
    #[error("coordinate {0} of the start point is outside the neighbourhood")]
    NotInNeighbourhood(usize),
    #[error("iterate {step} left the neighbourhood in coordinate {coord}")]
    LeftNeighbourhood { step: usize, coord: usize },
    #[error("precision exhausted at iterate {step}, coordinate {coord}")]
    PrecisionExhausted { step: usize, coord: usize },
    #[error("map is not an isometry on iterates {step} and {next}", next = step + 1)]
    NotIsometric { step: usize },
    #[error("instance needs equally many nonzero a_i and b_i")]
    BadInstance,
    #[error("b_{0} is not a {1}-adic unit")]
    NotAUnit(usize, u64),
    #[error("b_{0} and b_{1} coincide")]
    RepeatedBase(usize, usize),
    #[error("target index {0} out of range")]
    BadTarget(usize),
    #[error("cannot decide whether the sum at s = {0} vanishes at the working precision")]
    PrecisionInsufficient(u64),
    #[error("samples must be distinct and congruent modulo {0}")]
    NotCongruent(u64),
    #[error("divided-difference denominators use up the working precision")]
    DividedDifferencePrecision,
    #[error("start point lies on the coordinate hyperplane x_{0} = 0")]
    OnHyperplane(usize),
    #[error("the eigenvalues generate a group with torsion")]
    Torsion,
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Points all of whose local coordinates have valuation at least `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbourhood {
    pub p: u64,
    pub s: u32,
    pub n: usize,
}

impl Neighbourhood {
    pub fn new(p: u64, s: u32, n: usize) -> Result<Self, OrbitError> {
        check_prime(p)?;
        if s == 0 {
            return Err(OrbitError::BadLevel);
        }
        Ok(Neighbourhood { p, s, n })
    }

    /// Membership of a single coordinate; `None` when the precision cannot decide.
    pub fn coordinate_inside(&self, x: &PAdicNumber) -> Option<bool> {
        match x.valuation() {
            Some(v) => Some(v >= self.s as i64),
            None => match x.abs_precision() {
                None => Some(true),
                Some(a) => (a >= self.s as i64).then_some(true),
            },
        }
    }

    pub fn contains(&self, x: &[PAdicNumber]) -> bool {
        x.len() == self.n && x.iter().all(|c| self.coordinate_inside(c) == Some(true))
    }

    pub fn contains_rational(&self, x: &[Rational]) -> bool {
        x.len() == self.n && x.iter().all(|c| rational_valuation(c, self.p).is_none_or(|v| v >= self.s as i64))
    }

    pub fn point(&self, x: &[Rational], precision: u32) -> Result<Vec<PAdicNumber>, OrbitError> {
        if x.len() != self.n {
            return Err(OrbitError::Dimension { expected: self.n, found: x.len() });
        }
        Ok(x.iter().map(|c| PAdicNumber::from_rational(c, self.p, precision)).collect::<Result<_, _>>()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitReport {
    /// The start point followed by `k` iterates.
    pub points: Vec<Vec<PAdicNumber>>,
    /// `det Df(0)` is a `p`-adic unit.
    pub unit_jacobian: bool,
    /// Consecutive pairs on which `‖f(x) - f(y)‖ = ‖x - y‖` was confirmed.
    pub isometry_checks: usize,
}

type PadicTerms = Vec<Vec<(Vec<u32>, PAdicNumber)>>;

fn padic_terms(f: &AnalyticMap, p: u64, precision: u32) -> Result<PadicTerms, OrbitError> {
    f.components()
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.terms()
                .map(|(idx, a)| {
                    if rational_valuation(a, p).is_some_and(|v| v < 0) {
                        return Err(OrbitError::NotIntegral { component: i, p });
                    }
                    Ok((idx.exponents().to_vec(), PAdicNumber::from_rational(a, p, precision)?))
                })
                .collect()
        })
        .collect()
}

fn eval_padic(terms: &PadicTerms, x: &[PAdicNumber], p: u64, precision: u32) -> Vec<PAdicNumber> {
    let max_deg = terms.iter().flatten().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0);
    let powers: Vec<Vec<PAdicNumber>> = x
        .iter()
        .map(|xi| {
            let mut row = vec![PAdicNumber::one(p, precision)];
            for k in 1..=max_deg as usize {
                row.push(row[k - 1].mul(xi));
            }
            row
        })
        .collect();
    terms
        .iter()
        .map(|comp| {
            comp.iter().fold(PAdicNumber::zero(p), |acc, (e, a)| {
                let m = e.iter().enumerate().fold(a.clone(), |m, (j, &k)| if k == 0 { m } else { m.mul(&powers[j][k as usize]) });
                acc.add(&m)
            })
        })
        .collect()
}

/// `min_i v(x_i)` when the precision determines it.
fn sup_norm_valuation(x: &[PAdicNumber]) -> Option<i64> {
    let m = x.iter().filter_map(|c| c.valuation()).min()?;
    let undecided = x.iter().any(|c| c.valuation().is_none() && c.abs_precision().is_some_and(|a| a <= m));
    (!undecided).then_some(m)
}

/// Iterates `f` from a point of the neighbourhood, checking every iterate.
pub fn iterate_in_neighbourhood(
    f: &AnalyticMap,
    nb: &Neighbourhood,
    x: &[PAdicNumber],
    steps: usize,
) -> Result<OrbitReport, OrbitError> {
    if x.len() != nb.n || f.dim() != nb.n {
        return Err(OrbitError::Dimension { expected: nb.n, found: x.len().min(f.dim()) });
    }
    for (i, c) in x.iter().enumerate() {
        if nb.coordinate_inside(c) != Some(true) {
            return Err(OrbitError::NotInNeighbourhood(i));
        }
    }
    let precision = x.iter().map(|c| c.precision()).max().filter(|&q| q > 0).unwrap_or(32);
    let terms = padic_terms(f, nb.p, precision)?;
    let unit_jacobian = rational_valuation(&determinant(&jacobian_at_origin(f)), nb.p) == Some(0);
    let mut points = vec![x.to_vec()];
    let mut isometry_checks = 0;
    for step in 1..=steps {
        let next = eval_padic(&terms, &points[step - 1], nb.p, precision);
        for (coord, c) in next.iter().enumerate() {
            match nb.coordinate_inside(c) {
                Some(true) => {}
                Some(false) => return Err(OrbitError::LeftNeighbourhood { step, coord }),
                None => return Err(OrbitError::PrecisionExhausted { step, coord }),
            }
        }
        if unit_jacobian && step >= 2 {
            let diff = |a: &[PAdicNumber], b: &[PAdicNumber]| a.iter().zip(b).map(|(u, v)| u.sub(v)).collect::<Vec<_>>();
            let before = sup_norm_valuation(&diff(&points[step - 1], &points[step - 2]));
            let after = sup_norm_valuation(&diff(&next, &points[step - 1]));
            if let (Some(u), Some(v)) = (before, after) {
                if u != v {
                    return Err(OrbitError::NotIsometric { step: step - 2 });
                }
                isometry_checks += 1;
            }
        }
        points.push(next);
    }
    Ok(OrbitReport { points, unit_jacobian, isometry_checks })
}

/// Data of `Σ a_i b_i^s` with rational `a_i ≠ 0` and distinct `p`-adic units `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VanishingSumInstance {
    pub p: u64,
    pub precision: u32,
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
    /// Common exponent with `b_i^M ≡ 1 (mod p)`.
    pub m: u64,
    /// `log(b_i^M)`.
    pub c: Vec<PAdicNumber>,
    /// No nontrivial root of unity lies in the group generated by the `b_i`.
    pub torsion_free: bool,
}

impl VanishingSumInstance {
    pub fn new(a: Vec<Rational>, b: Vec<Rational>, p: u64, precision: u32) -> Result<Self, OrbitError> {
        check_prime(p)?;
        if a.len() != b.len() || a.is_empty() || a.iter().any(Zero::is_zero) {
            return Err(OrbitError::BadInstance);
        }
        for (i, bi) in b.iter().enumerate() {
            if rational_valuation(bi, p) != Some(0) {
                return Err(OrbitError::NotAUnit(i, p));
            }
            if let Some(j) = b[..i].iter().position(|bj| bj == bi) {
                return Err(OrbitError::RepeatedBase(j, i));
            }
        }
        let padic_b: Vec<PAdicNumber> = b.iter().map(|x| PAdicNumber::from_rational(x, p, precision)).collect::<Result<_, _>>()?;
        let m = padic_b.iter().map(stabilizing_exponent).collect::<Result<Vec<_>, _>>()?.into_iter().fold(1u64, |acc, e| acc.lcm(&e));
        let c = padic_b.iter().map(|x| x.pow(m).log()).collect::<Result<Vec<_>, _>>()?;
        let torsion_free = relation_lattice(&b, DEFAULT_EXPONENT_BOUND)?.torsion_free;
        Ok(VanishingSumInstance { p, precision, a, b, m, c, torsion_free })
    }

    /// `Σ a_i b_i^s` in `Q_p` at the given relative precision.
    pub fn value(&self, s: u64, precision: u32) -> PAdicNumber {
        self.a.iter().zip(&self.b).fold(PAdicNumber::zero(self.p), |acc, (a, b)| {
            let a = PAdicNumber::from_rational(a, self.p, precision).expect("checked prime");
            let b = PAdicNumber::from_rational(b, self.p, precision).expect("checked prime");
            acc.add(&a.mul(&b.pow(s)))
        })
    }

    /// `Σ a_i b_i^s` as an exact rational.
    pub fn exact_value(&self, s: u64) -> Rational {
        self.a.iter().zip(&self.b).map(|(a, b)| a * rational_pow(b, s as i64)).sum()
    }
}

/// Zero count of `t ↦ Σ_i a_i b_i^{r + M t}` on `Z_p`, for one residue class `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCertificate {
    pub residue: u64,
    /// The function vanishes for every `t`.
    pub identically_zero: bool,
    /// Strassmann bound on the number of zeros in `Z_p`, when the precision settles it.
    pub zero_bound: Option<usize>,
    /// Zeros with `s = r + M t`, `0 <= s <= S_max`.
    pub zeros_found: usize,
    /// The same zeros counted with multiplicity (read at the working precision).
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingReport {
    pub zeros: BTreeSet<u64>,
    pub s_max: u64,
    pub m: u64,
    /// The `b_i` are pairwise distinct modulo `p^level`.
    pub separation_level: u32,
    /// Indices with the largest `|a_i|`.
    pub leading_block: Vec<usize>,
    pub classes: Vec<ClassCertificate>,
    /// In every class the zeros found, with multiplicity, reach the bound, so no
    /// zero lies beyond the horizon.
    pub complete: bool,
}

/// `Σ_g α_g c_g^k / k!`, the `t^k` coefficient of `Σ_g α_g exp(t c_g)`.
fn exp_sum_coeff(alpha: &[PAdicNumber], c: &[PAdicNumber], k: u64, p: u64, precision: u32) -> Option<PAdicNumber> {
    let mut fact = PAdicNumber::one(p, precision);
    for j in 2..=k {
        fact = fact.mul(&PAdicNumber::from_integer(j as i64, p, precision).ok()?);
    }
    let sum = alpha.iter().zip(c).fold(PAdicNumber::zero(p), |acc, (a, ci)| acc.add(&a.mul(&ci.pow(k))));
    sum.div(&fact).ok()
}

/// Power-series coefficients of `Σ_g α_g exp(t c_g)` and the Strassmann index.
fn strassmann_bound(alpha: &[PAdicNumber], c: &[PAdicNumber], p: u64, precision: u32) -> Option<usize> {
    let valpha = alpha.iter().filter_map(|a| a.valuation()).min()?;
    let vc = c.iter().filter_map(|x| x.valuation()).min().unwrap_or(i64::MAX / 4);
    let bound = |k: i64| valpha + k * vc - (k - 1).max(0) / (p as i64 - 1);
    let mut coeffs: Vec<PAdicNumber> = Vec::new();
    let mut powers: Vec<PAdicNumber> = alpha.to_vec();
    let mut fact = PAdicNumber::one(p, precision);
    let mut k = 0i64;
    loop {
        let sum = powers.iter().fold(PAdicNumber::zero(p), |acc, x| acc.add(x));
        coeffs.push(sum.div(&fact).ok()?);
        let best = coeffs.iter().filter_map(|x| x.valuation()).min();
        if let Some(best) = best {
            if bound(k + 1) > best {
                break;
            }
        }
        if k > 4 * precision as i64 + 64 {
            return None;
        }
        k += 1;
        fact = fact.mul(&PAdicNumber::from_integer(k, p, precision).ok()?);
        powers = powers.iter().zip(c).map(|(x, ci)| x.mul(ci)).collect();
    }
    let best = coeffs.iter().filter_map(|x| x.valuation()).min()?;
    if coeffs.iter().any(|x| x.valuation().is_none() && x.abs_precision().is_none_or(|a| a <= best)) {
        return None;
    }
    coeffs.iter().rposition(|x| x.valuation() == Some(best))
}

/// Exponents `1 <= s <= S_max` with `Σ a_i b_i^s = 0`, together with a finiteness
/// certificate per residue class modulo `M`.
///
/// A sum counts as zero when it vanishes at the working precision, again at twice
/// that precision, and exactly.
pub fn vanishing_exponents(inst: &VanishingSumInstance, s_max: u64) -> Result<VanishingReport, OrbitError> {
    let mut zeros = BTreeSet::new();
    let mut found: Vec<u64> = Vec::new();
    for s in 0..=s_max {
        if !inst.value(s, inst.precision).is_zero() || !inst.value(s, 2 * inst.precision).is_zero() {
            continue;
        }
        if !inst.exact_value(s).is_zero() {
            return Err(OrbitError::PrecisionInsufficient(s));
        }
        found.push(s);
        if s > 0 {
            zeros.insert(s);
        }
    }
    let p = inst.p;
    let prec = inst.precision;
    // group terms with equal b_i^M: their exponentials coincide
    let mut groups: BTreeMap<Rational, Vec<usize>> = BTreeMap::new();
    for (i, b) in inst.b.iter().enumerate() {
        groups.entry(rational_pow(b, inst.m as i64)).or_default().push(i);
    }
    // Σ_g α_g exp(t c_g) with α_g = Σ_{i∈g} a_i b_i^{s}: the class function re-centred at s
    let centred = |s: u64| -> Result<(Vec<PAdicNumber>, Vec<PAdicNumber>), OrbitError> {
        let mut alpha = Vec::new();
        let mut c = Vec::new();
        for idx in groups.values() {
            let a: Rational = idx.iter().map(|&i| &inst.a[i] * rational_pow(&inst.b[i], s as i64)).sum();
            if !a.is_zero() {
                alpha.push(PAdicNumber::from_rational(&a, p, prec)?);
                c.push(inst.c[idx[0]].clone());
            }
        }
        Ok((alpha, c))
    };
    let mut classes = Vec::new();
    for r in 0..inst.m {
        let (alpha, c) = centred(r)?;
        let identically_zero = alpha.is_empty();
        let zero_bound = if identically_zero { None } else { strassmann_bound(&alpha, &c, p, prec) };
        let here: Vec<u64> = found.iter().copied().filter(|s| s % inst.m == r).collect();
        let mut multiplicity = 0;
        if !identically_zero {
            for &s in &here {
                let (alpha, c) = centred(s)?;
                let cap = zero_bound.unwrap_or(0) as u64 + 1;
                let mut k = 1;
                while k <= cap && exp_sum_coeff(&alpha, &c, k, p, prec).is_some_and(|x| x.is_zero()) {
                    k += 1;
                }
                multiplicity += k as usize;
            }
        }
        classes.push(ClassCertificate { residue: r, identically_zero, zero_bound, zeros_found: here.len(), multiplicity });
    }
    let complete = classes.iter().all(|c| c.zero_bound == Some(c.multiplicity));
    let vmin = inst.a.iter().filter_map(|a| rational_valuation(a, p)).min().expect("nonzero a");
    let leading_block = (0..inst.a.len()).filter(|&i| rational_valuation(&inst.a[i], p) == Some(vmin)).collect();
    let separation_level = separation_level(&inst.b, p);
    Ok(VanishingReport { zeros, s_max, m: inst.m, separation_level, leading_block, classes, complete })
}

fn residue_mod(x: &Rational, p: u64, s: u32) -> BigInt {
    let q = BigInt::from(p).pow(s);
    let inv = crate::arith::mod_inverse(x.denom(), &q).expect("p-integral");
    (x.numer() * inv).mod_floor(&q)
}

/// Smallest `s >= 1` with the `b_i` pairwise distinct modulo `p^s`.
fn separation_level(b: &[Rational], p: u64) -> u32 {
    let mut s = 1;
    loop {
        let classes: BTreeSet<BigInt> = b.iter().map(|x| residue_mod(x, p, s)).collect();
        if classes.len() == b.len() {
            return s;
        }
        s += 1;
    }
}

/// `P(x) = Π (x - r)` over residues `r` modulo `p^s` outside the class of `b_{i₀}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatingPolynomial {
    pub p: u64,
    pub level: u32,
    /// Integer coefficients, lowest degree first.
    pub coeffs: Vec<BigInt>,
    /// Residue class of the target modulo `p^level`.
    pub target_class: BigInt,
    /// `v_p(P(b_i))` for each supplied `b_i` (`None` when `P(b_i) = 0`).
    pub valuations: Vec<Option<i64>>,
    /// Both norm properties hold on the supplied points.
    pub verified: bool,
}

impl SeparatingPolynomial {
    /// Roots of `P`: one representative per excluded residue class.
    fn roots(&self) -> Vec<BigInt> {
        if self.coeffs.len() == 1 {
            return Vec::new();
        }
        let q = BigInt::from(self.p).pow(self.level);
        let mut out = Vec::new();
        let mut r = BigInt::zero();
        while r < q {
            if r != self.target_class {
                out.push(r.clone());
            }
            r += 1;
        }
        out
    }

    /// `v_p(P(x))`, computed factor by factor.
    pub fn valuation_at(&self, x: &Rational) -> Option<i64> {
        self.roots().iter().try_fold(0i64, |acc, r| rational_valuation(&(x - Rational::from_integer(r.clone())), self.p).map(|v| acc + v))
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + Rational::from_integer(c.clone()))
    }

    /// `|P(x)| = |P(b_{i₀})|` on the target class and `|P(x)| < |P(b_{i₀})|` elsewhere.
    pub fn separates(&self, target: &Rational, x: &Rational) -> bool {
        if self.coeffs.len() == 1 {
            return true;
        }
        let vt = self.valuation_at(target);
        let vx = self.valuation_at(x);
        if residue_mod(x, self.p, self.level) == self.target_class {
            vx == vt
        } else {
            match (vx, vt) {
                (None, Some(_)) => true,
                (Some(a), Some(b)) => a > b,
                _ => false,
            }
        }
    }
}

/// Separating polynomial for `b_{i₀}`, raising the level until the `b_i` are distinct
/// modulo `p^level`. A single `b` gives the constant 1.
pub fn separating_polynomial(b: &[Rational], target: usize, s: u32, p: u64) -> Result<SeparatingPolynomial, OrbitError> {
    check_prime(p)?;
    if target >= b.len() {
        return Err(OrbitError::BadTarget(target));
    }
    for (i, x) in b.iter().enumerate() {
        if rational_valuation(x, p).is_some_and(|v| v < 0) {
            return Err(OrbitError::NotIntegral { component: i, p });
        }
        if let Some(j) = b[..i].iter().position(|y| y == x) {
            return Err(OrbitError::RepeatedBase(j, i));
        }
    }
    let level = s.max(1);
    if b.len() == 1 {
        let target_class = residue_mod(&b[0], p, level);
        let valuations = vec![Some(0)];
        return Ok(SeparatingPolynomial { p, level, coeffs: vec![BigInt::one()], target_class, valuations, verified: true });
    }
    let level = level.max(separation_level(b, p));
    let target_class = residue_mod(&b[target], p, level);
    let q = BigInt::from(p).pow(level);
    let mut coeffs = vec![BigInt::one()];
    let mut r = BigInt::zero();
    while r < q {
        if r != target_class {
            // multiply by (x - r)
            let mut next = vec![BigInt::zero(); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * &r;
            }
            coeffs = next;
        }
        r += 1;
    }
    let mut poly = SeparatingPolynomial { p, level, coeffs, target_class, valuations: Vec::new(), verified: false };
    poly.valuations = b.iter().map(|x| poly.valuation_at(x)).collect();
    poly.verified = b.iter().all(|x| poly.separates(&b[target], x));
    Ok(poly)
}

/// Exponent samples `j_1, j_2, ...` from one class modulo `M`, accumulating at `limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub residue: u64,
    pub samples: Vec<u64>,
    /// The `p`-adic limit point, when it is an integer.
    pub limit: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    /// Divided difference of `g(s) = Σ a_i b_i^s` over each window of `m + 1`
    /// consecutive samples.
    pub values: Vec<PAdicNumber>,
    /// `Σ a_i g_i(s₀) c_i^m / (M^m m!)`, the value of `g^{(m)}(s₀)/m!`.
    pub limit: Option<PAdicNumber>,
    /// `v_p(value - limit)` per window.
    pub errors: Vec<Option<i64>>,
}

/// Divided differences `Σ_l g(j_l) / Π_{k≠l} (j_l - j_k)` approximating `g^{(m)}(s₀)/m!`.
pub fn interpolation_reduction(inst: &VanishingSumInstance, set: &SampleSet, m: usize) -> Result<InterpolationReport, OrbitError> {
    let p = inst.p;
    let prec = inst.precision;
    let js = &set.samples;
    let distinct: BTreeSet<u64> = js.iter().copied().collect();
    if distinct.len() != js.len() || js.len() < m + 1 || js.iter().any(|j| j % inst.m != set.residue % inst.m) {
        return Err(OrbitError::NotCongruent(inst.m));
    }
    let g: Vec<PAdicNumber> = js.iter().map(|&j| inst.value(j, prec)).collect();
    let mut values = Vec::new();
    for w in 0..=(js.len() - m - 1) {
        let window = w..w + m + 1;
        let mut total = PAdicNumber::zero(p);
        let mut lost = 0i64;
        for l in window.clone() {
            let mut den = Rational::one();
            for k in window.clone() {
                if k != l {
                    den *= Rational::from_integer(BigInt::from(js[l] as i64 - js[k] as i64));
                }
            }
            lost = lost.max(rational_valuation(&den, p).unwrap_or(0));
            total = total.add(&g[l].div(&PAdicNumber::from_rational(&den, p, prec)?)?);
        }
        if lost >= prec as i64 {
            return Err(OrbitError::DividedDifferencePrecision);
        }
        values.push(total);
    }
    let limit = match set.limit {
        None => None,
        Some(s0) => {
            let mm = PAdicNumber::from_integer(inst.m as i64, p, prec)?;
            let r = set.residue % inst.m;
            let t = PAdicNumber::from_integer(s0 - r as i64, p, prec)?.div(&mm)?;
            let mut fact = PAdicNumber::one(p, prec);
            for k in 1..=m {
                fact = fact.mul(&PAdicNumber::from_integer(k as i64, p, prec)?);
            }
            let scale = mm.pow(m as u64).mul(&fact);
            let mut sum = PAdicNumber::zero(p);
            for ((a, b), c) in inst.a.iter().zip(&inst.b).zip(&inst.c) {
                let a = PAdicNumber::from_rational(a, p, prec)?;
                let b = PAdicNumber::from_rational(b, p, prec)?;
                let gi = b.pow(r).mul(&t.mul(c).exp()?);
                sum = sum.add(&a.mul(&gi).mul(&c.pow(m as u64)));
            }
            Some(sum.div(&scale)?)
        }
    };
    let errors = match &limit {
        None => Vec::new(),
        Some(l) => values.iter().map(|v| v.sub(l).valuation()).collect(),
    };
    Ok(InterpolationReport { values, limit, errors })
}

/// Kernel of the monomial-evaluation matrix on a point sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult<E> {
    /// Monomials of degree `<= d`, degree by degree.
    pub monomials: Vec<MultiIndex>,
    /// Coefficient vectors (indexed like `monomials`) of relations vanishing on every point.
    pub kernel: Vec<Vec<E>>,
    /// Fewer points than monomials, so a relation exists for dimension reasons.
    pub underdetermined: bool,
}

impl<E> ProbeResult<E> {
    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }
}

pub fn probe_monomials(n: usize, d: u32) -> Vec<MultiIndex> {
    (0..=d).flat_map(|k| MultiIndex::all_of_degree(n, k)).collect()
}

fn eval_monomial<R: CoeffRing>(ring: &R, idx: &MultiIndex, x: &[R::Elem]) -> R::Elem {
    idx.exponents().iter().zip(x).fold(ring.one(), |acc, (&e, xi)| (0..e).fold(acc, |a, _| ring.mul(&a, xi)))
}

/// Polynomial relations of degree `<= d` satisfied by all points, over any coefficient ring.
pub fn relation_probe_in<R: CoeffRing>(ring: &R, points: &[Vec<R::Elem>], d: u32) -> ProbeResult<R::Elem> {
    let n = points.first().map_or(0, |x| x.len());
    let monomials = probe_monomials(n, d);
    let matrix: Matrix<R::Elem> = points.iter().map(|x| monomials.iter().map(|m| eval_monomial(ring, m, x)).collect()).collect();
    let kernel = linalg::kernel(ring, &matrix, monomials.len());
    ProbeResult { underdetermined: points.len() < monomials.len(), monomials, kernel }
}

/// Exact rational relation probe.
pub fn relation_probe(points: &[Vec<Rational>], d: u32) -> ProbeResult<Rational> {
    relation_probe_in(&Rationals, points, d)
}

/// Evaluates a relation (as returned in a probe kernel) at a point.
pub fn eval_relation<R: CoeffRing>(ring: &R, monomials: &[MultiIndex], coeffs: &[R::Elem], x: &[R::Elem]) -> R::Elem {
    monomials.iter().zip(coeffs).fold(ring.zero(), |acc, (m, c)| ring.add(&acc, &ring.mul(c, &eval_monomial(ring, m, x))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureEstimate {
    /// `rank(H)`, a lower bound for the closure dimension.
    pub lower_bound: usize,
    pub lattice: RelationLattice,
    /// The eigenvalues were squared to remove the sign torsion.
    pub squared: bool,
    /// Rows are exponent vectors of the new monomial coordinates.
    pub monomial_change: Matrix<BigInt>,
    /// Multipliers in the new coordinates: the first `lower_bound` independent, the rest 1.
    pub new_multipliers: Vec<Rational>,
    /// Largest `k` such that the first `k` new coordinates satisfy no relation of degree `<= d`.
    pub independent_directions: usize,
    /// Probe on the orbit in the original coordinates.
    pub raw_probe: ProbeResult<Rational>,
}

fn laurent_monomial(x: &[Rational], exps: &[BigInt]) -> Rational {
    x.iter().zip(exps).fold(Rational::one(), |acc, (xi, e)| acc * rational_pow(xi, e.to_i64().expect("small exponent")))
}

/// Unimodular `U` whose last `n - r` rows span the saturated lattice `L`.
fn complete_basis(lattice: &[Vec<BigInt>], n: usize) -> Matrix<BigInt> {
    if lattice.is_empty() {
        return (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as i32)).collect()).collect();
    }
    let (_, v, _) = column_echelon(&lattice.to_vec(), n);
    let vq: Matrix<Rational> = v.iter().map(|row| row.iter().map(|x| Rational::from_integer(x.clone())).collect()).collect();
    let inv = invert_matrix(&Rationals, &vq).expect("unimodular");
    let inv: Matrix<BigInt> = inv.iter().map(|row| row.iter().map(|x| x.to_integer()).collect()).collect();
    let k = lattice.len();
    inv[k..].iter().chain(inv[..k].iter()).cloned().collect()
}

/// Orbit of `start` under `x ↦ λx` compared against the rank of the group generated by `λ`.
pub fn closure_dimension_estimate(lambda: &[Rational], start: &[Rational], samples: usize, d: u32) -> Result<ClosureEstimate, OrbitError> {
    if lambda.len() != start.len() {
        return Err(OrbitError::Dimension { expected: lambda.len(), found: start.len() });
    }
    if let Some(i) = start.iter().position(Zero::is_zero) {
        return Err(OrbitError::OnHyperplane(i));
    }
    let n = lambda.len();
    let orbit: Vec<Vec<Rational>> = (0..samples)
        .map(|k| lambda.iter().zip(start).map(|(l, x)| x * rational_pow(l, k as i64)).collect())
        .collect();
    let raw_probe = relation_probe(&orbit, d);
    let mut lattice = relation_lattice(lambda, DEFAULT_EXPONENT_BOUND)?;
    let squared = !lattice.torsion_free;
    let (step, step_orbit): (Vec<Rational>, Vec<Vec<Rational>>) = if squared {
        let sq: Vec<Rational> = lambda.iter().map(|l| l * l).collect();
        lattice = relation_lattice(&sq, DEFAULT_EXPONENT_BOUND)?;
        (sq, orbit.iter().step_by(2).cloned().collect())
    } else {
        (lambda.to_vec(), orbit.clone())
    };
    let r = lattice.rank;
    let u = complete_basis(&lattice.basis, n);
    let new_multipliers: Vec<Rational> = u.iter().map(|row| laurent_monomial(&step, row)).collect();
    let transformed: Vec<Vec<Rational>> = step_orbit.iter().map(|x| u[..r].iter().map(|row| laurent_monomial(x, row)).collect()).collect();
    let mut independent_directions = 0;
    for k in (1..=r).rev() {
        let pts: Vec<Vec<Rational>> = transformed.iter().map(|x| x[..k].to_vec()).collect();
        if relation_probe(&pts, d).is_empty() {
            independent_directions = k;
            break;
        }
    }
    Ok(ClosureEstimate { lower_bound: r, lattice, squared, monomial_change: u, new_multipliers, independent_directions, raw_probe })
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelPair {
    Exact(ProbeResult<Rational>, ProbeResult<Rational>),
    Padic(ProbeResult<PAdicNumber>, ProbeResult<PAdicNumber>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnionComparison {
    pub kernels: KernelPair,
    pub equal: bool,
}

fn same_span<R: CoeffRing>(ring: &R, a: &[Vec<R::Elem>], b: &[Vec<R::Elem>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let both: Matrix<R::Elem> = a.iter().chain(b).cloned().collect();
    linalg::rank(ring, &both) == a.len() && linalg::rank(ring, &a.to_vec()) == a.len()
}

fn is_linear(f: &AnalyticMap) -> bool {
    f.components().components().iter().all(|c| c.terms().all(|(i, _)| i.degree() <= 1))
}

/// Compares the degree-`d` relations vanishing on `⋃_{i∈S₁} f^i(Y)` and on
/// `⋃_{i∈S₂} f^i(Y)`. Linear maps are iterated exactly; other maps in `Q_p`.
pub fn union_closure_compare(
    f: &AnalyticMap,
    ys: &[Vec<Rational>],
    s1: &[u64],
    s2: &[u64],
    d: u32,
    p: u64,
    precision: u32,
) -> Result<UnionComparison, OrbitError> {
    let eigen = rational_eigenvalues(&jacobian_at_origin(f))?;
    if !eigen.lattice.torsion_free {
        return Err(OrbitError::Torsion);
    }
    let top = s1.iter().chain(s2).copied().max().unwrap_or(0) as usize;
    if is_linear(f) {
        let orbits: Vec<Vec<Vec<Rational>>> = ys
            .iter()
            .map(|y| {
                let mut out = vec![y.clone()];
                for _ in 0..top {
                    let next = f.eval(out.last().unwrap());
                    out.push(next);
                }
                out
            })
            .collect();
        let pick = |s: &[u64]| -> Vec<Vec<Rational>> { orbits.iter().flat_map(|o| s.iter().map(|&i| o[i as usize].clone())).collect() };
        let k1 = relation_probe(&pick(s1), d);
        let k2 = relation_probe(&pick(s2), d);
        let equal = same_span(&Rationals, &k1.kernel, &k2.kernel);
        return Ok(UnionComparison { kernels: KernelPair::Exact(k1, k2), equal });
    }
    let nb = Neighbourhood::new(p, 1, f.dim())?;
    let field = PAdicField::new(p, precision)?;
    let mut orbits = Vec::new();
    for y in ys {
        let x = nb.point(y, precision)?;
        orbits.push(iterate_in_neighbourhood(f, &nb, &x, top)?.points);
    }
    let pick = |s: &[u64]| -> Vec<Vec<PAdicNumber>> { orbits.iter().flat_map(|o| s.iter().map(|&i| o[i as usize].clone())).collect() };
    let k1 = relation_probe_in(&field, &pick(s1), d);
    let k2 = relation_probe_in(&field, &pick(s2), d);
    let equal = same_span(&field, &k1.kernel, &k2.kernel);
    Ok(UnionComparison { kernels: KernelPair::Padic(k1, k2), equal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    fn diag(ls: &[i64]) -> AnalyticMap {
        let n = ls.len();
        let polys: Vec<Vec<(Vec<u32>, Rational)>> = ls
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let mut e = vec![0; n];
                e[i] = 1;
                vec![(e, int(l))]
            })
            .collect();
        AnalyticMap::from_polynomials(n, 4, &polys, 0).unwrap()
    }

    fn quad() -> AnalyticMap {
        AnalyticMap::from_polynomials(1, 4, &[vec![(vec![1], int(2)), (vec![2], int(1))]], 0).unwrap()
    }

    #[test]
    fn orbit_of_two_x_plus_x_squared() {
        let nb = Neighbourhood::new(3, 1, 1).unwrap();
        let x = nb.point(&[int(3)], 20).unwrap();
        let report = iterate_in_neighbourhood(&quad(), &nb, &x, 5).unwrap();
        let modulus = BigInt::from(3).pow(20);
        let mut y = BigInt::from(3);
        for pt in &report.points {
            assert_eq!(pt[0].residue(20).unwrap(), y.mod_floor(&modulus));
            y = (&y * BigInt::from(2) + &y * &y).mod_floor(&modulus);
        }
        assert_eq!(report.points[1][0].residue(20).unwrap(), BigInt::from(15));
        assert_eq!(report.points[2][0].residue(20).unwrap(), BigInt::from(255));
        assert!(report.unit_jacobian);
        assert_eq!(report.isometry_checks, 4);
    }

    #[test]
    fn fixed_point_and_rejections() {
        let nb = Neighbourhood::new(3, 1, 1).unwrap();
        let zero = nb.point(&[int(0)], 10).unwrap();
        let r = iterate_in_neighbourhood(&quad(), &nb, &zero, 3).unwrap();
        assert!(r.points.iter().all(|p| p[0].is_zero()));
        let bad = AnalyticMap::from_polynomials(1, 4, &[vec![(vec![1], int(2)), (vec![2], rat(1, 3))]], 0).unwrap();
        let x = nb.point(&[int(3)], 10).unwrap();
        assert_eq!(iterate_in_neighbourhood(&bad, &nb, &x, 3), Err(OrbitError::NotIntegral { component: 0, p: 3 }));
        let outside = nb.point(&[int(1)], 10).unwrap();
        assert_eq!(iterate_in_neighbourhood(&quad(), &nb, &outside, 3), Err(OrbitError::NotInNeighbourhood(0)));
        assert_eq!(Neighbourhood::new(3, 0, 1), Err(OrbitError::BadLevel));
    }

    fn instance(a: &[i64], b: &[i64], p: u64) -> VanishingSumInstance {
        VanishingSumInstance::new(a.iter().map(|&x| int(x)).collect(), b.iter().map(|&x| int(x)).collect(), p, 16).unwrap()
    }

    fn brute(inst: &VanishingSumInstance, s_max: u64) -> BTreeSet<u64> {
        (1..=s_max).filter(|&s| inst.exact_value(s).is_zero()).collect()
    }

    #[test]
    fn vanishing_examples() {
        let inst = instance(&[3, -2], &[2, 3], 5);
        assert_eq!(inst.m, 4);
        let rep = vanishing_exponents(&inst, 60).unwrap();
        assert_eq!(rep.zeros, BTreeSet::from([1]));
        assert_eq!(rep.zeros, brute(&inst, 60));
        // the class s ≡ 3 (mod 4) has a zero in Z_p that is not an integer
        assert!(rep.classes.iter().all(|c| c.zero_bound.is_some_and(|b| c.multiplicity <= b)));
        assert_eq!(rep.classes[1].zero_bound, Some(1));
        let inst = instance(&[1, -1], &[2, 3], 5);
        let rep = vanishing_exponents(&inst, 60).unwrap();
        assert!(rep.zeros.is_empty());
        let inst = instance(&[1, -1, -1, 1], &[1, 2, 3, 6], 5);
        let rep = vanishing_exponents(&inst, 200).unwrap();
        assert!(rep.zeros.is_empty());
        assert_eq!(rep.zeros, brute(&inst, 200));
        assert!(rep.complete, "{:?}", rep.classes);
    }

    #[test]
    fn torsion_flag() {
        let inst = instance(&[1, 1], &[2, -2], 5);
        assert!(!inst.torsion_free);
        let rep = vanishing_exponents(&inst, 20).unwrap();
        // 2^s + (-2)^s vanishes at every odd s
        assert_eq!(rep.zeros, (1..=20).filter(|s| s % 2 == 1).collect());
        assert!(rep.classes.iter().any(|c| c.identically_zero));
        assert!(!rep.complete);
        assert!(instance(&[1, 1], &[2, 3], 5).torsion_free);
    }

    #[test]
    fn separating_examples() {
        let sp = separating_polynomial(&[int(1), int(2)], 0, 1, 5).unwrap();
        assert_eq!(sp.level, 1);
        // x(x-2)(x-3)(x-4) = x^4 - 9x^3 + 26x^2 - 24x
        assert_eq!(sp.coeffs, [0, -24, 26, -9, 1].iter().map(|&c| BigInt::from(c)).collect::<Vec<_>>());
        assert_eq!(sp.eval(&int(1)), int(-6));
        assert_eq!(sp.valuations, vec![Some(0), None]);
        assert!(sp.verified);
        let single = separating_polynomial(&[int(7)], 0, 1, 5).unwrap();
        assert_eq!(single.coeffs, vec![BigInt::one()]);
        let raised = separating_polynomial(&[int(1), int(6)], 0, 1, 5).unwrap();
        assert_eq!(raised.level, 2);
        assert_eq!(raised.coeffs.len(), 25);
        assert!(raised.verified);
        for x in -30..30 {
            assert!(raised.separates(&int(1), &int(x)), "x = {x}");
        }
    }

    #[test]
    fn interpolation_examples() {
        let inst = instance(&[3, -2], &[2, 3], 5);
        let set = SampleSet { residue: 1, samples: vec![21, 101], limit: Some(1) };
        let r0 = interpolation_reduction(&inst, &set, 0).unwrap();
        assert_eq!(r0.values[0], inst.value(21, 16));
        let set = SampleSet { residue: 1, samples: (1..=3).map(|t| 1 + 4 * 5u64.pow(t)).collect(), limit: Some(1) };
        let r1 = interpolation_reduction(&inst, &set, 1).unwrap();
        assert_eq!(r1.values.len(), 2);
        let errs: Vec<i64> = r1.errors.iter().map(|e| e.unwrap()).collect();
        assert!(errs[0] < errs[1], "{errs:?}");
        let bad = SampleSet { residue: 1, samples: vec![1, 2], limit: None };
        assert_eq!(interpolation_reduction(&inst, &bad, 1), Err(OrbitError::NotCongruent(4)));
    }

    #[test]
    fn identically_zero_sum_interpolates_to_zero() {
        // (2^s + (-2)^s) vanishes on the odd class modulo M = 4 intersected with s ≡ 1 mod 4
        let inst = instance(&[1, 1], &[2, -2], 5);
        let set = SampleSet { residue: 1, samples: vec![5, 25, 45], limit: None };
        let r = interpolation_reduction(&inst, &set, 1).unwrap();
        assert!(r.values.iter().all(|v| v.is_zero()));
    }

    fn orbit(l: &[i64], start: &[i64], k: usize) -> Vec<Vec<Rational>> {
        (0..k).map(|i| l.iter().zip(start).map(|(&a, &x)| int(x) * rational_pow(&int(a), i as i64)).collect()).collect()
    }

    #[test]
    fn probes() {
        let pts = orbit(&[2, 4], &[1, 1], 50);
        let pr = relation_probe(&pts, 2);
        assert_eq!(pr.kernel.len(), 1);
        // y2 - y1^2 in the order 1, y1, y2, y1^2, y1 y2, y2^2
        let want = vec![int(0), int(0), int(-1), int(1), int(0), int(0)];
        let k = &pr.kernel[0];
        let scale = &want[3] / &k[3];
        assert_eq!(k.iter().map(|c| c * &scale).collect::<Vec<_>>(), want);
        for x in &pts {
            assert!(eval_relation(&Rationals, &pr.monomials, k, x).is_zero());
        }
        assert!(relation_probe(&orbit(&[2, 3], &[1, 1], 50), 4).is_empty());
        let single = relation_probe(&[vec![int(3), int(5)]], 1);
        assert_eq!(single.kernel.len(), 2);
        assert!(single.underdetermined);
    }

    #[test]
    fn closure_estimates() {
        let e = closure_dimension_estimate(&[int(2), int(3)], &[int(1), int(1)], 40, 4).unwrap();
        assert_eq!(e.lower_bound, 2);
        assert_eq!(e.independent_directions, 2);
        assert!(e.raw_probe.is_empty());
        let e = closure_dimension_estimate(&[int(2), int(4)], &[int(1), int(1)], 40, 2).unwrap();
        assert_eq!(e.lower_bound, 1);
        assert_eq!(e.independent_directions, 1);
        assert_eq!(e.raw_probe.kernel.len(), 1);
        assert_eq!(e.new_multipliers.iter().filter(|m| m.is_one()).count(), 1);
        let e = closure_dimension_estimate(&[int(1), int(1)], &[int(1), int(2)], 10, 2).unwrap();
        assert_eq!(e.lower_bound, 0);
        let e = closure_dimension_estimate(&[int(-2), int(2)], &[int(1), int(1)], 40, 2).unwrap();
        assert!(e.squared);
        assert_eq!(e.lower_bound, 1);
        assert_eq!(closure_dimension_estimate(&[int(2), int(3)], &[int(0), int(1)], 5, 1), Err(OrbitError::OnHyperplane(0)));
    }

    #[test]
    fn union_compare() {
        let f = diag(&[2, 3]);
        let ys = vec![vec![int(1), int(1)], vec![int(1), int(2)]];
        let evens: Vec<u64> = (0..=40).filter(|i| i % 2 == 0).collect();
        let odds: Vec<u64> = (0..=40).filter(|i| i % 2 == 1).collect();
        assert!(union_closure_compare(&f, &ys, &evens, &odds, 3, 5, 20).unwrap().equal);
        assert!(union_closure_compare(&f, &ys, &evens, &evens, 3, 5, 20).unwrap().equal);
        assert_eq!(union_closure_compare(&diag(&[-2, 2]), &ys, &evens, &odds, 3, 5, 20), Err(OrbitError::Torsion));
    }

    #[test]
    fn union_compare_nonlinear() {
        // (2x + y^2, 3y): p-adic iteration
        let f = AnalyticMap::from_polynomials(
            2,
            4,
            &[vec![(vec![1, 0], int(2)), (vec![0, 2], int(1))], vec![(vec![0, 1], int(3))]],
            0,
        )
        .unwrap();
        let ys = vec![vec![int(7), int(7)]];
        let s1: Vec<u64> = (0..30).map(|i| 2 * i).collect();
        let s2: Vec<u64> = (0..30).map(|i| 2 * i + 1).collect();
        let cmp = union_closure_compare(&f, &ys, &s1, &s2, 2, 7, 40).unwrap();
        assert!(cmp.equal);
    }
}
