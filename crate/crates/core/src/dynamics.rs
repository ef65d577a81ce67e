//! Self-map germs at a fixed point: linear part, rational eigenvalues, resonances,
//! the multiplicative relation lattice of the eigenvalues and symplectic scaling.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::arith::{odd_primes, rational_factor_exponents, rational_valuation, Rational};
use crate::linalg::{self, determinant, integer_kernel, mat_mul, transpose, Matrix};
use crate::ring::Rationals;
use crate::series::{MultiIndex, MultiSeries, QSeries, SeriesError, SeriesTuple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("map has {found} components but {expected} variables")]
    Arity { expected: usize, found: usize },
    #[error("component {0} has a nonzero constant term; the origin is not fixed")]
    NotFixed(usize),
    #[error("fixed locus dimension {r} exceeds n = {n}")]
    BadLocusDim { r: usize, n: usize },
    #[error("component {0} does not restrict correctly to the declared fixed locus")]
    LocusNotFixed(usize),
    #[error("characteristic polynomial has a factor of degree {0} without rational roots")]
    IrrationalEigenvalue(usize),
    #[error("eigenvalue zero is not allowed here")]
    ZeroEigenvalue,
    #[error("first {0} eigenvalues must equal 1")]
    LocusEigenvalues(usize),
    #[error("form must be a nondegenerate antisymmetric matrix of even size")]
    BadSymplecticForm,
    #[error("matrix must be square of size {0}")]
    BadMatrix(usize),
    #[error("diophantine parameters need C > 0 and beta >= 0")]
    BadParams,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A polynomial (or truncated analytic) self-map germ fixing the origin, with a
/// declared fixed locus `{x_{r+1} = ... = x_n = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMap {
    components: SeriesTuple<Rationals>,
    fixed_locus_dim: usize,
}

impl AnalyticMap {
    pub fn new(components: SeriesTuple<Rationals>, fixed_locus_dim: usize) -> Result<Self, DynamicsError> {
        let n = components.len();
        if components.num_vars() != n {
            return Err(DynamicsError::Arity { expected: components.num_vars(), found: n });
        }
        if fixed_locus_dim > n {
            return Err(DynamicsError::BadLocusDim { r: fixed_locus_dim, n });
        }
        for (i, c) in components.components().iter().enumerate() {
            if !c.constant_term().is_zero() {
                return Err(DynamicsError::NotFixed(i));
            }
        }
        if fixed_locus_dim > 0 {
            let tail: Vec<usize> = (fixed_locus_dim..n).collect();
            for (i, c) in components.components().iter().enumerate() {
                let restricted = c.restrict_zero(&tail);
                let expected = if i < fixed_locus_dim {
                    QSeries::x(n, c.trunc_degree(), i)
                } else {
                    QSeries::q_zero(n, c.trunc_degree())
                };
                if restricted != expected {
                    return Err(DynamicsError::LocusNotFixed(i));
                }
            }
        }
        Ok(AnalyticMap { components, fixed_locus_dim })
    }

    /// Map given by polynomial components, each a list of `(exponents, coefficient)`.
    pub fn from_polynomials(
        n: usize,
        trunc_degree: u32,
        polys: &[Vec<(Vec<u32>, Rational)>],
        fixed_locus_dim: usize,
    ) -> Result<Self, DynamicsError> {
        let comps = polys
            .iter()
            .map(|terms| {
                MultiSeries::from_terms(Rationals, n, trunc_degree, terms.iter().map(|(e, c)| (MultiIndex::new(e.clone()), c.clone())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(SeriesTuple::new(comps)?, fixed_locus_dim)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn fixed_locus_dim(&self) -> usize {
        self.fixed_locus_dim
    }

    pub fn components(&self) -> &SeriesTuple<Rationals> {
        &self.components
    }

    pub fn trunc_degree(&self) -> u32 {
        self.components.trunc_degree()
    }

    /// Same map with a different truncation degree (terms above it are dropped).
    pub fn with_trunc_degree(&self, n: u32) -> Self {
        let comps = self
            .components
            .components()
            .iter()
            .map(|c| {
                let mut out = QSeries::q_zero(c.num_vars(), n);
                for (i, a) in c.terms() {
                    out.set_coeff(i.clone(), a.clone());
                }
                out
            })
            .collect();
        AnalyticMap { components: SeriesTuple::new(comps).expect("same shape"), fixed_locus_dim: self.fixed_locus_dim }
    }

    /// Evaluates the polynomial truncation at a point.
    pub fn eval(&self, x: &[Rational]) -> Vec<Rational> {
        self.components.eval(x)
    }

    /// `f ∘ f`, truncated at the same degree.
    pub fn square(&self) -> Self {
        let c = self.components.compose(&self.components).expect("no constant terms");
        AnalyticMap { components: c, fixed_locus_dim: self.fixed_locus_dim }
    }
}

pub fn jacobian_at_origin(f: &AnalyticMap) -> Matrix<Rational> {
    f.components.linear_part()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resonance {
    /// Exponents over all `n` variables; zero on the fixed-locus coordinates.
    pub index: MultiIndex,
    /// 0-based component.
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationLattice {
    /// Reduced Hermite basis of `{I ∈ Z^n : λ^I = 1}`.
    pub basis: Vec<Vec<BigInt>>,
    /// `n` minus the lattice rank: the rank of the group generated by the `λ_i`.
    pub rank: usize,
    /// No product of the `λ_i` equals `-1`.
    pub torsion_free: bool,
    /// Some basis entry exceeds the requested exponent bound in absolute value.
    pub exceeds_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenData {
    pub eigenvalues: Vec<Rational>,
    pub semisimple: bool,
    pub resonances: Vec<Resonance>,
    pub lattice: RelationLattice,
}

impl EigenData {
    pub fn rank(&self) -> usize {
        self.lattice.rank
    }
}

pub const DEFAULT_EXPONENT_BOUND: u64 = 64;

fn is_upper_triangular(m: &Matrix<Rational>) -> bool {
    m.iter().enumerate().all(|(i, row)| row.iter().take(i).all(Zero::is_zero))
}

fn is_lower_triangular(m: &Matrix<Rational>) -> bool {
    m.iter().enumerate().all(|(i, row)| row.iter().skip(i + 1).all(Zero::is_zero))
}

/// Rational eigenvalues with multiplicity and semisimplicity. Resonances are left
/// empty (they depend on `r` and a degree horizon, see [`enumerate_resonances`]).
///
/// Triangular matrices keep their diagonal order; otherwise eigenvalues equal to 1
/// come first and the rest are ascending.
pub fn rational_eigenvalues(m: &Matrix<Rational>) -> Result<EigenData, DynamicsError> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(DynamicsError::BadMatrix(n));
    }
    let cp = linalg::char_poly(m);
    let (roots, rest) = linalg::rational_roots(&cp);
    if rest > 0 {
        return Err(DynamicsError::IrrationalEigenvalue(rest));
    }
    let eigenvalues: Vec<Rational> = if is_upper_triangular(m) || is_lower_triangular(m) {
        (0..n).map(|i| m[i][i].clone()).collect()
    } else {
        let mut ones = Vec::new();
        let mut others = Vec::new();
        for (root, mult) in &roots {
            for _ in 0..*mult {
                if root.is_one() {
                    ones.push(root.clone());
                } else {
                    others.push(root.clone());
                }
            }
        }
        ones.extend(others);
        ones
    };
    // minimal polynomial squarefree iff the product over distinct roots annihilates m
    let ring = Rationals;
    let mut prod = linalg::identity(&ring, n);
    for (root, _) in &roots {
        let mut shifted = m.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] -= root;
        }
        prod = mat_mul(&ring, &prod, &shifted);
    }
    let semisimple = prod.iter().flatten().all(Zero::is_zero);
    let lattice = if eigenvalues.iter().any(Zero::is_zero) {
        RelationLattice { basis: Vec::new(), rank: 0, torsion_free: true, exceeds_bound: false }
    } else {
        relation_lattice(&eigenvalues, DEFAULT_EXPONENT_BOUND)?
    };
    Ok(EigenData { eigenvalues, semisimple, resonances: Vec::new(), lattice })
}

/// All `(I, j)` with `I` supported on the tail variables, `2 <= |I| <= max_degree`
/// and `λ^I = λ_j`.
pub fn enumerate_resonances(lambda: &[Rational], r: usize, max_degree: u32) -> Result<Vec<Resonance>, DynamicsError> {
    if lambda.iter().any(Zero::is_zero) {
        return Err(DynamicsError::ZeroEigenvalue);
    }
    if lambda.iter().take(r).any(|l| !l.is_one()) {
        return Err(DynamicsError::LocusEigenvalues(r));
    }
    let n = lambda.len();
    let m = n - r;
    let mut out = Vec::new();
    if m == 0 {
        return Ok(out);
    }
    // values λ^I for tail indices of the current degree, built from the previous degree
    let mut frontier: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    frontier.insert(MultiIndex::zeros(n), Rational::one());
    for d in 1..=max_degree {
        let mut next = BTreeMap::new();
        for (idx, val) in &frontier {
            // extend only at or after the last used tail variable to visit each index once
            let start = (r..n).rev().find(|&v| idx.get(v) > 0).unwrap_or(r);
            for v in start..n {
                next.insert(idx.raise(v), val * &lambda[v]);
            }
        }
        frontier = next;
        if d >= 2 {
            for (idx, val) in &frontier {
                for (j, l) in lambda.iter().enumerate() {
                    if val == l {
                        out.push(Resonance { index: idx.clone(), j });
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.index.cmp(&b.index).then(a.j.cmp(&b.j)));
    Ok(out)
}

/// The lattice `{I ∈ Z^n : λ^I = 1}` computed exactly from prime factorizations.
pub fn relation_lattice(lambda: &[Rational], exponent_bound: u64) -> Result<RelationLattice, DynamicsError> {
    if lambda.iter().any(Zero::is_zero) {
        return Err(DynamicsError::ZeroEigenvalue);
    }
    let n = lambda.len();
    let factored: Vec<(bool, BTreeMap<_, i64>)> = lambda.iter().map(rational_factor_exponents).collect();
    let primes: BTreeSet<_> = factored.iter().flat_map(|(_, e)| e.keys().cloned()).collect();
    let mut rows: Matrix<BigInt> = primes
        .iter()
        .map(|p| {
            let mut row: Vec<BigInt> = factored.iter().map(|(_, e)| BigInt::from(*e.get(p).unwrap_or(&0))).collect();
            row.push(BigInt::zero());
            row
        })
        .collect();
    // sign parity: Σ_{λ_i < 0} I_i - 2t = 0 with an auxiliary t
    let mut sign_row: Vec<BigInt> = factored.iter().map(|(neg, _)| BigInt::from(*neg as i32)).collect();
    sign_row.push(BigInt::from(-2));
    let abs_kernel = integer_kernel(&rows.iter().map(|r| r[..n].to_vec()).collect(), n);
    rows.push(sign_row);
    let kernel = integer_kernel(&rows, n + 1);
    let basis: Vec<Vec<BigInt>> = linalg::row_hnf(&kernel.into_iter().map(|mut v| {
        v.truncate(n);
        v
    }).collect::<Vec<_>>());
    let torsion_free = abs_kernel.iter().all(|v| {
        let parity: BigInt = v.iter().zip(&factored).filter(|(_, (neg, _))| *neg).map(|(x, _)| x.clone()).sum();
        parity.is_even()
    });
    let bound = BigInt::from(exponent_bound);
    let exceeds_bound = basis.iter().flatten().any(|x| x.abs() > bound);
    Ok(RelationLattice { rank: n - basis.len(), basis, torsion_free, exceeds_bound })
}

/// `λ^I` for an integer exponent vector.
pub fn monomial_value(lambda: &[Rational], exps: &[BigInt]) -> Rational {
    use num_traits::ToPrimitive;
    lambda.iter().zip(exps).fold(Rational::one(), |acc, (l, e)| {
        acc * crate::arith::rational_pow(l, e.to_i64().expect("exponent fits in i64"))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymplecticReport {
    pub holds: bool,
    pub scaling: Rational,
    /// Index pairs `(i, j)` with `λ_i λ_j = μ` and `σ(v_i, v_j) ≠ 0` on an eigenbasis.
    pub pairing: Option<Vec<(usize, usize)>>,
    pub eigenvalues: Option<Vec<Rational>>,
}

/// Checks `Mᵀ σ M = μ σ` exactly and, for semisimple `M` with rational spectrum,
/// pairs eigenvalues through the form.
pub fn symplectic_scaling_check(m: &Matrix<Rational>, sigma: &Matrix<Rational>, mu: &Rational) -> Result<SymplecticReport, DynamicsError> {
    let n = sigma.len();
    if n == 0 || n % 2 == 1 || sigma.iter().any(|r| r.len() != n) {
        return Err(DynamicsError::BadSymplecticForm);
    }
    for i in 0..n {
        for j in 0..n {
            if sigma[i][j] != -sigma[j][i].clone() {
                return Err(DynamicsError::BadSymplecticForm);
            }
        }
    }
    if determinant(sigma).is_zero() {
        return Err(DynamicsError::BadSymplecticForm);
    }
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(DynamicsError::BadMatrix(n));
    }
    let ring = Rationals;
    let lhs = mat_mul(&ring, &mat_mul(&ring, &transpose(m), sigma), m);
    let rhs: Matrix<Rational> = sigma.iter().map(|r| r.iter().map(|x| x * mu).collect()).collect();
    let holds = lhs == rhs;
    let mut report = SymplecticReport { holds, scaling: mu.clone(), pairing: None, eigenvalues: None };
    if !holds {
        return Ok(report);
    }
    let Ok(eig) = rational_eigenvalues(m) else { return Ok(report) };
    if !eig.semisimple {
        return Ok(report);
    }
    // eigenbasis in the reported eigenvalue order
    let mut distinct: Vec<Rational> = Vec::new();
    for l in &eig.eigenvalues {
        if !distinct.contains(l) {
            distinct.push(l.clone());
        }
    }
    let mut basis: Vec<Vec<Rational>> = vec![Vec::new(); n];
    for l in &distinct {
        let mut shifted = m.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] -= l;
        }
        let mut vecs = linalg::kernel(&ring, &shifted, n).into_iter();
        for (slot, _) in eig.eigenvalues.iter().enumerate().filter(|(_, x)| *x == l) {
            basis[slot] = vecs.next().expect("semisimple eigenspace dimension");
        }
    }
    let form = |u: &[Rational], v: &[Rational]| -> Rational {
        let sv = linalg::mat_vec(&ring, sigma, v);
        u.iter().zip(&sv).map(|(a, b)| a * b).sum()
    };
    let mut paired = vec![false; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        if paired[i] {
            continue;
        }
        let partner = (i + 1..n).find(|&j| {
            !paired[j] && &eig.eigenvalues[i] * &eig.eigenvalues[j] == *mu && !form(&basis[i], &basis[j]).is_zero()
        });
        match partner {
            Some(j) => {
                paired[i] = true;
                paired[j] = true;
                pairs.push((i, j));
            }
            None => break,
        }
    }
    if pairs.len() * 2 == n {
        report.pairing = Some(pairs);
    }
    report.eigenvalues = Some(eig.eigenvalues);
    Ok(report)
}

/// Constants of a bad-approximation bound `|λ^I - λ_j| >= C |I|^{-β}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiophantineParams {
    pub c: Rational,
    pub beta: Rational,
}

impl DiophantineParams {
    pub fn new(c: Rational, beta: Rational) -> Result<Self, DynamicsError> {
        if !c.is_positive() || beta.is_negative() {
            return Err(DynamicsError::BadParams);
        }
        Ok(DiophantineParams { c, beta })
    }
}

impl Default for DiophantineParams {
    fn default() -> Self {
        DiophantineParams { c: Rational::one(), beta: Rational::zero() }
    }
}

/// Smallest odd prime at which every eigenvalue is a unit and every coefficient integral.
pub fn default_prime(f: &AnalyticMap, eigenvalues: &[Rational]) -> u64 {
    odd_primes()
        .find(|&p| {
            eigenvalues.iter().all(|l| rational_valuation(l, p) == Some(0))
                && f.components.components().iter().all(|c| c.terms().all(|(_, a)| rational_valuation(a, p).is_none_or(|v| v >= 0)))
        })
        .expect("finitely many bad primes")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub n: usize,
    pub fixed_locus_dim: usize,
    pub jacobian: Matrix<Rational>,
    pub eigen: EigenData,
    pub resonance_horizon: u32,
    pub prime: u64,
}

/// Linear part, eigen data, resonances up to `max_degree` and a default prime.
pub fn analyze_map(f: &AnalyticMap, max_degree: u32, exponent_bound: u64) -> Result<FixedPointReport, DynamicsError> {
    let jac = jacobian_at_origin(f);
    let mut eigen = rational_eigenvalues(&jac)?;
    if eigen.eigenvalues.iter().any(Zero::is_zero) {
        return Err(DynamicsError::ZeroEigenvalue);
    }
    eigen.lattice = relation_lattice(&eigen.eigenvalues, exponent_bound)?;
    let r = f.fixed_locus_dim;
    eigen.resonances = enumerate_resonances(&eigen.eigenvalues, r, max_degree)?;
    let prime = default_prime(f, &eigen.eigenvalues);
    Ok(FixedPointReport { n: f.dim(), fixed_locus_dim: r, jacobian: jac, eigen, resonance_horizon: max_degree, prime })
}
