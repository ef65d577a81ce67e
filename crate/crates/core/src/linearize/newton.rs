//! Newton iteration for `F_f(h) = f ∘ h - h ∘ Λ = 0` and the norm estimate for
//! the homological operator.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{finish, normalize, solve_homological, ConjugacyResult, LinearizeError};
use crate::arith::{prime_power, rational_pow, rational_valuation, Rational};
use crate::dynamics::{default_prime, AnalyticMap, DiophantineParams};
use crate::ring::Rationals;
use crate::series::{add_into, gauss_norm, product_upto, QSeries, SeriesTuple};

/// A constant that is exact for integral `β` and a float otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum C1Value {
    Exact(Rational),
    Approx(f64),
}

impl C1Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            C1Value::Exact(r) => r.to_f64().unwrap_or(f64::INFINITY),
            C1Value::Approx(x) => *x,
        }
    }

    fn le(&self, other: &C1Value) -> bool {
        match (self, other) {
            (C1Value::Exact(a), C1Value::Exact(b)) => a <= b,
            _ => self.to_f64() <= other.to_f64(),
        }
    }
}

/// The three inequalities `max(‖w‖, ‖w∘Λ‖) ≤ C₁ K`, `‖Dw‖ ≤ C₁ K/(ρ-δ)` and
/// `‖Dw∘Λ‖ ≤ C₁ K/(ρ-δ)` with `K = ‖g‖_ρ (ρ/δ)^β`, norms on the left at `ρ - δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormCertificate {
    pub rho: Rational,
    pub delta: Rational,
    pub g_norm: Rational,
    pub w_norm: Rational,
    pub dw_norm: Rational,
    pub dw_lambda_norm: Rational,
    /// Smallest `C₁` for which all three inequalities hold on this instance.
    pub min_c1: C1Value,
    /// `C₁` implied by the diophantine parameters.
    pub allowed_c1: C1Value,
    pub passes: bool,
}

fn tuple_norm(t: &[QSeries], p: u64, rho: &Rational) -> Rational {
    t.iter()
        .map(|c| gauss_norm(c, p, rho).expect("positive radius").value())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
}

/// `(β/e)^β / C`, and `1/C` when `β = 0`.
fn allowed_c1(params: &DiophantineParams) -> C1Value {
    if params.beta.is_zero() {
        return C1Value::Exact(params.c.recip());
    }
    let b = params.beta.to_f64().unwrap_or(f64::INFINITY);
    C1Value::Approx((b / std::f64::consts::E).powf(b) / params.c.to_f64().unwrap_or(f64::NAN))
}

/// Evaluates the norm estimate for a solution of `L w = g` at radii `ρ` and `ρ - δ`.
pub fn check_norm_bound(
    g: &SeriesTuple<Rationals>,
    w: &SeriesTuple<Rationals>,
    lambda: &[Rational],
    p: u64,
    rho: &Rational,
    delta: &Rational,
    params: &DiophantineParams,
) -> Result<NormCertificate, LinearizeError> {
    if !delta.is_positive() || delta >= rho {
        return Err(LinearizeError::BadRadius);
    }
    let inner = rho - delta;
    let g_norm = tuple_norm(g.components(), p, rho);
    let w_lambda = w.scale_variables(lambda);
    let w_norm = tuple_norm(w.components(), p, &inner).max(tuple_norm(w_lambda.components(), p, &inner));
    let jac: Vec<QSeries> = w.jacobian().into_iter().flatten().collect();
    let jac_lambda: Vec<QSeries> = jac.iter().map(|s| s.scale_variables(lambda)).collect();
    let dw_norm = tuple_norm(&jac, p, &inner);
    let dw_lambda_norm = tuple_norm(&jac_lambda, p, &inner);
    let lhs = [w_norm.clone(), &dw_norm * &inner, &dw_lambda_norm * &inner];
    let worst = lhs.iter().cloned().fold(Rational::zero(), |a, b| if b > a { b } else { a });
    let min_c1 = if worst.is_zero() {
        C1Value::Exact(Rational::zero())
    } else if g_norm.is_zero() {
        C1Value::Approx(f64::INFINITY)
    } else if params.beta.is_integer() {
        let beta = params.beta.to_integer().to_i64().expect("small beta");
        C1Value::Exact(&worst / (&g_norm * rational_pow(&(rho / delta), beta)))
    } else {
        let ratio = (rho / delta).to_f64().unwrap();
        let b = params.beta.to_f64().unwrap();
        C1Value::Approx(worst.to_f64().unwrap() / (g_norm.to_f64().unwrap() * ratio.powf(b)))
    };
    let allowed = allowed_c1(params);
    let passes = min_c1.le(&allowed);
    Ok(NormCertificate {
        rho: rho.clone(),
        delta: delta.clone(),
        g_norm,
        w_norm,
        dw_norm,
        dw_lambda_norm,
        min_c1,
        allowed_c1: allowed,
        passes,
    })
}

/// One Newton step `h_{i+1} = h_i + Δ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonIteration {
    pub index: usize,
    pub radius: Rational,
    /// Lowest degree of `F(h_i)`.
    pub residual_order: u32,
    /// `F(h_{i+1})` vanishes through this degree.
    pub verified_through: u32,
    /// Lowest degree of `Δ_i`.
    pub delta_order: u32,
    pub residual_norm: Rational,
    /// `‖Δ_i‖` at the next radius.
    pub delta_norm: Rational,
    pub certificate: NormCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTrace {
    pub iterations: Vec<NewtonIteration>,
    pub params: DiophantineParams,
    pub prime: u64,
    /// The map was replaced by `u f(u⁻¹ x)` with `u = p^{-k}`.
    pub scaling_exponent: u32,
    pub c1: C1Value,
    /// Iterations whose norm certificate failed.
    pub bound_violations: Vec<usize>,
}

impl NewtonTrace {
    pub fn scalar_u(&self) -> Rational {
        prime_power(self.prime, -(self.scaling_exponent as i64))
    }
}

/// `ρ_i = 1/2 + 2^{-i-1}`.
pub fn newton_radius(i: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2)) + Rational::new(BigInt::one(), BigInt::from(2).pow(i as u32 + 1))
}

/// Smallest `k >= 0` with `v_p(a_I) + k(|I| - 1) >= 1` for every nonlinear coefficient.
fn scaling_exponent(g: &SeriesTuple<Rationals>, p: u64) -> u32 {
    let mut k: i64 = 0;
    for c in g.components() {
        for (idx, a) in c.terms() {
            let d = idx.degree() as i64;
            if d < 2 {
                continue;
            }
            let v = rational_valuation(a, p).expect("nonzero");
            let need = 1 - v;
            if need > 0 {
                k = k.max((need + d - 2) / (d - 1));
            }
        }
    }
    k as u32
}

fn rescale(g: &SeriesTuple<Rationals>, p: u64, k: u32, inverse: bool) -> SeriesTuple<Rationals> {
    let comps = g
        .components()
        .iter()
        .map(|c| {
            let mut out = QSeries::q_zero(c.num_vars(), c.trunc_degree());
            for (idx, a) in c.terms() {
                let e = k as i64 * (idx.degree() as i64 - 1);
                out.set_coeff(idx.clone(), a * prime_power(p, if inverse { -e } else { e }));
            }
            out
        })
        .collect();
    SeriesTuple::new(comps).expect("same shape")
}

/// Solves `(I + K₁) v = R` degree by degree, where every entry of `K₁` has order >= 1.
fn solve_unipotent(k1: &[Vec<QSeries>], rhs: &SeriesTuple<Rationals>) -> SeriesTuple<Rationals> {
    let n = rhs.len();
    let nt = rhs.trunc_degree();
    let mut v: Vec<QSeries> = rhs.components().to_vec();
    let Some(start) = rhs.order() else { return rhs.clone() };
    for d in start + 1..=nt {
        for j in 0..n {
            let mut acc = BTreeMap::new();
            for (k, entry) in k1[j].iter().enumerate() {
                for da in 1..=entry.trunc_degree().min(d - start) {
                    let la = entry.layer(da);
                    let lb = v[k].layer(d - da);
                    for (ia, ca) in la {
                        for (ib, cb) in lb {
                            add_into(&Rationals, &mut acc, ia.add(ib), &(ca * cb));
                        }
                    }
                }
            }
            if acc.is_empty() {
                continue;
            }
            let mut layer = v[j].layer(d).clone();
            for (i, c) in acc {
                add_into(&Rationals, &mut layer, i, &-c);
            }
            v[j].set_layer(d, layer);
        }
    }
    SeriesTuple::new(v).expect("same shape")
}

fn residual(g: &SeriesTuple<Rationals>, h: &SeriesTuple<Rationals>, lambda: &[Rational]) -> Result<SeriesTuple<Rationals>, LinearizeError> {
    Ok(g.compose(h)?.try_sub(&h.scale_variables(lambda))?)
}

/// Conjugacy by Newton's method on the normalized, rescaled map.
///
/// Each step solves `(Dh_i ∘ Λ) L E_i = F(h_i)` and sets `Δ_i = Dh_i · E_i`; the
/// degree through which `F(h_i)` vanishes doubles. `prime` defaults to the smallest
/// odd prime where the eigenvalues are units and the coefficients integral.
pub fn linearize_newton(
    f: &AnalyticMap,
    degree: u32,
    params: &DiophantineParams,
    prime: Option<u64>,
) -> Result<(ConjugacyResult, NewtonTrace), LinearizeError> {
    if degree < 2 {
        return Err(LinearizeError::DegreeTooSmall);
    }
    let f = f.with_trunc_degree(degree);
    let norm = normalize(&f)?;
    let lambda = norm.lambda.clone();
    let p = prime.unwrap_or_else(|| default_prime(&f, &lambda));
    let n = f.dim();
    let r = f.fixed_locus_dim();
    let g = norm.map.components();
    let k = scaling_exponent(g, p);
    let gu = rescale(g, p, k, false);
    let mut h = SeriesTuple::identity(Rationals, n, degree);
    let mut iterations: Vec<NewtonIteration> = Vec::new();
    let mut res = residual(&gu, &h, &lambda)?;
    let mut i = 0;
    while let Some(order) = res.order() {
        let rho = newton_radius(i);
        let rho_next = newton_radius(i + 1);
        let jac = h.jacobian();
        let k1: Vec<Vec<QSeries>> = jac
            .iter()
            .enumerate()
            .map(|(a, row)| {
                row.iter()
                    .enumerate()
                    .map(|(b, s)| {
                        let mut t = s.scale_variables(&lambda);
                        if a == b {
                            t = &t - &QSeries::q_constant(n, t.trunc_degree(), Rational::one());
                        }
                        t
                    })
                    .collect()
            })
            .collect();
        let v = solve_unipotent(&k1, &res);
        let e = solve_homological(&v, &lambda, r)?;
        let delta: Vec<QSeries> = (0..n)
            .map(|a| {
                (0..n).fold(QSeries::q_zero(n, degree), |acc, b| &acc + &product_upto(&jac[a][b], e.component(b), degree))
            })
            .collect();
        let delta = SeriesTuple::new(delta)?;
        let certificate = check_norm_bound(&v, &e, &lambda, p, &rho, &(&rho - &rho_next), params)?;
        let residual_norm = tuple_norm(res.components(), p, &rho);
        let delta_norm = tuple_norm(delta.components(), p, &rho_next);
        h = h.try_add(&delta)?;
        res = residual(&gu, &h, &lambda)?;
        iterations.push(NewtonIteration {
            index: i,
            radius: rho,
            residual_order: order,
            verified_through: res.order().map_or(degree, |d| d - 1),
            delta_order: delta.order().unwrap_or(degree + 1),
            residual_norm,
            delta_norm,
            certificate,
        });
        i += 1;
        if i > 64 {
            break;
        }
    }
    let h_unscaled = rescale(&h, p, k, true);
    let result = finish(&f, &norm, h_unscaled)?;
    let bound_violations = iterations.iter().filter(|it| !it.certificate.passes).map(|it| it.index).collect();
    let trace = NewtonTrace { iterations, params: params.clone(), prime: p, scaling_exponent: k, c1: allowed_c1(params), bound_violations };
    Ok((result, trace))
}
