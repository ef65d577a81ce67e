//! JSON shapes for results, and a plain text rendering.

use padyn::dynamics::{EigenData, SymplecticReport};
use padyn::linearize::{C1Value, ConjugacyResult, NewtonTrace, NormCertificate};
use padyn::orbit::{ClosureEstimate, ProbeResult, SeparatingPolynomial, VanishingReport};
use padyn::{QSeries, Rational, Rationals, SeriesTuple};
use serde_json::{json, Value};

fn q(r: &Rational) -> Value {
    json!(r.to_string())
}

fn vector(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(q).collect())
}

pub fn matrix(m: &[Vec<Rational>]) -> Value {
    Value::Array(m.iter().map(|r| vector(r)).collect())
}

fn int_matrix<T: ToString>(m: &[Vec<T>]) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().map(|x| json!(x.to_string())).collect())).collect())
}

pub fn series(s: &QSeries) -> Value {
    let terms: Vec<Value> = s
        .terms()
        .map(|(i, c)| json!({ "exponents": i.exponents(), "numerator": c.numer().to_string(), "denominator": c.denom().to_string() }))
        .collect();
    json!({ "trunc_degree": s.trunc_degree(), "terms": terms })
}

fn tuple(t: &SeriesTuple<Rationals>) -> Value {
    Value::Array(t.components().iter().map(series).collect())
}

pub fn eigen(e: &EigenData) -> Value {
    json!({
        "eigenvalues": vector(&e.eigenvalues),
        "semisimple": e.semisimple,
        "resonances": e.resonances.iter().map(|r| json!({ "exponents": r.index.exponents(), "component": r.j })).collect::<Vec<_>>(),
        "lattice": {
            "basis": int_matrix(&e.lattice.basis),
            "rank": e.lattice.rank,
            "torsion_free": e.lattice.torsion_free,
            "exceeds_bound": e.lattice.exceeds_bound,
        },
    })
}

pub fn symplectic(s: &SymplecticReport) -> Value {
    json!({
        "holds": s.holds,
        "scaling": q(&s.scaling),
        "pairing": s.pairing,
        "eigenvalues": s.eigenvalues.as_deref().map(vector),
    })
}

pub fn conjugacy(c: &ConjugacyResult) -> Value {
    json!({
        "lambda": vector(&c.lambda),
        "h": tuple(&c.h),
        "h_inverse": tuple(&c.h_inverse),
        "verified_degree": c.verified_degree,
        "residual_zero": c.residual.components().iter().all(|s| s.terms().next().is_none()),
        "denominator_primes": c.denominator_primes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
    })
}

fn c1(v: &C1Value) -> Value {
    match v {
        C1Value::Exact(r) => q(r),
        C1Value::Approx(x) => json!(x),
    }
}

fn certificate(c: &NormCertificate) -> Value {
    json!({
        "rho": q(&c.rho),
        "delta": q(&c.delta),
        "g_norm": q(&c.g_norm),
        "w_norm": q(&c.w_norm),
        "dw_norm": q(&c.dw_norm),
        "dw_lambda_norm": q(&c.dw_lambda_norm),
        "min_c1": c1(&c.min_c1),
        "allowed_c1": c1(&c.allowed_c1),
        "passes": c.passes,
    })
}

pub fn newton_trace(t: &NewtonTrace) -> Value {
    json!({
        "prime": t.prime,
        "c": q(&t.params.c),
        "beta": q(&t.params.beta),
        "scaling_exponent": t.scaling_exponent,
        "c1": c1(&t.c1),
        "bound_violations": t.bound_violations,
        "iterations": t.iterations.iter().map(|it| json!({
            "index": it.index,
            "radius": q(&it.radius),
            "residual_order": it.residual_order,
            "verified_through": it.verified_through,
            "delta_order": it.delta_order,
            "residual_norm": q(&it.residual_norm),
            "delta_norm": q(&it.delta_norm),
            "certificate": certificate(&it.certificate),
        })).collect::<Vec<_>>(),
    })
}

pub fn probe(p: &ProbeResult<Rational>) -> Value {
    json!({
        "monomials": p.monomials.iter().map(|m| m.exponents().to_vec()).collect::<Vec<_>>(),
        "kernel": matrix(&p.kernel),
        "underdetermined": p.underdetermined,
    })
}

pub fn closure(e: &ClosureEstimate) -> Value {
    json!({
        "lower_bound": e.lower_bound,
        "lattice_basis": int_matrix(&e.lattice.basis),
        "torsion_free": e.lattice.torsion_free,
        "squared": e.squared,
        "monomial_change": int_matrix(&e.monomial_change),
        "new_multipliers": vector(&e.new_multipliers),
        "independent_directions": e.independent_directions,
        "raw_probe": probe(&e.raw_probe),
    })
}

pub fn vanishing(r: &VanishingReport) -> Value {
    json!({
        "zeros": r.zeros,
        "s_max": r.s_max,
        "m": r.m,
        "separation_level": r.separation_level,
        "leading_block": r.leading_block,
        "complete": r.complete,
        "classes": r.classes.iter().map(|c| json!({
            "residue": c.residue,
            "identically_zero": c.identically_zero,
            "zero_bound": c.zero_bound,
            "zeros_found": c.zeros_found,
            "multiplicity": c.multiplicity,
        })).collect::<Vec<_>>(),
    })
}

pub fn separating(s: &SeparatingPolynomial) -> Value {
    json!({
        "level": s.level,
        "coefficients": s.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "target_class": s.target_class.to_string(),
        "valuations": s.valuations,
        "verified": s.verified,
    })
}

/// Indented `key: value` lines.
pub fn to_text(v: &Value) -> String {
    let mut out = String::new();
    write_text(v, 0, &mut out);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn write_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        write_text(x, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        write_text(x, indent + 1, out);
                    }
                }
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", scalar(v).unwrap_or_default())),
    }
}
