//! JSON input documents.

use std::path::Path;

use padyn::arith::parse_rational;
use padyn::dynamics::AnalyticMap;
use padyn::eisenstein::AlgebraicPoly;
use padyn::series::QSeries;
use padyn::{MultiIndex, Rational};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

/// A rational written as a JSON integer or as a string such as `"-3/4"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RationalLit {
    Int(i64),
    Text(String),
}

impl RationalLit {
    fn parse(&self, at: &str) -> Result<Rational, CliError> {
        match self {
            RationalLit::Int(n) => Ok(Rational::from_integer((*n).into())),
            RationalLit::Text(s) => parse_rational(s).ok_or_else(|| CliError::doc(at, format!("cannot parse {s:?} as a rational"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub exponents: Vec<u32>,
    pub coefficient: RationalLit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub dimension: usize,
    #[serde(default)]
    pub variables: Option<Vec<String>>,
    pub components: Vec<Vec<TermDoc>>,
    #[serde(default)]
    pub fixed_locus_dim: usize,
    #[serde(default)]
    pub prime: Option<u64>,
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub symplectic_form: Option<Vec<Vec<RationalLit>>>,
    /// `μ` in `f*σ = μσ`; inferred from the linear part when absent.
    #[serde(default)]
    pub symplectic_multiplier: Option<RationalLit>,
    /// Start point for `orbit`.
    #[serde(default)]
    pub point: Option<Vec<RationalLit>>,
}

fn parse_terms(terms: &[TermDoc], arity: usize, at: &str) -> Result<Vec<(Vec<u32>, Rational)>, CliError> {
    terms
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let here = format!("{at}[{k}]");
            if t.exponents.len() != arity {
                return Err(CliError::doc(&format!("{here}.exponents"), format!("expected {arity} entries, found {}", t.exponents.len())));
            }
            Ok((t.exponents.clone(), t.coefficient.parse(&format!("{here}.coefficient"))?))
        })
        .collect()
}

pub fn parse_vector(v: &[RationalLit], at: &str) -> Result<Vec<Rational>, CliError> {
    v.iter().enumerate().map(|(i, x)| x.parse(&format!("{at}[{i}]"))).collect()
}

impl MapDocument {
    pub fn variable_names(&self) -> Vec<String> {
        self.variables.clone().unwrap_or_else(|| (1..=self.dimension).map(|i| format!("x{i}")).collect())
    }

    /// The map, truncated at `degree` or at its polynomial degree if larger.
    pub fn to_map(&self, degree: u32) -> Result<AnalyticMap, CliError> {
        let n = self.dimension;
        if self.components.len() != n {
            return Err(CliError::doc("components", format!("expected {n} components, found {}", self.components.len())));
        }
        if let Some(v) = &self.variables {
            if v.len() != n {
                return Err(CliError::doc("variables", format!("expected {n} names, found {}", v.len())));
            }
        }
        let polys = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| parse_terms(c, n, &format!("components[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let top = polys.iter().flatten().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(1);
        AnalyticMap::from_polynomials(n, degree.max(top), &polys, self.fixed_locus_dim)
            .map_err(|e| CliError::doc("components", e.to_string()))
    }

    pub fn symplectic(&self) -> Result<Option<(Vec<Vec<Rational>>, Option<Rational>)>, CliError> {
        let Some(form) = &self.symplectic_form else { return Ok(None) };
        let m = form
            .iter()
            .enumerate()
            .map(|(i, row)| parse_vector(row, &format!("symplectic_form[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let mu = self.symplectic_multiplier.as_ref().map(|x| x.parse("symplectic_multiplier")).transpose()?;
        Ok(Some((m, mu)))
    }

    pub fn start_point(&self) -> Result<Vec<Rational>, CliError> {
        let p = self.point.as_ref().ok_or_else(|| CliError::doc("point", "missing start point".into()))?;
        let v = parse_vector(p, "point")?;
        if v.len() != self.dimension {
            return Err(CliError::doc("point", format!("expected {} coordinates, found {}", self.dimension, v.len())));
        }
        Ok(v)
    }
}

/// `F(x, X)` and a seed root.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EisensteinDocument {
    pub num_vars: usize,
    /// Terms with `num_vars + 1` exponents, the last one for `X`.
    pub polynomial: Vec<TermDoc>,
    pub seed: Vec<TermDoc>,
    /// Degree through which the seed is known.
    pub seed_degree: u32,
}

impl EisensteinDocument {
    pub fn parse(&self) -> Result<(AlgebraicPoly, QSeries), CliError> {
        let terms = parse_terms(&self.polynomial, self.num_vars + 1, "polynomial")?;
        let poly = AlgebraicPoly::new(self.num_vars, &terms).map_err(|e| CliError::doc("polynomial", e.to_string()))?;
        let seed_terms = parse_terms(&self.seed, self.num_vars, "seed")?;
        let mut seed = QSeries::q_zero(self.num_vars, self.seed_degree);
        for (k, (e, c)) in seed_terms.into_iter().enumerate() {
            if e.iter().sum::<u32>() > self.seed_degree {
                return Err(CliError::doc(&format!("seed[{k}]"), "term above seed_degree".into()));
            }
            seed.add_to_coeff(MultiIndex::new(e), &c);
        }
        Ok((poly, seed))
    }
}

/// Points to probe, or a diagonal orbit to generate them.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDocument {
    #[serde(default)]
    pub points: Option<Vec<Vec<RationalLit>>>,
    #[serde(default)]
    pub multipliers: Option<Vec<RationalLit>>,
    #[serde(default)]
    pub start: Option<Vec<RationalLit>>,
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanishingDocument {
    pub a: Vec<RationalLit>,
    pub b: Vec<RationalLit>,
    pub prime: u64,
    #[serde(default)]
    pub precision: Option<u32>,
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_doc(text: &str) -> MapDocument {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn literals() {
        let v: Vec<RationalLit> = serde_json::from_str(r#"[3, "-3/4", "0"]"#).unwrap();
        let q = parse_vector(&v, "v").unwrap();
        assert_eq!(q, vec![Rational::from_integer(3.into()), Rational::new((-3).into(), 4.into()), Rational::from_integer(0.into())]);
        let bad: Vec<RationalLit> = serde_json::from_str(r#"[1, "x/2"]"#).unwrap();
        match parse_vector(&bad, "v") {
            Err(CliError::Document { at, .. }) => assert_eq!(at, "v[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arity_errors_carry_paths() {
        let d = map_doc(r#"{"dimension": 2, "components": [[{"exponents": [1, 0], "coefficient": 2}], [{"exponents": [1], "coefficient": 1}]]}"#);
        match d.to_map(4) {
            Err(CliError::Document { at, .. }) => assert_eq!(at, "components[1][0].exponents"),
            other => panic!("{other:?}"),
        }
        let d = map_doc(r#"{"dimension": 2, "components": [[]]}"#);
        assert!(matches!(d.to_map(4), Err(CliError::Document { .. })));
    }

    #[test]
    fn truncation_covers_polynomial_degree() {
        let d = map_doc(r#"{"dimension": 1, "components": [[{"exponents": [1], "coefficient": 2}, {"exponents": [5], "coefficient": "1/3"}]], "point": ["3"]}"#);
        assert_eq!(d.to_map(3).unwrap().trunc_degree(), 5);
        assert_eq!(d.variable_names(), vec!["x1".to_string()]);
        assert_eq!(d.start_point().unwrap(), vec![Rational::from_integer(3.into())]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<MapDocument>(r#"{"dimension": 1, "components": [], "extra": 1}"#).is_err());
    }
}
