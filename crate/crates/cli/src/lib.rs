//! Command-line front end: reads JSON documents, runs an analysis and writes a
//! JSON (or plain text) report.

pub mod document;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use padyn::arith::parse_rational;
use padyn::dynamics::{
    analyze_map, default_prime, jacobian_at_origin, rational_eigenvalues, symplectic_scaling_check, DiophantineParams, DynamicsError,
    DEFAULT_EXPONENT_BOUND,
};
use padyn::eisenstein::{coefficients_up_to, denominator_support, AlgebraicSeriesSpec, EisensteinError};
use padyn::linalg::{mat_mul, transpose};
use padyn::linearize::{linearize_newton, linearize_order_by_order, LinearizeError};
use padyn::orbit::{
    closure_dimension_estimate, iterate_in_neighbourhood, relation_probe, separating_polynomial, vanishing_exponents, Neighbourhood,
    OrbitError, VanishingSumInstance,
};
use padyn::{Rational, Rationals};
use serde_json::{json, Value};
use thiserror::Error;

use document::{parse_vector, EisensteinDocument, MapDocument, ProbeDocument, VanishingDocument};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{at}: {message}")]
    Document { at: String, message: String },
    #[error("{0}")]
    Obstruction(String),
}

impl CliError {
    pub fn doc(at: &str, message: String) -> Self {
        CliError::Document { at: at.to_string(), message }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Obstruction(_) => 2,
            _ => 1,
        }
    }
}

fn dynamics_error(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::IrrationalEigenvalue(_) | DynamicsError::ZeroEigenvalue | DynamicsError::LocusEigenvalues(_) => {
            CliError::Obstruction(format!("{}: {e}", dynamics_kind(&e)))
        }
        _ => CliError::Usage(e.to_string()),
    }
}

fn dynamics_kind(e: &DynamicsError) -> &'static str {
    match e {
        DynamicsError::IrrationalEigenvalue(_) => "IrrationalEigenvalue",
        DynamicsError::ZeroEigenvalue => "ZeroEigenvalue",
        DynamicsError::LocusEigenvalues(_) => "LocusEigenvalues",
        _ => "DynamicsError",
    }
}

fn linearize_error(e: LinearizeError) -> CliError {
    match e {
        LinearizeError::Dynamics(d) => dynamics_error(d),
        LinearizeError::ResonantMonomial { .. } => CliError::Obstruction(format!("Resonance: {e}")),
        LinearizeError::NotSemisimple | LinearizeError::EigenvaluesVary | LinearizeError::TailBlockSingular | LinearizeError::NotInIdeal(_) => {
            CliError::Obstruction(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    }
}

fn eisenstein_error(e: EisensteinError) -> CliError {
    match e {
        EisensteinError::NotARoot(_) | EisensteinError::DerivativeVanishes(_) | EisensteinError::DivisionFailure(_) => {
            CliError::Obstruction(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    }
}

fn orbit_error(e: OrbitError) -> CliError {
    match e {
        OrbitError::LeftNeighbourhood { .. } | OrbitError::NotIsometric { .. } | OrbitError::Torsion | OrbitError::PrecisionInsufficient(_) => {
            CliError::Obstruction(e.to_string())
        }
        OrbitError::Dynamics(d) => dynamics_error(d),
        _ => CliError::Usage(e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "padyn", version, about = "p-adic linearization and orbit analysis for polynomial self-maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Prime for p-adic computations (default: smallest suitable odd prime).
    #[arg(long, global = true)]
    pub prime: Option<u64>,
    /// Relative p-adic precision in digits.
    #[arg(long, global = true, default_value_t = 32)]
    pub precision: u32,
    /// Truncation degree (or probe degree).
    #[arg(long, global = true, default_value_t = 8)]
    pub degree: u32,
    /// Horizon for vanishing exponents.
    #[arg(long, global = true, default_value_t = 200)]
    pub smax: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, resonances, relation lattice and symplectic scaling.
    Analyze { input: PathBuf },
    /// Degree-by-degree linearizing conjugacy.
    Linearize { input: PathBuf },
    /// Linearizing conjugacy by Newton's method, with the norm trace.
    Newton {
        input: PathBuf,
        /// Constant C of the bound |λ^I - λ_j| >= C |I|^(-β).
        #[arg(long, default_value = "1")]
        c: String,
        /// Exponent β of the same bound.
        #[arg(long, default_value = "0")]
        beta: String,
    },
    /// Power series root of F(x, X) = 0 and its denominator primes.
    Eisenstein { input: PathBuf },
    /// Orbit of the document's point inside the invariant neighbourhood.
    Orbit {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Neighbourhood level s.
        #[arg(long, default_value_t = 1)]
        level: u32,
    },
    /// Polynomial relations on a point sample or on a diagonal orbit.
    Probe { input: PathBuf },
    /// Exponents s with Σ a_i b_i^s = 0.
    Vanishing { input: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Linearize { .. } => "linearize",
            Command::Newton { .. } => "newton",
            Command::Eisenstein { .. } => "eisenstein",
            Command::Orbit { .. } => "orbit",
            Command::Probe { .. } => "probe",
            Command::Vanishing { .. } => "vanishing",
        }
    }

    fn input(&self) -> &PathBuf {
        match self {
            Command::Analyze { input }
            | Command::Linearize { input }
            | Command::Newton { input, .. }
            | Command::Eisenstein { input }
            | Command::Orbit { input, .. }
            | Command::Probe { input }
            | Command::Vanishing { input } => input,
        }
    }
}

fn echo(cli: &Cli) -> Value {
    let mut flags = json!({
        "prime": cli.prime,
        "precision": cli.precision,
        "degree": cli.degree,
        "smax": cli.smax,
    });
    match &cli.command {
        Command::Newton { c, beta, .. } => {
            flags["c"] = json!(c);
            flags["beta"] = json!(beta);
        }
        Command::Orbit { steps, level, .. } => {
            flags["steps"] = json!(steps);
            flags["level"] = json!(level);
        }
        _ => {}
    }
    json!({ "name": cli.command.name(), "input": cli.command.input().display().to_string(), "flags": flags })
}

/// Runs the command and returns the full report.
pub fn execute(cli: &Cli) -> Result<Value, CliError> {
    let start = Instant::now();
    let result = match &cli.command {
        Command::Analyze { input } => analyze(cli, &document::read(input)?)?,
        Command::Linearize { input } => linearize(cli, &document::read(input)?)?,
        Command::Newton { input, c, beta } => newton(cli, &document::read(input)?, c, beta)?,
        Command::Eisenstein { input } => eisenstein(cli, &document::read(input)?)?,
        Command::Orbit { input, steps, level } => orbit(cli, &document::read(input)?, *steps, *level)?,
        Command::Probe { input } => probe(cli, &document::read(input)?)?,
        Command::Vanishing { input } => vanishing(cli, &document::read(input)?)?,
    };
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": echo(cli),
        "result": result,
        "timing": { "elapsed_ms": start.elapsed().as_secs_f64() * 1000.0 },
    }))
}

/// Serializes a report in the requested format.
pub fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("serializable") + "\n",
        Format::Text => report::to_text(report),
    }
}

fn infer_multiplier(m: &[Vec<Rational>], sigma: &[Vec<Rational>]) -> Option<Rational> {
    let ring = Rationals;
    let pulled = mat_mul(&ring, &mat_mul(&ring, &transpose(&m.to_vec()), &sigma.to_vec()), &m.to_vec());
    for (i, row) in sigma.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            if !num_traits::Zero::is_zero(s) {
                return Some(&pulled[i][j] / s);
            }
        }
    }
    None
}

fn analyze(cli: &Cli, doc: &MapDocument) -> Result<Value, CliError> {
    let f = doc.to_map(cli.degree)?;
    let rep = analyze_map(&f, cli.degree, DEFAULT_EXPONENT_BOUND).map_err(dynamics_error)?;
    let mut out = json!({
        "dimension": rep.n,
        "variables": doc.variable_names(),
        "fixed_locus_dim": rep.fixed_locus_dim,
        "jacobian": report::matrix(&rep.jacobian),
        "eigen": report::eigen(&rep.eigen),
        "resonance_horizon": rep.resonance_horizon,
        "default_prime": rep.prime,
    });
    if let Some((sigma, mu)) = doc.symplectic()? {
        let m = jacobian_at_origin(&f);
        let mu = match mu.or_else(|| infer_multiplier(&m, &sigma)) {
            Some(mu) => mu,
            None => return Err(CliError::doc("symplectic_form", "form is zero".into())),
        };
        let s = symplectic_scaling_check(&m, &sigma, &mu).map_err(|e| CliError::doc("symplectic_form", e.to_string()))?;
        out["symplectic"] = report::symplectic(&s);
    }
    Ok(out)
}

fn linearize(cli: &Cli, doc: &MapDocument) -> Result<Value, CliError> {
    let f = doc.to_map(cli.degree)?;
    let res = linearize_order_by_order(&f, cli.degree).map_err(linearize_error)?;
    Ok(json!({ "degree": cli.degree, "conjugacy": report::conjugacy(&res) }))
}

fn parse_flag(s: &str, name: &str) -> Result<Rational, CliError> {
    parse_rational(s).ok_or_else(|| CliError::Usage(format!("--{name}: cannot parse {s:?} as a rational")))
}

fn newton(cli: &Cli, doc: &MapDocument, c: &str, beta: &str) -> Result<Value, CliError> {
    let f = doc.to_map(cli.degree)?;
    let params = DiophantineParams::new(parse_flag(c, "c")?, parse_flag(beta, "beta")?).map_err(|e| CliError::Usage(e.to_string()))?;
    let prime = cli.prime.or(doc.prime);
    let (res, trace) = linearize_newton(&f, cli.degree, &params, prime).map_err(linearize_error)?;
    Ok(json!({ "degree": cli.degree, "conjugacy": report::conjugacy(&res), "trace": report::newton_trace(&trace) }))
}

fn eisenstein(cli: &Cli, doc: &EisensteinDocument) -> Result<Value, CliError> {
    let (poly, seed) = doc.parse()?;
    let spec = AlgebraicSeriesSpec::new(poly, seed).map_err(eisenstein_error)?;
    let phi = coefficients_up_to(&spec, cli.degree).map_err(eisenstein_error)?;
    let support = denominator_support(&phi);
    Ok(json!({
        "degree": cli.degree,
        "s": spec.s,
        "pivot": { "monomial": spec.pivot_index.exponents(), "coefficient": spec.pivot_d.to_string() },
        "series": report::series(&phi),
        "denominator_primes": support.primes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "n": support.n.to_string(),
    }))
}

fn orbit(cli: &Cli, doc: &MapDocument, steps: usize, level: u32) -> Result<Value, CliError> {
    let f = doc.to_map(cli.degree)?;
    let x = doc.start_point()?;
    let prime = match cli.prime.or(doc.prime) {
        Some(p) => p,
        None => {
            let eig = rational_eigenvalues(&jacobian_at_origin(&f)).map(|e| e.eigenvalues).unwrap_or_default();
            default_prime(&f, &eig)
        }
    };
    let precision = doc.precision.unwrap_or(cli.precision);
    let nb = Neighbourhood::new(prime, level, f.dim()).map_err(orbit_error)?;
    let start = nb.point(&x, precision).map_err(orbit_error)?;
    let rep = iterate_in_neighbourhood(&f, &nb, &start, steps).map_err(orbit_error)?;
    Ok(json!({
        "prime": prime,
        "level": level,
        "precision": precision,
        "orbit": rep.points.iter().map(|pt| pt.iter().map(|c| c.digit_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "unit_jacobian": rep.unit_jacobian,
        "isometry_checks": rep.isometry_checks,
    }))
}

fn probe(cli: &Cli, doc: &ProbeDocument) -> Result<Value, CliError> {
    let d = cli.degree;
    if let Some(points) = &doc.points {
        let pts = points.iter().enumerate().map(|(i, p)| parse_vector(p, &format!("points[{i}]"))).collect::<Result<Vec<_>, _>>()?;
        if let Some(i) = pts.iter().position(|p| p.len() != pts[0].len()) {
            return Err(CliError::doc(&format!("points[{i}]"), "points must share one dimension".into()));
        }
        return Ok(json!({ "degree": d, "probe": report::probe(&relation_probe(&pts, d)) }));
    }
    let (Some(l), Some(s)) = (&doc.multipliers, &doc.start) else {
        return Err(CliError::doc("points", "give either points or multipliers with start".into()));
    };
    let lambda = parse_vector(l, "multipliers")?;
    let start = parse_vector(s, "start")?;
    let samples = doc.samples.unwrap_or(50);
    let est = closure_dimension_estimate(&lambda, &start, samples, d).map_err(orbit_error)?;
    Ok(json!({ "degree": d, "samples": samples, "estimate": report::closure(&est) }))
}

fn vanishing(cli: &Cli, doc: &VanishingDocument) -> Result<Value, CliError> {
    let a = parse_vector(&doc.a, "a")?;
    let b = parse_vector(&doc.b, "b")?;
    let precision = doc.precision.unwrap_or(cli.precision);
    let inst = VanishingSumInstance::new(a, b.clone(), doc.prime, precision).map_err(orbit_error)?;
    let rep = vanishing_exponents(&inst, cli.smax).map_err(orbit_error)?;
    let block: Vec<Rational> = rep.leading_block.iter().map(|&i| b[i].clone()).collect();
    let sep = separating_polynomial(&block, 0, rep.separation_level, doc.prime).map_err(orbit_error)?;
    Ok(json!({
        "prime": doc.prime,
        "precision": precision,
        "stabilizing_exponent": inst.m,
        "logs": inst.c.iter().map(|c| c.digit_string()).collect::<Vec<_>>(),
        "torsion_free": inst.torsion_free,
        "report": report::vanishing(&rep),
        "separating_polynomial": report::separating(&sep),
    }))
}
