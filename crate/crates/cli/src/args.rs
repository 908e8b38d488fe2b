//! Parsing of the value grammars shared by several commands.

use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use rellich::corpus::{corpus, CorpusSystem};
use rellich::{parse_system, Error, MatrixFamily, Objective, ParamPoint, Tolerance, UnitVector, CORPUS_NAMES};

pub const TOL_ENV: &str = "RELLICH_SENS_TOL";

/// A malformed command line value.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Either a library error or a usage problem found by the front end.
#[derive(Debug)]
pub enum Failure {
    Usage(UsageError),
    Lib(Error),
    /// A check ran and did not pass; the report has already been printed.
    Verdict(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e)
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(UsageError(msg.into()))
}

pub fn parse_reals(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| usage(format!("invalid {what} component `{s}` in `{text}`")))
        })
        .collect()
}

pub fn parse_point(text: &str, sys: &dyn MatrixFamily) -> Result<ParamPoint, Failure> {
    let coords = parse_reals(text, "--at")?;
    if coords.len() != sys.num_params() {
        return Err(usage(format!(
            "point `{text}` has {} coordinates, system `{}` has {} parameters",
            coords.len(),
            sys.name(),
            sys.num_params()
        )));
    }
    Ok(ParamPoint::new(coords)?)
}

/// `;`-separated list of points.
pub fn parse_path(text: &str, sys: &dyn MatrixFamily) -> Result<Vec<ParamPoint>, Failure> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_point(s, sys))
        .collect()
}

pub fn linear_path(from: &ParamPoint, to: &ParamPoint, steps: usize) -> Result<Vec<ParamPoint>, Failure> {
    if steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    (0..=steps)
        .map(|i| {
            let t = i as f64 / steps as f64;
            let coords = from
                .coords()
                .iter()
                .zip(to.coords())
                .map(|(a, b)| a + t * (b - a))
                .collect();
            Ok(ParamPoint::new(coords)?)
        })
        .collect()
}

fn parse_tolerance(text: &str, source: &str) -> Result<Tolerance, Failure> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(Tolerance::Auto);
    }
    match text.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(Tolerance::Absolute(t)),
        _ => Err(usage(format!("{source} must be `auto` or a positive real, got `{text}`"))),
    }
}

/// `--tol`, then the environment, then the automatic policy.
pub fn resolve_tolerance(flag: Option<&str>) -> Result<Tolerance, Failure> {
    if let Some(t) = flag {
        return parse_tolerance(t, "--tol");
    }
    match std::env::var(TOL_ENV) {
        Ok(v) if !v.trim().is_empty() => parse_tolerance(v.trim(), TOL_ENV),
        _ => Ok(Tolerance::Auto),
    }
}

/// 1-based parameter index to 0-based.
pub fn parse_param(j: usize, sys: &dyn MatrixFamily) -> Result<usize, Failure> {
    if j == 0 || j > sys.num_params() {
        return Err(usage(format!(
            "--param {j} out of range: system `{}` has parameters 1..={}",
            sys.name(),
            sys.num_params()
        )));
    }
    Ok(j - 1)
}

pub fn parse_anchor(text: Option<&str>, n: usize) -> Result<Option<UnitVector>, Failure> {
    let Some(text) = text else { return Ok(None) };
    let v = parse_reals(text, "--u")?;
    if v.len() != n {
        return Err(usage(format!("--u has {} components, system has order {n}", v.len())));
    }
    Ok(Some(UnitVector::from_direction(DVector::from_vec(v))?))
}

/// `coord:<i>` (1-based) or `linear:<w₁,…,wₙ>`.
pub fn parse_objective(text: &str, n: usize) -> Result<Objective, Failure> {
    let bad = || usage(format!("--objective must be coord:<i> or linear:<vector>, got `{text}`"));
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "coord" => {
            let i: usize = value.trim().parse().map_err(|_| bad())?;
            if i == 0 || i > n {
                return Err(usage(format!("coord:{i} out of range 1..={n}")));
            }
            Ok(Objective::Coordinate(i - 1))
        }
        "linear" => {
            let w = parse_reals(value, "--objective")?;
            if w.len() != n {
                return Err(usage(format!("linear objective has {} components, system has order {n}", w.len())));
            }
            Ok(Objective::Linear(DVector::from_vec(w)))
        }
        _ => Err(bad()),
    }
}

/// A system file, or a built-in corpus name (`ex14` or `ex14.json`).
pub fn load_system(spec: &str) -> Result<CorpusSystem, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read `{spec}`: {e}")))?;
        return Ok(CorpusSystem::Polynomial(parse_system(&text)?));
    }
    let name = spec.strip_suffix(".json").unwrap_or(spec);
    if CORPUS_NAMES.contains(&name) {
        return Ok(corpus(name)?.system);
    }
    Err(usage(format!(
        "`{spec}` is neither a readable file nor a built-in system ({})",
        CORPUS_NAMES.join(", ")
    )))
}
