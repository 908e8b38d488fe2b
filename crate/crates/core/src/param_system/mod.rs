//! Parametrized matrices `D(ε)` and right-hand sides `b(ε)`.
//!
//! The canonical representation is [`ParametrizedSystem`], whose entries are
//! sparse multivariate polynomials that can be evaluated and differentiated
//! exactly. Anything else that can produce `D(ε)` pointwise plugs in through
//! the [`MatrixFamily`] trait; [`CallableSystem`] wraps a closure and falls back
//! to central finite differences for partials.

mod format;
mod poly;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use format::{parse_system, serialize_system};
pub use poly::{grlex, Monomial, PolyEntry};

/// A point `ε ∈ ℝᴺ` in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("parameter coordinate {i}"),
            });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self + step * e_j`.
    pub fn shifted(&self, j: usize, step: f64) -> ParamPoint {
        let mut coords = self.0.clone();
        coords[j] += step;
        ParamPoint(coords)
    }

    pub fn distance(&self, other: &ParamPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<f64> for ParamPoint {
    fn from(x: f64) -> Self {
        ParamPoint(vec![x])
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `D(ε)` and optionally `b(ε)` realized at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPair {
    pub matrix: DMatrix<f64>,
    pub rhs: Option<DVector<f64>>,
}

/// Anything that can realize `D(ε)` (and `b(ε)`) pointwise, together with
/// partial derivatives in each parameter.
pub trait MatrixFamily: Send + Sync {
    /// Matrix order `n`.
    fn order(&self) -> usize;

    /// Parameter count `N`.
    fn num_params(&self) -> usize;

    fn name(&self) -> &str;

    fn evaluate(&self, at: &ParamPoint) -> Result<EvaluatedPair>;

    /// `∂D/∂ε_j` and `∂b/∂ε_j` at `at`; `j` is 0-based.
    fn partial_derivative(&self, at: &ParamPoint, j: usize) -> Result<EvaluatedPair>;

    fn check_point(&self, at: &ParamPoint) -> Result<()> {
        if at.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, system has {} parameters",
                at.len(),
                self.num_params()
            )));
        }
        Ok(())
    }

    fn check_param(&self, j: usize) -> Result<()> {
        if j >= self.num_params() {
            return Err(Error::ParamIndex {
                index: j,
                count: self.num_params(),
            });
        }
        Ok(())
    }
}

/// A square system `D(ε) x = b(ε)` with polynomial entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedSystem {
    name: String,
    n: usize,
    num_params: usize,
    /// Row-major `n × n` grid.
    entries: Vec<PolyEntry>,
    rhs: Option<Vec<PolyEntry>>,
}

impl ParametrizedSystem {
    /// Builds a system from a row-major grid of entries.
    pub fn new(
        name: impl Into<String>,
        num_params: usize,
        grid: Vec<Vec<PolyEntry>>,
        rhs: Option<Vec<PolyEntry>>,
    ) -> Result<Self> {
        let n = grid.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("matrix order must be >= 1".into()));
        }
        if num_params == 0 {
            return Err(Error::DimensionMismatch(
                "parameter count must be >= 1".into(),
            ));
        }
        if let Some((i, row)) = grid.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(b) = &rhs {
            if b.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "rhs has length {}, expected {n}",
                    b.len()
                )));
            }
        }
        let entries: Vec<PolyEntry> = grid.into_iter().flatten().collect();
        let sys = Self {
            name: name.into(),
            n,
            num_params,
            entries,
            rhs,
        };
        sys.check_powers()?;
        Ok(sys)
    }

    fn check_powers(&self) -> Result<()> {
        let check = |p: &PolyEntry, location: String| -> Result<()> {
            for m in p.monomials() {
                if m.powers.len() != self.num_params {
                    return Err(Error::PowerLength {
                        location,
                        expected: self.num_params,
                        found: m.powers.len(),
                    });
                }
                if !m.coeff.is_finite() {
                    return Err(Error::NonFinite { location });
                }
            }
            Ok(())
        };
        for (idx, p) in self.entries.iter().enumerate() {
            check(p, format!("entry ({}, {})", idx / self.n, idx % self.n))?;
        }
        if let Some(b) = &self.rhs {
            for (i, p) in b.iter().enumerate() {
                check(p, format!("rhs {i}"))?;
            }
        }
        Ok(())
    }

    pub fn with_rhs(mut self, rhs: Vec<PolyEntry>) -> Result<Self> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs has length {}, expected {}",
                rhs.len(),
                self.n
            )));
        }
        self.rhs = Some(rhs);
        self.check_powers()?;
        Ok(self)
    }

    pub fn entry(&self, row: usize, col: usize) -> &PolyEntry {
        &self.entries[row * self.n + col]
    }

    pub fn rhs(&self) -> Option<&[PolyEntry]> {
        self.rhs.as_deref()
    }

    pub fn monomial_count(&self) -> usize {
        self.entries.iter().map(PolyEntry::len).sum::<usize>()
            + self
                .rhs
                .iter()
                .flatten()
                .map(PolyEntry::len)
                .sum::<usize>()
    }

    fn realize(
        &self,
        at: &ParamPoint,
        f: impl Fn(&PolyEntry) -> f64,
    ) -> Result<EvaluatedPair> {
        self.check_point(at)?;
        let n = self.n;
        let matrix = DMatrix::from_fn(n, n, |i, j| f(self.entry(i, j)));
        if let Some(idx) = matrix.iter().position(|x| !x.is_finite()) {
            // nalgebra storage is column-major
            return Err(Error::NonFinite {
                location: format!("entry ({}, {})", idx % n, idx / n),
            });
        }
        let rhs = match &self.rhs {
            Some(b) => {
                let v = DVector::from_iterator(n, b.iter().map(&f));
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        location: format!("rhs {i}"),
                    });
                }
                Some(v)
            }
            None => None,
        };
        Ok(EvaluatedPair { matrix, rhs })
    }
}

impl MatrixFamily for ParametrizedSystem {
    fn order(&self) -> usize {
        self.n
    }

    fn num_params(&self) -> usize {
        self.num_params
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, at: &ParamPoint) -> Result<EvaluatedPair> {
        self.realize(at, |p| p.eval(at.coords()))
    }

    fn partial_derivative(&self, at: &ParamPoint, j: usize) -> Result<EvaluatedPair> {
        self.check_param(j)?;
        self.realize(at, |p| p.eval_derivative(at.coords(), j))
    }
}

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Black-box family: evaluation through a closure, partials by central
/// differences with step `fd_step`.
#[derive(Clone)]
pub struct CallableSystem {
    name: String,
    n: usize,
    num_params: usize,
    matrix: Arc<MatrixFn>,
    fd_step: f64,
}

impl CallableSystem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        num_params: usize,
        matrix: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            num_params,
            matrix: Arc::new(matrix),
            fd_step: 1e-6,
        }
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }
}

impl fmt::Debug for CallableSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallableSystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("num_params", &self.num_params)
            .finish_non_exhaustive()
    }
}

impl MatrixFamily for CallableSystem {
    fn order(&self) -> usize {
        self.n
    }

    fn num_params(&self) -> usize {
        self.num_params
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, at: &ParamPoint) -> Result<EvaluatedPair> {
        self.check_point(at)?;
        let matrix = (self.matrix)(at.coords());
        if matrix.nrows() != self.n || matrix.ncols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "callable returned {}x{}, expected {n}x{n}",
                matrix.nrows(),
                matrix.ncols(),
                n = self.n
            )));
        }
        if let Some(idx) = matrix.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("entry ({}, {})", idx % self.n, idx / self.n),
            });
        }
        Ok(EvaluatedPair { matrix, rhs: None })
    }

    fn partial_derivative(&self, at: &ParamPoint, j: usize) -> Result<EvaluatedPair> {
        self.check_param(j)?;
        let h = self.fd_step;
        let plus = self.evaluate(&at.shifted(j, h))?.matrix;
        let minus = self.evaluate(&at.shifted(j, -h))?.matrix;
        Ok(EvaluatedPair {
            matrix: (plus - minus) / (2.0 * h),
            rhs: None,
        })
    }
}
