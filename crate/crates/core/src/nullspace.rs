//! Numerical rank, nonsingular minor selection, the cofactor null vector and
//! an SVD-based orthonormal null basis.
//!
//! The cofactor construction works on the leading `(r+1) × (r+1)` block after
//! the selected `r × r` minor has been permuted to the top-left corner: the
//! null vector's entries are the cofactors of the last row of that block.
//! They only depend on the minor rows, so the identity `M f = 0` holds
//! exactly on those rows and up to the rank gap on the others.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det, pivot_columns, singular_values, smallest_singular_value, submatrix, OrderedSvd};

/// Relative pivoting threshold tried first when picking the minor. Columns
/// and rows within this factor of the best candidate are taken in index
/// order, which reproduces the leading-minor choice whenever it is well
/// conditioned.
const MINOR_PIVOT_THRESHOLD: f64 = 0.1;

/// Largest order handled by the cofactor construction unless overridden.
pub const DEFAULT_COFACTOR_LIMIT: usize = 12;

/// Rank threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Tolerance {
    /// `max(m, p) · ε_mach · σ_max`.
    #[default]
    Auto,
    Absolute(f64),
}

impl Tolerance {
    pub fn resolve(&self, m: &DMatrix<f64>) -> Result<f64> {
        match *self {
            Tolerance::Auto => {
                check_finite(m)?;
                Ok(default_tolerance(m))
            }
            Tolerance::Absolute(t) if t > 0.0 && t.is_finite() => Ok(t),
            Tolerance::Absolute(t) => Err(Error::InvalidTolerance(t)),
        }
    }
}

pub fn default_tolerance(m: &DMatrix<f64>) -> f64 {
    let sigma_max = singular_values(m).first().copied().unwrap_or(0.0);
    let dim = m.nrows().max(m.ncols()) as f64;
    (dim * f64::EPSILON * sigma_max).max(f64::MIN_POSITIVE)
}

/// Non-fatal diagnostics attached to a [`RankProfile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Warning {
    /// A singular value lies within a factor 10 of the tolerance, so the rank
    /// decision is fragile.
    ToleranceAmbiguity { index: usize, value: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProfile {
    pub rank: usize,
    /// Column count minus rank; `n − r` for square input.
    pub deficiency: usize,
    /// Rows of the selected nonsingular minor, ascending.
    pub minor_rows: Vec<usize>,
    /// Columns of the selected nonsingular minor, ascending.
    pub minor_cols: Vec<usize>,
    /// Smallest singular value of the selected minor (`∞` when `r = 0`).
    pub minor_sigma_min: f64,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub tol: f64,
    pub warnings: Vec<Warning>,
}

impl RankProfile {
    pub fn is_ambiguous(&self) -> bool {
        !self.warnings.is_empty()
    }

    /// Columns outside the minor, ascending.
    pub fn free_cols(&self, ncols: usize) -> Vec<usize> {
        (0..ncols).filter(|c| !self.minor_cols.contains(c)).collect()
    }

    /// Rows outside the minor, ascending.
    pub fn free_rows(&self, nrows: usize) -> Vec<usize> {
        (0..nrows).filter(|r| !self.minor_rows.contains(r)).collect()
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if let Some(idx) = m.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("entry ({}, {})", idx % m.nrows(), idx / m.nrows()),
        });
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

/// Numerical rank of `m` at absolute threshold `tol` together with a
/// nonsingular `r × r` minor. Accepts rectangular input.
pub fn rank_profile(m: &DMatrix<f64>, tol: f64) -> Result<RankProfile> {
    check_tol(tol)?;
    check_finite(m)?;
    let svd = OrderedSvd::new(m);
    let values = svd.values;
    let rank = values.iter().filter(|&&s| s > tol).count();
    let warnings = values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= tol / 10.0 && s <= tol * 10.0)
        .map(|(index, &value)| Warning::ToleranceAmbiguity { index, value, tol })
        .collect();
    let (minor_rows, minor_cols, minor_sigma_min) = if rank == 0 {
        (Vec::new(), Vec::new(), f64::INFINITY)
    } else {
        select_minor(m, rank, values[rank - 1], tol)?
    };
    Ok(RankProfile {
        rank,
        deficiency: m.ncols() - rank,
        minor_rows,
        minor_cols,
        minor_sigma_min,
        singular_values: values,
        tol,
        warnings,
    })
}

fn select_minor(
    m: &DMatrix<f64>,
    rank: usize,
    sigma_r: f64,
    tol: f64,
) -> Result<(Vec<usize>, Vec<usize>, f64)> {
    for threshold in [MINOR_PIVOT_THRESHOLD, 1.0] {
        let mut cols = pivot_columns(m, rank, threshold);
        if cols.len() < rank {
            continue;
        }
        let chosen = DMatrix::from_fn(m.nrows(), rank, |i, j| m[(i, cols[j])]);
        let mut rows = pivot_columns(&chosen.transpose(), rank, threshold);
        if rows.len() < rank {
            continue;
        }
        rows.sort_unstable();
        cols.sort_unstable();
        let sigma = smallest_singular_value(&submatrix(m, &rows, &cols));
        let acceptable = if threshold < 1.0 {
            sigma > tol && sigma >= 1e-3 * sigma_r
        } else {
            sigma > tol
        };
        if acceptable {
            return Ok((rows, cols, sigma));
        }
    }
    Err(Error::MinorSelection { rank })
}

/// A vector of Euclidean norm 1 (within `1e-12`).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    pub const NORM_TOL: f64 = 1e-12;

    /// Accepts `v` only if it already has unit norm.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(v))
    }

    /// Scales `v` to unit length without touching its sign.
    pub fn from_direction(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v / norm))
    }

    pub fn canonical(n: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        Self(v)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn negated(&self) -> UnitVector {
        UnitVector(-&self.0)
    }
}

impl std::ops::Index<usize> for UnitVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Index of the largest-magnitude component, lowest index on ties.
fn sign_pivot(v: &DVector<f64>) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// `f / ‖f‖` with the largest-magnitude component made positive.
pub fn normalize(f: &DVector<f64>) -> Result<UnitVector> {
    let norm = f.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let sign = if f[sign_pivot(f)] < 0.0 { -1.0 } else { 1.0 };
    Ok(UnitVector(f * (sign / norm)))
}

/// Rellich's cofactor null vector of `m` for the minor recorded in `profile`.
///
/// With the minor rows `R`, minor columns `C` and the first column `c*` not
/// in `C`, the entries on `C ∪ {c*}` are the cofactors of the last row of the
/// bordered `(r+1) × (r+1)` block; every other entry is zero. The entry at
/// `c*` equals the minor's determinant, so the vector never vanishes.
pub fn cofactor_null_vector(m: &DMatrix<f64>, profile: &RankProfile) -> Result<DVector<f64>> {
    let n = m.ncols();
    let r = profile.rank;
    if r >= n {
        return Err(Error::DeficiencyZero);
    }
    let extra = profile.free_cols(n)[0];
    let mut cols = profile.minor_cols.clone();
    cols.push(extra);
    // r × (r+1) block of the minor rows over the bordered columns
    let block = submatrix(m, &profile.minor_rows, &cols);
    let mut f = DVector::zeros(n);
    for (k, &col) in cols.iter().enumerate() {
        let keep: Vec<usize> = (0..=r).filter(|&c| c != k).collect();
        let minor = DMatrix::from_fn(r, r, |i, j| block[(i, keep[j])]);
        let sign = if (r + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        f[col] = sign * det(&minor);
    }
    Ok(f)
}

/// Orthonormal basis of the numerical null space: right singular vectors
/// whose singular values are `<= tol`, ordered by ascending singular value and
/// sign-normalized.
pub fn null_basis(m: &DMatrix<f64>, tol: f64) -> Result<Vec<UnitVector>> {
    check_tol(tol)?;
    check_finite(m)?;
    let n = m.ncols();
    let svd = full_right_svd(m);
    let rank = svd.values.iter().filter(|&&s| s > tol).count();
    (rank..n)
        .rev()
        .map(|i| normalize(&svd.v.column(i).into_owned()))
        .collect()
}

/// SVD whose `v` spans all of ℝᵖ; pads wide matrices with zero rows.
fn full_right_svd(m: &DMatrix<f64>) -> OrderedSvd {
    if m.nrows() >= m.ncols() {
        OrderedSvd::new(m)
    } else {
        let mut padded = DMatrix::zeros(m.ncols(), m.ncols());
        padded.rows_mut(0, m.nrows()).copy_from(m);
        OrderedSvd::new(&padded)
    }
}
