//! Particular and general solutions of `D(ε) x = b(ε)`.
//!
//! The particular solution keeps the `r` equations through the selected
//! minor and replaces the others by unit rows that pin the variables outside
//! the minor. With minor rows `R`, minor columns `C`, and the complements
//! `R'`, `C'` listed in ascending order, the appended equations are
//! `x[C'ᵢ] = b[R'ᵢ]`. The resulting square matrix has determinant
//! `± det(minor)`, so it is nonsingular exactly when the minor is.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frame::{frame_solutions, Frame, FrameMethod};
use crate::nullspace::{rank_profile, RankProfile, Tolerance};
use crate::param_system::{MatrixFamily, ParamPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    pub matrix: RankProfile,
    /// Profile of `[M | b]`.
    pub augmented: RankProfile,
    pub consistent: bool,
}

/// Compares `rank M` with `rank [M | b]` at the same tolerance.
pub fn check_consistency(m: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<Consistency> {
    if b.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix has {} rows",
            b.len(),
            m.nrows()
        )));
    }
    let matrix = rank_profile(m, tol)?;
    let mut aug = DMatrix::zeros(m.nrows(), m.ncols() + 1);
    aug.columns_mut(0, m.ncols()).copy_from(m);
    aug.set_column(m.ncols(), b);
    let augmented = rank_profile(&aug, tol)?;
    let consistent = augmented.rank == matrix.rank;
    Ok(Consistency {
        matrix,
        augmented,
        consistent,
    })
}

/// The square matrix and right-hand side whose unique solution is the
/// particular solution.
pub fn augmented_system(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    profile: &RankProfile,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.nrows();
    let r = profile.rank;
    let free_rows = profile.free_rows(n);
    let free_cols = profile.free_cols(m.ncols());
    let mut d = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (i, &row) in profile.minor_rows.iter().enumerate() {
        d.set_row(i, &m.row(row));
        rhs[i] = b[row];
    }
    for (i, (&row, &col)) in free_rows.iter().zip(&free_cols).enumerate() {
        d[(r + i, col)] = 1.0;
        rhs[r + i] = b[row];
    }
    (d, rhs)
}

/// Particular solution through the augmented matrix; the residual of the
/// original system is checked against `10·tol·(1 + ‖b‖)`.
pub fn particular_solution(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    profile: &RankProfile,
    tol: f64,
) -> Result<DVector<f64>> {
    if m.nrows() != m.ncols() || b.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "need a square matrix and matching rhs, got {}x{} and {}",
            m.nrows(),
            m.ncols(),
            b.len()
        )));
    }
    let (d, rhs) = augmented_system(m, b, profile);
    let x = d.lu().solve(&rhs).ok_or(Error::SingularAugmented)?;
    let residual = (m * &x - b).norm();
    if residual > 10.0 * tol * (1.0 + b.norm()) {
        let augmented_rank = check_consistency(m, b, tol)
            .map(|c| c.augmented.rank)
            .unwrap_or(profile.rank + 1);
        return Err(Error::InconsistentSystem {
            rank: profile.rank,
            augmented_rank,
        });
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSolution {
    pub particular: DVector<f64>,
    pub homogeneous: Frame,
    pub at: ParamPoint,
    pub profile: RankProfile,
}

/// `x_p` plus a frame of the homogeneous solutions at `at`.
pub fn general_solution(
    sys: &dyn MatrixFamily,
    at: &ParamPoint,
    tol: Tolerance,
    method: FrameMethod,
) -> Result<GeneralSolution> {
    let pair = sys.evaluate(at)?;
    let b = pair.rhs.ok_or(Error::MissingRhs)?;
    let m = pair.matrix;
    let t = tol.resolve(&m)?;
    let consistency = check_consistency(&m, &b, t)?;
    if !consistency.consistent {
        return Err(Error::InconsistentSystem {
            rank: consistency.matrix.rank,
            augmented_rank: consistency.augmented.rank,
        });
    }
    let particular = particular_solution(&m, &b, &consistency.matrix, t)?;
    let mut homogeneous = frame_solutions(&m, t, method)?;
    homogeneous.at = Some(at.clone());
    Ok(GeneralSolution {
        particular,
        homogeneous,
        at: at.clone(),
        profile: consistency.matrix,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub coefficients: Vec<f64>,
    /// `‖x − x_p − Σ λᵢ xᵢ‖`.
    pub residual: f64,
}

impl Decomposition {
    pub fn is_solution(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Coordinates of `x − x_p` in the homogeneous frame.
pub fn decompose(x: &DVector<f64>, gs: &GeneralSolution) -> Result<Decomposition> {
    if x.len() != gs.particular.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, system has order {}",
            x.len(),
            gs.particular.len()
        )));
    }
    let delta = x - &gs.particular;
    let coefficients: Vec<f64> = gs
        .homogeneous
        .vectors
        .iter()
        .map(|v| v.as_vector().dot(&delta))
        .collect();
    let mut rest = delta;
    for (c, v) in coefficients.iter().zip(&gs.homogeneous.vectors) {
        rest.axpy(-c, v.as_vector(), 1.0);
    }
    Ok(Decomposition {
        coefficients,
        residual: rest.norm(),
    })
}
