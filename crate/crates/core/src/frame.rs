//! Orthonormal frames of homogeneous solutions.
//!
//! [`frame_solutions`] runs the deflation recursion: extract one unit null
//! vector `x`, replace `M` by `M + x xᵀ`, repeat `k` times. Each deflation
//! removes `x` from the kernel while keeping the rest of it, so the vectors
//! come out mutually orthogonal. [`track_frame`] follows a frame along a path
//! in parameter space, rotating each new frame onto the previous one.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, OrderedSvd};
use crate::nullspace::{
    cofactor_null_vector, normalize, null_basis, rank_profile, Tolerance, UnitVector, Warning,
    DEFAULT_COFACTOR_LIMIT,
};
use crate::param_system::{MatrixFamily, ParamPoint};

/// Orthonormality slack for frame vectors.
pub const ORTHONORMALITY_TOL: f64 = 1e-12;

/// How each null direction is extracted inside the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameMethod {
    /// Rellich's cofactor null vector of the current (deflated) matrix.
    Cofactor,
    /// Smallest right singular vector of the current (deflated) matrix.
    Orthogonal,
}

impl FrameMethod {
    /// Cofactor up to [`DEFAULT_COFACTOR_LIMIT`], orthogonal beyond.
    pub fn default_for(n: usize) -> Self {
        if n <= DEFAULT_COFACTOR_LIMIT {
            FrameMethod::Cofactor
        } else {
            FrameMethod::Orthogonal
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// `x₁ … x_k` in extraction order.
    pub vectors: Vec<UnitVector>,
    pub at: Option<ParamPoint>,
    /// `max ‖M xᵢ‖`.
    pub residual: f64,
    pub tol: f64,
    pub warnings: Vec<Warning>,
    /// Number of vectors obtained from the null-space intersection because a
    /// deflation step did not raise the rank (the extracted vector was in the
    /// range of `M`).
    pub fallback_vectors: usize,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `X = [x₁ … x_k]` as an `n × k` matrix.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(n, self.vectors.len());
        for (j, v) in self.vectors.iter().enumerate() {
            x.set_column(j, v.as_vector());
        }
        x
    }

    /// Orthogonal projector `X Xᵀ` onto the frame's span.
    pub fn projector(&self, n: usize) -> DMatrix<f64> {
        let x = self.matrix(n);
        &x * x.transpose()
    }

    /// `max |⟨xᵢ, xⱼ⟩ − δᵢⱼ|`.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.vectors)
    }
}

pub fn orthonormality_error(vectors: &[UnitVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dot(b) - target).abs());
        }
    }
    worst
}

/// `M + x xᵀ` for a unit `x` with `‖M x‖ <= 10·tol`.
pub fn deflate(m: &DMatrix<f64>, x: &UnitVector, tol: f64) -> Result<DMatrix<f64>> {
    let x = x.as_vector();
    let residual = (m * x).norm();
    let bound = 10.0 * tol;
    if residual > bound {
        return Err(Error::NotInKernel { residual, bound });
    }
    Ok(m + x * x.transpose())
}

/// Orthonormal frame of `k = deficiency(m)` null vectors by the deflation
/// recursion, with the default cofactor size limit.
pub fn frame_solutions(m: &DMatrix<f64>, tol: f64, method: FrameMethod) -> Result<Frame> {
    frame_solutions_limited(m, tol, method, DEFAULT_COFACTOR_LIMIT)
}

pub fn frame_solutions_limited(
    m: &DMatrix<f64>,
    tol: f64,
    method: FrameMethod,
    cofactor_limit: usize,
) -> Result<Frame> {
    let n = m.ncols();
    if method == FrameMethod::Cofactor && n > cofactor_limit {
        return Err(Error::CofactorLimit {
            n,
            limit: cofactor_limit,
        });
    }
    let profile = rank_profile(m, tol)?;
    let k = profile.deficiency;
    let warnings = profile.warnings.clone();
    let mut vectors: Vec<UnitVector> = Vec::with_capacity(k);
    let mut fallback_vectors = 0;
    let mut current = m.clone();
    let mut current_profile = profile;
    let bound = 10.0 * tol;
    while vectors.len() < k {
        let remaining = k - vectors.len();
        if current_profile.deficiency != remaining {
            if current_profile.deficiency == 0 {
                return Err(Error::DeflationStalled {
                    extracted: vectors.len(),
                    expected: k,
                });
            }
            fallback_vectors = remaining;
            vectors.extend(intersection_basis(m, &vectors, tol)?.into_iter().take(remaining));
            break;
        }
        let x = match method {
            FrameMethod::Cofactor => normalize(&cofactor_null_vector(&current, &current_profile)?)?,
            FrameMethod::Orthogonal => null_basis(&current, tol)?
                .into_iter()
                .next()
                .ok_or(Error::DeflationStalled {
                    extracted: vectors.len(),
                    expected: k,
                })?,
        };
        if (m * x.as_vector()).norm() > bound {
            fallback_vectors = remaining;
            vectors.extend(intersection_basis(m, &vectors, tol)?.into_iter().take(remaining));
            break;
        }
        current = deflate(&current, &x, tol)?;
        vectors.push(x);
        if vectors.len() < k {
            current_profile = rank_profile(&current, tol)?;
        }
    }
    if vectors.len() != k {
        return Err(Error::DeflationStalled {
            extracted: vectors.len(),
            expected: k,
        });
    }
    let vectors = reorthogonalize(vectors)?;
    let residual = max_residual(m, &vectors);
    Ok(Frame {
        vectors,
        at: None,
        residual,
        tol,
        warnings,
        fallback_vectors,
    })
}

/// Orthonormal basis of `ker M ∩ span(found)^⊥`.
fn intersection_basis(m: &DMatrix<f64>, found: &[UnitVector], tol: f64) -> Result<Vec<UnitVector>> {
    let n = m.ncols();
    let mut stacked = DMatrix::zeros(m.nrows() + found.len(), n);
    stacked.rows_mut(0, m.nrows()).copy_from(m);
    // scale the orthogonality rows like M so one tolerance serves both blocks
    let scale = m.norm().max(1.0);
    for (i, v) in found.iter().enumerate() {
        stacked
            .row_mut(m.nrows() + i)
            .copy_from(&(v.as_vector().transpose() * scale));
    }
    null_basis(&stacked, tol)
}

fn max_residual(m: &DMatrix<f64>, vectors: &[UnitVector]) -> f64 {
    vectors
        .iter()
        .map(|v| (m * v.as_vector()).norm())
        .fold(0.0, f64::max)
}

/// One modified Gram–Schmidt pass; preserves order and orientation.
fn reorthogonalize(vectors: Vec<UnitVector>) -> Result<Vec<UnitVector>> {
    let mut out: Vec<UnitVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.into_vector();
        for q in &out {
            let proj = q.as_vector().dot(&w);
            w.axpy(-proj, q.as_vector(), 1.0);
        }
        out.push(UnitVector::from_direction(w)?);
    }
    Ok(out)
}

/// Extends `frame` to an orthonormal basis of ℝⁿ by Gram–Schmidt against the
/// canonical vectors, always taking the one with the largest residual (lowest
/// index on ties). Completion vectors are sign-normalized.
pub fn complete_frame(frame: &[UnitVector], n: usize) -> Result<Vec<UnitVector>> {
    let mut basis: Vec<UnitVector> = frame.to_vec();
    let mut used = vec![false; n];
    while basis.len() < n {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for i in (0..n).filter(|&i| !used[i]) {
            let mut r = UnitVector::canonical(n, i).into_vector();
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.as_vector().dot(&r);
                    r.axpy(-proj, q.as_vector(), 1.0);
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(_, _, b)| norm > *b) {
                best = Some((i, r, norm));
            }
        }
        let (i, r, _) = best.expect("fewer than n vectors leaves a canonical candidate");
        used[i] = true;
        basis.push(normalize(&r)?);
    }
    Ok(basis)
}

/// Per-step record of the frame alignment performed by [`track_frame`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentStep {
    /// Index of the point being aligned (>= 1).
    pub point: usize,
    /// Largest principal rotation angle of the aligning orthogonal matrix.
    pub rotation_angle: f64,
    /// The aligning matrix has determinant −1.
    pub reflection: bool,
    /// `maxᵢ ‖xᵢ(t_{m+1}) − xᵢ(t_m)‖` after alignment.
    pub max_displacement: f64,
    /// `‖t_{m+1} − t_m‖`.
    pub param_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedFrameSequence {
    pub frames: Vec<Frame>,
    pub alignment_log: Vec<AlignmentStep>,
}

impl TrackedFrameSequence {
    /// Largest `max_displacement / param_distance` over the steps.
    pub fn continuity_constant(&self) -> f64 {
        self.alignment_log
            .iter()
            .filter(|s| s.param_distance > 0.0)
            .map(|s| s.max_displacement / s.param_distance)
            .fold(0.0, f64::max)
    }

    pub fn max_displacement(&self) -> f64 {
        self.alignment_log
            .iter()
            .map(|s| s.max_displacement)
            .fold(0.0, f64::max)
    }

    /// Long-format CSV of every component followed by the alignment log.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_index,vector_index,component_index,value\n");
        for (p, frame) in self.frames.iter().enumerate() {
            for (v, x) in frame.vectors.iter().enumerate() {
                for c in 0..x.len() {
                    out.push_str(&format!("{p},{v},{c},{:.16e}\n", x[c]));
                }
            }
        }
        out.push_str("\n# alignment_log\n");
        out.push_str("point_index,rotation_angle,reflection,max_displacement,param_distance\n");
        for s in &self.alignment_log {
            out.push_str(&format!(
                "{},{:.16e},{},{:.16e},{:.16e}\n",
                s.point, s.rotation_angle, s.reflection, s.max_displacement, s.param_distance
            ));
        }
        out
    }
}

/// Frames along `path`, each rotated onto its predecessor by the orthogonal
/// Procrustes solution inside the null space. The deficiency must stay
/// constant; a change is reported as [`Error::DeficiencyChanged`].
pub fn track_frame(
    sys: &dyn MatrixFamily,
    path: &[ParamPoint],
    tol: Tolerance,
    method: FrameMethod,
) -> Result<TrackedFrameSequence> {
    let n = sys.order();
    let mut frames: Vec<Frame> = Vec::with_capacity(path.len());
    let mut alignment_log = Vec::new();
    for (index, at) in path.iter().enumerate() {
        let m = sys.evaluate(at)?.matrix;
        let t = tol.resolve(&m)?;
        let mut frame = frame_solutions(&m, t, method)?;
        frame.at = Some(at.clone());
        if let Some(prev) = frames.last() {
            if frame.len() != prev.len() {
                return Err(Error::DeficiencyChanged {
                    index,
                    expected: prev.len(),
                    found: frame.len(),
                });
            }
            let step = align(&mut frame, prev, n, index)?;
            alignment_log.push(AlignmentStep {
                param_distance: at.distance(prev.at.as_ref().expect("tracked frames carry points")),
                ..step
            });
        }
        frame.residual = max_residual(&m, &frame.vectors);
        frames.push(frame);
    }
    Ok(TrackedFrameSequence {
        frames,
        alignment_log,
    })
}

fn align(frame: &mut Frame, prev: &Frame, n: usize, point: usize) -> Result<AlignmentStep> {
    let k = frame.len();
    let x = frame.matrix(n);
    let y = prev.matrix(n);
    let q = if k == 0 {
        DMatrix::zeros(0, 0)
    } else if k == 1 {
        let c = (x.transpose() * &y)[(0, 0)];
        DMatrix::from_element(1, 1, if c < 0.0 { -1.0 } else { 1.0 })
    } else {
        let svd = OrderedSvd::new(&(x.transpose() * &y));
        &svd.u * svd.v.transpose()
    };
    let aligned = &x * &q;
    let mut vectors = Vec::with_capacity(k);
    for j in 0..k {
        vectors.push(UnitVector::from_direction(aligned.column(j).into_owned())?);
    }
    let max_displacement = vectors
        .iter()
        .zip(&prev.vectors)
        .map(|(a, b)| (a.as_vector() - b.as_vector()).norm())
        .fold(0.0, f64::max);
    let (rotation_angle, reflection) = if k == 0 {
        (0.0, false)
    } else {
        let gap = singular_values(&(&q - DMatrix::identity(k, k)))[0];
        (2.0 * (gap / 2.0).min(1.0).asin(), q.determinant() < 0.0)
    };
    frame.vectors = vectors;
    Ok(AlignmentStep {
        point,
        rotation_angle,
        reflection,
        max_displacement,
        param_distance: 0.0,
    })
}
