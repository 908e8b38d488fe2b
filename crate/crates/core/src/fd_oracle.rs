//! Finite-difference reference for derivatives of the unit null vector, and
//! a report comparing it with the direct and adjoint methods.
//!
//! The oracle only evaluates `D` and takes null bases; it never touches the
//! derivative matrices or the singular solves used by [`crate::sensitivity`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::display::{format_exact, format_general};
use crate::error::{Error, Result};
use crate::nullspace::{null_basis, Tolerance, UnitVector};
use crate::param_system::{EvaluatedPair, MatrixFamily, ParamPoint};
use crate::sensitivity::{direct_sensitivity, full_jacobian, Method, SensitivityQuery};

pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Below this `|⟨x, anchor⟩|` the sign alignment is meaningless.
pub const ALIGNMENT_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct FdDerivative {
    /// Central difference with step `h`.
    pub coarse: DVector<f64>,
    /// Central difference with step `h/2`.
    pub fine: DVector<f64>,
    /// `(4·fine − coarse)/3`.
    pub richardson: DVector<f64>,
    pub h: f64,
}

fn aligned_null_vector(
    sys: &dyn MatrixFamily,
    at: &ParamPoint,
    anchor: &UnitVector,
    tol: Tolerance,
    index: usize,
    offset: f64,
) -> Result<DVector<f64>> {
    let m = sys.evaluate(at)?.matrix;
    let t = tol.resolve(&m)?;
    let basis = null_basis(&m, t)?;
    if basis.len() != 1 {
        return Err(Error::DeficiencyChanged {
            index,
            expected: 1,
            found: basis.len(),
        });
    }
    let x = basis[0].as_vector();
    let dot = x.dot(anchor.as_vector());
    if dot.abs() < ALIGNMENT_FLOOR {
        return Err(Error::AlignmentAmbiguous { dot: dot.abs(), offset });
    }
    Ok(if dot < 0.0 { -x } else { x.clone() })
}

/// Central differences of the anchor-aligned unit null vector in parameter
/// `j` with steps `h` and `h/2`. Stencil points are indexed 0..4 in the
/// order `+h, −h, +h/2, −h/2` for [`Error::DeficiencyChanged`].
pub fn fd_null_derivative(
    sys: &dyn MatrixFamily,
    at: &ParamPoint,
    anchor: &UnitVector,
    j: usize,
    h: f64,
    tol: Tolerance,
) -> Result<FdDerivative> {
    sys.check_point(at)?;
    sys.check_param(j)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidTolerance(h));
    }
    if anchor.len() != sys.order() {
        return Err(Error::DimensionMismatch(format!(
            "anchor has length {}, system has order {}",
            anchor.len(),
            sys.order()
        )));
    }
    let offsets = [h, -h, h / 2.0, -h / 2.0];
    let mut x = Vec::with_capacity(4);
    for (index, &offset) in offsets.iter().enumerate() {
        x.push(aligned_null_vector(sys, &at.shifted(j, offset), anchor, tol, index, offset)?);
    }
    let coarse = (&x[0] - &x[1]) / (2.0 * h);
    let fine = (&x[2] - &x[3]) / h;
    let richardson = (&fine * 4.0 - &coarse) / 3.0;
    Ok(FdDerivative {
        coarse,
        fine,
        richardson,
        h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub direct_vs_adjoint: f64,
    pub versus_fd: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            direct_vs_adjoint: 1e-8,
            versus_fd: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// 0-based parameter index.
    pub param: usize,
    pub direct: Option<DVector<f64>>,
    /// Column of the adjoint Jacobian.
    pub adjoint: Option<DVector<f64>>,
    /// Central difference at `h`.
    pub fd: Option<DVector<f64>>,
    pub direct_vs_adjoint: Option<f64>,
    pub direct_vs_fd: Option<f64>,
    pub adjoint_vs_fd: Option<f64>,
    pub h: f64,
    pub direct_solves: usize,
    pub adjoint_solves: usize,
    pub errors: Vec<String>,
}

impl ReportRow {
    pub fn passes(&self, t: &Thresholds) -> bool {
        let below = |e: Option<f64>, bound: f64| e.is_some_and(|e| e <= bound);
        self.errors.is_empty()
            && below(self.direct_vs_adjoint, t.direct_vs_adjoint)
            && below(self.direct_vs_fd, t.versus_fd)
            && below(self.adjoint_vs_fd, t.versus_fd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub system: String,
    pub at: ParamPoint,
    pub rows: Vec<ReportRow>,
    pub thresholds: Thresholds,
    /// Total solves of the adjoint reconstruction (one per coordinate).
    pub adjoint_solves: usize,
    /// Largest entry magnitude over all derivative vectors; errors are
    /// measured relative to `max(‖a‖∞, ‖b‖∞, scale)`.
    pub scale: f64,
    pub pass: bool,
}

impl ConsistencyReport {
    /// Parameters whose row fails.
    pub fn failing_params(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| !r.passes(&self.thresholds))
            .map(|r| r.param)
            .collect()
    }

    pub fn to_table(&self) -> String {
        let g = |e: Option<f64>| e.map_or_else(|| "-".to_string(), |e| format_general(e, 6));
        let mut out = format!(
            "system {} at {}\nthresholds: direct/adjoint {}, vs fd {}\n",
            self.system,
            self.at,
            format_general(self.thresholds.direct_vs_adjoint, 6),
            format_general(self.thresholds.versus_fd, 6)
        );
        out.push_str(&format!(
            "{:>5}  {:>12}  {:>12}  {:>12}  {:>8}  {:>6}  {:>7}  status\n",
            "param", "dir/adj", "dir/fd", "adj/fd", "h", "direct", "adjoint"
        ));
        for r in &self.rows {
            let status = if r.passes(&self.thresholds) {
                "ok".to_string()
            } else if r.errors.is_empty() {
                "FAIL".to_string()
            } else {
                format!("FAIL: {}", r.errors.join("; "))
            };
            out.push_str(&format!(
                "{:>5}  {:>12}  {:>12}  {:>12}  {:>8}  {:>6}  {:>7}  {}\n",
                r.param + 1,
                g(r.direct_vs_adjoint),
                g(r.direct_vs_fd),
                g(r.adjoint_vs_fd),
                format_general(r.h, 6),
                r.direct_solves,
                r.adjoint_solves,
                status
            ));
        }
        out.push_str(&format!("verdict: {}\n", if self.pass { "pass" } else { "fail" }));
        out
    }

    /// Per-component values followed by the per-parameter errors.
    pub fn to_csv(&self) -> String {
        let cell = |v: &Option<DVector<f64>>, i: usize| {
            v.as_ref().map_or_else(String::new, |v| format_exact(v[i]))
        };
        let err = |e: Option<f64>| e.map_or_else(String::new, format_exact);
        let mut out = String::from("param,component,direct,adjoint,fd\n");
        for r in &self.rows {
            let n = [&r.direct, &r.adjoint, &r.fd]
                .iter()
                .find_map(|v| v.as_ref().map(|v| v.len()))
                .unwrap_or(0);
            for i in 0..n {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.param + 1,
                    i + 1,
                    cell(&r.direct, i),
                    cell(&r.adjoint, i),
                    cell(&r.fd, i)
                ));
            }
        }
        out.push_str("\n# errors\n");
        out.push_str("param,direct_vs_adjoint,direct_vs_fd,adjoint_vs_fd,h,direct_solves,adjoint_solves,status\n");
        for r in &self.rows {
            let status = if r.passes(&self.thresholds) {
                "ok".to_string()
            } else if r.errors.is_empty() {
                "fail".to_string()
            } else {
                format!("\"{}\"", r.errors.join("; ").replace('"', "'"))
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.param + 1,
                err(r.direct_vs_adjoint),
                err(r.direct_vs_fd),
                err(r.adjoint_vs_fd),
                format_exact(r.h),
                r.direct_solves,
                r.adjoint_solves,
                status
            ));
        }
        out.push_str(&format!("# verdict,{}\n", if self.pass { "pass" } else { "fail" }));
        out
    }
}

fn scaled_error(a: &DVector<f64>, b: &DVector<f64>, scale: f64) -> f64 {
    let diff = (a - b).amax();
    let denom = a.amax().max(b.amax()).max(scale);
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}

/// Direct, adjoint and finite-difference derivatives for every parameter.
/// A failing sub-operation is recorded on its row and the other rows still
/// run.
pub fn consistency_report(
    sys: &dyn MatrixFamily,
    at: &ParamPoint,
    anchor: Option<UnitVector>,
    tol: Tolerance,
    h: f64,
    thresholds: Thresholds,
) -> Result<ConsistencyReport> {
    sys.check_point(at)?;
    let big_n = sys.num_params();
    let mut rows: Vec<ReportRow> = (0..big_n)
        .map(|param| ReportRow {
            param,
            direct: None,
            adjoint: None,
            fd: None,
            direct_vs_adjoint: None,
            direct_vs_fd: None,
            adjoint_vs_fd: None,
            h,
            direct_solves: 0,
            adjoint_solves: 0,
            errors: Vec::new(),
        })
        .collect();
    let mut adjoint_solves = 0;
    match SensitivityQuery::new(sys, at.clone(), anchor, tol) {
        Err(e) => {
            for r in &mut rows {
                r.errors.push(e.to_string());
            }
        }
        Ok(q) => {
            let adjoint: Option<DMatrix<f64>> = match full_jacobian(&q, Method::Adjoint) {
                Ok(jac) => {
                    adjoint_solves = jac.solve_count;
                    Some(jac.matrix)
                }
                Err(e) => {
                    for r in &mut rows {
                        r.errors.push(format!("adjoint: {e}"));
                    }
                    None
                }
            };
            for r in &mut rows {
                match direct_sensitivity(&q, r.param) {
                    Ok(d) => {
                        r.direct_solves = d.solve_count;
                        r.direct = Some(d.vector().clone());
                    }
                    Err(e) => r.errors.push(format!("direct: {e}")),
                }
                if let Some(a) = &adjoint {
                    r.adjoint = Some(a.column(r.param).into_owned());
                    r.adjoint_solves = adjoint_solves;
                }
                match fd_null_derivative(sys, at, q.anchor(), r.param, h, tol) {
                    Ok(fd) => r.fd = Some(fd.coarse),
                    Err(e) => r.errors.push(format!("fd: {e}")),
                }
            }
        }
    }
    let scale = rows
        .iter()
        .flat_map(|r| [&r.direct, &r.adjoint, &r.fd])
        .flatten()
        .map(|v| v.amax())
        .fold(0.0, f64::max);
    for r in &mut rows {
        let pair = |a: &Option<DVector<f64>>, b: &Option<DVector<f64>>| match (a, b) {
            (Some(a), Some(b)) => Some(scaled_error(a, b, scale)),
            _ => None,
        };
        r.direct_vs_adjoint = pair(&r.direct, &r.adjoint);
        r.direct_vs_fd = pair(&r.direct, &r.fd);
        r.adjoint_vs_fd = pair(&r.adjoint, &r.fd);
    }
    let pass = !rows.is_empty() && rows.iter().all(|r| r.passes(&thresholds));
    Ok(ConsistencyReport {
        system: sys.name().to_string(),
        at: at.clone(),
        rows,
        thresholds,
        adjoint_solves,
        scale,
        pass,
    })
}

/// Wraps a family and adds `delta` to one entry of one partial derivative.
/// Evaluation of `D` itself is untouched.
pub struct PartialFault<'a> {
    pub inner: &'a dyn MatrixFamily,
    pub param: usize,
    pub row: usize,
    pub col: usize,
    pub delta: f64,
}

impl MatrixFamily for PartialFault<'_> {
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn evaluate(&self, at: &ParamPoint) -> Result<EvaluatedPair> {
        self.inner.evaluate(at)
    }

    fn partial_derivative(&self, at: &ParamPoint, j: usize) -> Result<EvaluatedPair> {
        let mut pair = self.inner.partial_derivative(at, j)?;
        if j == self.param {
            pair.matrix[(self.row, self.col)] += self.delta;
        }
        Ok(pair)
    }
}
