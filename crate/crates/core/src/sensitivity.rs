//! First-order sensitivities of the normalized null vector of an
//! `(n−1)`-deficient system.
//!
//! Let `u` be the unit kernel vector of `D(ε₀)` and `x(ε)` the smooth unit
//! solution through `u`. Differentiating `D x = 0` and `xᵀx = 1` gives
//!
//! ```text
//! D ∂x/∂εⱼ = −(∂D/∂εⱼ) u,    uᵀ ∂x/∂εⱼ = 0.
//! ```
//!
//! The direct method solves the first equation for some `v` and removes its
//! `u` component. The adjoint method solves one transposed system for a
//! scalar objective `F` and then needs only a product per parameter.
//!
//! Every query factors `D(ε₀)` once. A "solve" is one right-hand side pushed
//! through that factorization; the counters report these.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::OrderedSvd;
use crate::nullspace::{null_basis, rank_profile, RankProfile, Tolerance, UnitVector};
use crate::param_system::{MatrixFamily, ParamPoint};

type Gradient = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// Scalar objective `F(x)`; only its gradient is used.
#[derive(Clone)]
pub enum Objective {
    /// `F(x) = xᵢ` (0-based).
    Coordinate(usize),
    /// `F(x) = wᵀx`.
    Linear(DVector<f64>),
    /// Arbitrary `F` given by its gradient.
    Callable(Arc<Gradient>),
}

impl Objective {
    pub fn callable(grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Objective::Callable(Arc::new(grad))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = x.len();
        let g = match self {
            Objective::Coordinate(i) => {
                if *i >= n {
                    return Err(Error::ObjectiveIndex { index: *i, n });
                }
                let mut g = DVector::zeros(n);
                g[*i] = 1.0;
                g
            }
            Objective::Linear(w) => w.clone(),
            Objective::Callable(f) => f(x),
        };
        if g.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "objective gradient has length {}, expected {n}",
                g.len()
            )));
        }
        Ok(g)
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Coordinate(i) => write!(f, "Coordinate({i})"),
            Objective::Linear(w) => write!(f, "Linear({:?})", w.as_slice()),
            Objective::Callable(_) => f.write_str("Callable(..)"),
        }
    }
}

/// A validated sensitivity query at one point of a one-dimensional kernel.
pub struct SensitivityQuery<'a> {
    system: &'a dyn MatrixFamily,
    at: ParamPoint,
    anchor: UnitVector,
    anchor_defaulted: bool,
    tol: f64,
    matrix: DMatrix<f64>,
    profile: RankProfile,
    svd: OrderedSvd,
}

impl<'a> SensitivityQuery<'a> {
    /// Factors `D(at)`, checks that the deficiency is exactly one and that the
    /// anchor lies in the kernel (`‖D u‖ ≤ 10·tol`). Without an anchor the
    /// canonical null direction at `at` is used.
    pub fn new(
        system: &'a dyn MatrixFamily,
        at: ParamPoint,
        anchor: Option<UnitVector>,
        tol: Tolerance,
    ) -> Result<Self> {
        let matrix = system.evaluate(&at)?.matrix;
        let tol = tol.resolve(&matrix)?;
        let profile = rank_profile(&matrix, tol)?;
        match profile.deficiency {
            0 => return Err(Error::NotDeficient),
            1 => {}
            k => return Err(Error::DeficiencyTooHigh(k)),
        }
        let anchor_defaulted = anchor.is_none();
        let anchor = match anchor {
            Some(u) => {
                if u.len() != matrix.ncols() {
                    return Err(Error::DimensionMismatch(format!(
                        "anchor has length {}, system has order {}",
                        u.len(),
                        matrix.ncols()
                    )));
                }
                let residual = (&matrix * u.as_vector()).norm();
                let bound = 10.0 * tol;
                if residual > bound {
                    return Err(Error::NotInKernel { residual, bound });
                }
                u
            }
            None => null_basis(&matrix, tol)?.remove(0),
        };
        let svd = OrderedSvd::new(&matrix);
        Ok(Self {
            system,
            at,
            anchor,
            anchor_defaulted,
            tol,
            matrix,
            profile,
            svd,
        })
    }

    pub fn system(&self) -> &dyn MatrixFamily {
        self.system
    }

    pub fn at(&self) -> &ParamPoint {
        &self.at
    }

    pub fn anchor(&self) -> &UnitVector {
        &self.anchor
    }

    /// The anchor was computed rather than supplied.
    pub fn anchor_defaulted(&self) -> bool {
        self.anchor_defaulted
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn profile(&self) -> &RankProfile {
        &self.profile
    }

    pub fn order(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.system.num_params()
    }

    /// Unit vector spanning the kernel of `D(ε₀)ᵀ`.
    pub fn left_kernel(&self) -> DVector<f64> {
        self.svd.u.column(self.profile.rank).into_owned()
    }

    /// `(∂D/∂εⱼ)(ε₀) u`.
    pub fn partial_times_anchor(&self, j: usize) -> Result<DVector<f64>> {
        self.system.check_param(j)?;
        let dj = self.system.partial_derivative(&self.at, j)?.matrix;
        Ok(dj * self.anchor.as_vector())
    }

    /// Minimum-norm solution of `D y = rhs` (or `Dᵀ y = rhs`), rejected when
    /// the residual exceeds `10·tol·(1 + ‖rhs‖ + ‖y‖)`, a backward-error bound
    /// that stays meaningful when `D` is ill conditioned on its range.
    fn solve(&self, rhs: &DVector<f64>, transpose: bool) -> Result<DVector<f64>> {
        let r = self.profile.rank;
        let y = if transpose {
            self.svd.solve_transpose(rhs, r)
        } else {
            self.svd.solve(rhs, r)
        };
        let image = if transpose {
            self.matrix.tr_mul(&y)
        } else {
            &self.matrix * &y
        };
        let residual = (image - rhs).norm();
        let bound = 10.0 * self.tol * (1.0 + rhs.norm());
        if residual > bound {
            return Err(Error::InconsistentDerivativeSystem { residual, bound });
        }
        Ok(y)
    }

    /// Smallest achievable `‖Dᵀp + λu + g‖` over all `p`.
    pub fn solvability_residual(&self, lambda: f64, gradient: &DVector<f64>) -> f64 {
        let rhs = -(self.anchor.as_vector() * lambda) - gradient;
        let p = self.svd.solve_transpose(&rhs, self.profile.rank);
        (self.matrix.tr_mul(&p) - rhs).norm()
    }
}

impl fmt::Debug for SensitivityQuery<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensitivityQuery")
            .field("system", &self.system.name())
            .field("at", &self.at)
            .field("anchor", &self.anchor)
            .field("anchor_defaulted", &self.anchor_defaulted)
            .field("tol", &self.tol)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Adjoint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Adjoint => "adjoint",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Derivative {
    Vector(DVector<f64>),
    Scalar(f64),
}

impl Derivative {
    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            Derivative::Vector(v) => Some(v),
            Derivative::Scalar(_) => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Derivative::Scalar(s) => Some(*s),
            Derivative::Vector(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    pub derivative: Derivative,
    pub method: Method,
    /// 0-based parameter index.
    pub param: usize,
    pub solve_count: usize,
    /// Particular solution of the derivative system (direct only).
    pub v: Option<DVector<f64>>,
    /// Normalization correction `−vᵀu` (direct only).
    pub c: Option<f64>,
    /// `‖D ∂x + (∂D/∂εⱼ) u‖` (direct only).
    pub residual: Option<f64>,
    /// `|uᵀ ∂x|` (direct only).
    pub orthogonality: Option<f64>,
    pub anchor_defaulted: bool,
}

impl SensitivityResult {
    /// Derivative vector of a direct result.
    pub fn vector(&self) -> &DVector<f64> {
        self.derivative.as_vector().expect("direct result")
    }
}

/// `∂x/∂εⱼ` at the query point by one singular solve.
pub fn direct_sensitivity(q: &SensitivityQuery<'_>, j: usize) -> Result<SensitivityResult> {
    let du = q.partial_times_anchor(j)?;
    let rhs = -&du;
    let v = q.solve(&rhs, false)?;
    let u = q.anchor.as_vector();
    let c = -v.dot(u);
    let dx = &v + u * c;
    let residual = (&q.matrix * &dx + &du).norm();
    let orthogonality = u.dot(&dx).abs();
    Ok(SensitivityResult {
        derivative: Derivative::Vector(dx),
        method: Method::Direct,
        param: j,
        solve_count: 1,
        v: Some(v),
        c: Some(c),
        residual: Some(residual),
        orthogonality: Some(orthogonality),
        anchor_defaulted: q.anchor_defaulted,
    })
}

/// Multiplier pair for one objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    pub lambda: f64,
    pub p: DVector<f64>,
    /// `∇F(u)`.
    pub gradient: DVector<f64>,
    /// `‖Dᵀp + λu + ∇F‖`.
    pub residual: f64,
    pub solve_count: usize,
}

/// Finds `λ = −uᵀ∇F(u)` and the minimum-norm `p` with `Dᵀp = −λu − ∇F`.
///
/// `λ` is the only value placing the right-hand side in `range(Dᵀ) = u⊥`.
pub fn adjoint_prepare(q: &SensitivityQuery<'_>, objective: &Objective) -> Result<AdjointSolution> {
    let u = q.anchor.as_vector();
    let gradient = objective.gradient(u)?;
    let lambda = -u.dot(&gradient);
    let rhs = -(u * lambda) - &gradient;
    let p = q.solve(&rhs, true)?;
    let residual = (q.matrix.tr_mul(&p) - rhs).norm();
    Ok(AdjointSolution {
        lambda,
        p,
        gradient,
        residual,
        solve_count: 1,
    })
}

/// `∂F/∂εⱼ = pᵀ (∂D/∂εⱼ) u`; no solve.
pub fn adjoint_derivative(
    adj: &AdjointSolution,
    q: &SensitivityQuery<'_>,
    j: usize,
) -> Result<SensitivityResult> {
    let du = q.partial_times_anchor(j)?;
    Ok(SensitivityResult {
        derivative: Derivative::Scalar(adj.p.dot(&du)),
        method: Method::Adjoint,
        param: j,
        solve_count: 0,
        v: None,
        c: None,
        residual: None,
        orthogonality: None,
        anchor_defaulted: q.anchor_defaulted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    /// `n × N`, column `j` is `∂x/∂εⱼ`.
    pub matrix: DMatrix<f64>,
    pub method: Method,
    pub solve_count: usize,
}

/// All first derivatives of the unit solution. The direct path solves once
/// per parameter; the adjoint path once per coordinate objective.
pub fn full_jacobian(q: &SensitivityQuery<'_>, method: Method) -> Result<Jacobian> {
    let n = q.order();
    let big_n = q.num_params();
    let mut matrix = DMatrix::zeros(n, big_n);
    let mut solve_count = 0;
    match method {
        Method::Direct => {
            for j in 0..big_n {
                let r = direct_sensitivity(q, j)?;
                matrix.set_column(j, r.vector());
                solve_count += r.solve_count;
            }
        }
        Method::Adjoint => {
            let du: Vec<DVector<f64>> = (0..big_n)
                .map(|j| q.partial_times_anchor(j))
                .collect::<Result<_>>()?;
            for i in 0..n {
                let adj = adjoint_prepare(q, &Objective::Coordinate(i))?;
                solve_count += adj.solve_count;
                for (j, d) in du.iter().enumerate() {
                    matrix[(i, j)] = adj.p.dot(d);
                }
            }
        }
    }
    Ok(Jacobian {
        matrix,
        method,
        solve_count,
    })
}
