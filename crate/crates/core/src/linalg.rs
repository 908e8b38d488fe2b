//! Dense helpers shared by the solvers: ordered SVD, minimum-norm solves,
//! rank-revealing column selection and small determinants.

use nalgebra::{DMatrix, DVector};

/// Thin SVD with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub(crate) struct OrderedSvd {
    pub values: Vec<f64>,
    /// Left singular vectors as columns, `m × min(m, p)`.
    pub u: DMatrix<f64>,
    /// Right singular vectors as columns, `p × min(m, p)`.
    pub v: DMatrix<f64>,
}

impl OrderedSvd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let k = m.nrows().min(m.ncols());
        if k == 0 {
            return Self {
                values: Vec::new(),
                u: DMatrix::zeros(m.nrows(), 0),
                v: DMatrix::zeros(m.ncols(), 0),
            };
        }
        let a = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)]);
        let Ok(svd) = a.thin_svd() else {
            return Self {
                values: vec![f64::NAN; k],
                u: DMatrix::from_element(m.nrows(), k, f64::NAN),
                v: DMatrix::from_element(m.ncols(), k, f64::NAN),
            };
        };
        let s = svd.S().column_vector();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let values = order.iter().map(|&i| s[i]).collect();
        let (su, sv) = (svd.U(), svd.V());
        let u = DMatrix::from_fn(m.nrows(), k, |r, c| su[(r, order[c])]);
        let v = DMatrix::from_fn(m.ncols(), k, |r, c| sv[(r, order[c])]);
        Self { values, u, v }
    }

    /// Minimum-norm least-squares solution of `A x = rhs` keeping the
    /// leading `rank` singular triplets.
    pub fn solve(&self, rhs: &DVector<f64>, rank: usize) -> DVector<f64> {
        let mut x = DVector::zeros(self.v.nrows());
        for i in 0..rank {
            let coef = self.u.column(i).dot(rhs) / self.values[i];
            x.axpy(coef, &self.v.column(i), 1.0);
        }
        x
    }

    /// Minimum-norm solution of `Aᵀ y = rhs` from the same factorization.
    pub fn solve_transpose(&self, rhs: &DVector<f64>, rank: usize) -> DVector<f64> {
        let mut y = DVector::zeros(self.u.nrows());
        for i in 0..rank {
            let coef = self.v.column(i).dot(rhs) / self.values[i];
            y.axpy(coef, &self.u.column(i), 1.0);
        }
        y
    }
}

/// Singular values, descending.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    OrderedSvd::new(m).values
}

pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// Greedy column selection by modified Gram–Schmidt with column pivoting.
///
/// At each step the candidate set is every remaining column whose residual
/// norm is at least `threshold` times the largest one; the lowest index among
/// them is taken. `threshold = 1` is classical Businger–Golub pivoting.
pub(crate) fn pivot_columns(a: &DMatrix<f64>, count: usize, threshold: f64) -> Vec<usize> {
    let mut residual = a.clone();
    let mut free: Vec<bool> = vec![true; a.ncols()];
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count.min(a.ncols()) {
        let norms: Vec<f64> = (0..a.ncols())
            .map(|c| if free[c] { residual.column(c).norm() } else { -1.0 })
            .collect();
        let best = norms.iter().copied().fold(0.0, f64::max);
        if best <= 0.0 {
            break;
        }
        let pivot = (0..a.ncols())
            .find(|&c| free[c] && norms[c] >= threshold * best)
            .expect("the maximum qualifies");
        free[pivot] = false;
        picked.push(pivot);
        let q = residual.column(pivot) / norms[pivot];
        for c in (0..a.ncols()).filter(|&c| free[c]) {
            // two projection passes keep the residuals orthogonal to q
            for _ in 0..2 {
                let proj = q.dot(&residual.column(c));
                residual.column_mut(c).axpy(-proj, &q, 1.0);
            }
        }
    }
    picked
}

/// Determinant by partial-pivot LU, with the empty determinant equal to 1.
pub(crate) fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
