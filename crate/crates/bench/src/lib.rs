//! Fixtures shared by the criterion benches.

use nalgebra::DMatrix;
use rellich::{GeneratedFamily, ParamPoint, SensitivityQuery, Tolerance};

/// Generated `(n-1)`-deficient family with an evaluation point inside its box.
pub fn family(n: usize, num_params: usize) -> (GeneratedFamily, ParamPoint) {
    let fam = GeneratedFamily::generate(7, n, num_params, 2).expect("generator accepts bench sizes");
    let at = ParamPoint::new((0..num_params).map(|j| 0.3 * ((j as f64) + 1.0).sin()).collect())
        .expect("finite point");
    (fam, at)
}

pub fn query<'a>(fam: &'a GeneratedFamily, at: &ParamPoint) -> SensitivityQuery<'a> {
    SensitivityQuery::new(&fam.system, at.clone(), None, Tolerance::Auto).expect("generated family is deficient by one")
}

/// Deterministic `n x n` matrix of rank `r`.
pub fn low_rank(n: usize, r: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, r, |i, j| ((i * 7 + j * 3 + 1) as f64).sin());
    let c = DMatrix::from_fn(r, n, |i, j| ((i * 5 + j * 11 + 2) as f64).cos());
    b * c
}
