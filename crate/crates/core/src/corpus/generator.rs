//! Random `(n−1)`-deficient polynomial families with a known null vector.
//!
//! Pick polynomials `w(ε) = (w₁, …, wₙ)` and a fixed `n × (n−1)` matrix `L`
//! of full column rank. The rows of `R(w)` are `eᵢ·wᵢ₊₁ − eᵢ₊₁·wᵢ`, so
//! `R(w)·w = 0` term by term, and `D = L·R(w)` has `w` in its kernel at every
//! point. Differentiating `u = w/‖w‖` gives the exact sensitivity
//! `∂u/∂εⱼ = (I − uuᵀ)(∂w/∂εⱼ)/‖w‖`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nullspace::{default_tolerance, rank_profile};
use crate::param_system::{MatrixFamily, Monomial, ParamPoint, ParametrizedSystem, PolyEntry};

pub const MAX_ATTEMPTS: usize = 100;
/// Half-width of the box `[−1, 1]ᴺ` on which generated families are validated.
pub const BOX_RADIUS: f64 = 1.0;
const VALIDATION_POINTS: usize = 5;
/// Lower bound for `|wᵢ|`, `i > 1`, on the box. Keeping every component away
/// from zero keeps `R(w)` well conditioned.
const COMPONENT_FLOOR: f64 = 0.5;
/// Smallest admissible `σₙ₋₁/σ₁` at validation points.
const MIN_GAP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedFamily {
    pub seed: Option<u64>,
    pub n: usize,
    pub num_params: usize,
    pub degree: u32,
    /// Null direction `w(ε)`.
    pub w: Vec<PolyEntry>,
    /// `D(ε) = L·R(w(ε))`.
    pub l: DMatrix<f64>,
    pub system: ParametrizedSystem,
}

/// `L·R(w)` assembled entrywise: column `k` of `R(w)` holds `wₖ₊₁` in row
/// `k` and `−wₖ₋₁` in row `k−1`.
fn assemble(name: &str, w: &[PolyEntry], l: &DMatrix<f64>, num_params: usize) -> Result<ParametrizedSystem> {
    let n = w.len();
    let mut grid = vec![vec![PolyEntry::zero(); n]; n];
    for (i, row) in grid.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            let mut entry = PolyEntry::zero();
            if k < n - 1 {
                entry = &entry + &w[k + 1].scaled(l[(i, k)]);
            }
            if k > 0 {
                entry = &entry + &w[k - 1].scaled(-l[(i, k - 1)]);
            }
            *cell = entry;
        }
    }
    ParametrizedSystem::new(name, num_params, grid, None)
}

/// Exponent vectors of total degree `1..=degree` in `num_params` variables.
fn exponents(num_params: usize, degree: u32) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, left: usize, budget: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            if prefix.iter().sum::<u32>() > 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for p in 0..=budget {
            prefix.push(p);
            extend(prefix, left - 1, budget - p, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(num_params), num_params, degree, &mut out);
    out
}

impl GeneratedFamily {
    /// Family with a given null direction. `l` must be `n × (n−1)`.
    pub fn from_direction(w: Vec<PolyEntry>, l: DMatrix<f64>, num_params: usize) -> Result<Self> {
        let n = w.len();
        if n < 2 {
            return Err(Error::DimensionMismatch(format!("need n >= 2, got {n}")));
        }
        if l.nrows() != n || l.ncols() != n - 1 {
            return Err(Error::DimensionMismatch(format!(
                "L must be {n}x{}, got {}x{}",
                n - 1,
                l.nrows(),
                l.ncols()
            )));
        }
        let degree = w.iter().map(PolyEntry::degree).max().unwrap_or(0);
        let system = assemble(&format!("gen-n{n}-N{num_params}"), &w, &l, num_params)?;
        Ok(Self {
            seed: None,
            n,
            num_params,
            degree,
            w,
            l,
            system,
        })
    }

    /// Random family from `seed`. Each `wᵢ` has a constant term and
    /// `N + degree` distinct non-constant monomials (fewer if not that many
    /// exist), coefficients uniform on `[−1, 1]`. Constant terms are then
    /// pushed outward by the sum of the other coefficient magnitudes, so
    /// `|w₁| ≥ 1` and `|wᵢ| ≥ 0.5` on the box; in particular `‖w‖ ≥ 1`.
    pub fn generate(seed: u64, n: usize, num_params: usize, degree: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionMismatch(format!("need n >= 2, got {n}")));
        }
        if num_params == 0 {
            return Err(Error::DimensionMismatch("need at least one parameter".into()));
        }
        if degree == 0 {
            return Err(Error::DimensionMismatch("degree must be >= 1".into()));
        }
        let pool = exponents(num_params, degree);
        let terms = (num_params + degree as usize).min(pool.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_ATTEMPTS {
            let w: Vec<PolyEntry> = (0..n)
                .map(|i| {
                    let mut monomials: Vec<Monomial> = sample(&mut rng, pool.len(), terms)
                        .into_iter()
                        .map(|k| Monomial::new(rng.random_range(-1.0..=1.0), pool[k].clone()))
                        .collect();
                    let c0: f64 = rng.random_range(-1.0..=1.0);
                    // every non-constant monomial is bounded by 1 on the unit box
                    let bound: f64 = monomials.iter().map(|m| m.coeff.abs()).sum();
                    let floor = if i == 0 { 1.0 } else { COMPONENT_FLOOR };
                    let c0 = (floor + bound + c0.abs()).copysign(c0);
                    monomials.push(Monomial::constant(c0, num_params));
                    PolyEntry::from_monomials(monomials)
                })
                .collect();
            let scale = 0.5 / (n as f64).sqrt();
            let l = DMatrix::from_fn(n, n - 1, |r, c| {
                let e = rng.random_range(-1.0..=1.0) * scale;
                if r == c {
                    1.0 + e
                } else {
                    e
                }
            });
            let mut fam = Self::from_direction(w, l, num_params)?;
            fam.seed = Some(seed);
            fam.degree = degree;
            if fam.validate(&mut rng)? {
                return Ok(fam);
            }
        }
        Err(Error::GenerationFailed(MAX_ATTEMPTS))
    }

    fn validate(&self, rng: &mut ChaCha8Rng) -> Result<bool> {
        for _ in 0..VALIDATION_POINTS {
            let at = self.random_point(rng);
            if self.null_direction(&at).norm() < 0.5 {
                return Ok(false);
            }
            let m = self.system.evaluate(&at)?.matrix;
            let profile = rank_profile(&m, default_tolerance(&m))?;
            let s = &profile.singular_values;
            if profile.deficiency != 1 || s[self.n - 2] < MIN_GAP * s[0] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Uniform point in the validation box.
    pub fn random_point(&self, rng: &mut impl Rng) -> ParamPoint {
        ParamPoint::new(
            (0..self.num_params)
                .map(|_| rng.random_range(-BOX_RADIUS..=BOX_RADIUS))
                .collect(),
        )
        .expect("finite coordinates")
    }

    /// `w(ε)`.
    pub fn null_direction(&self, at: &ParamPoint) -> DVector<f64> {
        DVector::from_iterator(self.n, self.w.iter().map(|p| p.eval(at.coords())))
    }

    /// `R(w(ε))`, `(n−1) × n`.
    pub fn r_matrix(&self, at: &ParamPoint) -> DMatrix<f64> {
        let w = self.null_direction(at);
        let mut r = DMatrix::zeros(self.n - 1, self.n);
        for i in 0..self.n - 1 {
            r[(i, i)] = w[i + 1];
            r[(i, i + 1)] = -w[i];
        }
        r
    }

    /// `u = w/‖w‖`.
    pub fn unit_null(&self, at: &ParamPoint) -> DVector<f64> {
        self.null_direction(at).normalize()
    }

    /// Exact `∂u/∂εⱼ` (0-based `j`).
    pub fn unit_null_derivative(&self, at: &ParamPoint, j: usize) -> Result<DVector<f64>> {
        self.system.check_param(j)?;
        let w = self.null_direction(at);
        let norm = w.norm();
        let u = &w / norm;
        let dw = DVector::from_iterator(self.n, self.w.iter().map(|p| p.eval_derivative(at.coords(), j)));
        Ok((&dw - &u * u.dot(&dw)) / norm)
    }

    /// Exact `n × N` Jacobian of `u`.
    pub fn jacobian(&self, at: &ParamPoint) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.n, self.num_params);
        for j in 0..self.num_params {
            jac.set_column(j, &self.unit_null_derivative(at, j)?);
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullspace::Tolerance;
    use crate::sensitivity::{full_jacobian, Method, SensitivityQuery};
    use crate::nullspace::UnitVector;

    #[test]
    fn explicit_direction_gives_worked_family() {
        let w = vec![PolyEntry::constant(1.0, 1), PolyEntry::variable(0, 1)];
        let l = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let fam = GeneratedFamily::from_direction(w, l, 1).unwrap();
        for e in [-0.5, 0.0, 0.3] {
            let m = fam.system.evaluate(&ParamPoint::from(e)).unwrap().matrix;
            assert_eq!(m, DMatrix::from_row_slice(2, 2, &[e, -1.0, 2.0 * e, -2.0]));
        }
        let d = fam.unit_null_derivative(&ParamPoint::from(0.0), 0).unwrap();
        assert_eq!(d, DVector::from_row_slice(&[0.0, 1.0]));
    }

    #[test]
    fn exponent_pool_size() {
        // C(N + d, d) − 1
        assert_eq!(exponents(1, 3).len(), 3);
        assert_eq!(exponents(2, 2).len(), 5);
        assert_eq!(exponents(20, 3).len(), 1770);
    }

    #[test]
    fn same_seed_same_family() {
        let a = GeneratedFamily::generate(7, 3, 2, 2).unwrap();
        let b = GeneratedFamily::generate(7, 3, 2, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, GeneratedFamily::generate(8, 3, 2, 2).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GeneratedFamily::generate(0, 1, 1, 1).is_err());
        assert!(GeneratedFamily::generate(0, 2, 1, 0).is_err());
    }

    #[test]
    fn kernel_identity_and_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..5 {
            let fam = GeneratedFamily::generate(seed, 4, 3, 3).unwrap();
            for _ in 0..20 {
                let at = fam.random_point(&mut rng);
                let w = fam.null_direction(&at);
                assert!((fam.r_matrix(&at) * &w).amax() <= 1e-12);
                assert!(w.norm() >= 0.5);
            }
            let at = fam.random_point(&mut rng);
            let m = fam.system.evaluate(&at).unwrap().matrix;
            assert_eq!(rank_profile(&m, default_tolerance(&m)).unwrap().deficiency, 1);
        }
    }

    #[test]
    fn oracle_matches_direct_method() {
        let fam = GeneratedFamily::generate(3, 3, 2, 2).unwrap();
        let at = ParamPoint::new(vec![0.3, -0.6]).unwrap();
        let u = UnitVector::new(fam.unit_null(&at)).unwrap();
        let q = SensitivityQuery::new(&fam.system, at.clone(), Some(u), Tolerance::Auto).unwrap();
        let jac = full_jacobian(&q, Method::Direct).unwrap();
        assert!((&jac.matrix - fam.jacobian(&at).unwrap()).amax() < 1e-10);
    }
}
