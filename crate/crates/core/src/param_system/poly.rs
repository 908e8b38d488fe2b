//! Sparse multivariate polynomials with real coefficients.

use std::cmp::Ordering;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

/// A single term `coeff * Π ε_m^{powers[m]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: f64, powers: Vec<u32>) -> Self {
        Self { coeff, powers }
    }

    pub fn constant(coeff: f64, num_params: usize) -> Self {
        Self::new(coeff, vec![0; num_params])
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, at: &[f64]) -> f64 {
        self.powers
            .iter()
            .zip(at)
            .fold(self.coeff, |acc, (&p, &x)| acc * pow(x, p))
    }
}

fn pow(x: f64, p: u32) -> f64 {
    match p {
        0 => 1.0,
        1 => x,
        _ => x.powi(p as i32),
    }
}

/// Graded-lex order: total degree first, then the power vectors compared
/// lexicographically with larger leading exponents first.
pub fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| b.cmp(a))
}

/// A polynomial in `N` parameters, stored as a canonical sparse monomial
/// list: no zero coefficients, no repeated power vectors, graded-lex order.
/// The empty list is the zero polynomial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyEntry {
    monomials: Vec<Monomial>,
}

impl PolyEntry {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64, num_params: usize) -> Self {
        Self::from_monomials(vec![Monomial::constant(value, num_params)])
    }

    /// The coordinate function `ε_j`.
    pub fn variable(j: usize, num_params: usize) -> Self {
        let mut powers = vec![0; num_params];
        powers[j] = 1;
        Self::from_monomials(vec![Monomial::new(1.0, powers)])
    }

    /// Builds the canonical form: merges repeated power vectors, drops zero
    /// coefficients and sorts. All monomials must share one power length.
    pub fn from_monomials(mut monomials: Vec<Monomial>) -> Self {
        monomials.sort_by(|a, b| grlex(&a.powers, &b.powers));
        let mut merged: Vec<Monomial> = Vec::with_capacity(monomials.len());
        for m in monomials {
            match merged.last_mut() {
                Some(last) if last.powers == m.powers => last.coeff += m.coeff,
                _ => merged.push(m),
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        Self { monomials: merged }
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, at: &[f64]) -> f64 {
        self.monomials.iter().map(|m| m.eval(at)).sum()
    }

    /// Symbolic partial derivative with respect to `ε_j` (power rule).
    pub fn derivative(&self, j: usize) -> PolyEntry {
        let terms = self
            .monomials
            .iter()
            .filter(|m| m.powers[j] > 0)
            .map(|m| {
                let mut powers = m.powers.clone();
                let p = powers[j];
                powers[j] -= 1;
                Monomial::new(m.coeff * p as f64, powers)
            })
            .collect();
        Self::from_monomials(terms)
    }

    /// Evaluates `∂/∂ε_j` at `at` without materializing the derivative.
    pub fn eval_derivative(&self, at: &[f64], j: usize) -> f64 {
        self.monomials
            .iter()
            .filter(|m| m.powers[j] > 0)
            .map(|m| {
                let p = m.powers[j];
                m.powers
                    .iter()
                    .zip(at)
                    .enumerate()
                    .fold(m.coeff * p as f64, |acc, (i, (&q, &x))| {
                        acc * if i == j { pow(x, q - 1) } else { pow(x, q) }
                    })
            })
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> PolyEntry {
        Self::from_monomials(
            self.monomials
                .iter()
                .map(|m| Monomial::new(m.coeff * factor, m.powers.clone()))
                .collect(),
        )
    }
}

impl Add for &PolyEntry {
    type Output = PolyEntry;

    fn add(self, rhs: &PolyEntry) -> PolyEntry {
        let mut terms = self.monomials.clone();
        terms.extend(rhs.monomials.iter().cloned());
        PolyEntry::from_monomials(terms)
    }
}

impl Neg for &PolyEntry {
    type Output = PolyEntry;

    fn neg(self) -> PolyEntry {
        self.scaled(-1.0)
    }
}
