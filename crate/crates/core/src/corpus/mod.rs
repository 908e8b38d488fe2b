//! Built-in reference systems with documented expected outputs.
//!
//! | name | system | what it shows |
//! |------|--------|---------------|
//! | `ex5`  | smooth non-analytic 2×2 family (callable) | the unit null vector winds infinitely often as `ε → 0` |
//! | `ex8`  | `[[2ε₁ε₂, ε₂² − ε₁²], [0, 0]]` | unit solution has different limits along different rays |
//! | `ex14` | `diag(ε, 0, 0)` | a two-vector frame away from the origin |
//! | `ex20` | `diag(ε, 0, 0, 0)` | sensitivity is underdetermined for deficiency above one |

pub mod generator;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frame::{frame_solutions, track_frame, FrameMethod};
use crate::nullspace::{rank_profile, Tolerance};
use crate::param_system::{CallableSystem, MatrixFamily, Monomial, ParamPoint, ParametrizedSystem, PolyEntry};
use crate::sensitivity::SensitivityQuery;

pub use generator::GeneratedFamily;

pub const CORPUS_NAMES: [&str; 4] = ["ex5", "ex8", "ex14", "ex20"];

#[derive(Debug, Clone)]
pub enum CorpusSystem {
    Polynomial(ParametrizedSystem),
    Callable(CallableSystem),
}

impl CorpusSystem {
    pub fn family(&self) -> &dyn MatrixFamily {
        match self {
            CorpusSystem::Polynomial(s) => s,
            CorpusSystem::Callable(s) => s,
        }
    }

    pub fn polynomial(&self) -> Option<&ParametrizedSystem> {
        match self {
            CorpusSystem::Polynomial(s) => Some(s),
            CorpusSystem::Callable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    Rank { rank: usize, deficiency: usize },
    /// Unit null direction, compared up to sign.
    NullDirection(Vec<f64>),
    /// Frame vectors in extraction order, compared exactly in sign.
    Frame(Vec<Vec<f64>>),
    SensitivityError(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub at: Vec<f64>,
    pub expected: Expected,
    pub tol: f64,
    pub provenance: &'static str,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub domain: &'static str,
    pub system: CorpusSystem,
    pub expectations: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

fn example5_matrix(e: f64) -> DMatrix<f64> {
    if e == 0.0 {
        return DMatrix::zeros(2, 2);
    }
    let g = (-1.0 / (e * e)).exp();
    let (s, c) = (2.0 / e).sin_cos();
    DMatrix::from_row_slice(2, 2, &[g * (1.0 - c), -g * s, -g * s, g * (1.0 + c)])
}

pub fn example5() -> CallableSystem {
    CallableSystem::new("ex5", 2, 1, |at| example5_matrix(at[0]))
}

pub fn example8() -> ParametrizedSystem {
    let m = |c, p: [u32; 2]| Monomial::new(c, p.to_vec());
    ParametrizedSystem::new(
        "ex8",
        2,
        vec![
            vec![
                PolyEntry::from_monomials(vec![m(2.0, [1, 1])]),
                PolyEntry::from_monomials(vec![m(1.0, [0, 2]), m(-1.0, [2, 0])]),
            ],
            vec![PolyEntry::zero(), PolyEntry::zero()],
        ],
        None,
    )
    .expect("valid system")
}

/// `diag(ε, 0, …, 0)` of order `n`.
pub fn leading_diagonal(name: &str, n: usize) -> ParametrizedSystem {
    let mut grid = vec![vec![PolyEntry::zero(); n]; n];
    grid[0][0] = PolyEntry::variable(0, 1);
    ParametrizedSystem::new(name, 1, grid, None).expect("valid system")
}

pub fn example14() -> ParametrizedSystem {
    leading_diagonal("ex14", 3)
}

pub fn example20() -> ParametrizedSystem {
    leading_diagonal("ex20", 4)
}

fn expect(at: &[f64], expected: Expected, tol: f64, provenance: &'static str) -> Expectation {
    Expectation {
        at: at.to_vec(),
        expected,
        tol,
        provenance,
    }
}

pub fn corpus(name: &str) -> Result<CorpusEntry> {
    use Expected::*;
    let (c5, s5) = (2f64.cos(), 2f64.sin());
    let (c02, s02) = (5f64.cos(), 5f64.sin());
    Ok(match name {
        "ex5" => CorpusEntry {
            name: "ex5",
            description: "e^(-1/ε²)·[[1 - cos 2/ε, -sin 2/ε], [-sin 2/ε, 1 + cos 2/ε]], zero at ε = 0",
            domain: "ε ∈ ℝ; rank 1 for ε ≠ 0, rank 0 at ε = 0; entries underflow to zero for |ε| < 0.037",
            system: CorpusSystem::Callable(example5()),
            expectations: vec![
                expect(&[0.5], NullDirection(vec![c5, s5]), 1e-10, "solution direction (cos 1/ε, sin 1/ε)"),
                expect(&[0.2], NullDirection(vec![c02, s02]), 1e-10, "solution direction (cos 1/ε, sin 1/ε)"),
                expect(&[0.0], Rank { rank: 0, deficiency: 2 }, 0.0, "zero matrix at the origin"),
            ],
        },
        "ex8" => CorpusEntry {
            name: "ex8",
            description: "[[2ε₁ε₂, ε₂² - ε₁²], [0, 0]]",
            domain: "ε ∈ ℝ²; rank 1 away from the origin",
            system: CorpusSystem::Polynomial(example8()),
            expectations: vec![
                expect(&[1.0, 0.0], NullDirection(vec![1.0, 0.0]), 1e-12, "closed-form unit solution"),
                expect(&[1.0, 1.0], NullDirection(vec![0.0, 1.0]), 1e-12, "closed-form unit solution"),
                expect(&[0.001, 0.001], NullDirection(vec![0.0, 1.0]), 1e-12, "closed form on the diagonal"),
                expect(&[0.1, 0.0], NullDirection(vec![1.0, 0.0]), 1e-12, "limit along (t, 0)"),
                expect(&[0.001, 0.0], NullDirection(vec![1.0, 0.0]), 1e-12, "limit along (t, 0)"),
                expect(&[0.1, 0.1], NullDirection(vec![0.0, 1.0]), 1e-12, "limit along (t, t)"),
            ],
        },
        "ex14" => CorpusEntry {
            name: "ex14",
            description: "diag(ε, 0, 0)",
            domain: "ε ∈ ℝ; rank 1 for ε ≠ 0, rank 0 at ε = 0",
            system: CorpusSystem::Polynomial(example14()),
            expectations: vec![
                expect(&[0.0], Rank { rank: 0, deficiency: 3 }, 0.0, "rank 0 at ε = 0"),
                expect(&[1.0], Rank { rank: 1, deficiency: 2 }, 0.0, "rank 1 for ε ≠ 0"),
                expect(
                    &[1.0],
                    Frame(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]),
                    1e-12,
                    "frame of e₂ and e₃",
                ),
                expect(&[1.0], SensitivityError(Error::DeficiencyTooHigh(2)), 0.0, "deficiency two"),
            ],
        },
        "ex20" => CorpusEntry {
            name: "ex20",
            description: "diag(ε, 0, 0, 0)",
            domain: "ε ∈ ℝ; deficiency 3 for ε ≠ 0, 4 at ε = 0",
            system: CorpusSystem::Polynomial(example20()),
            expectations: vec![
                expect(&[1.0], SensitivityError(Error::DeficiencyTooHigh(3)), 0.0, "x'(0) not determined"),
                expect(&[0.0], SensitivityError(Error::DeficiencyTooHigh(4)), 0.0, "x'(0) not determined"),
            ],
        },
        other => return Err(Error::UnknownCorpus(other.to_string())),
    })
}

/// `‖a − b‖∞` minimized over the sign of `b`.
fn distance_up_to_sign(a: &DVector<f64>, b: &[f64]) -> f64 {
    let b = DVector::from_row_slice(b);
    (a - &b).amax().min((a + &b).amax())
}

fn render(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("({})", parts.join(", "))
}

impl CorpusEntry {
    pub fn family(&self) -> &dyn MatrixFamily {
        self.system.family()
    }

    pub fn check(&self, e: &Expectation) -> CheckOutcome {
        let at = ParamPoint::new(e.at.clone()).expect("finite corpus point");
        let sys = self.family();
        let label = format!("{} at {}", self.name, at);
        let outcome = |passed: bool, detail: String| CheckOutcome {
            label: label.clone(),
            passed,
            detail,
        };
        let method = FrameMethod::default_for(sys.order());
        let run = || -> Result<CheckOutcome> {
            match &e.expected {
                Expected::Rank { rank, deficiency } => {
                    let m = sys.evaluate(&at)?.matrix;
                    let p = rank_profile(&m, Tolerance::Auto.resolve(&m)?)?;
                    Ok(outcome(
                        p.rank == *rank && p.deficiency == *deficiency,
                        format!("rank {} deficiency {}", p.rank, p.deficiency),
                    ))
                }
                Expected::NullDirection(v) => {
                    let m = sys.evaluate(&at)?.matrix;
                    let f = frame_solutions(&m, Tolerance::Auto.resolve(&m)?, method)?;
                    if f.len() != 1 {
                        return Ok(outcome(false, format!("deficiency {}", f.len())));
                    }
                    let x = f.vectors[0].as_vector();
                    let d = distance_up_to_sign(x, v);
                    Ok(outcome(d <= e.tol, format!("{} vs {}, error {d:.3e}", render(x.as_slice()), render(v))))
                }
                Expected::Frame(vs) => {
                    let m = sys.evaluate(&at)?.matrix;
                    let f = frame_solutions(&m, Tolerance::Auto.resolve(&m)?, method)?;
                    if f.len() != vs.len() {
                        return Ok(outcome(false, format!("{} vectors, expected {}", f.len(), vs.len())));
                    }
                    let d = f
                        .vectors
                        .iter()
                        .zip(vs)
                        .map(|(x, v)| (x.as_vector() - DVector::from_row_slice(v)).amax())
                        .fold(0.0, f64::max);
                    Ok(outcome(d <= e.tol, format!("{} vectors, error {d:.3e}", f.len())))
                }
                Expected::SensitivityError(want) => {
                    match SensitivityQuery::new(sys, at.clone(), None, Tolerance::Auto) {
                        Ok(_) => Ok(outcome(false, "query accepted".into())),
                        Err(got) => Ok(outcome(&got == want, got.to_string())),
                    }
                }
            }
        };
        run().unwrap_or_else(|err| outcome(false, err.to_string()))
    }

    /// Every documented expectation.
    pub fn run(&self) -> Vec<CheckOutcome> {
        self.expectations.iter().map(|e| self.check(e)).collect()
    }
}

/// One row of the winding demonstration for `ex5`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingSample {
    pub k: u32,
    pub epsilon: f64,
    pub tracked: DVector<f64>,
}

/// Follows the continuous unit null vector of `ex5` from `ε = 1/(k₀π)`
/// towards zero through `ε = 1/(kπ)`, `k = k₀ … k₁`, in equal steps of
/// `1/ε`. At those points the kernel is `e₁`, and the tracked vector is
/// `(−1)^(k−k₀)·e₁`: it never settles, so no continuous unit solution
/// reaches `ε = 0`.
pub fn example5_winding(k0: u32, k1: u32, steps_per_half_turn: usize) -> Result<Vec<WindingSample>> {
    let sys = example5();
    let steps = steps_per_half_turn.max(4);
    let mut path = Vec::new();
    for k in k0..k1 {
        for s in 0..steps {
            let theta = (k as f64 + s as f64 / steps as f64) * std::f64::consts::PI;
            path.push(ParamPoint::from(1.0 / theta));
        }
    }
    path.push(ParamPoint::from(1.0 / (k1 as f64 * std::f64::consts::PI)));
    let seq = track_frame(&sys, &path, Tolerance::Auto, FrameMethod::Cofactor)?;
    Ok((k0..=k1)
        .map(|k| {
            let idx = (k - k0) as usize * steps;
            WindingSample {
                k,
                epsilon: path[idx].coords()[0],
                tracked: seq.frames[idx].vectors[0].as_vector().clone(),
            }
        })
        .collect())
}

/// `(t, null vector at (t, 0), null vector at (t, t))`.
pub type RaySample = (f64, DVector<f64>, DVector<f64>);

/// Unit null vectors of `ex8` along `(t, 0)` and `(t, t)`.
pub fn example8_directional(ts: &[f64]) -> Result<Vec<RaySample>> {
    let sys = example8();
    let solve = |a: f64, b: f64| -> Result<DVector<f64>> {
        let m = sys.evaluate(&ParamPoint::new(vec![a, b])?)?.matrix;
        let f = frame_solutions(&m, Tolerance::Auto.resolve(&m)?, FrameMethod::Cofactor)?;
        Ok(f.vectors[0].as_vector().clone())
    };
    ts.iter().map(|&t| Ok((t, solve(t, 0.0)?, solve(t, t)?))).collect()
}
