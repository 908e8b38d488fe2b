//! Smooth solutions, solution frames and first-order sensitivities of
//! parametrized singular linear systems `D(ε) x = b(ε)`.
//!
//! ```
//! use rellich::{frame_solutions, FrameMethod, MatrixFamily, ParamPoint};
//!
//! let sys = rellich::corpus::example14();
//! let m = sys.evaluate(&ParamPoint::from(1.0)).unwrap().matrix;
//! let frame = frame_solutions(&m, 1e-12, FrameMethod::Cofactor).unwrap();
//! assert_eq!(frame.len(), 2);
//! ```

pub mod corpus;
pub mod display;
pub mod error;
pub mod fd_oracle;
pub mod frame;
mod linalg;
pub mod nonhomogeneous;
pub mod nullspace;
pub mod param_system;
pub mod sensitivity;

pub use corpus::{corpus, CorpusEntry, GeneratedFamily, CORPUS_NAMES};
pub use error::{Error, Result};
pub use fd_oracle::{consistency_report, fd_null_derivative, ConsistencyReport, FdDerivative, Thresholds};
pub use frame::{complete_frame, deflate, frame_solutions, track_frame, Frame, FrameMethod, TrackedFrameSequence};
pub use linalg::relative_error;
pub use nonhomogeneous::{check_consistency, decompose, general_solution, particular_solution, GeneralSolution};
pub use nullspace::{cofactor_null_vector, normalize, null_basis, rank_profile, RankProfile, Tolerance, UnitVector};
pub use param_system::{
    parse_system, serialize_system, CallableSystem, MatrixFamily, Monomial, ParamPoint, ParametrizedSystem, PolyEntry,
};
pub use sensitivity::{
    adjoint_derivative, adjoint_prepare, direct_sensitivity, full_jacobian, AdjointSolution, Method, Objective,
    SensitivityQuery, SensitivityResult,
};
