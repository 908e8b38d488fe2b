use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use rellich::corpus::example8;
use rellich::*;

fn low_rank(n: usize, r: usize, data: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_row_slice(n, r, &data[..n * r]);
    let c = DMatrix::from_row_slice(r, n, &data[n * r..2 * n * r]);
    b * c
}

fn arb_low_rank() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..7)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, r)| {
            proptest::collection::vec(-1.0f64..1.0, 2 * n * r).prop_map(move |d| low_rank(n, r, &d))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frames_are_orthonormal_null_vectors(m in arb_low_rank()) {
        let tol = Tolerance::Auto.resolve(&m).unwrap();
        let profile = rank_profile(&m, tol).unwrap();
        for method in [FrameMethod::Cofactor, FrameMethod::Orthogonal] {
            let f = frame_solutions(&m, tol, method).unwrap();
            prop_assert_eq!(f.len(), profile.deficiency);
            prop_assert!(f.orthonormality_error() <= 1e-12);
            prop_assert!(f.residual <= 1e-10);
        }
    }

    #[test]
    fn completed_frame_is_a_basis(m in arb_low_rank()) {
        let n = m.ncols();
        let tol = Tolerance::Auto.resolve(&m).unwrap();
        let f = frame_solutions(&m, tol, FrameMethod::Cofactor).unwrap();
        let full = complete_frame(&f.vectors, n).unwrap();
        prop_assert_eq!(full.len(), n);
        let q = DMatrix::from_fn(n, n, |r, c| full[c][r]);
        prop_assert!((q.transpose() * &q - DMatrix::identity(n, n)).amax() <= 1e-12);
    }

    #[test]
    fn generated_direct_matches_oracle(seed in 0u64..500, n in 2usize..6, big_n in 1usize..4) {
        let fam = GeneratedFamily::generate(seed, n, big_n, 2).unwrap();
        let at = ParamPoint::new(vec![0.25; big_n]).unwrap();
        let u = UnitVector::from_direction(fam.unit_null(&at)).unwrap();
        let q = SensitivityQuery::new(&fam.system, at.clone(), Some(u), Tolerance::Auto).unwrap();
        let exact = fam.jacobian(&at).unwrap();
        let direct = full_jacobian(&q, Method::Direct).unwrap();
        let adjoint = full_jacobian(&q, Method::Adjoint).unwrap();
        prop_assert!(relative_error(direct.matrix.as_slice(), exact.as_slice()) <= 1e-10);
        prop_assert!(relative_error(adjoint.matrix.as_slice(), exact.as_slice()) <= 1e-10);
    }

    #[test]
    fn direct_result_is_independent_of_particular_solution(seed in 0u64..200, t in -5.0f64..5.0) {
        // adding a kernel multiple to v leaves v + c·u unchanged
        let fam = GeneratedFamily::generate(seed, 3, 2, 2).unwrap();
        let at = ParamPoint::new(vec![-0.3, 0.6]).unwrap();
        let q = SensitivityQuery::new(&fam.system, at, None, Tolerance::Auto).unwrap();
        let r = direct_sensitivity(&q, 0).unwrap();
        let u = q.anchor().as_vector();
        let v2 = r.v.as_ref().unwrap() + u * t;
        let dx2 = &v2 - u * v2.dot(u);
        prop_assert!((dx2 - r.vector()).amax() <= 1e-12);
    }
}

#[test]
fn example8_direct_and_adjoint_agree_with_closed_form() {
    // x = ((ε₁² − ε₂²), 2ε₁ε₂)/(ε₁² + ε₂²)
    let sys = example8();
    let (a, b) = (0.8f64, 0.3f64);
    let r2 = a * a + b * b;
    let x = DVector::from_row_slice(&[(a * a - b * b) / r2, 2.0 * a * b / r2]);
    let exact = DMatrix::from_row_slice(
        2,
        2,
        &[
            4.0 * a * b * b / (r2 * r2),
            -4.0 * a * a * b / (r2 * r2),
            2.0 * b * (b * b - a * a) / (r2 * r2),
            2.0 * a * (a * a - b * b) / (r2 * r2),
        ],
    );
    let q = SensitivityQuery::new(
        &sys,
        ParamPoint::new(vec![a, b]).unwrap(),
        Some(UnitVector::new(x).unwrap()),
        Tolerance::Auto,
    )
    .unwrap();
    let direct = full_jacobian(&q, Method::Direct).unwrap();
    let adjoint = full_jacobian(&q, Method::Adjoint).unwrap();
    for (d, e) in direct.matrix.iter().zip(exact.iter()) {
        assert_relative_eq!(*d, *e, epsilon = 1e-13);
    }
    for (d, e) in adjoint.matrix.iter().zip(exact.iter()) {
        assert_relative_eq!(*d, *e, epsilon = 1e-13);
    }
}

#[test]
fn system_file_round_trip_preserves_results() {
    let fam = GeneratedFamily::generate(11, 4, 3, 3).unwrap();
    let text = serialize_system(&fam.system);
    let back = parse_system(&text).unwrap();
    assert_eq!(back, fam.system);
    let at = ParamPoint::new(vec![0.1, -0.2, 0.3]).unwrap();
    let qa = SensitivityQuery::new(&fam.system, at.clone(), None, Tolerance::Auto).unwrap();
    let qb = SensitivityQuery::new(&back, at, None, Tolerance::Auto).unwrap();
    assert_eq!(
        full_jacobian(&qa, Method::Direct).unwrap().matrix,
        full_jacobian(&qb, Method::Direct).unwrap().matrix
    );
}
