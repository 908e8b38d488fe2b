//! Acceptance criteria 1 to 10. Runs without the libtest harness so the
//! summary lines are always printed; exits non-zero if any criterion fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rellich::corpus::{example14, example20, example5_winding, example8_directional, CorpusSystem};
use rellich::fd_oracle::DEFAULT_FD_STEP;
use rellich::nonhomogeneous::augmented_system;
use rellich::*;

struct Criterion {
    number: usize,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(number: usize, title: &'static str) -> Self {
        Self {
            number,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.checks.push((label.into(), ok));
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(_, ok)| *ok)
    }
}

fn matrix_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    relative_error(a.as_slice(), b.as_slice())
}

fn eval(sys: &dyn MatrixFamily, at: &[f64]) -> DMatrix<f64> {
    sys.evaluate(&ParamPoint::new(at.to_vec()).unwrap()).unwrap().matrix
}

fn criterion1() -> Criterion {
    let mut c = Criterion::new(1, "ex14 frame");
    let sys = example14();
    let e2 = DVector::from_row_slice(&[0.0, 1.0, 0.0]);
    let e3 = DVector::from_row_slice(&[0.0, 0.0, 1.0]);
    for eps in [0.5, 1.0, 2.0] {
        let m = eval(&sys, &[eps]);
        let f = frame_solutions(&m, Tolerance::Auto.resolve(&m).unwrap(), FrameMethod::Cofactor).unwrap();
        let ordered = f.len() == 2
            && (f.vectors[0].as_vector() - &e2).amax() <= 1e-12
            && (f.vectors[1].as_vector() - &e3).amax() <= 1e-12;
        let p = f.projector(3);
        let span = (p - (&e2 * e2.transpose() + &e3 * e3.transpose())).amax() <= 1e-12;
        c.check(
            format!(
                "eps={eps}: e2 then e3 {ordered}, span {span}, orthonormality {:.1e}, residual {:.1e}",
                f.orthonormality_error(),
                f.residual
            ),
            ordered && span && f.orthonormality_error() <= 1e-12 && f.residual <= 1e-12,
        );
    }
    c
}

fn criterion2() -> Criterion {
    let mut c = Criterion::new(2, "ex8 unit solution and directional limits");
    let entry = corpus("ex8").unwrap();
    for o in entry.run() {
        c.check(format!("{}: {}", o.label, o.detail), o.passed);
    }
    for (t, axis, diag) in example8_directional(&[1e-1, 1e-3]).unwrap() {
        let a = (axis - DVector::from_row_slice(&[1.0, 0.0])).amax();
        let d = (diag - DVector::from_row_slice(&[0.0, 1.0])).amax();
        c.check(
            format!("t={t}: along (t,0) error {a:.1e}, along (t,t) error {d:.1e}"),
            a <= 1e-12 && d <= 1e-12,
        );
    }
    c
}

fn criterion3() -> Criterion {
    let mut c = Criterion::new(3, "ex5 direction and winding");
    let entry = corpus("ex5").unwrap();
    assert!(matches!(entry.system, CorpusSystem::Callable(_)));
    for eps in [0.5f64, 0.2] {
        let m = eval(entry.family(), &[eps]);
        let x = null_basis(&m, Tolerance::Auto.resolve(&m).unwrap()).unwrap();
        let want = DVector::from_row_slice(&[(1.0 / eps).cos(), (1.0 / eps).sin()]);
        let x = x[0].as_vector();
        let err = (x - &want).amax().min((x + &want).amax());
        c.check(format!("eps={eps}: direction error {err:.1e}"), err <= 1e-10);
    }
    let samples = example5_winding(3, 6, 32).unwrap();
    let signs: Vec<f64> = samples.iter().map(|s| s.tracked[0].signum()).collect();
    let alternates = samples
        .iter()
        .all(|s| (s.tracked[0].abs() - 1.0).abs() <= 1e-10 && s.tracked[1].abs() <= 1e-10)
        && signs.windows(2).all(|w| w[0] == -w[1]);
    c.check(
        format!("tracked first component at eps=1/(k pi), k=3..6: {signs:?}"),
        alternates,
    );
    c
}

struct Corpus {
    label: String,
    fam: GeneratedFamily,
    at: ParamPoint,
}

fn generated_corpus() -> Vec<Corpus> {
    let mut out = Vec::new();
    for n in [2usize, 3, 10, 40] {
        for big_n in [1usize, 5, 20] {
            for seed in 0..5u64 {
                let degree = 1 + (seed % 3) as u32;
                let fam = GeneratedFamily::generate(seed, n, big_n, degree).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let at = fam.random_point(&mut rng);
                out.push(Corpus {
                    label: format!("n={n} N={big_n} seed={seed} degree={degree}"),
                    fam,
                    at,
                });
            }
        }
    }
    out
}

fn anchored<'a>(c: &'a Corpus) -> SensitivityQuery<'a> {
    let u = UnitVector::from_direction(c.fam.unit_null(&c.at)).unwrap();
    SensitivityQuery::new(&c.fam.system, c.at.clone(), Some(u), Tolerance::Auto).unwrap()
}

fn criterion4(corpus: &[Corpus]) -> Criterion {
    let mut c = Criterion::new(4, "Direct method on generated corpus");
    let (mut orth, mut kernel_ratio, mut analytic, mut fd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut worst = String::new();
    let mut failures = Vec::new();
    for item in corpus {
        let q = anchored(item);
        let n = item.fam.n;
        let big_n = item.fam.num_params;
        let mut direct = DMatrix::zeros(n, big_n);
        let mut fd_jac = DMatrix::zeros(n, big_n);
        let mut ok = true;
        for j in 0..big_n {
            let r = direct_sensitivity(&q, j).unwrap();
            orth = orth.max(r.orthogonality.unwrap());
            let ratio = r.residual.unwrap() / (10.0 * q.tol());
            kernel_ratio = kernel_ratio.max(ratio);
            ok &= r.orthogonality.unwrap() <= 1e-10 && ratio <= 1.0;
            direct.set_column(j, r.vector());
            let f = fd_null_derivative(&item.fam.system, &item.at, q.anchor(), j, DEFAULT_FD_STEP, Tolerance::Auto)
                .unwrap();
            fd_jac.set_column(j, &f.coarse);
        }
        let exact = item.fam.jacobian(&item.at).unwrap();
        let ea = matrix_rel(&direct, &exact);
        let ef = matrix_rel(&direct, &fd_jac);
        if ef > fd {
            worst = item.label.clone();
        }
        analytic = analytic.max(ea);
        fd = fd.max(ef);
        ok &= ea <= 1e-8 && ef <= 1e-6;
        if !ok {
            failures.push(item.label.clone());
        }
    }
    c.check(format!("{} families", corpus.len()), corpus.len() >= 60);
    c.check(format!("max |<u, dx>| = {orth:.1e} (bound 1e-10)"), orth <= 1e-10);
    c.check(
        format!("max derivative-system residual / (10 tol) = {kernel_ratio:.2}"),
        kernel_ratio <= 1.0,
    );
    c.check(format!("max relative error vs analytic = {analytic:.1e} (bound 1e-8)"), analytic <= 1e-8);
    c.check(
        format!("max relative error vs FD at h=1e-5 = {fd:.1e} (bound 1e-6, worst {worst})"),
        fd <= 1e-6,
    );
    c.check(format!("failing families: {failures:?}"), failures.is_empty());
    c
}

fn criterion5(corpus: &[Corpus]) -> Criterion {
    let mut c = Criterion::new(5, "Adjoint method");
    let (mut lambda_ratio, mut inv, mut agree) = (0.0f64, 0.0f64, 0.0f64);
    let mut min_perturbed = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for item in corpus {
        let q = anchored(item);
        let n = item.fam.n;
        let w = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut objectives: Vec<Objective> = (0..n.min(3)).map(Objective::Coordinate).collect();
        objectives.push(Objective::Linear(w));
        let left = q.left_kernel();
        for obj in &objectives {
            let adj = adjoint_prepare(&q, obj).unwrap();
            let u = q.anchor().as_vector();
            let expected_lambda = -u.dot(&adj.gradient);
            assert_eq!(adj.lambda, expected_lambda);
            let bound = 10.0 * q.tol() * (1.0 + adj.gradient.norm());
            lambda_ratio = lambda_ratio.max(adj.residual / bound);
            min_perturbed = min_perturbed.min(q.solvability_residual(adj.lambda + 1e-3, &adj.gradient));
            for j in 0..item.fam.num_params {
                let base = adjoint_derivative(&adj, &q, j).unwrap().derivative.as_scalar().unwrap();
                for t in [1.0, 1e3] {
                    let shifted = AdjointSolution {
                        p: &adj.p + &left * t,
                        ..adj.clone()
                    };
                    let d = adjoint_derivative(&shifted, &q, j).unwrap().derivative.as_scalar().unwrap();
                    inv = inv.max((d - base).abs());
                }
            }
        }
        let direct = full_jacobian(&q, Method::Direct).unwrap();
        let adjoint = full_jacobian(&q, Method::Adjoint).unwrap();
        agree = agree.max(matrix_rel(&direct.matrix, &adjoint.matrix));
    }
    c.check(
        format!("max adjoint-multiplier residual / (10 tol (1+|grad F|)) = {lambda_ratio:.2}"),
        lambda_ratio <= 1.0,
    );
    c.check(
        format!("lambda + 1e-3 leaves min residual >= {min_perturbed:.1e} (bound 1e-4)"),
        min_perturbed > 1e-4,
    );
    c.check(format!("p-invariance max change {inv:.1e} (bound 1e-10)"), inv <= 1e-10);
    c.check(format!("direct vs adjoint Jacobian relative error {agree:.1e} (bound 1e-8)"), agree <= 1e-8);
    c
}

fn criterion6(corpus: &[Corpus]) -> Criterion {
    let mut c = Criterion::new(6, "Solve counts");
    let mut exact = true;
    let mut crossover = true;
    let mut rows = Vec::new();
    for item in corpus.iter().filter(|i| i.label.ends_with("seed=0 degree=1")) {
        let q = anchored(item);
        let d = full_jacobian(&q, Method::Direct).unwrap();
        let a = full_jacobian(&q, Method::Adjoint).unwrap();
        let (n, big_n) = (item.fam.n, item.fam.num_params);
        exact &= d.solve_count == big_n && a.solve_count == n;
        let cheaper = match d.solve_count.cmp(&a.solve_count) {
            std::cmp::Ordering::Less => "direct",
            std::cmp::Ordering::Greater => "adjoint",
            std::cmp::Ordering::Equal => "tie",
        };
        crossover &= (cheaper == "adjoint") == (big_n > n) && (cheaper == "tie") == (big_n == n);
        rows.push(format!("n={n},N={big_n}:{}/{}:{cheaper}", d.solve_count, a.solve_count));
    }
    for item in corpus {
        let q = anchored(item);
        exact &= full_jacobian(&q, Method::Direct).unwrap().solve_count == item.fam.num_params
            && full_jacobian(&q, Method::Adjoint).unwrap().solve_count == item.fam.n;
    }
    c.check("direct = N and adjoint = n on every family", exact);
    c.check(format!("direct/adjoint solves: {}", rows.join(" ")), !rows.is_empty());
    c.check("crossover at n = N: adjoint cheaper iff N > n", crossover);
    c
}

fn criterion7() -> Criterion {
    let mut c = Criterion::new(7, "Non-homogeneous solutions");
    let e = PolyEntry::variable(0, 1);
    let one = PolyEntry::constant(1.0, 1);
    let e2 = PolyEntry::from_monomials(vec![Monomial::new(1.0, vec![2])]);
    let sys = ParametrizedSystem::new("nh", 1, vec![vec![one.clone(), e.clone()], vec![e.clone(), e2]], Some(vec![one, e]))
        .unwrap();
    let (mut res, mut block, mut recon) = (0.0f64, 0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..20 {
        let eps = -2.0 + 4.0 * i as f64 / 19.0;
        let at = ParamPoint::from(eps);
        let gs = general_solution(&sys, &at, Tolerance::Auto, FrameMethod::Cofactor).unwrap();
        let pair = sys.evaluate(&at).unwrap();
        let (m, b) = (pair.matrix, pair.rhs.unwrap());
        res = res.max((&m * &gs.particular - &b).norm());
        let (d, rhs) = augmented_system(&m, &b, &gs.profile);
        let r = gs.profile.rank;
        let free_rows = gs.profile.free_rows(2);
        for (i, &col) in gs.profile.free_cols(2).iter().enumerate() {
            let mut unit = DVector::zeros(2);
            unit[col] = 1.0;
            block = block.max((d.row(r + i).transpose() - unit).amax());
            block = block.max((gs.particular[col] - b[free_rows[i]]).abs());
            block = block.max((rhs[r + i] - b[free_rows[i]]).abs());
        }
        let lambda: Vec<f64> = gs.homogeneous.vectors.iter().map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut x = gs.particular.clone();
        for (l, v) in lambda.iter().zip(&gs.homogeneous.vectors) {
            x += v.as_vector() * *l;
        }
        let dec = decompose(&x, &gs).unwrap();
        let coeff = dec
            .coefficients
            .iter()
            .zip(&lambda)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        recon = recon.max(dec.residual).max(coeff);
    }
    c.check(format!("max particular residual {res:.1e} (bound 1e-10)"), res <= 1e-10);
    c.check(format!("identity block error {block:.1e} (bound 1e-12)"), block <= 1e-12);
    c.check(format!("decompose reconstruction error {recon:.1e} (bound 1e-10)"), recon <= 1e-10);
    c
}

fn criterion8() -> Criterion {
    let mut c = Criterion::new(8, "Deficiency guard");
    let ex20 = example20();
    let ex14 = example14();
    let cases: Vec<(&ParametrizedSystem, f64, usize)> =
        vec![(&ex20, 1.0, 3), (&ex14, 0.5, 2), (&ex14, 1.0, 2), (&ex14, 2.0, 2), (&ex14, -1.0, 2)];
    for (sys, eps, k) in cases {
        let got = SensitivityQuery::new(sys, ParamPoint::from(eps), None, Tolerance::Auto).err();
        let report = consistency_report(sys, &ParamPoint::from(eps), None, Tolerance::Auto, 1e-5, Thresholds::default())
            .unwrap();
        let rows_fail = !report.pass && report.rows.iter().all(|r| r.direct.is_none() && r.adjoint.is_none());
        c.check(
            format!("{} at {eps}: {:?}, report rows without numbers {rows_fail}", sys.name(), got),
            got == Some(Error::DeficiencyTooHigh(k)) && rows_fail,
        );
    }
    c
}

fn rank_deficient(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = rng.random_range(2..=8);
    let r = rng.random_range(1..n);
    let b = DMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(r, n, |_, _| rng.random_range(-1.0..1.0));
    b * c
}

fn criterion9() -> Criterion {
    let mut c = Criterion::new(9, "Deflation raises rank by one");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut good = 0;
    for _ in 0..100 {
        let m = rank_deficient(&mut rng);
        let tol = Tolerance::Auto.resolve(&m).unwrap();
        let before = rank_profile(&m, tol).unwrap().rank;
        let x = null_basis(&m, tol).unwrap().remove(0);
        let b = deflate(&m, &x, tol).unwrap();
        let after = rank_profile(&b, Tolerance::Auto.resolve(&b).unwrap()).unwrap().rank;
        if after == before + 1 {
            good += 1;
        }
    }
    c.check(format!("{good}/100 matrices"), good == 100);
    c
}

fn criterion10(corpus: &[Corpus]) -> Criterion {
    let mut c = Criterion::new(10, "Cofactor frame and orthogonal basis share the projector");
    let mut mats: Vec<DMatrix<f64>> = Vec::new();
    for eps in [0.5, 1.0, 2.0, 0.0] {
        mats.push(eval(&example14(), &[eps]));
        mats.push(eval(&example20(), &[eps]));
    }
    mats.push(eval(&corpus::example8(), &[1.0, 0.3]));
    mats.push(eval(&corpus::example5(), &[0.3]));
    for item in corpus.iter().filter(|i| i.fam.n <= 12) {
        mats.push(item.fam.system.evaluate(&item.at).unwrap().matrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        mats.push(rank_deficient(&mut rng));
    }
    let mut worst = 0.0f64;
    for m in &mats {
        let n = m.ncols();
        let tol = Tolerance::Auto.resolve(m).unwrap();
        let f = frame_solutions(m, tol, FrameMethod::Cofactor).unwrap();
        let basis = null_basis(m, tol).unwrap();
        let mut q = DMatrix::zeros(n, n);
        for v in &basis {
            q += v.as_vector() * v.as_vector().transpose();
        }
        worst = worst.max((f.projector(n) - q).norm());
    }
    c.check(
        format!("{} instances, max Frobenius difference {worst:.1e} (bound 1e-9)", mats.len()),
        worst <= 1e-9,
    );
    c
}

fn main() {
    let start = Instant::now();
    let corpus = generated_corpus();
    let criteria = vec![
        criterion1(),
        criterion2(),
        criterion3(),
        criterion4(&corpus),
        criterion5(&corpus),
        criterion6(&corpus),
        criterion7(),
        criterion8(),
        criterion9(),
        criterion10(&corpus),
    ];
    let mut all = true;
    for c in &criteria {
        let ok = c.passed();
        all &= ok;
        println!("criterion {:>2} {}: {}", c.number, if ok { "PASS" } else { "FAIL" }, c.title);
        for (label, ok) in &c.checks {
            println!("    [{}] {label}", if *ok { "ok" } else { "FAIL" });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("acceptance finished in {elapsed:.1} s (budget 300 s)");
    if !all || elapsed > 300.0 {
        std::process::exit(1);
    }
}
