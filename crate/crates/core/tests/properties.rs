use a2w_core::estimator::{
    a2_functional_norm, a2_functional_trace, average_numeric, average_symbolic, evaluate_functional, SymbolicAverager,
};
use a2w_core::linalg::{
    adjugate_inverse, gauss_jordan_inverse, is_positive_definite, leibniz_det, lu_det, operator_norm, sqrt_psd,
    sym_eigen, PdVerdict,
};
use a2w_core::multivar::{average_type1a, average_type1b, DEFAULT_MAX_CELLS};
use a2w_core::scalar::logspace;
use a2w_core::scalar_power::{average_abs_pow, integral_abs_pow, scalar_is_a2};
use a2w_core::type2::rotation_x;
use a2w_core::*;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(n: usize, re: &[f64], im: &[f64]) -> DenseMatrix64 {
    DenseMatrix::from_fn(n, |i, j| Complex64::new(re[i * n + j], im[i * n + j]))
}

/// `G G* + shift·I`
fn gram(g: &DenseMatrix64, shift: f64) -> DenseMatrix64 {
    g.matmul(&g.adjoint())
        .add(&DenseMatrix::identity(g.dim()).scale_real(shift))
}

fn matrix(n: usize) -> impl Strategy<Value = DenseMatrix64> {
    (
        prop::collection::vec(-1.0..1.0f64, n * n),
        prop::collection::vec(-1.0..1.0f64, n * n),
    )
        .prop_map(move |(re, im)| dense(n, &re, &im))
}

fn sized_matrix() -> impl Strategy<Value = DenseMatrix64> {
    (2usize..=5).prop_flat_map(matrix)
}

/// Rationals strictly inside (-1, 1).
fn open_unit_rational() -> impl Strategy<Value = Rational> {
    (2i64..=12).prop_flat_map(|q| (-(q - 1)..q).prop_map(move |p| Rational::new(p, q)))
}

fn type1_weight() -> impl Strategy<Value = SymbolicPowerMatrix64> {
    (2usize..=4).prop_flat_map(|n| {
        (matrix(n), prop::collection::vec(open_unit_rational(), n))
            .prop_map(|(g, diag)| SymbolicPowerMatrix::build_type1(gram(&g, 0.1), &diag).unwrap())
    })
}

fn interval() -> impl Strategy<Value = Interval64> {
    (-10.0..10.0f64, 1e-3..10.0f64).prop_map(|(c, h)| Interval::centered(c, h).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn leibniz_agrees_with_lu(m in sized_matrix()) {
        let n = m.dim() as i32;
        let diff = (leibniz_det(&m).unwrap() - lu_det(&m)).norm();
        prop_assert!(diff <= 1e-9 * m.max_abs().powi(n).max(1.0));
    }

    #[test]
    fn adjugate_inverts(m in sized_matrix()) {
        prop_assume!(lu_det(&m).norm() > 1e-6);
        let p = adjugate_inverse(&m).unwrap().matmul(&m);
        prop_assert!(p.max_abs_diff(&DenseMatrix::identity(m.dim())) < 1e-8);
    }

    #[test]
    fn minor_and_eigen_tests_agree(g in sized_matrix(), flip in any::<bool>()) {
        let h = SelfAdjointMatrix::symmetrized(&gram(&g, 0.05));
        let h = if flip {
            let e = sym_eigen(&h).unwrap();
            e.reconstruct_with(|l| if l == e.min() { -l } else { l })
        } else {
            h
        };
        let test = is_positive_definite(&h, 1e-12).unwrap();
        prop_assert_ne!(test.verdict, PdVerdict::Marginal);
        prop_assert_eq!(test.verdict == PdVerdict::Positive, !flip);
        prop_assert_eq!(test.min_eigenvalue > 0.0, !flip);
    }

    #[test]
    fn psd_square_root_squares_back(g in sized_matrix()) {
        let h = SelfAdjointMatrix::symmetrized(&gram(&g, 0.0));
        let s = sqrt_psd(&h).unwrap();
        prop_assert!(s.matmul(&s).max_abs_diff(&h) <= 1e-8 * h.max_abs().max(1e-12));
    }

    #[test]
    fn operator_norm_is_unitarily_invariant(m in matrix(3), a in matrix(3), b in matrix(3)) {
        let unitary = |x: &DenseMatrix64| sym_eigen(&SelfAdjointMatrix::symmetrized(x)).unwrap().vectors;
        let (u, v) = (unitary(&a), unitary(&b));
        let lhs = operator_norm(&u.matmul(&m).matmul(&v)).unwrap();
        prop_assert!((lhs - operator_norm(&m).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn scalar_product_invariances(g in open_unit_rational(), i in interval(), c in 1e-3..1e3f64, lambda in 1e-3..1e3f64) {
        let prod = |i: &Interval64| average_abs_pow::<f64>(g, i).unwrap() * average_abs_pow::<f64>(-g, i).unwrap();
        let p = prod(&i);
        prop_assert!(p >= 1.0 - 1e-12);
        // c·w and its inverse scale oppositely
        prop_assert!(rel(c * average_abs_pow(g, &i).unwrap() * average_abs_pow::<f64>(-g, &i).unwrap() / c, p) < 1e-12);
        prop_assert!(rel(prod(&i.scaled(lambda).unwrap()), p) < 1e-10);
        prop_assert!(rel(average_abs_pow::<f64>(g, &i.reflected()).unwrap(), average_abs_pow(g, &i).unwrap()) < 1e-14);
    }

    #[test]
    fn type1_evaluation_matches_symbolic_forms(w in type1_weight()) {
        let (det, e) = w.symbolic_det().unwrap();
        let inv = w.symbolic_inverse().unwrap();
        for x in logspace(1e-4, 1e4, 20).into_iter().flat_map(|x| [x, -x]) {
            let wx = w.evaluate(x).unwrap();
            let want = det * x.abs().powf(e.to_f64().unwrap());
            prop_assert!((lu_det(&wx) - want).norm() <= 1e-9 * want.norm());
            let direct = gauss_jordan_inverse(&wx).unwrap();
            let symbolic = inv.evaluate(x).unwrap();
            prop_assert!(symbolic.max_abs_diff(&direct) <= 1e-8 * direct.max_abs());
        }
    }

    #[test]
    fn type1_decision_invariances(w in type1_weight(), c in 1e-3..1e3f64) {
        let verdict = w.check_a2().verdict;
        prop_assert_eq!(verdict, Verdict::A2);
        prop_assert_eq!(w.scaled(c).check_a2().verdict, verdict);
        let inv = w.symbolic_inverse().unwrap();
        prop_assert_eq!(inv.check_a2().verdict, Verdict::A2);
        let back = inv.symbolic_inverse().unwrap();
        prop_assert_eq!(back.exponent_rows(), w.exponent_rows());
        prop_assert!(back.effective_coeff().max_abs_diff(&w.effective_coeff()) < 1e-10 * w.coeff().max_abs().max(1.0));
    }

    #[test]
    fn one_by_one_reduction(a in -2.0..2.0f64, p in -30i64..30, q in 1i64..12) {
        let g = Rational::new(p, q);
        let w = SymbolicPowerMatrix::scalar(a, g);
        prop_assume!(a.abs() > 1e-9);
        prop_assert_eq!(w.check_a2().verdict == Verdict::A2, scalar_is_a2(g) && a > 0.0);
    }

    #[test]
    fn functional_sandwich_and_bounds(w in type1_weight(), i in interval(), c in 1e-2..1e2f64, lambda in 1e-2..1e2f64) {
        let n = w.dim() as f64;
        let avg = SymbolicAverager::new(&w).unwrap();
        let t = evaluate_functional(&avg, Functional::Trace, &i).unwrap();
        let s = evaluate_functional(&avg, Functional::Norm, &i).unwrap();
        prop_assert!(s <= t * (1.0 + 1e-9) && t <= n * s * (1.0 + 1e-9));
        prop_assert!(s >= 1.0 - 1e-9 && t >= n - 1e-9 * n);
        prop_assert!(t <= w.a2_upper_bound().unwrap() * (1.0 + 1e-9));

        let scaled = SymbolicAverager::new(&w.scaled(c)).unwrap();
        prop_assert!(rel(evaluate_functional(&scaled, Functional::Trace, &i).unwrap(), t) < 1e-10);
        prop_assert!(rel(evaluate_functional(&scaled, Functional::Norm, &i).unwrap(), s) < 1e-10);
        let dilated = i.scaled(lambda).unwrap();
        prop_assert!(rel(evaluate_functional(&avg, Functional::Trace, &dilated).unwrap(), t) < 1e-9);
    }

    #[test]
    fn closed_form_matches_quadrature(num in -19i64..60, c in -8.0..8.0f64, h in 0.01..2.0f64) {
        let g = Rational::new(num, 20);
        let i = Interval::centered(c, h).unwrap();
        let closed = integral_abs_pow::<f64>(g, &i).unwrap();
        let tol = a2w_core::quadrature::QuadTol { abs: 1e-13, rel: 1e-11, max_panels: 20_000 };
        let e = g.to_f64().unwrap();
        let (numeric, _) = a2w_core::quadrature::integrate_scalar(|x: f64| x.abs().powf(e), i.a(), i.b(), &[0.0], tol).unwrap();
        prop_assert!(rel(numeric, closed) < 1e-8);
    }
}

#[test]
fn constant_unitary_conjugation_leaves_functionals_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let diag: Vec<Rational> = (0..3).map(|_| Rational::new(rng.random_range(-5..=5), 6)).collect();
        let g = DenseMatrix::from_fn(3, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = SymbolicPowerMatrix::build_type1(gram(&g, 0.2), &diag).unwrap();
        let u = rotation_x(rng.random_range(0.0..6.0)).matmul(&DenseMatrix::diagonal(&[1.0, -1.0, 1.0]));
        let i = Interval::centered(rng.random_range(-3.0..3.0), rng.random_range(0.1..3.0)).unwrap();
        let avg = average_symbolic(&w, &i).unwrap();
        let avg_inv = average_symbolic(&w.symbolic_inverse().unwrap(), &i).unwrap();
        let conj = |m: &SelfAdjointMatrix64| SelfAdjointMatrix::symmetrized(&u.matmul(m).matmul(&u.adjoint()));
        let (ca, cb) = (conj(&avg), conj(&avg_inv));
        assert!(
            rel(
                a2_functional_trace(&ca, &cb).unwrap(),
                a2_functional_trace(&avg, &avg_inv).unwrap()
            ) < 1e-9
        );
        assert!(
            rel(
                a2_functional_norm(&ca, &cb).unwrap(),
                a2_functional_norm(&avg, &avg_inv).unwrap()
            ) < 1e-9
        );
    }
}

#[test]
fn symbolic_and_numeric_averages_agree() {
    let coeff = DenseMatrix::from_real_rows(&[vec![5.0, 3.0], vec![3.0, 2.0]]).unwrap();
    let w = SymbolicPowerMatrix::build_type1(coeff, &[Rational::new(1, 2), Rational::new(-2, 3)]).unwrap();
    let i = Interval::new(-0.3, 2.0).unwrap();
    let exact = average_symbolic(&w, &i).unwrap();
    let numeric = average_numeric(|x| w.evaluate(x).unwrap(), 2, Rational::new(-2, 3), &i, 1e-11, 20_000).unwrap();
    assert!(numeric.max_abs_diff(&exact) < 1e-8);
}

#[test]
fn type2_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let families = [
        (UnitaryFamily::Rotation2d, 2usize),
        (UnitaryFamily::Rotation3dEuler, 3),
        (UnitaryFamily::Identity, 4),
    ];
    for (family, n) in families {
        for _ in 0..100 {
            let alphas: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
            let gammas: Vec<Rational> = (0..n).map(|_| Rational::new(rng.random_range(-9..=9), 10)).collect();
            let w = Type2Weight::new(alphas.clone(), gammas.clone(), family).unwrap();
            let x = rng.random_range(-1e3..1e3);
            let u = w.unitary_at(x);
            assert!(u.matmul(&u.adjoint()).max_abs_diff(&DenseMatrix::identity(n)) < 1e-12);
            let mut lambda = w.eigenvalues_at(x).unwrap();
            let total: f64 = lambda.iter().sum();
            let wx = w.evaluate(x).unwrap();
            assert!(rel(wx.trace().re, total) < 1e-10);
            assert!(wx.max_abs() <= total * (1.0 + 1e-12));
            let mut got = sym_eigen(&wx).unwrap().values;
            lambda.sort_by(|a, b| a.partial_cmp(b).unwrap());
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in got.iter().zip(&lambda) {
                assert!((a - b).abs() <= 1e-9 * total);
            }
        }
    }
}

#[test]
fn equal_exponent_rotation_collapses_to_scalar() {
    let g = Rational::new(1, 2);
    let w = Type2Weight::new(vec![1.0, 1.0], vec![g, g], UnitaryFamily::Rotation2d).unwrap();
    let avg = a2w_core::estimator::Type2Averager::new(&w, 1e-11, 20_000).unwrap();
    for n in [1u64, 10, 100] {
        let i = a2w_core::type2::divergence_interval::<f64>(n).unwrap();
        let t = evaluate_functional(&avg, Functional::Trace, &i).unwrap();
        let scalar = average_abs_pow::<f64>(g, &i).unwrap() * average_abs_pow::<f64>(-g, &i).unwrap();
        assert!((t - 2.0 * scalar).abs() < 1e-8);
        assert!(t <= 2.0 / (1.0 - 0.25));
    }
}

#[test]
fn cube_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let id1 = DenseMatrix::<f64>::identity(1);
    for _ in 0..10 {
        // radial averages are symmetric under coordinate permutations
        let g = Rational::new(rng.random_range(-15..=20), 10);
        let w = Type1bWeight::from_diagonal(id1.clone(), &[g], 3).unwrap();
        let lower: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..0.0)).collect();
        let q = Cube::new(lower, rng.random_range(1.0..2.0)).unwrap();
        let base = average_type1b(&w, &q, 1e-9, DEFAULT_MAX_CELLS).unwrap().get(0, 0).re;
        let perm = average_type1b(&w, &q.permuted(&[2, 0, 1]), 1e-9, DEFAULT_MAX_CELLS)
            .unwrap()
            .get(0, 0)
            .re;
        assert!(rel(perm, base) < 1e-7, "{g}: {perm} vs {base}");
    }
    // dilation law for origin-centered cubes
    for g in [Rational::new(1, 3), Rational::new(3, 2)] {
        let w = Type1bWeight::from_diagonal(id1.clone(), &[g], 2).unwrap();
        let unit = average_type1b(&w, &Cube::centered_at_origin(2, 1.0).unwrap(), 1e-10, DEFAULT_MAX_CELLS).unwrap();
        let e = g.to_f64().unwrap();
        for h in [0.01, 3.0, 70.0] {
            let v = average_type1b(&w, &Cube::centered_at_origin(2, h).unwrap(), 1e-10, DEFAULT_MAX_CELLS).unwrap();
            assert!(rel(v.get(0, 0).re, h.powf(e) * unit.get(0, 0).re) < 1e-6);
        }
    }
    // separable average of a zero-exponent second coordinate is the 1-D average
    let w = Type1aWeight::from_diagonals(id1, &[vec![Rational::new(-1, 2)], vec![Rational::new(0, 1)]]).unwrap();
    let q = Cube::new(vec![-0.2, 5.0], 1.0).unwrap();
    let one_d = average_abs_pow::<f64>(Rational::new(-1, 2), &q.interval(0)).unwrap();
    assert!(rel(average_type1a(&w, &q).unwrap().get(0, 0).re, one_d) < 1e-14);
}
