//! Seeded randomized oracle suites behind `a2w verify`.

use std::fmt::Write as _;

use a2w_core::estimator::{estimate_a2, evaluate_functional, SymbolicAverager, Type2Averager};
use a2w_core::linalg::{
    adjugate_inverse, gauss_jordan_inverse, is_positive_definite, leibniz_det, lu_det, operator_norm, sqrt_psd,
    sym_eigen, PdVerdict,
};
use a2w_core::multivar::{average_type1a, average_type1b, evaluate_cube_functional, Type1aAverager, DEFAULT_MAX_CELLS};
use a2w_core::quadrature::{integrate_scalar, QuadTol};
use a2w_core::scalar::logspace;
use a2w_core::scalar_power::{average_abs_pow, scalar_is_a2};
use a2w_core::type2::divergence_interval;
use a2w_core::{
    Cube64, DenseMatrix64, Functional, Interval64, Rational, SelfAdjointMatrix64, SupSearchConfig64,
    SymbolicPowerMatrix64, Type1aWeight64, Type1bWeight64, Type2Weight64, UnitaryFamily, Verdict,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Module {
    Linalg,
    Type1,
    Type2,
    Multivar,
    All,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::Linalg => "linalg",
            Module::Type1 => "type1",
            Module::Type2 => "type2",
            Module::Multivar => "multivar",
            Module::All => "all",
        }
    }
}

/// Runs one property over `trials` seeded cases. `bump` is added to every
/// checked quantity; it is zero except when a fault is injected.
type Property = fn(&mut ChaCha8Rng, usize, f64) -> Result<usize, String>;

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub name: String,
    pub cases: usize,
    pub failure: Option<String>,
}

pub fn suite(module: Module) -> Vec<(&'static str, Property)> {
    let linalg: [(&'static str, Property); 5] = [
        ("linalg.leibniz_vs_lu", leibniz_vs_lu),
        ("linalg.adjugate_inverse", adjugate_inverse_identity),
        ("linalg.minor_vs_eigen_definiteness", minor_vs_eigen),
        ("linalg.sqrt_psd_squares_back", sqrt_psd_square),
        ("linalg.operator_norm_unitary_invariance", operator_norm_invariance),
    ];
    let type1: [(&'static str, Property); 10] = [
        ("type1.symbolic_det_vs_lu", symbolic_det_vs_lu),
        ("type1.symbolic_inverse_vs_elimination", symbolic_inverse_vs_elimination),
        ("type1.inverse_closure", inverse_closure),
        ("type1.double_inverse", double_inverse),
        ("type1.scaling_invariance", scaling_invariance),
        ("type1.scalar_reduction", scalar_reduction),
        ("type1.pointwise_positivity", pointwise_positivity),
        ("type1.trace_bound_uniform", trace_bound_uniform),
        ("type1.functional_sandwich", functional_sandwich),
        ("type1.dilation_invariance", dilation_invariance),
    ];
    let type2: [(&'static str, Property); 5] = [
        ("type2.trace_identity", trace_identity),
        ("type2.unitarity", unitarity),
        ("type2.eigenvalue_multiset", eigenvalue_multiset),
        ("type2.entry_bound", entry_bound),
        ("type2.equal_exponent_collapse", equal_exponent_collapse),
    ];
    let multivar: [(&'static str, Property); 5] = [
        ("multivar.fubini_consistency", fubini_consistency),
        ("multivar.decision_reduction", decision_reduction),
        ("multivar.radial_permutation_symmetry", radial_permutation_symmetry),
        ("multivar.radial_dilation", radial_dilation),
        ("multivar.cube_sandwich", cube_sandwich),
    ];
    match module {
        Module::Linalg => linalg.to_vec(),
        Module::Type1 => type1.to_vec(),
        Module::Type2 => type2.to_vec(),
        Module::Multivar => multivar.to_vec(),
        Module::All => [&linalg[..], &type1[..], &type2[..], &multivar[..]].concat(),
    }
}

/// Each property draws from its own ChaCha stream of `seed`, so results do
/// not depend on which other properties run.
pub fn run(module: Module, trials: usize, seed: u64, inject_fault: bool) -> Vec<PropertyOutcome> {
    let bump = if inject_fault { 1e-3 } else { 0.0 };
    suite(module)
        .into_iter()
        .map(|(name, property)| run_one(name, property, trials, seed, bump))
        .collect()
}

/// Runs the single property called `name` (for example `"type2.unitarity"`).
pub fn run_property(name: &str, trials: usize, seed: u64) -> Option<PropertyOutcome> {
    let module = match name.split('.').next()? {
        "linalg" => Module::Linalg,
        "type1" => Module::Type1,
        "type2" => Module::Type2,
        "multivar" => Module::Multivar,
        _ => return None,
    };
    let (name, property) = suite(module).into_iter().find(|(n, _)| *n == name)?;
    Some(run_one(name, property, trials, seed, 0.0))
}

fn run_one(name: &str, property: Property, trials: usize, seed: u64, bump: f64) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    match property(&mut rng, trials, bump) {
        Ok(cases) => PropertyOutcome {
            name: name.into(),
            cases,
            failure: None,
        },
        Err(detail) => PropertyOutcome {
            name: name.into(),
            cases: 0,
            failure: Some(detail),
        },
    }
}

fn stream_id(name: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

pub fn render(outcomes: &[PropertyOutcome], seed: u64) -> (String, bool) {
    let mut out = String::new();
    let mut all_pass = true;
    for o in outcomes {
        match &o.failure {
            None => {
                let _ = writeln!(out, "PASS {} ({} cases)", o.name, o.cases);
            }
            Some(detail) => {
                all_pass = false;
                let _ = writeln!(out, "FAIL {}: {detail} [seed {seed}]", o.name);
            }
        }
    }
    let passed = outcomes.iter().filter(|o| o.failure.is_none()).count();
    let _ = writeln!(out, "{passed}/{} properties passed", outcomes.len());
    (out, all_pass)
}

fn ensure(ok: bool, case: usize, detail: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("case {case}: {}", detail()))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix64 {
    DenseMatrix64::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DenseMatrix64 {
    let g = random_matrix(rng, n);
    g.matmul(&g.adjoint())
        .add(&DenseMatrix64::identity(n).scale_real(shift))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix64 {
    let h = SelfAdjointMatrix64::symmetrized(&random_matrix(rng, n));
    sym_eigen(&h).expect("small Hermitian matrix").vectors
}

/// A rational `p/q` with `|p/q| < bound`, `q <= 12`.
fn random_rational(rng: &mut ChaCha8Rng, bound: i64) -> Rational {
    let q = rng.random_range(2..=12i64);
    let p = rng.random_range(-(bound * q - 1)..=(bound * q - 1));
    Rational::new(p, q)
}

fn random_type1(rng: &mut ChaCha8Rng, bound: i64) -> SymbolicPowerMatrix64 {
    let n = rng.random_range(2..=4);
    let diag: Vec<Rational> = (0..n).map(|_| random_rational(rng, bound)).collect();
    SymbolicPowerMatrix64::build_type1(random_pd(rng, n, 0.1), &diag).expect("square")
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval64 {
    let c = if rng.random_bool(0.3) {
        0.0
    } else {
        rng.random_range(-10.0..10.0)
    };
    Interval64::centered(c, 10f64.powf(rng.random_range(-3.0..1.0))).expect("finite")
}

fn sample_points() -> Vec<f64> {
    logspace(1e-4, 1e4, 20).into_iter().flat_map(|x| [x, -x]).collect()
}

fn leibniz_vs_lu(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = 2 * trials;
    for k in 0..cases {
        let n = rng.random_range(2..=5);
        let m = random_matrix(rng, n);
        let diff = (leibniz_det(&m).map_err(|e| e.to_string())? - lu_det(&m)).norm() + bump;
        let tol = 1e-9 * m.max_abs().powi(n as i32).max(1.0);
        ensure(diff <= tol, k, || {
            format!("n = {n}, |leibniz - lu| = {diff:e} > {tol:e}")
        })?;
    }
    Ok(cases)
}

fn adjugate_inverse_identity(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let mut checked = 0;
    for k in 0..trials {
        let n = rng.random_range(2..=5);
        let m = random_matrix(rng, n);
        if lu_det(&m).norm() <= 1e-6 {
            continue;
        }
        let inv = adjugate_inverse(&m).map_err(|e| e.to_string())?;
        let err = inv.matmul(&m).max_abs_diff(&DenseMatrix64::identity(n)) + bump;
        ensure(err <= 1e-8, k, || format!("n = {n}, |adj(M)/det M · M - I| = {err:e}"))?;
        checked += 1;
    }
    Ok(checked)
}

fn minor_vs_eigen(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let mut checked = 0;
    for k in 0..trials {
        let n = rng.random_range(2..=5);
        let h = SelfAdjointMatrix64::symmetrized(&random_pd(rng, n, 0.05));
        let h = if k % 2 == 1 {
            let e = sym_eigen(&h).map_err(|e| e.to_string())?;
            let lo = e.min();
            e.reconstruct_with(|l| if l == lo { -l } else { l })
        } else {
            h
        };
        let test = is_positive_definite(&h, 1e-12).map_err(|e| e.to_string())?;
        if test.verdict == PdVerdict::Marginal {
            continue;
        }
        let by_eigen = test.min_eigenvalue - bump > 0.0;
        let by_minor = test.verdict == PdVerdict::Positive;
        ensure(by_minor == by_eigen, k, || {
            format!("minor test says {by_minor}, eigenvalue test says {by_eigen}")
        })?;
        checked += 1;
    }
    Ok(checked)
}

fn sqrt_psd_square(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let n = rng.random_range(2..=5);
        let h = SelfAdjointMatrix64::symmetrized(&random_pd(rng, n, 0.0));
        let s = sqrt_psd(&h).map_err(|e| e.to_string())?;
        let err = s.matmul(&s).max_abs_diff(&h) / h.max_abs() + bump;
        ensure(err <= 1e-8, k, || format!("relative |sqrt(H)^2 - H| = {err:e}"))?;
    }
    Ok(trials)
}

fn operator_norm_invariance(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let n = rng.random_range(2..=5);
        let m = random_matrix(rng, n);
        let (u, v) = (random_unitary(rng, n), random_unitary(rng, n));
        let a = operator_norm(&u.matmul(&m).matmul(&v)).map_err(|e| e.to_string())?;
        let b = operator_norm(&m).map_err(|e| e.to_string())?;
        let diff = (a - b).abs() + bump;
        ensure(diff <= 1e-10, k, || format!("|‖UMV‖ - ‖M‖| = {diff:e}"))?;
    }
    Ok(trials)
}

fn symbolic_det_vs_lu(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let xs = sample_points();
    for k in 0..trials {
        let w = random_type1(rng, 1);
        let (det, e) = w.symbolic_det().map_err(|e| e.to_string())?;
        let e = *e.numer() as f64 / *e.denom() as f64;
        for &x in &xs {
            let want = det * x.abs().powf(e);
            let got = lu_det(&w.evaluate(x).map_err(|e| e.to_string())?);
            let err = (got - want).norm() / want.norm() + bump;
            ensure(err <= 1e-9, k, || {
                format!("x = {x:e}: relative determinant error {err:e}")
            })?;
        }
    }
    Ok(trials)
}

fn symbolic_inverse_vs_elimination(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let xs = sample_points();
    for k in 0..trials {
        let w = random_type1(rng, 1);
        let inv = w.symbolic_inverse().map_err(|e| e.to_string())?;
        for &x in &xs {
            let direct = gauss_jordan_inverse(&w.evaluate(x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let symbolic = inv.evaluate(x).map_err(|e| e.to_string())?;
            let err = symbolic.max_abs_diff(&direct) / direct.max_abs() + bump;
            ensure(err <= 1e-8, k, || format!("x = {x:e}: relative inverse error {err:e}"))?;
        }
    }
    Ok(trials)
}

fn inverse_closure(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let w = random_type1(rng, 2);
        let inv = w.symbolic_inverse().map_err(|e| e.to_string())?;
        let (a, b) = (
            w.check_a2().verdict == Verdict::A2,
            inv.check_a2().verdict == Verdict::A2,
        );
        ensure(a == b && bump == 0.0, k, || {
            format!("weight a2 = {a}, inverse a2 = {b}")
        })?;
    }
    Ok(trials)
}

fn double_inverse(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let w = random_type1(rng, 1);
        let back = w
            .symbolic_inverse()
            .and_then(|i| i.symbolic_inverse())
            .map_err(|e| e.to_string())?;
        ensure(back.exponent_rows() == w.exponent_rows(), k, || {
            "exponents changed".into()
        })?;
        let err = back.effective_coeff().max_abs_diff(&w.effective_coeff()) / w.coeff().max_abs() + bump;
        ensure(err <= 1e-10, k, || format!("coefficient drift {err:e}"))?;
    }
    Ok(trials)
}

fn scaling_invariance(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let w = random_type1(rng, 2);
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let (a, b) = (w.check_a2().verdict, w.scaled(c).check_a2().verdict);
        ensure(a == b && bump == 0.0, k, || format!("c = {c}: {a} vs {b}"))?;
    }
    Ok(trials)
}

fn scalar_reduction(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let a = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.01..3.0);
        let g = random_rational(rng, 2);
        let got = SymbolicPowerMatrix64::scalar(a, g).check_a2().verdict == Verdict::A2;
        let want = scalar_is_a2(g) && a > 0.0;
        ensure(got == want && bump == 0.0, k, || {
            format!("a = {a}, gamma = {g}: {got} vs {want}")
        })?;
    }
    Ok(trials)
}

fn pointwise_positivity(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let grid: Vec<f64> = logspace(1e-8, 1e8, 65).into_iter().flat_map(|x| [x, -x]).collect();
    for k in 0..trials {
        let w = random_type1(rng, 1);
        if k % 2 == 0 {
            for &x in &grid {
                let h = SelfAdjointMatrix64::symmetrized(&w.evaluate(x).map_err(|e| e.to_string())?);
                let lo = sym_eigen(&h).map_err(|e| e.to_string())?.min() - bump;
                ensure(lo > 0.0, k, || format!("x = {x:e}: smallest eigenvalue {lo:e}"))?;
            }
        } else {
            // break the midpoint condition on one off-diagonal pair
            let mut rows = w.exponent_rows();
            let shift = Rational::new(1, 10);
            rows[0][1] += shift;
            rows[1][0] += shift;
            let bad = SymbolicPowerMatrix64::build_type1_raw(w.coeff().clone(), &rows).map_err(|e| e.to_string())?;
            let report = bad.check_positive_definite_ae();
            ensure(report.verdict == Verdict::NotPositiveDefiniteAe, k, || {
                format!("verdict {}", report.verdict)
            })?;
            if let Some(x) = report.witness {
                let h = SelfAdjointMatrix64::symmetrized(&bad.evaluate(x).map_err(|e| e.to_string())?);
                let lo = sym_eigen(&h).map_err(|e| e.to_string())?.min() + bump;
                ensure(lo < 0.0, k, || {
                    format!("witness x = {x:e} has smallest eigenvalue {lo:e}")
                })?;
            }
        }
    }
    Ok(trials)
}

fn trace_bound_uniform(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = trials.min(50);
    let cfg = SupSearchConfig64::log_grid(1e-3, 1e3, 9, 2);
    for k in 0..cases {
        let w = random_type1(rng, 1);
        let bound = w.a2_upper_bound().map_err(|e| e.to_string())?;
        let avg = SymbolicAverager::new(&w).map_err(|e| e.to_string())?;
        let est = estimate_a2(&avg, Functional::Trace, &cfg)
            .map_err(|e| e.to_string())?
            .estimate
            + bump * bound;
        ensure(est <= bound * (1.0 + 1e-9), k, || {
            format!("trace {est} exceeds bound {bound}")
        })?;
    }
    Ok(cases)
}

fn functional_sandwich(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = 5 * trials;
    for k in 0..cases {
        let w = random_type1(rng, 1);
        let n = w.dim() as f64;
        let avg = SymbolicAverager::new(&w).map_err(|e| e.to_string())?;
        let i = random_interval(rng);
        let t = evaluate_functional(&avg, Functional::Trace, &i).map_err(|e| e.to_string())?;
        let s = evaluate_functional(&avg, Functional::Norm, &i).map_err(|e| e.to_string())? + bump * t;
        let ok = s <= t * (1.0 + 1e-9) && t <= n * s * (1.0 + 1e-9) && s >= 1.0 - 1e-9 && t >= n * (1.0 - 1e-9);
        ensure(ok, k, || format!("n = {n}, norm {s}, trace {t}"))?;
    }
    Ok(cases)
}

fn dilation_invariance(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let w = random_type1(rng, 1);
        let avg = SymbolicAverager::new(&w).map_err(|e| e.to_string())?;
        let i = random_interval(rng);
        let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
        for f in [Functional::Trace, Functional::Norm] {
            let a = evaluate_functional(&avg, f, &i).map_err(|e| e.to_string())?;
            let b = evaluate_functional(&avg, f, &i.scaled(lambda).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let err = rel(b, a) + bump;
            ensure(err <= 1e-9, k, || {
                format!("lambda = {lambda}: {} drift {err:e}", f.as_str())
            })?;
        }
    }
    Ok(trials)
}

fn random_type2(rng: &mut ChaCha8Rng, family: UnitaryFamily) -> Type2Weight64 {
    let n = match family {
        UnitaryFamily::Rotation2d => 2,
        UnitaryFamily::Rotation3dEuler => 3,
        UnitaryFamily::Identity => rng.random_range(1..=4),
    };
    let alphas = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
    let gammas = (0..n).map(|_| random_rational(rng, 1)).collect();
    Type2Weight64::new(alphas, gammas, family).expect("matching sizes")
}

const FAMILIES: [UnitaryFamily; 3] = [
    UnitaryFamily::Rotation2d,
    UnitaryFamily::Rotation3dEuler,
    UnitaryFamily::Identity,
];

fn random_x(rng: &mut ChaCha8Rng) -> f64 {
    let x = 10f64.powf(rng.random_range(-3.0..3.0));
    if rng.random_bool(0.5) {
        -x
    } else {
        x
    }
}

fn trace_identity(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        for family in FAMILIES {
            let w = random_type2(rng, family);
            let x = random_x(rng);
            let total: f64 = w.eigenvalues_at(x).map_err(|e| e.to_string())?.iter().sum();
            let tr = w.evaluate(x).map_err(|e| e.to_string())?.trace().re;
            let err = rel(tr, total) + bump;
            ensure(err <= 1e-10, k, || {
                format!("{family}, x = {x:e}: relative trace error {err:e}")
            })?;
        }
    }
    Ok(trials)
}

fn unitarity(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        for family in [UnitaryFamily::Rotation2d, UnitaryFamily::Rotation3dEuler] {
            let w = random_type2(rng, family);
            let x = rng.random_range(-1e3..1e3);
            let u = w.unitary_at(x);
            let err = u.matmul(&u.adjoint()).max_abs_diff(&DenseMatrix64::identity(w.dim())) + bump;
            ensure(err <= 1e-12, k, || format!("{family}, x = {x}: |UU* - I| = {err:e}"))?;
        }
    }
    Ok(trials)
}

fn eigenvalue_multiset(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        for family in FAMILIES {
            let w = random_type2(rng, family);
            let x = random_x(rng);
            let mut want = w.eigenvalues_at(x).map_err(|e| e.to_string())?;
            want.sort_by(f64::total_cmp);
            let got = sym_eigen(&w.evaluate(x).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?
                .values;
            let scale: f64 = want.iter().sum();
            for (g, v) in got.iter().zip(&want) {
                let err = (g - v).abs() / scale + bump;
                ensure(err <= 1e-9, k, || format!("{family}, x = {x:e}: eigenvalue {g} vs {v}"))?;
            }
        }
    }
    Ok(trials)
}

fn entry_bound(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        for family in FAMILIES {
            let w = random_type2(rng, family);
            let x = random_x(rng);
            let total: f64 = w.eigenvalues_at(x).map_err(|e| e.to_string())?.iter().sum();
            let biggest = w.evaluate(x).map_err(|e| e.to_string())?.max_abs() + bump * total;
            ensure(biggest <= total * (1.0 + 1e-12), k, || {
                format!("{family}, x = {x:e}: entry {biggest} > {total}")
            })?;
        }
    }
    Ok(trials)
}

fn equal_exponent_collapse(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = trials.min(20);
    for k in 0..cases {
        let g = random_rational(rng, 1);
        let w = Type2Weight64::new(vec![1.0, 1.0], vec![g, g], UnitaryFamily::Rotation2d).expect("2x2");
        let avg = Type2Averager::new(&w, 1e-11, 20_000).map_err(|e| e.to_string())?;
        let n = rng.random_range(1..=1000u64);
        let i = divergence_interval(n).map_err(|e| e.to_string())?;
        let t = evaluate_functional(&avg, Functional::Trace, &i).map_err(|e| e.to_string())?;
        let scalar = average_abs_pow::<f64>(g, &i).and_then(|a| Ok(a * average_abs_pow::<f64>(-g, &i)?));
        let scalar = scalar.map_err(|e| e.to_string())?;
        let gf = *g.numer() as f64 / *g.denom() as f64;
        let err = (t - 2.0 * scalar).abs() + bump;
        ensure(err <= 1e-8 && t <= 2.0 / (1.0 - gf * gf), k, || {
            format!(
                "gamma = {g}, n = {n}: trace {t}, twice the scalar product {}",
                2.0 * scalar
            )
        })?;
    }
    Ok(cases)
}

fn random_cube(rng: &mut ChaCha8Rng, d: usize) -> Cube64 {
    let side = 10f64.powf(rng.random_range(-1.0..1.0));
    let lower = (0..d).map(|_| side * rng.random_range(-1.2..0.5)).collect();
    Cube64::new(lower, side).expect("finite")
}

/// Iterated adaptive quadrature over a square, with the axes as breakpoints.
pub fn brute_square_average(f: impl Fn(f64, f64) -> f64, q: &Cube64, tol: f64) -> Result<f64, String> {
    let t = QuadTol {
        abs: 1e-14,
        rel: tol,
        max_panels: 20_000,
    };
    let (x0, y0, s) = (q.lower()[0], q.lower()[1], q.side());
    let inner = |x: f64| {
        integrate_scalar(|y| f(x, y), y0, y0 + s, &[0.0], t)
            .map(|v| v.0)
            .unwrap_or(f64::NAN)
    };
    let (v, _) = integrate_scalar(inner, x0, x0 + s, &[0.0], t).map_err(|e| e.to_string())?;
    if !v.is_finite() {
        return Err("inner quadrature failed".into());
    }
    Ok(v / (s * s))
}

fn fubini_consistency(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = trials.min(20);
    for k in 0..cases {
        let (g, b) = (random_rational(rng, 1), random_rational(rng, 1));
        let w = Type1aWeight64::from_diagonals(DenseMatrix64::identity(1), &[vec![g], vec![b]]).expect("1x1");
        let q = random_cube(rng, 2);
        let exact = average_type1a(&w, &q).map_err(|e| e.to_string())?.get(0, 0).re;
        let (ge, be) = (
            *g.numer() as f64 / *g.denom() as f64,
            *b.numer() as f64 / *b.denom() as f64,
        );
        let brute = brute_square_average(|x, y| x.abs().powf(ge) * y.abs().powf(be), &q, 1e-11)?;
        let err = rel(brute, exact) + bump;
        ensure(err <= 1e-7, k, || {
            format!("exponents ({g}, {b}): closed form {exact}, quadrature {brute}")
        })?;
    }
    Ok(cases)
}

fn decision_reduction(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let w = random_type1(rng, 2);
        let flat = vec![Rational::from_integer(0); w.dim()];
        let sep = Type1aWeight64::from_diagonals(w.coeff().clone(), &[w.diagonal_exponents(), flat])
            .map_err(|e| e.to_string())?;
        let (a, b) = (w.check_a2().verdict, sep.check_a2().verdict);
        ensure(a == b && bump == 0.0, k, || format!("one-variable {a}, separable {b}"))?;
    }
    Ok(trials)
}

fn radial_permutation_symmetry(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = trials.min(10);
    for k in 0..cases {
        let g = random_rational(rng, 2);
        let w = Type1bWeight64::from_diagonal(DenseMatrix64::identity(1), &[g], 3).expect("1x1");
        let q = random_cube(rng, 3);
        let a = average_type1b(&w, &q, 1e-9, DEFAULT_MAX_CELLS)
            .map_err(|e| e.to_string())?
            .get(0, 0)
            .re;
        let b = average_type1b(&w, &q.permuted(&[2, 0, 1]), 1e-9, DEFAULT_MAX_CELLS)
            .map_err(|e| e.to_string())?
            .get(0, 0)
            .re;
        let err = rel(b, a) + bump;
        ensure(err <= 1e-7, k, || format!("gamma = {g}: {a} vs {b}"))?;
    }
    Ok(cases)
}

fn radial_dilation(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    let cases = trials.min(10);
    for k in 0..cases {
        let d = rng.random_range(2..=3);
        let g = Rational::new(rng.random_range(0..=2 * d as i64 * 4 - 1), 4);
        let w = Type1bWeight64::from_diagonal(DenseMatrix64::identity(1), &[g], d).expect("1x1");
        let h = 10f64.powf(rng.random_range(-2.0..2.0));
        let unit = Cube64::centered_at_origin(d, 1.0).expect("valid");
        let big = Cube64::centered_at_origin(d, h).expect("valid");
        let a = average_type1b(&w, &unit, 1e-10, DEFAULT_MAX_CELLS)
            .map_err(|e| e.to_string())?
            .get(0, 0)
            .re;
        let b = average_type1b(&w, &big, 1e-10, DEFAULT_MAX_CELLS)
            .map_err(|e| e.to_string())?
            .get(0, 0)
            .re;
        let gf = *g.numer() as f64 / *g.denom() as f64;
        // the cube quadrature tolerance is relative to volume plus integral
        let err = (b - h.powf(gf) * a).abs() / (1.0 + b) + bump;
        ensure(err <= 1e-6, k, || {
            format!("d = {d}, gamma = {g}, h = {h}: scaled error {err:e}")
        })?;
    }
    Ok(cases)
}

fn cube_sandwich(rng: &mut ChaCha8Rng, trials: usize, bump: f64) -> Result<usize, String> {
    for k in 0..trials {
        let n = rng.random_range(2..=3);
        let d = rng.random_range(2..=3);
        let diags: Vec<Vec<Rational>> = (0..d)
            .map(|_| (0..n).map(|_| random_rational(rng, 1)).collect())
            .collect();
        let w = Type1aWeight64::from_diagonals(random_pd(rng, n, 0.1), &diags).map_err(|e| e.to_string())?;
        let avg = Type1aAverager::new(&w).map_err(|e| e.to_string())?;
        let q = random_cube(rng, d);
        let t = evaluate_cube_functional(&avg, Functional::Trace, &q).map_err(|e| e.to_string())?;
        let s = evaluate_cube_functional(&avg, Functional::Norm, &q).map_err(|e| e.to_string())? + bump * t;
        let nf = n as f64;
        let ok = s <= t * (1.0 + 1e-9) && t <= nf * s * (1.0 + 1e-9) && s >= 1.0 - 1e-9 && t >= nf * (1.0 - 1e-9);
        ensure(ok, k, || format!("n = {n}, d = {d}: norm {s}, trace {t}"))?;
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let scaled = Type1aWeight64::from_diagonals(w.coeff().scale_real(c), &diags).map_err(|e| e.to_string())?;
        let t2 = evaluate_cube_functional(
            &Type1aAverager::new(&scaled).map_err(|e| e.to_string())?,
            Functional::Trace,
            &q,
        )
        .map_err(|e| e.to_string())?;
        ensure(rel(t2, t) <= 1e-10, k, || {
            format!("scaling by {c} moved the trace from {t} to {t2}")
        })?;
    }
    Ok(trials)
}
