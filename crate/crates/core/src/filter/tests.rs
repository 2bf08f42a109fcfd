use super::*;
use crate::domain::UniformGrid;
use crate::operator::{build_gaussian_potential, GaussianWellSpec};
use approx::assert_relative_eq;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, SQRT_2};

fn fig4() -> FilterSpec {
    FilterSpec::semi_infinite(-1.0, 1.0, 1.1, 16)
}

fn indicator_error(f: &RationalFilter, xs: impl Iterator<Item = f64>) -> f64 {
    let FilterSpec { a, b, .. } = f.spec;
    xs.map(|x| {
        let target = if (a..=b).contains(&x) { 1.0 } else { 0.0 };
        (f.eval(x) - target).abs()
    })
    .fold(0.0, f64::max)
}

fn outside_gap(spec: &FilterSpec, n: usize) -> impl Iterator<Item = f64> {
    let FilterSpec { a, b, b_plus, .. } = *spec;
    let w = b - a;
    (0..=n).flat_map(move |i| {
        let s = i as f64 / n as f64;
        [a + s * w, b_plus + s * 10.0 * w]
    })
}

#[test]
fn elliptic_k_values() {
    assert_eq!(elliptic_k(0.0).unwrap(), FRAC_PI_2);
    assert_relative_eq!(
        elliptic_k(0.5).unwrap(),
        1.685_750_354_812_596,
        max_relative = 1e-14
    );
    let near_one = elliptic_k(0.999999).unwrap();
    assert!(near_one > 7.0);
    assert_relative_eq!(near_one, 7.947_479_773_542_437, max_relative = 1e-9);
    assert!(matches!(elliptic_k(1.0), Err(Error::Domain(_))));
    assert!(elliptic_k(-0.1).is_err());
}

#[test]
fn jacobi_values() {
    let (sn, cn, dn) = jacobi_sn_cn_dn(0.9, 0.0);
    assert_eq!((sn, cn, dn), (0.9f64.sin(), 0.9f64.cos(), 1.0));
    let (sn, cn, dn) = jacobi_sn_cn_dn(0.0, 0.6);
    assert!(sn.abs() < 1e-16 && (cn - 1.0).abs() < 1e-16 && (dn - 1.0).abs() < 1e-16);

    let k: f64 = 0.8;
    let half = 0.5 * elliptic_k(k).unwrap();
    let (sn, cn, dn) = jacobi_sn_cn_dn(half, k);
    assert!((sn * sn + cn * cn - 1.0).abs() < 1e-13);
    assert!((dn * dn + k * k * sn * sn - 1.0).abs() < 1e-13);
    assert!((sn - 1.0 / (1.0 + (1.0 - k * k).sqrt()).sqrt()).abs() < 1e-13);

    let (sn, cn, dn) = jacobi_sn_cn_dn(0.7, 0.3);
    assert!((sn - 0.640_648_539_720_262_2).abs() < 1e-13);
    assert!((cn - 0.767_834_258_518_266_1).abs() < 1e-13);
    assert!((dn - 0.981_356_841_505_62).abs() < 1e-13);
}

#[test]
fn zolotarev_r1_equioscillates() {
    for ell in [0.05, 0.3, 0.7] {
        let z = zolotarev_coeffs(1, ell).unwrap();
        let e_lo = (z.eval(ell) - 1.0).abs();
        let e_hi = (z.eval(1.0) - 1.0).abs();
        assert!(
            (e_lo - e_hi).abs() < 1e-12 * (1.0 + e_lo),
            "{ell}: {e_lo} vs {e_hi}"
        );
        assert!((z.max_error() - e_lo).abs() < 1e-9 * e_lo.max(1e-12));
    }
}

#[test]
fn zolotarev_r16_accuracy_and_oddness() {
    let z = zolotarev_coeffs(16, 0.0839).unwrap();
    assert!(z.max_error() <= 1e-10, "{}", z.max_error());
    assert!(z.c.iter().all(|c| *c > 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let t = rng.random::<f64>() * 3.0;
        assert_eq!(z.eval(-t), -z.eval(t));
    }
    assert!(zolotarev_coeffs(0, 0.5).is_err());
    assert!(zolotarev_coeffs(4, 1.0).is_err());
}

#[test]
fn zolotarev_underflow_is_reported() {
    assert!(matches!(
        zolotarev_coeffs(400, 1e-160),
        Err(Error::Precision(_))
    ));
}

#[test]
fn mobius_closed_form_example() {
    let m = solve_mobius(f64::NEG_INFINITY, 0.0, 1.0, 2.0).unwrap();
    assert_eq!(m.gamma, -1.0);
    assert!((m.alpha - SQRT_2).abs() < 1e-14);
    assert!((m.beta + SQRT_2).abs() < 1e-14);
    assert!((m.ell - (SQRT_2 - 1.0) / (SQRT_2 + 1.0)).abs() < 1e-14);
    assert!(m.residual(f64::NEG_INFINITY, 0.0, 1.0, 2.0) < 1e-12);
}

#[test]
fn mobius_finite_lower_end() {
    let (am, a, b, bp) = (-5.0, -1.0, 1.0, 1.5);
    let m = solve_mobius(am, a, b, bp).unwrap();
    assert!(m.residual(am, a, b, bp) < 1e-12);
    // far lower end recovers the semi-infinite map
    let inf = solve_mobius(f64::NEG_INFINITY, a, b, bp).unwrap();
    let far = solve_mobius(-1e9, a, b, bp).unwrap();
    assert!((far.ell - inf.ell).abs() < 1e-8);
}

#[test]
fn mobius_infeasible() {
    assert!(matches!(
        solve_mobius(f64::NEG_INFINITY, 1.0, 1.0, 2.0),
        Err(Error::InfeasibleGap(_))
    ));
    assert!(matches!(
        solve_mobius(f64::NEG_INFINITY, 0.0, 1.0, 1.0),
        Err(Error::InfeasibleGap(_))
    ));
    assert!(matches!(
        solve_mobius(2.0, 0.0, 1.0, 3.0),
        Err(Error::InfeasibleGap(_))
    ));
}

#[test]
fn fig4_filter_forms_agree_and_are_accurate() {
    let f = build_filter(fig4()).unwrap();
    assert_eq!(f.poles.len(), 16);
    assert!(f.poles.iter().all(|s| s.im > 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..500 {
        let x = loop {
            let x = -30.0 + 60.0 * rng.random::<f64>();
            if !(1.0..=1.1).contains(&x) {
                break x;
            }
        };
        assert!((f.eval(x) - f.eval_composed(x)).abs() < 1e-11, "x = {x}");
    }
    assert!((f.eval(0.0) - 1.0).abs() < 1e-10);
    assert!(f.eval(10.0).abs() < 1e-10);
    assert!(f.constant >= 0.0 && f.constant <= 1e-10);
    assert!(f.eval(1e12).abs() <= 1e-10);
    assert!(indicator_error(&f, outside_gap(&f.spec, 20_000)) <= 1e-10);
}

#[test]
fn filter_is_real_on_real_axis() {
    let f = build_filter(fig4()).unwrap();
    for x in [-3.0, 0.2, 0.99, 1.05, 4.0] {
        let im: f64 = f
            .poles
            .iter()
            .zip(&f.weights)
            .map(|(s, w)| (w / (x - s) + w.conj() / (x - s.conj())).im)
            .sum();
        assert!(im.abs() < 1e-13);
    }
}

#[test]
fn error_decreases_with_degree() {
    let errs: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&r| {
            let f = build_filter(FilterSpec { r, ..fig4() }).unwrap();
            indicator_error(&f, outside_gap(&f.spec, 5000))
        })
        .collect();
    assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
}

fn well_hamiltonian(n: usize) -> Hamiltonian {
    let l = 2.0 * std::f64::consts::PI;
    let grid = UniformGrid::new(vec![l], vec![n]).unwrap();
    let wells = GaussianWellSpec::uniform(
        vec![vec![1.0367], vec![2.4504], vec![3.8642], vec![5.2779]],
        -10.0,
        0.2,
    );
    let v = build_gaussian_potential(&wells, &grid).unwrap();
    Hamiltonian::new(grid, 1.0, v).unwrap()
}

#[test]
fn apply_filter_matches_dense_spectral_calculus() {
    let h = well_hamiltonian(32);
    let eig = SymmetricEigen::new(h.to_dense());
    let mut lam: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
    lam.sort_by(|x, y| x.0.total_cmp(&y.0));
    let spec = FilterSpec::semi_infinite(lam[0].0, lam[3].0, lam[3].0 + 0.5, 16);
    let f = build_filter(spec).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = DMatrix::from_fn(32, 3, |_, _| rng.random::<f64>() - 0.5);
    let out = apply_filter(&f, &h, &r, &SolverConfig::default(), true).unwrap();
    let q = &eig.eigenvectors;
    let fl = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| f.eval(x)));
    let oracle = q * fl * q.transpose() * &r;
    assert!(
        (&out.block - &oracle).amax() < 1e-8,
        "{}",
        (&out.block - &oracle).amax()
    );
    assert!(out.total_iterations > 0);
    assert!((out.iterations_per_rhs() - out.total_iterations as f64 / 3.0).abs() < 1e-12);

    // interior eigenvector passes through unchanged
    let psi = DMatrix::from_column_slice(32, 1, q.column(lam[1].1).as_slice());
    let out = apply_filter(&f, &h, &psi, &SolverConfig::default(), false).unwrap();
    assert!((&out.block - &psi).amax() < 1e-8);
}

#[test]
fn serial_and_parallel_agree_bitwise() {
    let h = well_hamiltonian(40);
    let f = build_filter(FilterSpec::semi_infinite(-12.0, -3.0, -1.0, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = DMatrix::from_fn(40, 4, |_, _| rng.random::<f64>());
    let a = apply_filter(&f, &h, &r, &SolverConfig::default(), true).unwrap();
    let b = apply_filter(&f, &h, &r, &SolverConfig::default(), false).unwrap();
    assert_eq!(a.block, b.block);
    assert_eq!(a.total_iterations, b.total_iterations);
}

#[test]
fn apply_filter_reports_failing_pole() {
    let h = well_hamiltonian(40);
    let f = build_filter(FilterSpec::semi_infinite(-12.0, -3.0, -1.0, 4)).unwrap();
    let r = DMatrix::from_element(40, 1, 1.0);
    let cfg = SolverConfig {
        restart: 1,
        tol: 1e-14,
        max_restarts: 1,
    };
    let err = apply_filter(&f, &h, &r, &cfg, false).unwrap_err();
    assert!(err.is_non_convergence());
    assert!(matches!(err, Error::FilterApplication { pole: 0, .. }));
}

mod props {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn mobius_back_substitution(a in -50.0f64..50.0, w in 0.01f64..20.0, g in 0.001f64..5.0, d in 0.01f64..100.0, inf in proptest::bool::ANY) {
            let (b, bp) = (a + w, a + w + g);
            let am = if inf { f64::NEG_INFINITY } else { a - d };
            let m = solve_mobius(am, a, b, bp).unwrap();
            prop_assert!(m.ell > 0.0 && m.ell < 1.0);
            prop_assert!(m.residual(am, a, b, bp) < 1e-10);
            if inf {
                prop_assert!(m.gamma == -1.0);
            }
        }

        #[test]
        fn equioscillation_bound(a in -20.0f64..0.0, w in 0.5f64..10.0, rel in 0.05f64..0.5) {
            let spec = FilterSpec::semi_infinite(a, a + w, a + w + rel * w, 16);
            let f = build_filter(spec).unwrap();
            prop_assert!(indicator_error(&f, outside_gap(&spec, 4000)) <= 1e-10);
        }
    }
}
