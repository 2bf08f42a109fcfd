//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion.
//!
//! Criteria 4 to 8 are long-running and only run with `--include-ignored`
//! (or `GCALB_ACCEPTANCE_FULL=1`); otherwise they print `SKIP`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use gcalb::basis::{
    build_opt_basis, local_basis_from_samples, random_orthonormal, randomized_range_finder,
};
use gcalb::dg::{density_integral, discretize, solve_dg_eig, DEFAULT_SAFETY};
use gcalb::domain::{Partition, UniformGrid};
use gcalb::eig::dense_reference_eig;
use gcalb::experiment::{run_experiment, ExperimentConfig, ExperimentId, Method, RunMetrics};
use gcalb::filter::{build_filter, solve_mobius, FilterSpec};
use gcalb::krylov::{gmres, SolverConfig};
use gcalb::operator::{
    apply_shifted_laplacian_inverse, build_gaussian_potential, GaussianWellSpec, Hamiltonian,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FLOOR: f64 = 1e-13;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cache_dir() -> PathBuf {
    std::env::var_os("GCALB_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("gcalb-acceptance-cache"))
}

fn config(id: ExperimentId, method: Method, nb: &[usize]) -> ExperimentConfig {
    ExperimentConfig {
        nb: nb.to_vec(),
        cache_dir: Some(cache_dir()),
        ..ExperimentConfig::new(id, method)
    }
}

fn rows(cfg: &ExperimentConfig) -> Result<Vec<RunMetrics>, String> {
    run_experiment(cfg)
        .map(|r| r.rows)
        .map_err(|e| e.to_string())
}

fn errs(rows: &[RunMetrics]) -> Vec<f64> {
    rows.iter().map(|r| r.err).collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.2e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn wells_h(n: usize) -> Hamiltonian {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![n]).unwrap();
    let spec = GaussianWellSpec::uniform(
        vec![vec![1.0367], vec![2.4504], vec![3.8642], vec![5.2779]],
        -10.0,
        0.2,
    );
    let v = build_gaussian_potential(&spec, &grid).unwrap();
    Hamiltonian::new(grid, 1.0, v).unwrap()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let f = match build_filter(FilterSpec::semi_infinite(-1.0, 1.0, 1.1, 16)) {
        Ok(f) => f,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (a, b, bp) = (-1.0, 1.0, 1.1);
    let n = 20_000;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        worst = worst.max((f.eval(a + s * (b - a)) - 1.0).abs());
        worst = worst.max(f.eval(bp + s * 10.0 * (b - a)).abs());
        worst = worst.max(f.eval(bp * 10f64.powf(1.0 + 11.0 * s)).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 1.0,
        format!("max error {worst:.2e} (<= 1e-10), {secs:.3} s (< 1 s)"),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let r = match rows(&config(ExperimentId::Lin1d, Method::Gcalb, &[6, 8, 10, 12])) {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let secs = t.elapsed().as_secs_f64();
    let e = errs(&r);
    let target: [f64; 4] = [1.41e-4, 2.27e-8, 1.65e-11, 7.64e-14];
    let within = e
        .iter()
        .zip(target)
        .all(|(&x, t)| (x.max(FLOOR) / t.max(FLOOR)).log10().abs() <= 2.0);
    let decreasing = e.windows(2).all(|w| w[0] <= FLOOR || w[1] < w[0]);
    let iters: Vec<f64> = r.iter().map(|x| x.n_tot_iter).collect();
    let iters_ok = iters.iter().all(|i| (100.0..=250.0).contains(i));
    outcome(
        within && decreasing && iters_ok && secs < 30.0,
        format!(
            "err [{}], n_tot_iter [{}], {secs:.1} s",
            fmt(&e),
            fmt(&iters)
        ),
    )
}

fn criterion_3() -> Outcome {
    let nb = [6, 8, 10];
    let mut out = Vec::new();
    for m in [Method::Opt, Method::Gcalb, Method::Lcalb] {
        match rows(&config(ExperimentId::Lin1d, m, &nb)) {
            Ok(r) => out.push(errs(&r)),
            Err(e) => return outcome(false, e),
        }
    }
    let pass =
        (0..nb.len()).all(|i| out[0][i] <= 10.0 * out[1][i] && out[1][i] <= 10.0 * out[2][i]);
    outcome(
        pass,
        format!(
            "opt [{}], gcalb [{}], lcalb [{}]",
            fmt(&out[0]),
            fmt(&out[1]),
            fmt(&out[2])
        ),
    )
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let gc = rows(&config(ExperimentId::Lin2d, Method::Gcalb, &[14, 22]));
    let lc = rows(&config(ExperimentId::Lin2d, Method::Lcalb, &[22]));
    let (gc, lc) = match (gc, lc) {
        (Ok(g), Ok(l)) => (errs(&g), errs(&l)),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let secs = t.elapsed().as_secs_f64();
    let pass = gc[0] <= 1e-3 && gc[1] <= 1e-9 && (1e-6..=1e-3).contains(&lc[0]) && secs < 900.0;
    outcome(
        pass,
        format!(
            "gcalb n_b=14 {:.2e}, n_b=22 {:.2e}; lcalb n_b=22 {:.2e}; {secs:.0} s",
            gc[0], gc[1], lc[0]
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut e = Vec::new();
    for rep in [1, 2] {
        let cfg = ExperimentConfig {
            rep,
            ..config(ExperimentId::Weak2d, Method::Gcalb, &[20])
        };
        match rows(&cfg) {
            Ok(r) => e.push(r[0].err),
            Err(err) => return outcome(false, err),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ratio = e[1] / e[0].max(FLOOR);
    let pass = e.iter().all(|&x| x <= 1e-5) && ratio <= 100.0 && secs < 1800.0;
    outcome(
        pass,
        format!(
            "rep=1 {:.2e}, rep=2 {:.2e}, ratio {ratio:.2}; {secs:.0} s",
            e[0], e[1]
        ),
    )
}

/// Criteria 6 and 7 share the 3D GC-ALB sweep.
fn criteria_6_7() -> (Outcome, Outcome) {
    let gc = rows(&config(
        ExperimentId::Lin3d,
        Method::Gcalb,
        &[6, 8, 10, 14, 20],
    ));
    let lc = rows(&config(ExperimentId::Lin3d, Method::Lcalb, &[20]));
    let pw = rows(&config(
        ExperimentId::Lin3d,
        Method::Planewave,
        &[8, 10, 12, 14, 16, 20, 24, 32, 40],
    ));
    let (gc, lc, pw) = match (gc, lc, pw) {
        (Ok(g), Ok(l), Ok(p)) => (g, l, p),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
            return (outcome(false, e.clone()), outcome(false, e))
        }
    };
    let (first, last) = (gc[0].err, gc[gc.len() - 1].err);
    let orders = (first / last.max(FLOOR)).log10();
    let c6 = outcome(
        orders >= 6.0 && last <= lc[0].err,
        format!("gcalb n_b=6 {first:.2e} -> n_b=20 {last:.2e} ({orders:.1} orders); lcalb n_b=20 {:.2e}", lc[0].err),
    );
    let cheapest = |r: &[RunMetrics]| r.iter().filter(|x| x.err <= 2e-2).map(|x| x.dofs).min();
    let c7 = match (cheapest(&gc), cheapest(&pw)) {
        (Some(g), Some(p)) => outcome(
            3 * g <= p,
            format!("dofs at err <= 2e-2: gcalb {g}, planewave {p}"),
        ),
        (g, p) => outcome(
            false,
            format!("no run reached err <= 2e-2 (gcalb {g:?}, planewave {p:?})"),
        ),
    };
    (c6, c7)
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for m in [Method::Gcalb, Method::Planewave] {
        match run_experiment(&ExperimentConfig {
            cache_dir: None,
            ..config(ExperimentId::Scf1d, m, &[])
        }) {
            Ok(report) => {
                let s = report.scf.expect("scf summary");
                let first = s.records[0].inner_iterations;
                let rel = s
                    .records
                    .last()
                    .and_then(|r| r.rel_change)
                    .unwrap_or(f64::NAN);
                pass &= (s.e_x + 2.856).abs() <= 2e-3
                    && s.outer_iterations <= 15
                    && (5..=13).contains(&first)
                    && rel <= 1e-5;
                parts.push(format!(
                    "{}: E_X {:.4}, {} outer, first inner {first}, last change {rel:.2e}",
                    m.name(),
                    s.e_x,
                    s.outer_iterations
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", m.name()));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        pass && secs < 600.0,
        format!("{}; {secs:.0} s", parts.join("; ")),
    )
}

fn criterion_9() -> Outcome {
    let checks: [(&str, fn() -> Result<(), String>); 10] = [
        ("hamiltonian", hamiltonian_hermitian_linear),
        ("preconditioner", preconditioner_round_trip),
        ("gmres", gmres_exact_small),
        ("range finder", range_finder_rank_three),
        ("local gram", local_basis_gram),
        ("dg matrix", dg_hermitian_block_sparse),
        ("dg consistency", dg_consistency),
        ("free particle", free_particle),
        ("density", density_integrates),
        ("mobius", mobius_residuals),
    ];
    let failed: Vec<String> = checks
        .iter()
        .filter_map(|(name, f)| f().err().map(|e| format!("{name}: {e}")))
        .collect();
    if failed.is_empty() {
        outcome(true, format!("{} property checks", checks.len()))
    } else {
        outcome(false, failed.join("; "))
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn hamiltonian_hermitian_linear() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (lengths, points) in [(vec![2.0 * PI], vec![33]), (vec![3.0, 4.0], vec![12, 10])] {
        let grid = UniformGrid::new(lengths, points).unwrap();
        let n = grid.len();
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let h = Hamiltonian::new(grid, 0.8, v).unwrap();
        let d = h.to_dense();
        check((&d - d.transpose()).amax() < 1e-10 * d.amax(), || {
            "dense operator not symmetric".into()
        })?;
        let (x, y) = (cvec(&mut rng, n), cvec(&mut rng, n));
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
        let lhs = h
            .apply(
                &x.iter()
                    .zip(&y)
                    .map(|(p, q)| a * p + b * q)
                    .collect::<Vec<_>>(),
            )
            .unwrap();
        let (hx, hy) = (h.apply(&x).unwrap(), h.apply(&y).unwrap());
        let lin = (0..n)
            .map(|i| (lhs[i] - a * hx[i] - b * hy[i]).norm())
            .fold(0.0, f64::max);
        check(lin < 1e-10, || format!("linearity defect {lin:e}"))?;
        let dot = |u: &[Complex64], w: &[Complex64]| {
            u.iter()
                .zip(w)
                .map(|(p, q)| p.conj() * q)
                .sum::<Complex64>()
        };
        let herm = (dot(&x, &hy) - dot(&hx, &y)).norm();
        check(herm < 1e-10 * (1.0 + dot(&x, &hy).norm()), || {
            format!("<x,Hy> - <Hx,y> = {herm:e}")
        })?;
    }
    Ok(())
}

fn preconditioner_round_trip() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = UniformGrid::new(vec![4.0], vec![20]).unwrap();
    let h = Hamiltonian::new(grid.clone(), 0.7, vec![0.0; 20]).unwrap();
    for _ in 0..20 {
        let shift = Complex64::new(
            rng.random::<f64>() * 10.0 - 5.0,
            0.01 + rng.random::<f64>() * 3.0,
        );
        let v = cvec(&mut rng, 20);
        let x =
            apply_shifted_laplacian_inverse(&grid, 0.7, shift, &v).map_err(|e| e.to_string())?;
        let hx = h.apply(&x).unwrap();
        let r = (0..20)
            .map(|i| (hx[i] - shift * x[i] - v[i]).norm())
            .fold(0.0, f64::max);
        check(r < 1e-11, || format!("round-trip residual {r:e}"))?;
    }
    Ok(())
}

fn gmres_exact_small() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in [1, 4, 9, 16] {
        let a = DMatrix::from_fn(m, m, |i, j| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                + if i == j {
                    Complex64::new(m as f64, 0.0)
                } else {
                    0.0.into()
                }
        });
        let b = cvec(&mut rng, m);
        let cfg = SolverConfig {
            restart: m,
            tol: 1e-12,
            max_restarts: 1,
        };
        let apply = |v: &[Complex64]| {
            Ok((&a * nalgebra::DVector::from_column_slice(v))
                .as_slice()
                .to_vec())
        };
        let (x, report) = gmres(
            apply,
            &b,
            None::<fn(&[Complex64]) -> gcalb::Result<Vec<Complex64>>>,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        let r = &a * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b.clone());
        let rel = r.norm() / b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        check(rel < 1e-10 && report.iterations <= m, || {
            format!(
                "m = {m}: residual {rel:e} after {} steps",
                report.iterations
            )
        })?;
    }
    Ok(())
}

fn range_finder_rank_three() -> Result<(), String> {
    let n = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = random_orthonormal(n, 3, 100)
        .map_err(|e| e.to_string())?
        .columns;
    let v = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() - 0.5);
    let a = &u * v.transpose();
    let out = randomized_range_finder(|r| Ok(&a * r), n, 3, 5, 1).map_err(|e| e.to_string())?;
    let resid = (&out.vectors - &u * (u.transpose() * &out.vectors)).norm();
    check(out.vectors.ncols() == 3 && resid < 1e-10, || {
        format!("{} vectors, out-of-range {resid:e}", out.vectors.ncols())
    })
}

fn local_basis_gram() -> Result<(), String> {
    let partition = Partition::with_lengths(vec![3.0, 2.0], vec![3, 2], 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for el in partition.elements() {
        let w = el.tensor_weights();
        let samples = DMatrix::from_fn(el.num_nodes(), 7, |_, _| rng.random::<f64>() - 0.5);
        let b = local_basis_from_samples(el.id, &w, &samples, 5, 1e-12);
        let mut wv = b.values.clone();
        for (i, x) in w.iter().enumerate() {
            wv.row_mut(i).scale_mut(*x);
        }
        let defect =
            (b.values.transpose() * wv - DMatrix::<f64>::identity(b.count(), b.count())).amax();
        check(b.count() == 5 && defect < 1e-10, || {
            format!("element {}: gram defect {defect:e}", el.id)
        })?;
    }
    Ok(())
}

fn dg_hermitian_block_sparse() -> Result<(), String> {
    let h = wells_h(70);
    let grid = h.grid().clone();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 8)
        .into_owned();
    let partition = Partition::new(&grid, vec![5], 20).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 6).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).map_err(|e| e.to_string())?;
    let asym = (&a.matrix - a.matrix.transpose()).amax();
    check(asym < 1e-10, || format!("asymmetry {asym:e}"))?;
    for (i, j) in [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)] {
        let m = a.block(i, j).amax().max(a.block(j, i).amax());
        check(m < 1e-12, || {
            format!("block ({i}, {j}) of non-neighbours is {m:e}")
        })?;
    }
    check(
        a.block(0, 1).amax() > 1e-8 && a.block(0, 4).amax() > 1e-8,
        || "neighbour blocks vanish".into(),
    )
}

fn dg_consistency() -> Result<(), String> {
    let h = wells_h(128);
    let grid = h.grid().clone();
    let reference = dense_reference_eig(&h).unwrap();
    let psi = reference.eigenvectors.columns(0, 6).into_owned();
    let partition = Partition::new(&grid, vec![1], 120).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 6).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).map_err(|e| e.to_string())?;
    let sol = solve_dg_eig(&a, 6).map_err(|e| e.to_string())?;
    for i in 0..6 {
        let (got, want) = (sol.eigenvalues[i], reference.eigenvalues[i]);
        check((got - want).abs() < 1e-9 * want.abs().max(1.0), || {
            format!("eigenvalue {i}: {got} vs {want}")
        })?;
    }
    Ok(())
}

fn free_particle() -> Result<(), String> {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![32]).unwrap();
    let h = Hamiltonian::new(grid.clone(), 1.0, vec![0.0; 32]).unwrap();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 7)
        .into_owned();
    let partition = Partition::new(&grid, vec![4], 30).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 7).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).map_err(|e| e.to_string())?;
    let sol = solve_dg_eig(&a, 7).map_err(|e| e.to_string())?;
    let want = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0];
    let worst = sol
        .eigenvalues
        .iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max);
    check(worst < 1e-9, || format!("spectrum {:?}", sol.eigenvalues))
}

fn density_integrates() -> Result<(), String> {
    let h = wells_h(70);
    let grid = h.grid().clone();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 8)
        .into_owned();
    let partition = Partition::new(&grid, vec![5], 20).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 6).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).map_err(|e| e.to_string())?;
    for n in [1, 4, 7] {
        let sol = solve_dg_eig(&a, n).map_err(|e| e.to_string())?;
        let total = density_integral(&sol, &basis, n).map_err(|e| e.to_string())?;
        check((total - n as f64).abs() < 1e-6, || {
            format!("n = {n}: integral {total}")
        })?;
    }
    Ok(())
}

fn mobius_residuals() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..20 {
        let a = rng.random::<f64>() * 100.0 - 50.0;
        let b = a + 0.01 + rng.random::<f64>() * 20.0;
        let bp = b + 0.001 + rng.random::<f64>() * 5.0;
        let am = if k % 2 == 0 {
            f64::NEG_INFINITY
        } else {
            a - 0.01 - rng.random::<f64>() * 100.0
        };
        let m = solve_mobius(am, a, b, bp).map_err(|e| e.to_string())?;
        let r = m.residual(am, a, b, bp);
        check(r < 1e-10, || {
            format!("({am}, {a}, {b}, {bp}): residual {r:e}")
        })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let full = std::env::args().any(|a| a == "--include-ignored" || a == "--ignored")
        || std::env::var("GCALB_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let mut results: Vec<(usize, Option<Outcome>)> = vec![
        (1, Some(criterion_1())),
        (2, Some(criterion_2())),
        (3, Some(criterion_3())),
    ];
    if full {
        results.push((4, Some(criterion_4())));
        results.push((5, Some(criterion_5())));
        let (c6, c7) = criteria_6_7();
        results.push((6, Some(c6)));
        results.push((7, Some(c7)));
        results.push((8, Some(criterion_8())));
    } else {
        results.extend((4..=8).map(|k| (k, None)));
    }
    results.push((9, Some(criterion_9())));

    let mut failed = 0;
    for (k, r) in &results {
        match r {
            Some(o) => {
                println!(
                    "criterion {k}: {} {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                );
                failed += usize::from(!o.pass);
            }
            None => println!("criterion {k}: SKIP long-running, run with --include-ignored"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
