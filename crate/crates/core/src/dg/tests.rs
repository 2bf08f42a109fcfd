use super::*;
use crate::basis::{build_opt_basis, local_basis_from_samples, LocalBasis};
use crate::domain::{Partition, UniformGrid};
use crate::eig::dense_reference_eig;
use crate::operator::{build_gaussian_potential, GaussianWellSpec, Hamiltonian, NonlocalExchange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn wells_h(n: usize) -> Hamiltonian {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![n]).unwrap();
    let spec = GaussianWellSpec::uniform(
        vec![vec![1.0367], vec![2.4504], vec![3.8642], vec![5.2779]],
        -10.0,
        0.2,
    );
    let v = build_gaussian_potential(&spec, &grid).unwrap();
    Hamiltonian::new(grid, 1.0, v)
        .unwrap()
        .with_analytic_potential(spec)
}

fn constant_basis(partition: &Partition, id: usize) -> LocalBasis {
    let el = partition.element(id);
    let v = 1.0 / el.volume().sqrt();
    LocalBasis {
        element: id,
        values: DMatrix::from_element(el.num_nodes(), 1, v),
        singular_values: vec![1.0],
    }
}

#[test]
fn penalty_constant_function() {
    for (lengths, m) in [(vec![3.0], vec![4]), (vec![2.0, 5.0], vec![2, 5])] {
        let partition = Partition::with_lengths(lengths, m, 6).unwrap();
        let el = partition.element(0);
        let diff = partition.rule().differentiation_matrix();
        let g = estimate_penalty(&el, &diff, &constant_basis(&partition, 0), 1.0, 2.0).unwrap();
        assert!((g - 2.0 * el.surface() / el.volume()).abs() < 1e-10 * g);
    }
}

#[test]
fn penalty_grows_when_element_shrinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vals = DMatrix::from_fn(8, 3, |_, _| rng.random::<f64>());
    for lengths in [vec![4.0], vec![1.0]] {
        let _ = lengths;
    }
    let big = Partition::with_lengths(vec![4.0], vec![2], 8).unwrap();
    let small = Partition::with_lengths(vec![2.0], vec![2], 8).unwrap();
    let diff = big.rule().differentiation_matrix();
    let b = LocalBasis {
        element: 0,
        values: vals,
        singular_values: vec![1.0; 3],
    };
    let g_big = estimate_penalty(&big.element(0), &diff, &b, 1.0, 2.0).unwrap();
    let g_small = estimate_penalty(&small.element(0), &diff, &b, 1.0, 2.0).unwrap();
    assert!(g_small >= g_big);
}

#[test]
fn penalty_two_function_hand_assembly() {
    let h = 1.5;
    let partition = Partition::with_lengths(vec![3.0], vec![2], 10).unwrap();
    let el = partition.element(0);
    let (c1, c2) = (0.7, 1.3);
    let vals = DMatrix::from_fn(el.num_nodes(), 2, |i, j| {
        if j == 0 {
            c1
        } else {
            c2 * (el.nodes[0][i] - h / 2.0)
        }
    });
    let b = LocalBasis {
        element: 0,
        values: vals,
        singular_values: vec![1.0; 2],
    };
    let diff = partition.rule().differentiation_matrix();
    let g = estimate_penalty(&el, &diff, &b, 0.5, 3.0).unwrap();
    let lam = (2.0 / h).max((h * h / 2.0 + 2.0) / (h.powi(3) / 12.0 + h));
    assert!((g - 3.0 * 0.5 * lam).abs() < 1e-10 * g);

    let empty = LocalBasis {
        element: 0,
        values: DMatrix::zeros(el.num_nodes(), 0),
        singular_values: vec![],
    };
    assert!(matches!(
        estimate_penalty(&el, &diff, &empty, 1.0, 2.0),
        Err(Error::PenaltyEstimation { .. })
    ));
    let dup = LocalBasis {
        element: 0,
        values: DMatrix::from_element(el.num_nodes(), 2, 1.0),
        singular_values: vec![1.0; 2],
    };
    assert!(matches!(
        estimate_penalty(&el, &diff, &dup, 1.0, 2.0),
        Err(Error::PenaltyEstimation { .. })
    ));
}

fn planewave_basis(partition: &Partition, kmax: i32) -> DGBasis {
    let el = partition.element(0);
    let l = partition.lengths()[0];
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0 / l.sqrt(); el.num_nodes()]];
    for k in 1..=kmax {
        let kk = 2.0 * PI * k as f64 / l;
        cols.push(
            el.nodes[0]
                .iter()
                .map(|x| (kk * x).cos() * (2.0 / l).sqrt())
                .collect(),
        );
        cols.push(
            el.nodes[0]
                .iter()
                .map(|x| (kk * x).sin() * (2.0 / l).sqrt())
                .collect(),
        );
    }
    let values = DMatrix::from_fn(el.num_nodes(), cols.len(), |i, j| cols[j][i]);
    DGBasis {
        partition: partition.clone(),
        locals: vec![LocalBasis {
            element: 0,
            values,
            singular_values: vec![1.0; cols.len()],
        }],
    }
}

#[test]
fn single_element_planewaves_have_no_jump_terms() {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![32]).unwrap();
    let h = Hamiltonian::new(grid.clone(), 0.5, vec![0.0; 32]).unwrap();
    let partition = Partition::new(&grid, vec![1], 40).unwrap();
    let basis = planewave_basis(&partition, 2);
    let (a, pen) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();
    assert!(pen.gamma[0] > 0.0);
    let expect =
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.5, 0.5, 2.0, 2.0]));
    assert!((&a.matrix - expect).amax() < 1e-10);
}

#[test]
fn free_particle_spectrum_from_exact_eigenfunctions() {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![32]).unwrap();
    let h = Hamiltonian::new(grid.clone(), 1.0, vec![0.0; 32]).unwrap();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 7)
        .into_owned();
    let partition = Partition::new(&grid, vec![4], 30).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 7).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();
    let sol = solve_dg_eig(&a, 7).unwrap();
    for (got, want) in sol
        .eigenvalues
        .iter()
        .zip([0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0])
    {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn reference_eigenfunctions_reproduce_reference_eigenvalues() {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![128]).unwrap();
    let spec = GaussianWellSpec::uniform(
        vec![vec![1.0367], vec![2.4504], vec![3.8642], vec![5.2779]],
        -10.0,
        0.2,
    );
    let v = build_gaussian_potential(&spec, &grid).unwrap();
    let h = Hamiltonian::new(grid.clone(), 1.0, v).unwrap();
    let reference = dense_reference_eig(&h).unwrap();
    let psi = reference.eigenvectors.columns(0, 6).into_owned();
    let partition = Partition::new(&grid, vec![1], 120).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 6).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();
    let sol = solve_dg_eig(&a, 6).unwrap();
    for i in 0..6 {
        assert!(
            (sol.eigenvalues[i] - reference.eigenvalues[i]).abs()
                < 1e-9 * reference.eigenvalues[i].abs().max(1.0)
        );
    }
}

#[test]
fn opt_basis_spanning_reference_is_exact_on_many_elements() {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![128]).unwrap();
    let spec = GaussianWellSpec::uniform(
        vec![vec![1.0367], vec![2.4504], vec![3.8642], vec![5.2779]],
        -10.0,
        0.2,
    );
    let v = build_gaussian_potential(&spec, &grid).unwrap();
    let h = Hamiltonian::new(grid.clone(), 1.0, v).unwrap();
    let reference = dense_reference_eig(&h).unwrap();
    let psi = reference.eigenvectors.columns(0, 6).into_owned();
    let partition = Partition::new(&grid, vec![4], 50).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 6).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();
    let sol = solve_dg_eig(&a, 6).unwrap();
    for i in 0..6 {
        assert!(
            (sol.eigenvalues[i] - reference.eigenvalues[i]).abs()
                < 1e-9 * reference.eigenvalues[i].abs().max(1.0)
        );
    }
}

fn multi_element_setup() -> (Hamiltonian, DGBasis, DGMatrix) {
    let h = wells_h(70);
    let grid = h.grid().clone();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 8)
        .into_owned();
    let partition = Partition::new(&grid, vec![5], 20).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 6).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();
    (h, basis, a)
}

#[test]
fn hermitian_and_block_sparse() {
    let (_, _, a) = multi_element_setup();
    assert!((&a.matrix - a.matrix.transpose()).amax() < 1e-10);
    for (i, j) in [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)] {
        assert!(a.block(i, j).amax() < 1e-12);
        assert!(a.block(j, i).amax() < 1e-12);
    }
    assert!(a.block(0, 4).amax() > 1e-8);
    assert!(a.block(0, 1).amax() > 1e-8);
}

#[test]
fn two_dimensional_assembly_is_hermitian_and_sparse() {
    let grid = UniformGrid::new(vec![4.0, 4.0], vec![16, 16]).unwrap();
    let spec = GaussianWellSpec::uniform(vec![vec![1.0, 1.3], vec![2.9, 2.7]], -5.0, 0.4);
    let v = build_gaussian_potential(&spec, &grid).unwrap();
    let h = Hamiltonian::new(grid.clone(), 1.0, v).unwrap();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 5)
        .into_owned();
    let partition = Partition::new(&grid, vec![4, 4], 10).unwrap();
    let basis = build_opt_basis(&grid, &partition, &psi, 5).unwrap();
    let (a, _) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();
    assert!((&a.matrix - a.matrix.transpose()).amax() < 1e-10);
    let (p, q) = (partition.element_id(&[0, 0]), partition.element_id(&[2, 1]));
    assert!(a.block(p, q).amax() < 1e-12);
    let diag = partition.element_id(&[1, 1]);
    assert!(a.block(p, diag).amax() < 1e-12);
}

#[test]
fn opt_basis_nesting_with_fixed_penalty() {
    let h = wells_h(70);
    let grid = h.grid().clone();
    let psi = dense_reference_eig(&h)
        .unwrap()
        .eigenvectors
        .columns(0, 8)
        .into_owned();
    let partition = Partition::new(&grid, vec![5], 20).unwrap();
    let big = build_opt_basis(&grid, &partition, &psi, 8).unwrap();
    let (_, pen) = discretize(&h, &big, DEFAULT_SAFETY, None).unwrap();
    let mut last = f64::INFINITY;
    for nb in [4, 5, 6, 7, 8] {
        let small = DGBasis {
            partition: partition.clone(),
            locals: big.locals.iter().map(|b| b.truncated(nb)).collect(),
        };
        let a = assemble_dg(&h, &small, &pen, None).unwrap();
        let s: f64 = solve_dg_eig(&a, 4).unwrap().eigenvalues.iter().sum();
        assert!(s <= last + 1e-10);
        last = s;
    }
}

/// Cyclic Jacobi rotations, used as an independent oracle.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn dense_eigensolve_examples() {
    let a = DGMatrix {
        matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0])),
        offsets: vec![0],
        counts: vec![3],
        kinetic: 1.0,
    };
    let sol = solve_dg_eig(&a, 2).unwrap();
    assert_eq!(sol.eigenvalues, vec![1.0, 2.0]);
    assert!((sol.coefficients[(1, 0)].abs() - 1.0).abs() < 1e-15);
    assert!((sol.coefficients[(2, 1)].abs() - 1.0).abs() < 1e-15);
    assert!(matches!(
        solve_dg_eig(&a, 4),
        Err(Error::SizeMismatch { .. })
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let r = DMatrix::from_fn(8, 8, |_, _| rng.random::<f64>() - 0.5);
    let sym = &r + r.transpose();
    let oracle = jacobi_eigenvalues(sym.clone());
    let sol = solve_dense(&sym, 8).unwrap();
    for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10);
    }
    let resid = &sym * &sol.coefficients
        - &sol.coefficients
            * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sol.eigenvalues.clone()));
    assert!(resid.amax() < 1e-10 * sym.norm());
}

#[test]
fn density_integrates_to_occupation() {
    let (h, basis, a) = multi_element_setup();
    let grid = h.grid();
    let sol = solve_dg_eig(&a, 4).unwrap();
    let rho = reconstruct_density(&sol, &basis, grid, 4).unwrap();
    let total: f64 = rho.iter().sum::<f64>() * grid.cell_volume();
    assert!((total - 4.0).abs() < 1e-4, "{total}");
    assert!((density_integral(&sol, &basis, 4).unwrap() - 4.0).abs() < 1e-6);

    let proj = ProjectorDG::from_solution(&sol);
    assert!((proj.trace() - 4.0).abs() < 1e-8);
    assert!(proj.idempotency_defect() < 1e-8);

    let kernel = projector_kernel(&sol, &basis, grid, 4).unwrap();
    for i in 0..grid.len() {
        assert!((kernel[(i, i)] - rho[i]).abs() < 1e-12);
    }

    // one normalized function occupied once
    let mut single = DMatrix::zeros(basis.total(), 1);
    single[(basis.offsets()[2], 0)] = 1.0;
    let one = DGEigenSolution {
        eigenvalues: vec![0.0],
        coefficients: single,
    };
    let rho1 = reconstruct_density(&one, &basis, grid, 1).unwrap();
    let partition = Partition::new(grid, vec![5], 20).unwrap();
    let el = partition.element(2);
    let nodal: f64 = basis.locals[2]
        .values
        .column(0)
        .iter()
        .zip(el.tensor_weights())
        .map(|(v, w)| v * v * w)
        .sum();
    assert!((nodal - 1.0).abs() < 1e-10);
    let total1: f64 = rho1.iter().sum::<f64>() * grid.cell_volume();
    assert!((total1 - 1.0).abs() < 1e-2, "{total1}");
    assert!((density_integral(&one, &basis, 1).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn relative_error_examples() {
    assert_eq!(
        relative_eigenvalue_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(),
        0.0
    );
    assert!(
        (relative_eigenvalue_error(&[1.1, 2.0], &[1.0, 2.0]).unwrap() - 0.1 / 3.0).abs() < 1e-15
    );
    assert!(matches!(
        relative_eigenvalue_error(&[1.0], &[0.0]),
        Err(Error::MetricUndefined(_))
    ));
    assert!(relative_eigenvalue_error(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn nonlocal_grid_and_lgl_paths_agree_on_one_element() {
    let grid = UniformGrid::new(vec![2.0 * PI], vec![24]).unwrap();
    let n = grid.len();
    let kernel_fn = |d: f64| 1.0 + 0.3 * d.cos();
    let kmat = DMatrix::from_fn(n, n, |i, j| kernel_fn(grid.coord(0, i) - grid.coord(0, j)));
    let orb: Vec<f64> = (0..n)
        .map(|i| (grid.coord(0, i)).sin() / PI.sqrt())
        .collect();
    let pmat = DMatrix::from_fn(n, n, |i, j| orb[i] * orb[j]);
    let ex = NonlocalExchange::new(&grid, kmat, pmat, 0.5).unwrap();
    let h = Hamiltonian::new(grid.clone(), 1.0, vec![0.0; n])
        .unwrap()
        .with_exchange(ex)
        .unwrap();
    let partition = Partition::new(&grid, vec![1], 30).unwrap();
    let basis = planewave_basis(&partition, 3);
    let (grid_path, pen) = discretize(&h, &basis, DEFAULT_SAFETY, None).unwrap();

    let el = partition.element(0);
    let xs = &el.nodes[0];
    let lgl = DMatrix::from_fn(xs.len(), xs.len(), |i, j| {
        -0.5 * kernel_fn(xs[i] - xs[j]) * xs[i].sin() * xs[j].sin() / PI
    });
    let local = Hamiltonian::new(grid.clone(), 1.0, vec![0.0; n]).unwrap();
    let lgl_path = assemble_dg(&local, &basis, &pen, Some(&LglExchange { matrix: lgl })).unwrap();
    assert!((&grid_path.matrix - &lgl_path.matrix).amax() < 1e-10);
    assert!((&lgl_path.matrix - lgl_path.matrix.transpose()).amax() < 1e-12);
    // exchange lowers the sin mode
    assert!(lgl_path.matrix[(2, 2)] < 1.0);
}

#[test]
fn local_basis_from_samples_matches_element_weights() {
    let partition = Partition::with_lengths(vec![2.0], vec![2], 7).unwrap();
    let el = partition.element(1);
    let samples = DMatrix::from_fn(7, 2, |i, j| el.nodes[0][i].powi(j as i32));
    let b = local_basis_from_samples(1, &el.tensor_weights(), &samples, 2, 1e-14);
    let diff = partition.rule().differentiation_matrix();
    assert!(estimate_penalty(&el, &diff, &b, 1.0, 2.0).unwrap() > 0.0);
}
