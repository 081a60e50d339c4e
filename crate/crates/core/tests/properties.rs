use lowrank_core::cross::{evaluate_cross, residual_pivot_update, select_cross};
use lowrank_core::cur::cur_middle_factor;
use lowrank_core::matcore::{
    determinant, lu_solve, orthonormal_basis, project_residual, singular_values, tail_energy,
    DenseMatrix,
};
use lowrank_core::oracle::expected_css_error;
use lowrank_core::tensor::{matricize, tucker_reconstruct, tucker_select};
use lowrank_core::{cur_approximate, select_columns, CssConfig, Tensor};
use proptest::prelude::*;

fn matrix(max: usize) -> impl Strategy<Value = DenseMatrix> {
    (2..=max, 2..=max).prop_flat_map(|(m, n)| {
        prop::collection::vec(-1.0f64..1.0, m * n)
            .prop_map(move |data| DenseMatrix::new(m, n, data).unwrap())
    })
}

fn with_k(max: usize) -> impl Strategy<Value = (DenseMatrix, usize)> {
    matrix(max).prop_flat_map(|a| {
        let kmax = a.rows().min(a.cols()) - 1;
        (Just(a), 1..=kmax.max(1))
    })
}

fn configs() -> [CssConfig; 2] {
    [CssConfig::default(), CssConfig::early_stop()]
}

fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn css_residual_is_certified((a, k) in with_k(7)) {
        let sigma = singular_values(&a).unwrap();
        let tail = tail_energy(&sigma, k).unwrap().value;
        let nf2 = a.frobenius_norm().powi(2);
        for cfg in configs() {
            let r = select_columns(&a, k, cfg).unwrap();
            prop_assert_eq!(r.indices.len(), k);
            prop_assert!(r.residual_fro.powi(2) <= (k + 1) as f64 * tail + 1e-10 * nf2);
            let dense = project_residual(&a, &r.indices).unwrap().frobenius_norm();
            prop_assert!(close(r.residual_fro, dense, 1e-10, 1e-12 * nf2.sqrt()));
        }
    }

    #[test]
    fn css_expectation_never_increases((a, k) in with_k(6)) {
        let r = select_columns(&a, k, CssConfig::default()).unwrap();
        let floor = 1e-12 * a.frobenius_norm().powi(2);
        let mut prev = r.initial_expectation;
        for &v in &r.per_step_ratios {
            prop_assert!(v <= prev * (1.0 + 1e-9) + floor, "{v} > {prev}");
            prev = v;
        }
        let last = *r.per_step_ratios.last().unwrap();
        prop_assert!(close(last, r.residual_fro.powi(2), 1e-8, floor));
    }

    #[test]
    fn css_first_step_minimizes_enumerated_expectation((a, k) in with_k(5)) {
        let r = select_columns(&a, k, CssConfig::default()).unwrap();
        let floor = 1e-12 * a.frobenius_norm().powi(2);
        let best = (0..a.cols())
            .filter_map(|j| expected_css_error(&a, k, &[j]).ok())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(close(r.per_step_ratios[0], best, 1e-8, floor));
    }

    #[test]
    fn early_stop_accepts_only_admissible_steps((a, k) in with_k(7)) {
        let r = select_columns(&a, k, CssConfig::early_stop()).unwrap();
        let sigma = singular_values(&a).unwrap();
        let target = (k + 1) as f64 * tail_energy(&sigma, k).unwrap().value;
        let slack = 1e-10 * a.frobenius_norm().powi(2);
        for (t, &v) in r.per_step_ratios.iter().enumerate() {
            if !r.fallback_steps.contains(&(t + 1)) {
                prop_assert!(v <= target + slack);
            }
        }
        prop_assert!(r.candidates_tested >= k);
    }

    #[test]
    fn cross_residual_is_certified((a, k) in with_k(7)) {
        let sigma = singular_values(&a).unwrap();
        let bound = (k + 1) as f64 * tail_energy(&sigma, k).unwrap().value.sqrt();
        let nf = a.frobenius_norm();
        for cfg in configs() {
            let c = select_cross(&a, k, cfg).unwrap();
            prop_assert!(c.residual_fro <= bound + 1e-10 * nf);
            prop_assert!(close(c.residual_fro, c.schur_residual_fro, 1e-6, 1e-12 * nf));
            let direct = evaluate_cross(&a, &c.row_indices, &c.col_indices).unwrap();
            prop_assert_eq!(direct, c.residual_fro);
        }
    }

    #[test]
    fn cross_expectation_never_increases((a, k) in with_k(6)) {
        let c = select_cross(&a, k, CssConfig::default()).unwrap();
        let floor = 1e-12 * a.frobenius_norm().powi(2);
        let mut prev = c.initial_expectation;
        for &v in &c.per_step_values {
            prop_assert!(v <= prev * (1.0 + 1e-9) + floor, "{v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn cross_interpolates_selected_rows_and_columns((a, k) in with_k(7)) {
        let c = select_cross(&a, k, CssConfig::default()).unwrap();
        let core = a.submatrix(&c.row_indices, &c.col_indices).unwrap();
        let coeff = lu_solve(&core, &a.select_rows(&c.row_indices).unwrap()).unwrap();
        let approx = a.select_columns(&c.col_indices).unwrap().matmul(&coeff).unwrap();
        let e = a.sub(&approx).unwrap();
        let tol = 1e-10 * a.frobenius_norm() * c.condition_aij.max(1.0);
        for &i in &c.row_indices {
            for j in 0..a.cols() {
                prop_assert!(e[(i, j)].abs() <= tol);
            }
        }
        for &j in &c.col_indices {
            for i in 0..a.rows() {
                prop_assert!(e[(i, j)].abs() <= tol);
            }
        }
    }

    #[test]
    fn pivots_multiply_to_cross_determinant((a, k) in with_k(6)) {
        let c = select_cross(&a, k, CssConfig::default()).unwrap();
        let mut b = a.clone();
        let mut product = 1.0;
        for (&i, &j) in c.row_indices.iter().zip(&c.col_indices) {
            product *= b[(i, j)];
            b = residual_pivot_update(&b, i, j).unwrap();
        }
        let det = determinant(&a.submatrix(&c.row_indices, &c.col_indices).unwrap()).unwrap();
        prop_assert!(close(product, det, 1e-9, 0.0));
        prop_assert!(close(b.frobenius_norm(), c.schur_residual_fro, 1e-12, 1e-300));
    }

    #[test]
    fn cur_error_splits_into_projections((a, k) in with_k(7)) {
        let c = cur_approximate(&a, k, CssConfig::default()).unwrap();
        let col_part = project_residual(&a, &c.col_indices).unwrap();
        let row_part = project_residual(&a.transpose(), &c.row_indices).unwrap().transpose();
        let q = orthonormal_basis(&a.select_columns(&c.col_indices).unwrap()).unwrap();
        let mixed = q.matmul(&q.t_matmul(&row_part).unwrap()).unwrap();
        let lhs = c.residual_fro.powi(2);
        let rhs = col_part.frobenius_norm().powi(2) + mixed.frobenius_norm().powi(2);
        let floor = 1e-12 * a.frobenius_norm().powi(2);
        prop_assert!(close(lhs, rhs, 1e-8, floor));
        prop_assert!(lhs <= col_part.frobenius_norm().powi(2) + row_part.frobenius_norm().powi(2) + floor);
        prop_assert!(c.residual_fro <= c.bound_fro + 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn cur_middle_factor_is_optimal(
        (a, k) in with_k(6),
        delta in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let c = cur_approximate(&a, k, CssConfig::default()).unwrap();
        let (u, res) = cur_middle_factor(&a, &c.row_indices, &c.col_indices).unwrap();
        prop_assert_eq!(res, c.residual_fro);
        let cm = a.select_columns(&c.col_indices).unwrap();
        let rm = a.select_rows(&c.row_indices).unwrap();
        for scale in [1e-3, 1e-1] {
            let mut up = u.clone();
            for i in 0..k {
                for j in 0..k {
                    up[(i, j)] += scale * delta[i * k + j];
                }
            }
            let e = a.sub(&cm.matmul(&up).unwrap().matmul(&rm).unwrap()).unwrap().frobenius_norm();
            prop_assert!(e >= res * (1.0 - 1e-12));
        }
    }

    #[test]
    fn tucker_factors_are_fibers(
        dims in prop::collection::vec(2usize..=4, 3),
        seed in prop::collection::vec(-1.0f64..1.0, 64),
        k in 1usize..=2,
    ) {
        let mut it = seed.iter().cycle().enumerate();
        let t = Tensor::from_fn(&dims, |_| {
            let (p, v) = it.next().unwrap();
            v + 1e-3 * p as f64
        }).unwrap();
        let ranks = vec![k; 3];
        let f = tucker_select(&t, &ranks, CssConfig::default()).unwrap();
        for mu in 0..3 {
            let a = matricize(&t, mu).unwrap();
            for (c, &j) in f.fiber_indices[mu].iter().enumerate() {
                for i in 0..a.rows() {
                    prop_assert_eq!(f.factors[mu][(i, c)].to_bits(), a[(i, j)].to_bits());
                }
            }
        }
        let nf = t.frobenius_norm();
        prop_assert!(f.residual_fro <= f.certificate_fro + 1e-10 * nf);
        prop_assert!(f.certificate_fro <= f.bound_fro * (1.0 + 1e-12));
        let last = f.core.as_slice().len() - 1;
        for (pos, delta) in [(0, 1e-3), (last, -1e-2)] {
            let mut data = f.core.as_slice().to_vec();
            data[pos] += delta;
            let core = Tensor::new(f.core.shape().to_vec(), data).unwrap();
            let e = t.sub(&tucker_reconstruct(&f.factors, &core).unwrap()).unwrap().frobenius_norm();
            prop_assert!(e >= f.residual_fro * (1.0 - 1e-12));
        }
    }
}

#[test]
fn exact_low_rank_is_recovered() {
    let u = DenseMatrix::from_fn(8, 3, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 2.0);
    let v = DenseMatrix::from_fn(3, 9, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
    let a = u.matmul(&v).unwrap();
    let nf = a.frobenius_norm();
    let r = select_columns(&a, 3, CssConfig::default()).unwrap();
    assert!(r.residual_fro <= 1e-12 * nf);
    let c = select_cross(&a, 3, CssConfig::default()).unwrap();
    assert!(c.residual_fro <= 1e-10 * nf);
    let r = select_columns(&a, 5, CssConfig::default()).unwrap();
    assert!(r.rank_reduced);
    assert_eq!(r.k, 3);
}
