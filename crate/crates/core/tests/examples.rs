//! Worked small examples, checked against the frozen fixtures in `fixtures/`.

use std::path::PathBuf;

use lowrank_core::cross::{evaluate_cross, select_cross};
use lowrank_core::cur::evaluate_cur;
use lowrank_core::generators as g;
use lowrank_core::matcore::{read_csv, singular_values, DenseMatrix};
use lowrank_core::oracle::{best_subset, SubsetMode};
use lowrank_core::{cur_approximate, select_columns, CssConfig};

fn fixture(name: &str) -> DenseMatrix {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect();
    read_csv(path).unwrap()
}

fn assert_bitwise(a: &DenseMatrix, b: &DenseMatrix) {
    assert_eq!(a.shape(), b.shape());
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert_eq!(x.to_bits(), y.to_bits(), "{x} vs {y}");
    }
}

#[test]
fn generators_match_fixtures() {
    assert_bitwise(&g::deim_adversarial(6, 0.1).unwrap(), &fixture("deim_n6_alpha0.1.csv"));
    assert_bitwise(&g::ldlt(6, 0.1).unwrap(), &fixture("ldlt_n6_theta0.1.csv"));
    assert_bitwise(&g::cancellation(), &fixture("cancellation.csv"));
    assert_bitwise(&g::two_eps(0.01), &fixture("two_eps_0.01.csv"));
    assert_bitwise(&g::symmetric_counterexample(), &fixture("symmetric3.csv"));
    assert_bitwise(&g::greedy_failure(16), &fixture("greedy_b16.csv"));
}

#[test]
fn deim_matrix_spectrum() {
    let a = fixture("deim_n6_alpha0.1.csv");
    let s = singular_values(&a).unwrap();
    for (i, v) in s.iter().enumerate() {
        let want = 0.1f64.powi(i as i32);
        assert!((v - want).abs() <= 1e-14, "sigma_{i} = {v}");
    }
}

#[test]
fn deim_cur_beats_leading_block() {
    let a = fixture("deim_n6_alpha0.1.csv");
    let c = cur_approximate(&a, 5, CssConfig::default()).unwrap();
    let lead: Vec<usize> = (0..5).collect();
    let base = evaluate_cur(&a, &lead, &lead).unwrap();
    assert!(c.residual_fro <= c.bound_fro);
    assert!(c.residual_fro < base);
}

#[test]
fn cancellation_picks_second_column() {
    let a = fixture("cancellation.csv");
    for cfg in [CssConfig::default(), CssConfig::early_stop()] {
        let r = select_columns(&a, 1, cfg).unwrap();
        assert_eq!(r.indices, vec![1]);
        assert!(r.residual_fro <= r.bound_fro);
        assert!(r.residual_fro < 2e-10);
    }
}

#[test]
fn greedy_failure_pair_is_found() {
    let a = fixture("greedy_b16.csv");
    let best = best_subset(&a, 2, SubsetMode::Css).unwrap();
    let r = select_columns(&a, 2, CssConfig::default()).unwrap();
    let mut got = r.indices.clone();
    got.sort();
    assert_eq!(got, best.cols);
    assert!(r.residual_fro <= r.bound_fro + 1e-10 * a.frobenius_norm());
}

#[test]
fn two_eps_avoids_largest_diagonal_ratio_trap() {
    let a = fixture("two_eps_0.01.csv");
    let s = singular_values(&a).unwrap();
    let bad = evaluate_cross(&a, &[0], &[0]).unwrap();
    assert!((bad - (1.0 / 0.02 - 0.01)).abs() < 1e-12);
    for cfg in [CssConfig::default(), CssConfig::early_stop()] {
        let c = select_cross(&a, 1, cfg).unwrap();
        assert_ne!((c.row_indices[0], c.col_indices[0]), (0, 0));
        assert!(c.residual_fro <= 2.0 * s[1]);
    }
}

#[test]
fn ldlt_cross_selects_trailing_block() {
    let a = fixture("ldlt_n6_theta0.1.csv");
    for cfg in [CssConfig::default(), CssConfig::early_stop()] {
        let c = select_cross(&a, 5, cfg).unwrap();
        let mut rows = c.row_indices.clone();
        let mut cols = c.col_indices.clone();
        rows.sort();
        cols.sort();
        assert_eq!(rows, vec![1, 2, 3, 4, 5]);
        assert_eq!(cols, vec![1, 2, 3, 4, 5]);
        assert!((1e-13..=1e-12).contains(&c.residual_fro));
        assert!(c.residual_fro <= c.bound_fro);
    }
    let lead: Vec<usize> = (0..5).collect();
    let leading = evaluate_cross(&a, &lead, &lead).unwrap();
    assert!((4.9e-11..=1.96e-10).contains(&leading), "{leading}");
}

#[test]
fn symmetric_cross_misses_bound() {
    let a = fixture("symmetric3.csv");
    let s = singular_values(&a).unwrap();
    let bound = 2.0 * (s[1] * s[1] + s[2] * s[2]).sqrt();
    let best_symmetric = (0..3)
        .map(|i| evaluate_cross(&a, &[i], &[i]).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((best_symmetric - 0.1911).abs() < 1e-3);
    assert!((bound - 0.1821).abs() < 1e-3);
    assert!(best_symmetric > bound);
    let c = select_cross(&a, 1, CssConfig::default()).unwrap();
    assert_ne!(c.row_indices, c.col_indices);
    assert!(c.residual_fro <= c.bound_fro);
}
