//! Exhaustive reference computations for small matrices: volume-sampling
//! distributions over ordered index tuples, their conditional expected
//! errors, and best index sets.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::cross::evaluate_cross;
use crate::error::{LowRankError, Result};
use crate::matcore::{determinant, project_residual, DenseMatrix};

/// Default limit on the number of enumerated tuples.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Unnormalized distribution over ordered index tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleDistribution {
    /// `k` for column tuples, `2k` for row/column tuples `(I, J)`.
    pub arity: usize,
    /// Every enumerated tuple with its weight; repeated indices weigh 0.
    pub weights: Vec<(Vec<usize>, f64)>,
    pub normalizer: f64,
}

impl TupleDistribution {
    pub fn probability(&self, tuple: &[usize]) -> f64 {
        self.weights
            .iter()
            .find(|(t, _)| t.as_slice() == tuple)
            .map_or(0.0, |(_, w)| w / self.normalizer)
    }
}

/// Which residual [`best_subset`] minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetMode {
    Css,
    Cross,
}

/// Exhaustive minimizer. `rows` is empty in column mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestSubset {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub error: f64,
}

fn check_cap(count: f64) -> Result<()> {
    if count > ENUMERATION_CAP as f64 {
        return Err(LowRankError::EnumerationCap {
            tuples: count,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

fn has_repeats(t: &[usize]) -> bool {
    t.iter().enumerate().any(|(p, x)| t[..p].contains(x))
}

fn ordered_tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k).map(|_| 0..n).multi_cartesian_product()
}

fn gram_det(a: &DenseMatrix, cols: &[usize]) -> Result<f64> {
    let c = a.select_columns(cols)?;
    Ok(determinant(&c.t_matmul(&c)?)?.max(0.0))
}

/// `P(X = I) ∝ Vol(A(:, I))² = det(A(:, I)ᵀA(:, I))` over ordered `k`-tuples.
pub fn column_distribution(a: &DenseMatrix, k: usize) -> Result<TupleDistribution> {
    if k == 0 || k > a.cols() {
        return Err(LowRankError::InvalidInput(format!(
            "k = {k} must lie in 1..={}",
            a.cols()
        )));
    }
    check_cap((a.cols() as f64).powi(k as i32))?;
    let mut weights = Vec::new();
    let mut normalizer = 0.0;
    for t in ordered_tuples(a.cols(), k) {
        let w = if has_repeats(&t) { 0.0 } else { gram_det(a, &t)? };
        normalizer += w;
        weights.push((t, w));
    }
    Ok(TupleDistribution {
        arity: k,
        weights,
        normalizer,
    })
}

/// `P(X = I, Y = J) ∝ Vol(A(I, J))² = det(A(I, J))²`; tuples are `I` followed by `J`.
pub fn cross_distribution(a: &DenseMatrix, k: usize) -> Result<TupleDistribution> {
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(LowRankError::InvalidInput(format!(
            "k = {k} must lie in 1..={}",
            m.min(n)
        )));
    }
    check_cap((m as f64).powi(k as i32) * (n as f64).powi(k as i32))?;
    let mut weights = Vec::new();
    let mut normalizer = 0.0;
    for rows in ordered_tuples(m, k) {
        for cols in ordered_tuples(n, k) {
            let w = if has_repeats(&rows) || has_repeats(&cols) {
                0.0
            } else {
                determinant(&a.submatrix(&rows, &cols)?)?.powi(2)
            };
            normalizer += w;
            weights.push(([rows.as_slice(), cols.as_slice()].concat(), w));
        }
    }
    Ok(TupleDistribution {
        arity: 2 * k,
        weights,
        normalizer,
    })
}

/// `E[‖A − π_X A‖²_F | X starts with prefix]` by enumeration.
pub fn expected_css_error(a: &DenseMatrix, k: usize, prefix: &[usize]) -> Result<f64> {
    if prefix.len() > k {
        return Err(LowRankError::InvalidInput("prefix longer than k".into()));
    }
    let dist = column_distribution(a, k)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, w) in &dist.weights {
        if *w == 0.0 || !t.starts_with(prefix) {
            continue;
        }
        let r = project_residual(a, t)?.frobenius_norm();
        num += w * r * r;
        den += w;
    }
    if den == 0.0 {
        return Err(LowRankError::ZeroProbability);
    }
    Ok(num / den)
}

/// `E[‖A − A(:, Y)A(X, Y)⁻¹A(X, :)‖²_F | (X, Y) start with the prefix]`.
pub fn expected_cross_error(
    a: &DenseMatrix,
    k: usize,
    row_prefix: &[usize],
    col_prefix: &[usize],
) -> Result<f64> {
    if row_prefix.len() != col_prefix.len() || row_prefix.len() > k {
        return Err(LowRankError::InvalidInput(
            "row and column prefixes must have equal length at most k".into(),
        ));
    }
    let dist = cross_distribution(a, k)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, w) in &dist.weights {
        let (rows, cols) = t.split_at(k);
        if *w == 0.0 || !rows.starts_with(row_prefix) || !cols.starts_with(col_prefix) {
            continue;
        }
        let r = match evaluate_cross(a, rows, cols) {
            Ok(r) => r,
            Err(LowRankError::SingularSubmatrix) => continue,
            Err(e) => return Err(e),
        };
        num += w * r * r;
        den += w;
    }
    if den == 0.0 {
        return Err(LowRankError::ZeroProbability);
    }
    Ok(num / den)
}

/// Both sides of
/// `‖A − A(:, J)A(I, J)⁻¹A(I, :)‖²_F = Σ_{i,j} det(A((I, i), (J, j)))²/det(A(I, J))²`.
pub fn volume_ratio_identity(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Result<(f64, f64)> {
    let r = evaluate_cross(a, rows, cols)?;
    let base = determinant(&a.submatrix(rows, cols)?)?;
    let mut sum = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if rows.contains(&i) || cols.contains(&j) {
                continue;
            }
            let ri = [rows, &[i]].concat();
            let cj = [cols, &[j]].concat();
            sum += (determinant(&a.submatrix(&ri, &cj)?)? / base).powi(2);
        }
    }
    Ok((r * r, sum))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exhaustive best column set (or row/column set in cross mode).
pub fn best_subset(a: &DenseMatrix, k: usize, mode: SubsetMode) -> Result<BestSubset> {
    let (m, n) = a.shape();
    let kmax = match mode {
        SubsetMode::Css => n,
        SubsetMode::Cross => m.min(n),
    };
    if k == 0 || k > kmax {
        return Err(LowRankError::InvalidInput(format!(
            "k = {k} must lie in 1..={kmax}"
        )));
    }
    let mut best: Option<BestSubset> = None;
    let mut consider = |rows: Vec<usize>, cols: Vec<usize>, error: f64| {
        if best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(BestSubset { rows, cols, error });
        }
    };
    match mode {
        SubsetMode::Css => {
            check_cap(binomial(n, k))?;
            for cols in (0..n).combinations(k) {
                let e = project_residual(a, &cols)?.frobenius_norm();
                consider(Vec::new(), cols, e);
            }
        }
        SubsetMode::Cross => {
            check_cap(binomial(m, k) * binomial(n, k))?;
            for rows in (0..m).combinations(k) {
                for cols in (0..n).combinations(k) {
                    match evaluate_cross(a, &rows, &cols) {
                        Ok(e) => consider(rows.clone(), cols, e),
                        Err(LowRankError::SingularSubmatrix) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    best.ok_or(LowRankError::SingularSubmatrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_uniform() {
        let d = column_distribution(&DenseMatrix::identity(2), 1).unwrap();
        assert_eq!(d.probability(&[0]), 0.5);
        assert_eq!(d.probability(&[1]), 0.5);
    }

    #[test]
    fn duplicate_columns_have_zero_weight() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0]]).unwrap();
        let d = column_distribution(&a, 2).unwrap();
        assert!(d.probability(&[0, 1]) < 1e-15);
        assert!(d.probability(&[0, 0]) == 0.0);
        assert!(d.probability(&[0, 2]) > 0.1);
    }

    #[test]
    fn rank_k_expectation_is_zero() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i + 1) as f64 * (j as f64 - 1.0) + (i * i) as f64);
        assert!(expected_css_error(&a, 2, &[]).unwrap() < 1e-20);
    }

    #[test]
    fn two_by_two_cross_expectation() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 1.0], vec![0.5, 2.0]]).unwrap();
        let s = crate::matcore::singular_values(&a).unwrap();
        let e = expected_cross_error(&a, 1, &[], &[]).unwrap();
        assert!(e <= 4.0 * s[1] * s[1]);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let w = a[(i, j)] * a[(i, j)];
                let r = evaluate_cross(&a, &[i], &[j]).unwrap();
                num += w * r * r;
                den += w;
            }
        }
        assert!((e - num / den).abs() < 1e-14);
    }

    #[test]
    fn zero_probability_prefix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(expected_css_error(&a, 1, &[1]), Err(LowRankError::ZeroProbability));
    }

    #[test]
    fn greedy_failure_best_pair() {
        let a = crate::generators::greedy_failure(16);
        let b = best_subset(&a, 2, SubsetMode::Css).unwrap();
        assert_eq!(b.cols, vec![0, 1]);
        // At b = 16 the k = 1 errors tie in double precision.
        let a = crate::generators::greedy_failure(2);
        let b = best_subset(&a, 1, SubsetMode::Css).unwrap();
        assert_eq!(b.cols, vec![2]);
    }

    #[test]
    fn cap_is_enforced() {
        let a = DenseMatrix::identity(40);
        assert!(matches!(
            column_distribution(&a, 4),
            Err(LowRankError::EnumerationCap { .. })
        ));
    }
}
