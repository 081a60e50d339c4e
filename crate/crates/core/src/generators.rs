//! Test matrices and tensors with closed-form entries.
//!
//! Every generator takes one-based formulas and evaluates them directly, so
//! each entry is bit-reproducible.

use crate::error::{LowRankError, Result};
use crate::matcore::{qr_orthogonal_factor, DenseMatrix};
use crate::tensor::Tensor;

/// `A(i, j) = 1/(i + j − 1)`.
pub fn hilbert(m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |i, j| 1.0 / (i + j + 1) as f64)
}

/// `A(i, j) = exp(−0.3·|i − j|/200)`.
pub fn exp_decay(m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |i, j| (-0.3 * (i as f64 - j as f64).abs() / 200.0).exp())
}

/// `A(i, j) = ((i/d)^p + (j/d)^p)^{1/p}`.
pub fn power(m: usize, n: usize, denom: f64, p: f64) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |i, j| {
        let x = (i + 1) as f64 / denom;
        let y = (j + 1) as f64 / denom;
        (x.powf(p) + y.powf(p)).powf(1.0 / p)
    })
}

/// Column-selection variant of [`power`]: `d = 200`, `p = 20`.
pub fn power_css(m: usize, n: usize) -> DenseMatrix {
    power(m, n, 200.0, 20.0)
}

/// Cross-approximation variant of [`power`]: `d = 100`, `p = 10`.
pub fn power_cross(m: usize, n: usize) -> DenseMatrix {
    power(m, n, 100.0, 10.0)
}

/// 2×2 matrix on which updating characteristic polynomials directly picks
/// the wrong column.
pub fn cancellation() -> DenseMatrix {
    DenseMatrix::from_rows(&[
        vec![6.583644e-7, 8.113362e-3],
        vec![8.113362e-3, 100.0],
    ])
    .expect("static matrix")
}

/// `[[1, 0, 10^{−b}], [0, 1, 10^{−b}], [0, 0, 10^{−2b}]]`: greedy column
/// selection fails for `k = 2`.
pub fn greedy_failure(b: i32) -> DenseMatrix {
    let t = 10f64.powi(-b);
    let t2 = 10f64.powi(-2 * b);
    DenseMatrix::from_rows(&[vec![1.0, 0.0, t], vec![0.0, 1.0, t], vec![0.0, 0.0, t2]])
        .expect("static matrix")
}

/// `2 × n` matrix whose column of largest norm is the worst `k = 1` choice.
pub fn max_volume_counterexample(n: usize, a: f64, eps: f64) -> Result<DenseMatrix> {
    if n < 2 || !(0.0..=1.0).contains(&a) {
        return Err(LowRankError::InvalidInput(
            "need n >= 2 and 0 <= a <= 1".into(),
        ));
    }
    let b = (1.0 - a * a).sqrt();
    Ok(DenseMatrix::from_fn(2, n, |i, j| match (i, j) {
        (0, 0) => a * (1.0 + eps),
        (1, 0) => -b * (1.0 + eps),
        (0, _) => b,
        _ => a,
    }))
}

/// `Q·diag(1, α, …, α^{n−1})·Qᵀ` with `Q` the orthogonal QR factor of the
/// unit lower triangular matrix with `−1` below the diagonal.
pub fn deim_adversarial(n: usize, alpha: f64) -> Result<DenseMatrix> {
    if n < 2 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(LowRankError::InvalidInput(
            "need n >= 2 and 0 < alpha < 1".into(),
        ));
    }
    let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => -1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let q = qr_orthogonal_factor(&l)?;
    let mut qd = q.clone();
    for i in 0..n {
        for j in 0..n {
            qd[(i, j)] *= alpha.powi(j as i32);
        }
    }
    qd.matmul(&q.transpose())
}

/// `L·D·Lᵀ` with `L` unit lower triangular (`−cos θ` below the diagonal)
/// and `D = diag(1, s², s⁴, …)`, `s = sin θ`.
pub fn ldlt(n: usize, theta: f64) -> Result<DenseMatrix> {
    if n < 1 || !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(LowRankError::InvalidInput(
            "need n >= 1 and 0 < theta < pi".into(),
        ));
    }
    let (s, c) = theta.sin_cos();
    let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => -c,
        std::cmp::Ordering::Less => 0.0,
    });
    let mut ld = l.clone();
    for i in 0..n {
        for j in 0..n {
            ld[(i, j)] *= s.powi(2 * j as i32);
        }
    }
    ld.matmul(&l.transpose())
}

/// `[[2ε, 1], [1, ε]]`.
pub fn two_eps(eps: f64) -> DenseMatrix {
    DenseMatrix::from_rows(&[vec![2.0 * eps, 1.0], vec![1.0, eps]]).expect("finite entries")
}

/// Symmetric positive definite 3×3 matrix for which no symmetric `k = 1`
/// cross meets the Frobenius bound.
pub fn symmetric_counterexample() -> DenseMatrix {
    DenseMatrix::from_rows(&[
        vec![1.87, -1.82, -2.11],
        vec![-1.82, 1.87, 2.11],
        vec![-2.11, 2.11, 2.54],
    ])
    .expect("static matrix")
}

/// `T(i₁, …, i_d) = 1/(i₁ + … + i_d − 1)`.
pub fn hilbert_tensor(shape: &[usize]) -> Result<Tensor> {
    Tensor::from_fn(shape, |idx| {
        let s: usize = idx.iter().map(|i| i + 1).sum();
        1.0 / (s - 1) as f64
    })
}

/// `T(i₁, …, i_d) = (i₁¹⁰ + … + i_d¹⁰)^{1/10}/50`.
pub fn power_tensor(shape: &[usize]) -> Result<Tensor> {
    Tensor::from_fn(shape, |idx| {
        let s: f64 = idx.iter().map(|&i| ((i + 1) as f64).powi(10)).sum();
        s.powf(0.1) / 50.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::singular_values;

    #[test]
    fn hilbert_entries() {
        let h = hilbert(3, 3);
        let want = [1.0, 0.5, 1.0 / 3.0, 0.5, 1.0 / 3.0, 0.25, 1.0 / 3.0, 0.25, 0.2];
        assert_eq!(h.as_slice(), &want);
    }

    #[test]
    fn exp_decay_diagonal_is_one() {
        let a = exp_decay(100, 200);
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(99, 99)], 1.0);
        assert_eq!(a[(0, 199)], (-0.3f64 * 199.0 / 200.0).exp());
    }

    #[test]
    fn ldlt_diagonal_factor() {
        // The (1,1) entry is D(1) and each row adds c² times the earlier pivots.
        let a = ldlt(6, 0.1).unwrap();
        let (s, c) = 0.1f64.sin_cos();
        assert_eq!(a[(0, 0)], 1.0);
        assert!((a[(1, 1)] - (c * c + s * s)).abs() < 1e-16);
        assert!((a[(5, 5)] - (c * c * (1.0 + s * s + s.powi(4) + s.powi(6) + s.powi(8)) + s.powi(10))).abs() < 1e-15);
        assert!((a[(5, 0)] + c).abs() < 1e-16);
    }

    #[test]
    fn deim_spectrum() {
        let a = deim_adversarial(2, 0.3).unwrap();
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-14 && (sv[1] - 0.3).abs() < 1e-14);
        let a = deim_adversarial(6, 0.1).unwrap();
        let sv = singular_values(&a).unwrap();
        assert!((sv[5] / 1e-5 - 1.0).abs() < 1e-9);
        for i in 0..6 {
            for j in 0..6 {
                assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn tensor_entries() {
        let t = hilbert_tensor(&[3, 4, 5]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), 0.5);
        assert_eq!(t.get(&[2, 3, 4]), 1.0 / 11.0);
        assert_eq!(hilbert_tensor(&[3, 3]).unwrap().get(&[1, 2]), 1.0 / 4.0);
        let p = power_tensor(&[2, 2, 2]).unwrap();
        assert_eq!(p.get(&[0, 0, 0]), 3f64.powf(0.1) / 50.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(deim_adversarial(1, 0.1).is_err());
        assert!(deim_adversarial(4, 1.0).is_err());
        assert!(ldlt(3, 0.0).is_err());
        assert!(max_volume_counterexample(1, 0.5, 0.1).is_err());
    }
}
