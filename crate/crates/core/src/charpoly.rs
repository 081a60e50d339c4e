//! Elementary symmetric functions of nonnegative spectra and the ratios that
//! drive the conditional-expectation searches.
//!
//! For a matrix `M` with eigenvalues `λ`, the coefficient of `det(M − xI)`
//! belonging to `x^{m−j}` is `±e_j(λ)`, so ratios of consecutive
//! characteristic-polynomial coefficients are ratios of consecutive `e_j`.

use serde::{Deserialize, Serialize};

use crate::error::{LowRankError, Result};
use crate::matcore::EPS;

/// Consecutive coefficients `e_{J+1}`, `e_J` of a spectrum, both divided by
/// the common factor `exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharCoeffPair {
    pub numerator: f64,
    pub denominator: f64,
    /// `numerator / denominator`, or `+∞` when the denominator vanishes.
    pub ratio: f64,
    /// Natural log of the factor removed from both coefficients
    /// (the product of the `J` largest eigenvalues; 0 when nothing was removed).
    pub log_scale: f64,
}

impl CharCoeffPair {
    fn from_parts(numerator: f64, denominator: f64, log_scale: f64) -> Self {
        let ratio = if denominator > 0.0 {
            numerator / denominator
        } else {
            f64::INFINITY
        };
        Self {
            numerator,
            denominator,
            ratio,
            log_scale,
        }
    }

    /// Unscaled numerator `e_{J+1}` (may overflow or underflow).
    pub fn numerator_unscaled(&self) -> f64 {
        self.numerator * self.log_scale.exp()
    }

    /// Unscaled denominator `e_J` (may overflow or underflow).
    pub fn denominator_unscaled(&self) -> f64 {
        self.denominator * self.log_scale.exp()
    }
}

/// Validates and canonicalizes a spectrum: negatives within `eps·max` become
/// zero, anything more negative is an error; the result is sorted descending.
fn canonical_spectrum(lambdas: &[f64]) -> Result<Vec<f64>> {
    let max = lambdas.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = -EPS * max;
    let mut out = Vec::with_capacity(lambdas.len());
    for &v in lambdas {
        if !v.is_finite() {
            return Err(LowRankError::InvalidInput(format!("non-finite eigenvalue {v}")));
        }
        if v < floor {
            return Err(LowRankError::NegativeEigenvalue { value: v });
        }
        out.push(v.max(0.0));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// `e_0, …, e_{j_max}` of `lambdas` by the incremental recurrence
/// `e_j ← e_j + λ·e_{j−1}`, one eigenvalue at a time in descending order.
pub fn elem_sym_coeffs(lambdas: &[f64], j_max: usize) -> Result<Vec<f64>> {
    if j_max > lambdas.len() {
        return Err(LowRankError::IndexOutOfRange {
            index: j_max,
            bound: lambdas.len() + 1,
        });
    }
    let spectrum = canonical_spectrum(lambdas)?;
    let mut e = vec![0.0; j_max + 1];
    e[0] = 1.0;
    for (p, &lambda) in spectrum.iter().enumerate() {
        for j in (1..=j_max.min(p + 1)).rev() {
            e[j] += lambda * e[j - 1];
        }
    }
    Ok(e)
}

/// `e_{J+1}/e_J` for a spectrum already sorted descending and nonnegative.
///
/// Works with `f_j = e_j / (λ_1⋯λ_j)`, which satisfies
/// `f_j ← f_j + (λ_p/λ_j)·f_{j−1}` and stays within `[1, C(n, j)]`, so no
/// intermediate quantity can overflow or underflow.
pub(crate) fn scaled_pair_sorted(spectrum: &[f64], big_j: usize) -> CharCoeffPair {
    let positive = spectrum.iter().take_while(|&&v| v > 0.0).count();
    if positive < big_j {
        // e_J = 0 and e_{J+1} = 0.
        return CharCoeffPair::from_parts(0.0, 0.0, 0.0);
    }
    let log_scale: f64 = spectrum[..big_j].iter().map(|v| v.ln()).sum();
    if positive == big_j {
        // e_{J+1} = 0 while e_J = λ_1⋯λ_J.
        return CharCoeffPair::from_parts(0.0, 1.0, log_scale);
    }
    let top = big_j + 1;
    let mut f = vec![0.0; top + 1];
    f[0] = 1.0;
    for (p, &lambda) in spectrum[..positive].iter().enumerate() {
        for j in (1..=top.min(p + 1)).rev() {
            f[j] += (lambda / spectrum[j - 1]) * f[j - 1];
        }
    }
    CharCoeffPair::from_parts(spectrum[big_j] * f[top], f[big_j], log_scale)
}

/// `e_{J+1}(λ)/e_J(λ)` with overflow-safe scaling. Indices beyond the
/// spectrum length count as zero coefficients.
pub fn coefficient_ratio(lambdas: &[f64], big_j: usize) -> Result<CharCoeffPair> {
    let spectrum = canonical_spectrum(lambdas)?;
    Ok(scaled_pair_sorted(&spectrum, big_j))
}

/// The pair `e_{k−t+1}(σ²)`, `e_{k−t}(σ²)` whose ratio, multiplied by
/// `k−t+1` (columns) or `(k−t+1)²` (crosses), is the conditional expectation
/// after choosing the `t`-th index.
pub fn expectation_ratio(sigma: &[f64], k: usize, t: usize) -> Result<CharCoeffPair> {
    if t == 0 || t > k {
        return Err(LowRankError::InvalidInput(format!(
            "step t = {t} must satisfy 1 <= t <= k = {k}"
        )));
    }
    let lambdas: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    coefficient_ratio(&lambdas, k - t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(lambdas: &[f64]) -> Vec<f64> {
        let n = lambdas.len();
        let mut e = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let prod: f64 = (0..n)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| lambdas[b])
                .product();
            e[mask.count_ones() as usize] += prod;
        }
        e
    }

    #[test]
    fn small_spectra() {
        assert_eq!(elem_sym_coeffs(&[1.0, 2.0, 3.0], 3).unwrap(), vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(elem_sym_coeffs(&[5.0, 0.0, 0.0], 2).unwrap(), vec![1.0, 5.0, 0.0]);
        assert!(elem_sym_coeffs(&[1.0], 2).is_err());
    }

    #[test]
    fn negative_handling() {
        assert_eq!(elem_sym_coeffs(&[1.0, -1e-17], 2).unwrap(), vec![1.0, 1.0, 0.0]);
        assert!(matches!(
            elem_sym_coeffs(&[1.0, -1e-3], 1),
            Err(LowRankError::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn ratio_examples() {
        let p = expectation_ratio(&[1.0, 1.0], 1, 1).unwrap();
        assert_eq!(p.ratio, 2.0);
        let p = coefficient_ratio(&[1.0, 1.0], 1).unwrap();
        assert!((p.ratio - 0.5).abs() < 1e-16);
        let p = expectation_ratio(&[2.0, 0.0], 1, 1).unwrap();
        assert_eq!(p.ratio, 4.0);
        let p = coefficient_ratio(&[4.0, 0.0], 1).unwrap();
        assert_eq!(p.ratio, 0.0);
        assert!((p.denominator_unscaled() - 4.0).abs() < 1e-15);
        let p = expectation_ratio(&[0.0, 0.0], 2, 1).unwrap();
        assert_eq!(p.ratio, f64::INFINITY);
        assert!(expectation_ratio(&[1.0], 1, 2).is_err());
    }

    #[test]
    fn t_equals_k_gives_frobenius_energy() {
        let sigma = [3.0, 2.0, 0.5];
        let p = expectation_ratio(&sigma, 4, 4).unwrap();
        assert!((p.ratio - (9.0 + 4.0 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn scaled_ratio_survives_extreme_ranges() {
        // e_{20}/e_{19} of 40 values spanning 1 .. 1e-30: unscaled products underflow.
        let lambdas: Vec<f64> = (0..40).map(|i| 10f64.powf(-0.75 * i as f64) * 1e-20).collect();
        let p = coefficient_ratio(&lambdas, 19).unwrap();
        assert!(p.ratio.is_finite() && p.ratio > 0.0);
        // Leading-order estimate: e_{J+1}/e_J ≈ λ_{J+1} when the spectrum decays fast.
        let rel = (p.ratio / lambdas[19] - 1.0).abs();
        assert!(rel < 0.3, "{rel}");
        let plain = elem_sym_coeffs(&lambdas, 20).unwrap();
        assert_eq!(plain[20], 0.0);
    }

    #[test]
    fn scaled_matches_plain_in_range() {
        let lambdas = [4.0, 3.0, 2.5, 1.0, 0.25, 0.0];
        let e = elem_sym_coeffs(&lambdas, 6).unwrap();
        for j in 0..5 {
            let p = coefficient_ratio(&lambdas, j).unwrap();
            assert!((p.ratio - e[j + 1] / e[j]).abs() <= 1e-14 * (e[j + 1] / e[j]).max(1.0));
            assert!((p.numerator_unscaled() - e[j + 1]).abs() <= 1e-13 * e[j + 1]);
        }
    }

    proptest! {
        #[test]
        fn matches_subset_expansion(lambdas in prop::collection::vec(0.0f64..1.0, 1..=8)) {
            let e = elem_sym_coeffs(&lambdas, lambdas.len()).unwrap();
            let oracle = brute_force(&lambdas);
            for (a, b) in e.iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-13 * b.abs().max(f64::MIN_POSITIVE));
            }
        }

        #[test]
        fn permutation_invariant(mut lambdas in prop::collection::vec(0.0f64..10.0, 1..=10), seed in any::<u64>()) {
            let a = elem_sym_coeffs(&lambdas, lambdas.len()).unwrap();
            let n = lambdas.len();
            for i in 0..n {
                let j = ((seed >> (i % 60)) as usize + i * 7) % n;
                lambdas.swap(i, j);
            }
            let b = elem_sym_coeffs(&lambdas, n).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn newton_identities(lambdas in prop::collection::vec(0.1f64..1.0, 1..=10)) {
            let n = lambdas.len();
            let e = elem_sym_coeffs(&lambdas, n).unwrap();
            let power: Vec<f64> = (0..=n).map(|i| lambdas.iter().map(|l| l.powi(i as i32)).sum()).collect();
            let mut newton = vec![1.0; n + 1];
            for j in 1..=n {
                let mut s = 0.0;
                for i in 1..=j {
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    s += sign * newton[j - i] * power[i];
                }
                newton[j] = s / j as f64;
            }
            for j in 0..=n {
                prop_assert!((e[j] - newton[j]).abs() <= 1e-10 * e[j], "j={} {} {}", j, e[j], newton[j]);
            }
        }
    }
}
