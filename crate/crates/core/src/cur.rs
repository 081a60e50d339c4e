//! CUR approximation from two independent column selections, one on `A`
//! and one on `Aᵀ`, with the Frobenius-optimal middle factor `U = C⁺AR⁺`.

use serde::{Deserialize, Serialize};

use crate::css::{one_based, select_columns_sweep, CssConfig, SelectionResult};
use crate::error::{LowRankError, Result};
use crate::matcore::{pinv, singular_values, tail_energy, DenseMatrix};

/// `A ≈ A(:, J)·U·A(I, :)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurApprox {
    #[serde(with = "one_based")]
    pub row_indices: Vec<usize>,
    #[serde(with = "one_based")]
    pub col_indices: Vec<usize>,
    pub u: DenseMatrix,
    pub residual_fro: f64,
    /// `√(2k+2)·√tail_energy(k)`.
    pub bound_fro: f64,
    pub quasi_best_fro: f64,
    pub k: usize,
    pub column_selection: SelectionResult,
    pub row_selection: SelectionResult,
}

/// Middle factor `C⁺AR⁺` and the residual `‖A − CUR‖_F` for fixed index sets.
pub fn cur_middle_factor(
    a: &DenseMatrix,
    rows: &[usize],
    cols: &[usize],
) -> Result<(DenseMatrix, f64)> {
    let c = a.select_columns(cols)?;
    let r = a.select_rows(rows)?;
    let u = pinv(&c)?.matmul(a)?.matmul(&pinv(&r)?)?;
    let approx = c.matmul(&u)?.matmul(&r)?;
    Ok((u, a.sub(&approx)?.frobenius_norm()))
}

/// `‖A − CUR‖_F` with `U = C⁺AR⁺` for fixed index sets.
pub fn evaluate_cur(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Result<f64> {
    Ok(cur_middle_factor(a, rows, cols)?.1)
}

/// Selects `k` columns and `k` rows of `a` and forms the optimal middle factor.
pub fn cur_approximate(a: &DenseMatrix, k: usize, cfg: CssConfig) -> Result<CurApprox> {
    cur_approximate_sweep(a, &[k], cfg)?
        .pop()
        .expect("one result per k")
}

/// [`cur_approximate`] for every `k` in `ks`, sharing work across ranks.
pub fn cur_approximate_sweep(
    a: &DenseMatrix,
    ks: &[usize],
    cfg: CssConfig,
) -> Result<Vec<Result<CurApprox>>> {
    let at = a.transpose();
    let (cols, rows) = rayon::join(
        || select_columns_sweep(a, ks, cfg),
        || select_columns_sweep(&at, ks, cfg),
    );
    let (cols, rows) = (cols?, rows?);
    let sigma = singular_values(a)?;
    Ok(cols
        .into_iter()
        .zip(rows)
        .map(|(c, r)| assemble(a, &sigma, c?, r?))
        .collect())
}

fn assemble(
    a: &DenseMatrix,
    sigma: &[f64],
    column_selection: SelectionResult,
    row_selection: SelectionResult,
) -> Result<CurApprox> {
    let k = column_selection.k;
    if row_selection.k != k {
        return Err(LowRankError::RankExceeded {
            k: column_selection.requested_k,
            rank: k.min(row_selection.k),
        });
    }
    let (u, residual_fro) =
        cur_middle_factor(a, &row_selection.indices, &column_selection.indices)?;
    let tail = tail_energy(sigma, k)?.value;
    Ok(CurApprox {
        row_indices: row_selection.indices.clone(),
        col_indices: column_selection.indices.clone(),
        u,
        residual_fro,
        bound_fro: ((2 * k + 2) as f64 * tail).sqrt(),
        quasi_best_fro: tail.sqrt(),
        k,
        column_selection,
        row_selection,
    })
}

/// Square test matrix whose leading-index CUR is poor; see
/// [`crate::generators::deim_adversarial`].
pub fn deim_adversarial_matrix(n: usize, alpha: f64) -> Result<DenseMatrix> {
    crate::generators::deim_adversarial(n, alpha)
}
