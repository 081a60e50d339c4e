//! Derandomized cross (skeleton) approximation
//! `A ≈ A(:, J)·A(I, J)⁻¹·A(I, :)`.
//!
//! Pivots are fixed one at a time. A candidate `(i, j)` turns the residual
//! `B` into its Schur complement `C_ij = B − B(:, j)B(i, :)/B(i, j)` and is
//! scored by `(k−t+1)²·e_{k−t+1}(σ²(C_ij))/e_{k−t}(σ²(C_ij))`. With the SVD
//! `B = UΣVᵀ`, `C_ij = U(Σ − xyᵀ)Vᵀ` for `x = ΣV(j, :)ᵀ` and
//! `y = ΣU(i, :)ᵀ/B(i, j)`, so each score needs only a subtraction update.
//!
//! Wide and square matrices are processed as given; tall ones are
//! transposed first and the index sets swapped on output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charpoly::scaled_pair_sorted;
use crate::css::{one_based, squared_sorted, CssConfig};
use crate::error::{LowRankError, Result};
use crate::matcore::{
    lu_solve, numerical_rank, rank_tolerance, singular_values, svd, tail_energy, DenseMatrix,
    EPS,
};
use crate::svdupdate::{bidiagonal_singular_values, bidiagonalize_subtraction_update};

/// Outcome of a cross approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossApprox {
    /// Pivot rows in order of selection.
    #[serde(with = "one_based")]
    pub row_indices: Vec<usize>,
    /// Pivot columns in order of selection.
    #[serde(with = "one_based")]
    pub col_indices: Vec<usize>,
    /// `‖A − A(:, J)A(I, J)⁻¹A(I, :)‖_F`, evaluated with an LU solve.
    pub residual_fro: f64,
    /// Norm of the residual carried through the pivot updates.
    pub schur_residual_fro: f64,
    /// `(k+1)·√tail_energy(k)`.
    pub bound_fro: f64,
    pub quasi_best_fro: f64,
    pub pivots_tested: usize,
    /// `σ_max/σ_min` of `A(I, J)`.
    pub condition_aij: f64,
    /// Conditional expectation of the squared error after each accepted pivot.
    pub per_step_values: Vec<f64>,
    /// `(k+1)²·e_{k+1}/e_k` of `σ²(A)`.
    pub initial_expectation: f64,
    pub requested_k: usize,
    pub k: usize,
    pub numerical_rank: usize,
    pub rank_reduced: bool,
    pub fallback_steps: Vec<usize>,
}

/// `(k+1)·√tail`, the certified cross bound.
pub fn cross_bound(sigma: &[f64], k: usize) -> Result<f64> {
    Ok((k + 1) as f64 * tail_energy(sigma, k)?.value.sqrt())
}

/// `(J+1)²·e_{J+1}/e_J` of the squared values.
fn cross_expectation_from_values(sigma: &[f64], big_j: usize) -> f64 {
    let lambdas = squared_sorted(sigma);
    let w = (big_j + 1) as f64;
    w * w * scaled_pair_sorted(&lambdas, big_j).ratio
}

/// `(k−t+1)²·e_{k−t+1}(σ²(B))/e_{k−t}(σ²(B))` for the cross residual `B`
/// after `t` pivots.
pub fn cross_conditional_expectation(b: &DenseMatrix, k: usize, t: usize) -> Result<f64> {
    if t > k {
        return Err(LowRankError::InvalidInput(format!(
            "step t = {t} exceeds k = {k}"
        )));
    }
    let sigma = singular_values(b)?;
    Ok(cross_expectation_from_values(&sigma, k - t))
}

/// Smallest admissible pivot magnitude for `b`.
fn pivot_tolerance(b: &DenseMatrix) -> f64 {
    EPS * b.frobenius_norm() * b.rows().max(b.cols()) as f64
}

/// Schur complement `B − B(:, j)B(i, :)/B(i, j)`, with row `i` and
/// column `j` set to zero.
pub fn residual_pivot_update(b: &DenseMatrix, i: usize, j: usize) -> Result<DenseMatrix> {
    let (m, n) = b.shape();
    if i >= m {
        return Err(LowRankError::IndexOutOfRange { index: i, bound: m });
    }
    if j >= n {
        return Err(LowRankError::IndexOutOfRange { index: j, bound: n });
    }
    let p = b[(i, j)];
    if !(p.abs() > pivot_tolerance(b)) {
        return Err(LowRankError::PivotTooSmall { i, j, value: p.abs() });
    }
    let col = b.column(j);
    let row = b.row(i).to_vec();
    let mut c = b.clone();
    for r in 0..m {
        let f = col[r] / p;
        if f == 0.0 {
            continue;
        }
        for s in 0..n {
            c[(r, s)] -= f * row[s];
        }
    }
    for s in 0..n {
        c[(i, s)] = 0.0;
    }
    for r in 0..m {
        c[(r, j)] = 0.0;
    }
    Ok(c)
}

/// `‖A − A(:, J)A(I, J)⁻¹A(I, :)‖_F` with a pivoted LU solve.
pub fn evaluate_cross(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Result<f64> {
    if rows.len() != cols.len() {
        return Err(LowRankError::DimensionMismatch(format!(
            "{} rows and {} columns do not form a square cross",
            rows.len(),
            cols.len()
        )));
    }
    let core = a.submatrix(rows, cols)?;
    let coeff = lu_solve(&core, &a.select_rows(rows)?)?;
    let approx = a.select_columns(cols)?.matmul(&coeff)?;
    Ok(a.sub(&approx)?.frobenius_norm())
}

/// Condition number of `A(I, J)` in the spectral norm.
pub fn cross_condition(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Result<f64> {
    let s = singular_values(&a.submatrix(rows, cols)?)?;
    let min = *s.last().expect("nonempty");
    Ok(if min > 0.0 { s[0] / min } else { f64::INFINITY })
}

/// Selects a cross of `k` rows and columns.
pub fn select_cross(a: &DenseMatrix, k: usize, cfg: CssConfig) -> Result<CrossApprox> {
    select_cross_sweep(a, &[k], cfg)?
        .pop()
        .expect("one result per k")
}

/// Runs [`select_cross`] for every `k` in `ks`, sharing the steps on which
/// runs agree. Results come back in the order of `ks`.
pub fn select_cross_sweep(
    a: &DenseMatrix,
    ks: &[usize],
    cfg: CssConfig,
) -> Result<Vec<Result<CrossApprox>>> {
    cfg.validate()?;
    let transposed = a.rows() > a.cols();
    let work = if transposed { a.transpose() } else { a.clone() };
    let sigma = singular_values(&work)?;
    let rank = numerical_rank(&sigma, work.rows(), work.cols());
    if rank == 0 {
        return Err(LowRankError::ZeroRange);
    }
    let shared = Shared {
        original: a,
        transposed,
        cfg,
        drop_below: rank_tolerance(work.rows(), work.cols(), sigma[0]),
        sigma,
        rank,
    };
    let mut out: Vec<Option<Result<CrossApprox>>> = vec![None; ks.len()];
    let mut runs = Vec::new();
    for (slot, &k) in ks.iter().enumerate() {
        if k == 0 {
            out[slot] = Some(Err(LowRankError::InvalidInput("k must be at least 1".into())));
            continue;
        }
        let eff = if k > rank {
            if !cfg.rank_guard {
                out[slot] = Some(Err(LowRankError::RankExceeded { k, rank }));
                continue;
            }
            rank
        } else {
            k
        };
        let tail = tail_energy(&shared.sigma, eff)?.value;
        let w = (eff + 1) as f64;
        runs.push(Run {
            slot,
            requested_k: k,
            k: eff,
            bound_sq: w * w * tail,
            pivots_tested: 0,
            per_step: Vec::with_capacity(eff),
            fallback_steps: Vec::new(),
        });
    }
    explore(&shared, &mut Vec::new(), work, runs, &mut out);
    Ok(out
        .into_iter()
        .map(|r| r.expect("every run reaches a leaf"))
        .collect())
}

struct Run {
    slot: usize,
    requested_k: usize,
    k: usize,
    bound_sq: f64,
    pivots_tested: usize,
    per_step: Vec<f64>,
    fallback_steps: Vec<usize>,
}

struct Shared<'a> {
    original: &'a DenseMatrix,
    transposed: bool,
    cfg: CssConfig,
    sigma: Vec<f64>,
    rank: usize,
    drop_below: f64,
}

impl Shared<'_> {
    /// Position of a working-orientation pivot in the caller's matrix.
    fn original_pair(&self, (i, j): (usize, usize)) -> (usize, usize) {
        if self.transposed {
            (j, i)
        } else {
            (i, j)
        }
    }

    fn finish(&self, run: Run, prefix: &[(usize, usize)], b: &DenseMatrix) -> Result<CrossApprox> {
        let (rows, cols): (Vec<usize>, Vec<usize>) =
            prefix.iter().map(|&p| self.original_pair(p)).unzip();
        let schur = b.frobenius_norm();
        let residual_fro = match evaluate_cross(self.original, &rows, &cols) {
            Ok(r) => r,
            Err(LowRankError::SingularSubmatrix) => schur,
            Err(e) => return Err(e),
        };
        let tail = tail_energy(&self.sigma, run.k)?.value;
        Ok(CrossApprox {
            condition_aij: cross_condition(self.original, &rows, &cols)?,
            row_indices: rows,
            col_indices: cols,
            residual_fro,
            schur_residual_fro: schur,
            bound_fro: run.bound_sq.sqrt(),
            quasi_best_fro: tail.sqrt(),
            pivots_tested: run.pivots_tested,
            per_step_values: run.per_step,
            initial_expectation: cross_expectation_from_values(&self.sigma, run.k),
            requested_k: run.requested_k,
            k: run.k,
            numerical_rank: self.rank,
            rank_reduced: run.k < run.requested_k,
            fallback_steps: run.fallback_steps,
        })
    }
}

/// Truncated SVD of the current residual.
struct StepSvd {
    sigma: Vec<f64>,
    u: DenseMatrix,
    v: DenseMatrix,
}

impl StepSvd {
    fn new(b: &DenseMatrix, drop_below: f64) -> Result<Self> {
        let f = svd(b)?;
        let r = f.sigma.iter().take_while(|&&s| s > drop_below).count();
        Ok(Self {
            sigma: f.sigma[..r].to_vec(),
            u: f.u,
            v: f.v,
        })
    }

    /// Singular values of the Schur complement for pivot `(i, j)`.
    fn candidate_values(&self, i: usize, j: usize, pivot: f64) -> Result<Vec<f64>> {
        let r = self.sigma.len();
        if r == 0 {
            return Ok(Vec::new());
        }
        let x: Vec<f64> = (0..r).map(|l| self.sigma[l] * self.v[(j, l)]).collect();
        let y: Vec<f64> = (0..r).map(|l| self.sigma[l] * self.u[(i, l)] / pivot).collect();
        let bd = bidiagonalize_subtraction_update(&self.sigma, &x, &y)?;
        bidiagonal_singular_values(&bd)
    }
}

fn explore(
    shared: &Shared,
    prefix: &mut Vec<(usize, usize)>,
    b: DenseMatrix,
    runs: Vec<Run>,
    out: &mut [Option<Result<CrossApprox>>],
) {
    let t = prefix.len() + 1;
    let (done, active): (Vec<Run>, Vec<Run>) = runs.into_iter().partition(|r| r.k < t);
    for run in done {
        let slot = run.slot;
        out[slot] = Some(shared.finish(run, prefix, &b));
    }
    if active.is_empty() {
        return;
    }
    match step(shared, prefix, &b, active) {
        Ok(children) => {
            for ((i, j), group) in children {
                match residual_pivot_update(&b, i, j) {
                    Ok(next) => {
                        prefix.push((i, j));
                        explore(shared, prefix, next, group, out);
                        prefix.pop();
                    }
                    Err(e) => fail(group, e, out),
                }
            }
        }
        Err((group, LowRankError::ResidualZero { .. }))
            if shared.cfg.rank_guard && !prefix.is_empty() =>
        {
            for mut run in group {
                run.k = prefix.len();
                let slot = run.slot;
                out[slot] = Some(tail_energy(&shared.sigma, run.k).and_then(|tail| {
                    run.bound_sq = ((run.k + 1) as f64).powi(2) * tail.value;
                    shared.finish(run, prefix, &b)
                }));
            }
        }
        Err((group, e)) => fail(group, e, out),
    }
}

fn fail(runs: Vec<Run>, e: LowRankError, out: &mut [Option<Result<CrossApprox>>]) {
    for run in runs {
        out[run.slot] = Some(Err(e.clone()));
    }
}

type Children = Vec<((usize, usize), Vec<Run>)>;

/// Chooses the next pivot for every active run; runs that agree are grouped.
fn step(
    shared: &Shared,
    prefix: &[(usize, usize)],
    b: &DenseMatrix,
    active: Vec<Run>,
) -> std::result::Result<Children, (Vec<Run>, LowRankError)> {
    let t = prefix.len() + 1;
    let (m, n) = b.shape();
    let tol = pivot_tolerance(b);
    let svd = match StepSvd::new(b, shared.drop_below) {
        Ok(s) => s,
        Err(e) => return Err((active, e)),
    };
    // Admissible pivots in the order used for tie-breaking: lexicographic
    // in the caller's coordinates.
    let mut candidates: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| b[(i, j)].abs() > tol)
        .collect();
    if candidates.is_empty() {
        return Err((active, LowRankError::ResidualZero { step: t }));
    }
    candidates.sort_by_key(|&p| shared.original_pair(p));
    let count = candidates.len();
    let mut spectra: Vec<Option<Vec<f64>>> = vec![None; count];

    let compute_all = |spectra: &mut Vec<Option<Vec<f64>>>| -> Result<()> {
        let missing: Vec<usize> = (0..count).filter(|&c| spectra[c].is_none()).collect();
        let values: Vec<Result<Vec<f64>>> = missing
            .par_iter()
            .map(|&c| {
                let (i, j) = candidates[c];
                svd.candidate_values(i, j, b[(i, j)])
            })
            .collect();
        for (c, v) in missing.into_iter().zip(values) {
            spectra[c] = Some(v?);
        }
        Ok(())
    };

    let order: Vec<usize> = if shared.cfg.early_stop {
        let mut idx: Vec<usize> = (0..count).collect();
        // Stable sort keeps the lexicographic order among equal magnitudes.
        idx.sort_by(|&x, &y| {
            let (bx, by) = (b[candidates[x]].abs(), b[candidates[y]].abs());
            by.total_cmp(&bx)
        });
        idx
    } else {
        if let Err(e) = compute_all(&mut spectra) {
            return Err((active, e));
        }
        Vec::new()
    };

    let mut children: Children = Vec::new();
    let mut pending = active.into_iter();
    while let Some(mut run) = pending.next() {
        let big_j = run.k - t;
        let w = (big_j + 1) as f64;
        let score = |vals: &[f64]| w * w * scaled_pair_sorted(&squared_sorted(vals), big_j).ratio;
        let mut chosen: Option<(usize, f64)> = None;
        let attempt = (|| -> Result<()> {
            if shared.cfg.early_stop {
                for (pos, &c) in order.iter().enumerate() {
                    if spectra[c].is_none() {
                        let (i, j) = candidates[c];
                        spectra[c] = Some(svd.candidate_values(i, j, b[(i, j)])?);
                    }
                    let ce = score(spectra[c].as_deref().expect("computed"));
                    if ce <= run.bound_sq {
                        chosen = Some((c, ce));
                        run.pivots_tested += pos + 1;
                        return Ok(());
                    }
                }
                run.pivots_tested += count;
                run.fallback_steps.push(t);
                compute_all(&mut spectra)?;
            } else {
                run.pivots_tested += count;
            }
            for (c, vals) in spectra.iter().enumerate() {
                let ce = score(vals.as_deref().expect("computed"));
                match chosen {
                    Some((_, best)) if !(ce < best) => {}
                    _ => chosen = Some((c, ce)),
                }
            }
            Ok(())
        })();
        if let Err(e) = attempt {
            let mut rest: Vec<Run> = vec![run];
            rest.extend(pending);
            for (_, group) in children {
                rest.extend(group);
            }
            return Err((rest, e));
        }
        let (c, ce) = chosen.expect("at least one candidate");
        run.per_step.push(ce);
        let pivot = candidates[c];
        match children.iter_mut().find(|(p, _)| *p == pivot) {
            Some((_, group)) => group.push(run),
            None => children.push((pivot, vec![run])),
        }
    }
    children.sort_by_key(|(p, _)| shared.original_pair(*p));
    Ok(children)
}
