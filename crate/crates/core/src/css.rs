//! Derandomized column subset selection.
//!
//! At step `t` every remaining column `b_i` of the residual `B` is scored by
//! the conditional expectation of the volume-sampling error given the
//! columns chosen so far plus `i`,
//! `(k−t+1)·e_{k−t+1}(σ²(B_i))/e_{k−t}(σ²(B_i))` with `B_i = (I − b̂_i b̂_iᵀ)B`.
//! The singular values of `B_i` come from a rank-one projection update of
//! the SVD of `B`.
//!
//! [`select_columns_sweep`] runs several target ranks at once. Runs that
//! agree on their first `t` indices share the residual SVD and candidate
//! spectra of those steps, so a sweep over `k = 1..K` costs far less than
//! `K` independent runs while returning identical results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charpoly::scaled_pair_sorted;
use crate::error::{LowRankError, Result};
use crate::matcore::{
    numerical_rank, project_residual, rank_tolerance, singular_values, svd, tail_energy,
    DenseMatrix,
};
use crate::svdupdate::{bidiagonal_singular_values, bidiagonalize_projection_update};

/// Options shared by the column, CUR, cross and Tucker drivers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CssConfig {
    pub early_stop: bool,
    /// Reduce `k` to the numerical rank instead of failing.
    pub rank_guard: bool,
    /// Slack `τ` in the certified bounds, relative to `‖A‖_F`.
    pub tolerance: f64,
}

impl Default for CssConfig {
    fn default() -> Self {
        Self {
            early_stop: false,
            rank_guard: true,
            tolerance: 1e-10,
        }
    }
}

impl CssConfig {
    pub fn early_stop() -> Self {
        Self {
            early_stop: true,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(LowRankError::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Zero-based indices in memory, one-based on the wire.
pub(crate) mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|i| i + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        v.into_iter()
            .map(|i| {
                i.checked_sub(1)
                    .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
            })
            .collect()
    }
}

/// Outcome of a column selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected columns in order of selection.
    #[serde(with = "one_based")]
    pub indices: Vec<usize>,
    /// `‖A − π_S A‖_F`.
    pub residual_fro: f64,
    /// `√((k+1)·tail_energy(k))`.
    pub bound_fro: f64,
    /// `√tail_energy(k)`, the best rank-`k` error.
    pub quasi_best_fro: f64,
    pub candidates_tested: usize,
    /// Conditional expectation of the squared error after each accepted index.
    pub per_step_ratios: Vec<f64>,
    /// Expected squared error before any index is fixed, `(k+1)·e_{k+1}/e_k`.
    pub initial_expectation: f64,
    pub requested_k: usize,
    pub k: usize,
    pub numerical_rank: usize,
    pub rank_reduced: bool,
    /// One-based steps at which early stopping found no admissible
    /// candidate and the full minimizer was taken instead.
    pub fallback_steps: Vec<usize>,
}

/// `√((k+1)·tail)`, the certified column-selection bound.
pub fn css_bound(sigma: &[f64], k: usize) -> Result<f64> {
    Ok(((k + 1) as f64 * tail_energy(sigma, k)?.value).sqrt())
}

/// `(k−t+1)·e_{k−t+1}(σ²(B))/e_{k−t}(σ²(B))` for the residual `B` after `t` selections.
pub fn conditional_expectation(b: &DenseMatrix, k: usize, t: usize) -> Result<f64> {
    if t > k {
        return Err(LowRankError::InvalidInput(format!(
            "step t = {t} exceeds k = {k}"
        )));
    }
    let sigma = singular_values(b)?;
    Ok(expectation_from_values(&sigma, k - t))
}

/// `(J+1)·e_{J+1}/e_J` of the squared values, `+∞` on a vanishing denominator.
pub(crate) fn expectation_from_values(sigma: &[f64], big_j: usize) -> f64 {
    let lambdas = squared_sorted(sigma);
    let pair = scaled_pair_sorted(&lambdas, big_j);
    (big_j + 1) as f64 * pair.ratio
}

pub(crate) fn squared_sorted(values: &[f64]) -> Vec<f64> {
    let mut l: Vec<f64> = values.iter().map(|s| s * s).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

/// Whether `‖A(:, 2:n)‖_F ≤ ‖A(:, 1)‖₂`, in which case column 1 alone meets
/// the `k = 1` bound.
pub fn first_column_dominates(a: &DenseMatrix) -> Result<bool> {
    if a.cols() < 2 {
        return Err(LowRankError::InvalidInput(
            "need at least two columns".into(),
        ));
    }
    let norms = a.column_norms();
    let rest = crate::matcore::norm2(&norms[1..]);
    Ok(rest <= norms[0])
}

/// Singular values of `(I − b̂ b̂ᵀ)B` for column `i` of `B`, via the projection update.
pub fn candidate_singular_values(b: &DenseMatrix, i: usize) -> Result<Vec<f64>> {
    if i >= b.cols() {
        return Err(LowRankError::IndexOutOfRange {
            index: i,
            bound: b.cols(),
        });
    }
    let f = svd(b)?;
    let r = numerical_rank(&f.sigma, b.rows(), b.cols());
    let step = StepSvd {
        sigma: f.sigma[..r].to_vec(),
        v: f.v,
    };
    Ok(step.candidate_values(i, 0.0)?.unwrap_or_default())
}

/// Truncated SVD data of the current residual.
struct StepSvd {
    sigma: Vec<f64>,
    v: DenseMatrix,
}

impl StepSvd {
    fn new(b: &DenseMatrix, drop_below: f64) -> Result<Self> {
        let f = svd(b)?;
        let r = f.sigma.iter().take_while(|&&s| s > drop_below).count();
        Ok(Self {
            sigma: f.sigma[..r].to_vec(),
            v: f.v,
        })
    }

    /// Singular values of the residual with column `i` projected out, or
    /// `None` when the column has no component in the retained range.
    fn candidate_values(&self, i: usize, floor: f64) -> Result<Option<Vec<f64>>> {
        let r = self.sigma.len();
        if r == 0 {
            return Ok(None);
        }
        // Uᵀ b_i = Σ V(i, :)ᵀ
        let mut q: Vec<f64> = (0..r).map(|l| self.sigma[l] * self.v[(i, l)]).collect();
        let norm = crate::matcore::norm2(&q);
        if norm <= floor || norm == 0.0 {
            return Ok(None);
        }
        q.iter_mut().for_each(|v| *v /= norm);
        let bd = bidiagonalize_projection_update(&self.sigma, &q)?;
        Ok(Some(bidiagonal_singular_values(&bd)?))
    }
}

struct Run {
    slot: usize,
    requested_k: usize,
    k: usize,
    bound_sq: f64,
    candidates_tested: usize,
    per_step: Vec<f64>,
    fallback_steps: Vec<usize>,
}

struct Shared<'a> {
    a: &'a DenseMatrix,
    cfg: CssConfig,
    sigma: Vec<f64>,
    rank: usize,
    /// Singular values and column norms below this are treated as zero.
    drop_below: f64,
}

/// Selects `k` columns of `a`.
pub fn select_columns(a: &DenseMatrix, k: usize, cfg: CssConfig) -> Result<SelectionResult> {
    select_columns_sweep(a, &[k], cfg)
        .map(|mut v| v.pop().expect("one result per k"))?
}

/// Runs [`select_columns`] for every `k` in `ks`; results are identical to
/// independent runs and come back in the order of `ks`.
pub fn select_columns_sweep(
    a: &DenseMatrix,
    ks: &[usize],
    cfg: CssConfig,
) -> Result<Vec<Result<SelectionResult>>> {
    cfg.validate()?;
    let sigma = singular_values(a)?;
    let rank = numerical_rank(&sigma, a.rows(), a.cols());
    if rank == 0 {
        return Err(LowRankError::ZeroRange);
    }
    let shared = Shared {
        a,
        cfg,
        drop_below: rank_tolerance(a.rows(), a.cols(), sigma[0]),
        sigma,
        rank,
    };
    let mut out: Vec<Option<Result<SelectionResult>>> = vec![None; ks.len()];
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
        runs.push(Run {
            slot,
            requested_k: k,
            k: eff,
            bound_sq: (eff + 1) as f64 * tail,
            candidates_tested: 0,
            per_step: Vec::with_capacity(eff),
            fallback_steps: Vec::new(),
        });
    }
    explore(&shared, Vec::new(), None, runs, &mut out)?;
    Ok(out
        .into_iter()
        .map(|r| r.expect("every run reaches a leaf"))
        .collect())
}

fn finish(shared: &Shared, run: Run, indices: &[usize], residual_fro: f64) -> Result<SelectionResult> {
    let tail = tail_energy(&shared.sigma, run.k)?.value;
    Ok(SelectionResult {
        indices: indices.to_vec(),
        residual_fro,
        bound_fro: run.bound_sq.sqrt(),
        quasi_best_fro: tail.sqrt(),
        candidates_tested: run.candidates_tested,
        per_step_ratios: run.per_step,
        initial_expectation: expectation_from_values(&shared.sigma, run.k),
        requested_k: run.requested_k,
        k: run.k,
        numerical_rank: shared.rank,
        rank_reduced: run.k < run.requested_k,
        fallback_steps: run.fallback_steps,
    })
}

/// Visits one node of the prefix trie: `prefix` is fixed, `residual` is
/// `A − π_prefix A` when already known.
fn explore(
    shared: &Shared,
    prefix: Vec<usize>,
    residual: Option<DenseMatrix>,
    runs: Vec<Run>,
    out: &mut [Option<Result<SelectionResult>>],
) -> Result<()> {
    let a = shared.a;
    let n = a.cols();
    let t = prefix.len() + 1;
    let b = match residual {
        Some(b) => b,
        None if prefix.is_empty() => a.clone(),
        None => project_residual(a, &prefix)?,
    };

    let (done, active): (Vec<Run>, Vec<Run>) = runs.into_iter().partition(|r| r.k < t);
    if !done.is_empty() {
        let res = b.frobenius_norm();
        for run in done {
            let slot = run.slot;
            out[slot] = Some(finish(shared, run, &prefix, res));
        }
    }
    if active.is_empty() {
        return Ok(());
    }

    let step = StepSvd::new(&b, shared.drop_below)?;
    let norms = b.column_norms();
    let admissible = |i: usize| norms[i] > shared.drop_below && !prefix.contains(&i);
    let mut spectra: Vec<Option<Option<Vec<f64>>>> = vec![None; n];

    let compute_all = |spectra: &mut Vec<Option<Option<Vec<f64>>>>| -> Result<()> {
        let missing: Vec<usize> = (0..n).filter(|&i| admissible(i) && spectra[i].is_none()).collect();
        let values: Vec<Result<Option<Vec<f64>>>> = missing
            .par_iter()
            .map(|&i| step.candidate_values(i, shared.drop_below))
            .collect();
        for (i, v) in missing.into_iter().zip(values) {
            spectra[i] = Some(v?);
        }
        Ok(())
    };

    let order: Vec<usize> = if shared.cfg.early_stop {
        let mut idx: Vec<usize> = (0..n).filter(|&i| admissible(i)).collect();
        idx.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
        idx
    } else {
        compute_all(&mut spectra)?;
        Vec::new()
    };

    let mut children: Vec<(usize, Vec<Run>)> = Vec::new();
    for mut run in active {
        let big_j = run.k - t;
        let score = |vals: &[f64]| -> f64 {
            let lambdas = squared_sorted(vals);
            (big_j + 1) as f64 * scaled_pair_sorted(&lambdas, big_j).ratio
        };
        let mut chosen: Option<(usize, f64)> = None;
        if shared.cfg.early_stop {
            for (pos, &i) in order.iter().enumerate() {
                if spectra[i].is_none() {
                    spectra[i] = Some(step.candidate_values(i, shared.drop_below)?);
                }
                let Some(Some(vals)) = &spectra[i] else { continue };
                let ce = score(vals);
                if ce <= run.bound_sq {
                    chosen = Some((i, ce));
                    run.candidates_tested += pos + 1;
                    break;
                }
            }
            if chosen.is_none() {
                run.candidates_tested += order.len();
                run.fallback_steps.push(t);
                compute_all(&mut spectra)?;
            }
        } else {
            run.candidates_tested += n;
        }
        if chosen.is_none() {
            for i in 0..n {
                if let Some(Some(vals)) = &spectra[i] {
                    let ce = score(vals);
                    match chosen {
                        Some((_, best)) if !(ce < best) => {}
                        _ => chosen = Some((i, ce)),
                    }
                }
            }
        }
        let Some((i, ce)) = chosen else {
            // Every remaining column is below the rank tolerance.
            let slot = run.slot;
            out[slot] = Some(if shared.cfg.rank_guard && !prefix.is_empty() {
                run.k = prefix.len();
                run.fallback_steps.retain(|&s| s != t);
                run.bound_sq = (run.k + 1) as f64 * tail_energy(&shared.sigma, run.k)?.value;
                finish(shared, run, &prefix, b.frobenius_norm())
            } else {
                Err(LowRankError::ResidualZero { step: t })
            });
            continue;
        };
        run.per_step.push(ce);
        match children.iter_mut().find(|(c, _)| *c == i) {
            Some((_, group)) => group.push(run),
            None => children.push((i, vec![run])),
        }
    }
    drop(spectra);
    drop(step);
    drop(b);
    children.sort_by_key(|(i, _)| *i);
    for (i, group) in children {
        let mut next = prefix.clone();
        next.push(i);
        explore(shared, next, None, group, out)?;
    }
    Ok(())
}
