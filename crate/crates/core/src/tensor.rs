//! Dense tensors, matricization, mode products and Tucker approximation
//! from selected fibers.
//!
//! Entries are stored colexicographically (first index fastest). The
//! mode-`μ` matricization orders its columns colexicographically in the
//! remaining indices, so the mode-0 matricization is a plain reshape.
//! Mode numbers are zero-based in this API.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::css::{select_columns_sweep, CssConfig, SelectionResult};
use crate::error::{LowRankError, Result};
use crate::matcore::{
    column_space_basis, format_f64, norm2, pinv, singular_values, tail_energy, DenseMatrix,
};

/// Dense real tensor of order `d ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(LowRankError::InvalidInput(format!(
                "tensor shape must be nonempty with positive extents, got {shape:?}"
            )));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(LowRankError::DimensionMismatch(format!(
                "{} entries supplied for shape {shape:?}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LowRankError::NonFinite(pos));
        }
        Ok(Self { shape, data })
    }

    /// Builds a tensor from a function of the (zero-based) multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for (i, n) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < *n {
                    break;
                }
                *i = 0;
            }
        }
        Self::new(shape.to_vec(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Entries in colexicographic order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        let mut stride = 1;
        for (i, n) in idx.iter().zip(&self.shape) {
            debug_assert!(i < n);
            off += i * stride;
            stride *= n;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order(), "multi-index has wrong length");
        self.data[self.offset(idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(LowRankError::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Tensor::new(self.shape.clone(), data)
    }

    fn check_mode(&self, mu: usize) -> Result<()> {
        if mu >= self.order() {
            return Err(LowRankError::IndexOutOfRange {
                index: mu,
                bound: self.order(),
            });
        }
        Ok(())
    }

    /// `(∏_{ν<μ} n_ν, n_μ, ∏_{ν>μ} n_ν)`.
    fn split(&self, mu: usize) -> (usize, usize, usize) {
        let left = self.shape[..mu].iter().product();
        let right = self.shape[mu + 1..].iter().product();
        (left, self.shape[mu], right)
    }
}

/// Mode-`μ` matricization: `n_μ × ∏_{ν≠μ} n_ν`, one `μ`-mode fiber per column.
pub fn matricize(t: &Tensor, mu: usize) -> Result<DenseMatrix> {
    t.check_mode(mu)?;
    let (left, n, right) = t.split(mu);
    let mut out = DenseMatrix::zeros(n, left * right);
    for b in 0..right {
        for i in 0..n {
            let src = &t.data[left * (i + n * b)..left * (i + n * b) + left];
            for (a, v) in src.iter().enumerate() {
                out[(i, a + left * b)] = *v;
            }
        }
    }
    Ok(out)
}

/// Inverse of [`matricize`] for a tensor of the given shape.
pub fn dematricize(m: &DenseMatrix, shape: &[usize], mu: usize) -> Result<Tensor> {
    if mu >= shape.len() {
        return Err(LowRankError::IndexOutOfRange {
            index: mu,
            bound: shape.len(),
        });
    }
    let left: usize = shape[..mu].iter().product();
    let right: usize = shape[mu + 1..].iter().product();
    let n = shape[mu];
    if m.rows() != n || m.cols() != left * right {
        return Err(LowRankError::DimensionMismatch(format!(
            "{}x{} matrix does not matricize shape {shape:?} in mode {mu}",
            m.rows(),
            m.cols()
        )));
    }
    let mut data = vec![0.0; n * left * right];
    for b in 0..right {
        for i in 0..n {
            for a in 0..left {
                data[a + left * (i + n * b)] = m[(i, a + left * b)];
            }
        }
    }
    Tensor::new(shape.to_vec(), data)
}

/// `M ×_μ T`: the tensor whose mode-`μ` matricization is `M·T^{(μ)}`.
pub fn mode_multiply(t: &Tensor, m: &DenseMatrix, mu: usize) -> Result<Tensor> {
    t.check_mode(mu)?;
    let (left, n, right) = t.split(mu);
    if m.cols() != n {
        return Err(LowRankError::DimensionMismatch(format!(
            "{}x{} matrix cannot act on mode {mu} of extent {n}",
            m.rows(),
            m.cols()
        )));
    }
    let p = m.rows();
    let mut data = vec![0.0; left * p * right];
    for b in 0..right {
        for r in 0..p {
            let dst = left * (r + p * b);
            for (i, &w) in m.row(r).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = left * (i + n * b);
                for a in 0..left {
                    data[dst + a] += w * t.data[src + a];
                }
            }
        }
    }
    let mut shape = t.shape.clone();
    shape[mu] = p;
    Tensor::new(shape, data)
}

/// Fiber-based Tucker approximation `T ≈ B₁ ×₁ ⋯ ×_d B_d ×_d C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuckerFactors {
    /// Factor `μ` is `n_μ × k_μ`, its columns are `μ`-mode fibers of the source.
    pub factors: Vec<DenseMatrix>,
    pub core: Tensor,
    /// Columns of the mode-`μ` matricization used for factor `μ`.
    #[serde(with = "nested_one_based")]
    pub fiber_indices: Vec<Vec<usize>>,
    pub ranks: Vec<usize>,
    /// `‖T − π₁ ×₁ ⋯ ×_d π_d T‖_F` with `π_μ` the orthogonal projector onto
    /// the span of the fibers in `B_μ`.
    pub residual_fro: f64,
    /// `‖T − B₁ ×₁ ⋯ ×_d B_d ×_d C‖_F` evaluated literally. Equal to
    /// `residual_fro` in exact arithmetic; loses accuracy when the factors
    /// are ill-conditioned.
    pub reconstruction_fro: f64,
    /// `√(Σ_μ tail_μ)`, an upper bound on the best approximation error.
    pub quasi_best_fro: f64,
    /// `√(Σ_μ (k_μ+1)·tail_μ)`.
    pub certificate_fro: f64,
    /// `√(Σ_μ (k_μ+1))·√(Σ_μ tail_μ)`.
    pub bound_fro: f64,
    pub selections: Vec<SelectionResult>,
}

mod nested_one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<usize>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|inner| inner.iter().map(|i| i + 1).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<usize>>, D::Error> {
        let v = Vec::<Vec<usize>>::deserialize(d)?;
        v.into_iter()
            .map(|inner| {
                inner
                    .into_iter()
                    .map(|i| {
                        i.checked_sub(1)
                            .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Reconstruction `B₁ ×₁ ⋯ ×_d B_d ×_d C`.
pub fn tucker_reconstruct(factors: &[DenseMatrix], core: &Tensor) -> Result<Tensor> {
    if factors.len() != core.order() {
        return Err(LowRankError::DimensionMismatch(format!(
            "{} factors for a core of order {}",
            factors.len(),
            core.order()
        )));
    }
    let mut out = core.clone();
    for (mu, f) in factors.iter().enumerate() {
        out = mode_multiply(&out, f, mu)?;
    }
    Ok(out)
}

/// Fiber-based Tucker approximation for one rank vector.
pub fn tucker_select(t: &Tensor, ranks: &[usize], cfg: CssConfig) -> Result<TuckerFactors> {
    tucker_select_sweep(t, &[ranks.to_vec()], cfg)?
        .pop()
        .expect("one result per rank vector")
}

/// Runs [`tucker_select`] for several rank vectors, sharing the per-mode
/// column selections across them.
pub fn tucker_select_sweep(
    t: &Tensor,
    rank_list: &[Vec<usize>],
    cfg: CssConfig,
) -> Result<Vec<Result<TuckerFactors>>> {
    let d = t.order();
    if let Some(bad) = rank_list.iter().find(|r| r.len() != d) {
        return Err(LowRankError::DimensionMismatch(format!(
            "rank vector {bad:?} does not match tensor order {d}"
        )));
    }
    let mut per_mode: Vec<(DenseMatrix, Vec<f64>, Vec<usize>, Vec<Result<SelectionResult>>)> =
        Vec::with_capacity(d);
    for mu in 0..d {
        let a = matricize(t, mu)?;
        let sigma = singular_values(&a)?;
        let mut ks: Vec<usize> = rank_list.iter().map(|r| r[mu]).collect();
        ks.sort_unstable();
        ks.dedup();
        let sel = select_columns_sweep(&a, &ks, cfg)?;
        per_mode.push((a, sigma, ks, sel));
    }
    let mut out = Vec::with_capacity(rank_list.len());
    for ranks in rank_list {
        let mut selections = Vec::with_capacity(d);
        let mut failed = None;
        for (mu, (_, _, ks, sel)) in per_mode.iter().enumerate() {
            let pos = ks.binary_search(&ranks[mu]).expect("rank present");
            match &sel[pos] {
                Ok(s) => selections.push(s.clone()),
                Err(e) => {
                    failed = Some(e.clone());
                    break;
                }
            }
        }
        if let Some(e) = failed {
            out.push(Err(e));
            continue;
        }
        out.push(assemble(t, &per_mode, selections));
    }
    Ok(out)
}

#[allow(clippy::type_complexity)]
fn assemble(
    t: &Tensor,
    per_mode: &[(DenseMatrix, Vec<f64>, Vec<usize>, Vec<Result<SelectionResult>>)],
    selections: Vec<SelectionResult>,
) -> Result<TuckerFactors> {
    let d = t.order();
    let mut factors = Vec::with_capacity(d);
    let mut fiber_indices = Vec::with_capacity(d);
    let mut ranks = Vec::with_capacity(d);
    let mut tail_sum = 0.0;
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for (mu, sel) in selections.iter().enumerate() {
        let (a, sigma, _, _) = &per_mode[mu];
        let b = a.select_columns(&sel.indices)?;
        let k = sel.indices.len();
        let tail = tail_energy(sigma, k)?.value;
        tail_sum += tail;
        weighted += (k + 1) as f64 * tail;
        weight += (k + 1) as f64;
        ranks.push(k);
        fiber_indices.push(sel.indices.clone());
        factors.push(b);
    }
    let mut core = t.clone();
    for (mu, b) in factors.iter().enumerate() {
        core = mode_multiply(&core, &pinv(b)?, mu)?;
    }
    let bases = factors
        .iter()
        .map(column_space_basis)
        .collect::<Result<Vec<_>>>()?;
    let mut projected = t.clone();
    for (mu, q) in bases.iter().enumerate() {
        projected = mode_multiply(&projected, &q.transpose(), mu)?;
    }
    for (mu, q) in bases.iter().enumerate() {
        projected = mode_multiply(&projected, q, mu)?;
    }
    let residual_fro = t.sub(&projected)?.frobenius_norm();
    let reconstruction_fro = t.sub(&tucker_reconstruct(&factors, &core)?)?.frobenius_norm();
    Ok(TuckerFactors {
        factors,
        core,
        fiber_indices,
        ranks,
        residual_fro,
        reconstruction_fro,
        quasi_best_fro: tail_sum.sqrt(),
        certificate_fro: weighted.sqrt(),
        bound_fro: weight.sqrt() * tail_sum.sqrt(),
        selections,
    })
}

/// Parses the text tensor format: a `shape: n₁ n₂ …` header followed by the
/// entries in colexicographic order, separated by commas or whitespace.
pub fn parse_tensor(text: &str) -> Result<Tensor> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| LowRankError::Parse("empty tensor file".into()))?;
    let dims = header
        .strip_prefix("shape:")
        .ok_or_else(|| LowRankError::Parse(format!("expected 'shape:' header, got {header:?}")))?;
    let shape = dims
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|e| LowRankError::Parse(format!("bad extent {s:?}: {e}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut data = Vec::new();
    for line in lines {
        for field in line.split(|c: char| c.is_whitespace() || c == ',') {
            if field.is_empty() {
                continue;
            }
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|e| LowRankError::Parse(format!("bad entry {field:?}: {e}")))?,
            );
        }
    }
    Tensor::new(shape, data)
}

/// Writes the text tensor format, one mode-1 fiber per line.
pub fn tensor_to_string(t: &Tensor) -> String {
    let mut out = String::from("shape:");
    for n in t.shape() {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    for fiber in t.as_slice().chunks(t.shape()[0]) {
        let line: Vec<String> = fiber.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    parse_tensor(&std::fs::read_to_string(path)?)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    std::fs::write(path, tensor_to_string(t))?;
    Ok(())
}
