//! Singular values of rank-one modifications of a diagonal matrix in `O(m²)`
//! work, by reducing to bidiagonal form with Givens rotations.
//!
//! Two updates are supported:
//! * projection: `(I − qqᵀ)·diag(σ)` with `‖q‖ = 1`,
//! * subtraction: `diag(σ) − x·yᵀ`.
//!
//! Both start by rotating `x` (or `q`) onto `e₁` while keeping `diag(σ)`
//! upper bidiagonal. The subtraction update then has a dense first row,
//! which is folded into a band with two superdiagonals and finally chased
//! down to bidiagonal form.

use serde::{Deserialize, Serialize};

use crate::error::{LowRankError, Result};
use crate::matcore::{norm2, DenseMatrix, EPS};

/// Upper bidiagonal matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidiagonalMatrix {
    pub diag: Vec<f64>,
    /// Length `diag.len() − 1`.
    pub superdiag: Vec<f64>,
}

impl BidiagonalMatrix {
    pub fn new(diag: Vec<f64>, superdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || superdiag.len() + 1 != diag.len() {
            return Err(LowRankError::DimensionMismatch(format!(
                "bidiagonal needs n >= 1 diagonal and n - 1 superdiagonal entries, got {} and {}",
                diag.len(),
                superdiag.len()
            )));
        }
        if let Some(pos) = diag.iter().chain(&superdiag).position(|v| !v.is_finite()) {
            return Err(LowRankError::NonFinite(pos));
        }
        Ok(Self { diag, superdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.superdiag[i]
            } else {
                0.0
            }
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&[norm2(&self.diag), norm2(&self.superdiag)])
    }
}

/// Upper bidiagonal body plus a dense additive first row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikedBidiagonal {
    pub firstrow: Vec<f64>,
    pub body: BidiagonalMatrix,
}

impl SpikedBidiagonal {
    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = self.body.to_dense();
        for (j, v) in self.firstrow.iter().enumerate() {
            d[(0, j)] += v;
        }
        d
    }
}

/// Intermediate forms of the subtraction update, kept for inspection.
#[derive(Clone, Debug)]
pub struct SubtractionStages {
    /// Bidiagonal with a dense first row.
    pub spiked: SpikedBidiagonal,
    /// Upper triangular with two superdiagonals.
    pub banded: DenseMatrix,
    pub bidiagonal: BidiagonalMatrix,
    pub rotations: usize,
}

/// Returns `(c, s, r)` with `c·f + s·g = r` and `−s·f + c·g = 0`.
#[inline]
fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else if f == 0.0 {
        (0.0, 1.0, g)
    } else {
        let r = f.hypot(g).copysign(f);
        (f / r, g / r, r)
    }
}

/// Dense `n × n` workspace; every rotation touches only a window of
/// `O(1)` entries around the band, plus row 0.
struct Work {
    n: usize,
    a: Vec<f64>,
    rotations: usize,
}

impl Work {
    fn diagonal(sigma: &[f64]) -> Self {
        let n = sigma.len();
        let mut a = vec![0.0; n * n];
        for (i, &s) in sigma.iter().enumerate() {
            a[i * n + i] = s;
        }
        Self { n, a, rotations: 0 }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    /// Rotates rows `keep` and `kill` with `(c, s)` over the band window.
    fn rotate_rows(&mut self, keep: usize, kill: usize, c: f64, s: f64) {
        let lo = keep.min(kill).saturating_sub(1);
        let hi = (keep.max(kill) + 5).min(self.n);
        let n = self.n;
        for j in lo..hi {
            let u = self.a[keep * n + j];
            let v = self.a[kill * n + j];
            self.a[keep * n + j] = c * u + s * v;
            self.a[kill * n + j] = c * v - s * u;
        }
        self.rotations += 1;
    }

    /// Rotates columns `keep` and `kill` with `(c, s)` over the band window and row 0.
    fn rotate_cols(&mut self, keep: usize, kill: usize, c: f64, s: f64) {
        let hi = keep.max(kill) + 1;
        let lo = hi.saturating_sub(6);
        let n = self.n;
        let mut apply = |i: usize| {
            let u = self.a[i * n + keep];
            let v = self.a[i * n + kill];
            self.a[i * n + keep] = c * u + s * v;
            self.a[i * n + kill] = c * v - s * u;
        };
        if lo > 0 {
            apply(0);
        }
        for i in lo..hi {
            apply(i);
        }
        self.rotations += 1;
    }

    /// Zeroes `(row, kill)` by mixing it into `(row, keep)`; returns `(c, s)`.
    fn zero_by_cols(&mut self, row: usize, keep: usize, kill: usize) -> (f64, f64) {
        let (c, s, r) = givens(self.at(row, keep), self.at(row, kill));
        self.rotate_cols(keep, kill, c, s);
        self.set(row, keep, r);
        self.set(row, kill, 0.0);
        (c, s)
    }

    /// Zeroes `(kill, col)` by mixing it into `(keep, col)`.
    fn zero_by_rows(&mut self, col: usize, keep: usize, kill: usize) {
        let (c, s, r) = givens(self.at(keep, col), self.at(kill, col));
        self.rotate_rows(keep, kill, c, s);
        self.set(keep, col, r);
        self.set(kill, col, 0.0);
    }

    /// Stage 1: rotates `x` onto `e₁` while restoring upper bidiagonal form.
    /// Column rotations are mirrored onto `y` when given. Returns the
    /// rotated `x[0]`.
    fn reduce_spike(&mut self, x: &[f64], mut y: Option<&mut [f64]>) -> f64 {
        let n = self.n;
        let mut x = x.to_vec();
        let mirror = |y: &mut Option<&mut [f64]>, keep: usize, kill: usize, c: f64, s: f64| {
            if let Some(y) = y.as_deref_mut() {
                let (u, v) = (y[keep], y[kill]);
                y[keep] = c * u + s * v;
                y[kill] = c * v - s * u;
            }
        };
        for p in (0..n.saturating_sub(1)).rev() {
            let (c, s, r) = givens(x[p], x[p + 1]);
            x[p] = r;
            x[p + 1] = 0.0;
            self.rotate_rows(p, p + 1, c, s);
            let (c, s) = self.zero_by_cols(p + 1, p + 1, p);
            mirror(&mut y, p + 1, p, c, s);
            // Bulge at (j, j + 2); chase it to the bottom.
            let mut j = p;
            while j + 2 < n {
                let (c, s) = self.zero_by_cols(j, j + 1, j + 2);
                mirror(&mut y, j + 1, j + 2, c, s);
                self.zero_by_rows(j + 1, j + 1, j + 2);
                j += 1;
            }
        }
        x.first().copied().unwrap_or(0.0)
    }

    /// Removes a third-superdiagonal bulge at `(j, j + 3)` and everything it
    /// spawns further down.
    fn chase_third_superdiagonal(&mut self, mut j: usize) {
        while j + 3 < self.n {
            self.zero_by_cols(j, j + 2, j + 3);
            self.zero_by_rows(j + 2, j + 2, j + 3);
            j += 2;
        }
    }

    /// Stage 2: folds the dense first row into a band with two superdiagonals.
    fn fold_first_row(&mut self) {
        let n = self.n;
        for c in (3..n).rev() {
            self.zero_by_cols(0, c - 1, c);
            self.zero_by_rows(c - 1, c - 1, c);
            self.chase_third_superdiagonal(c - 1);
        }
    }

    /// Stage 3: band with two superdiagonals to bidiagonal.
    fn band_to_bidiagonal(&mut self) {
        let n = self.n;
        for i in 0..n.saturating_sub(2) {
            self.zero_by_cols(i, i + 1, i + 2);
            self.zero_by_rows(i + 1, i + 1, i + 2);
            self.chase_third_superdiagonal(i + 1);
        }
    }

    fn bidiagonal(&self) -> BidiagonalMatrix {
        let n = self.n;
        BidiagonalMatrix {
            diag: (0..n).map(|i| self.at(i, i)).collect(),
            superdiag: (0..n.saturating_sub(1)).map(|i| self.at(i, i + 1)).collect(),
        }
    }

    fn dense(&self) -> DenseMatrix {
        DenseMatrix::new(self.n, self.n, self.a.clone()).expect("finite workspace")
    }
}

fn check_sigma(sigma: &[f64]) -> Result<()> {
    if sigma.is_empty() {
        return Err(LowRankError::InvalidInput("empty spectrum".into()));
    }
    if let Some(pos) = sigma.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(LowRankError::InvalidInput(format!(
            "singular value {} at position {pos} is not a finite nonnegative number",
            sigma[pos]
        )));
    }
    Ok(())
}

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(LowRankError::DimensionMismatch(format!(
            "{name} has length {}, expected {n}",
            v.len()
        )));
    }
    if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
        return Err(LowRankError::NonFinite(pos));
    }
    Ok(())
}

/// Bidiagonal form of `(I − qqᵀ)·diag(σ)`, together with the number of rotations applied.
pub fn bidiagonalize_projection_update_counted(
    sigma: &[f64],
    q: &[f64],
) -> Result<(BidiagonalMatrix, usize)> {
    check_sigma(sigma)?;
    check_len("q", q, sigma.len())?;
    let norm = norm2(q);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(LowRankError::NotUnitVector { norm });
    }
    let mut w = Work::diagonal(sigma);
    w.reduce_spike(q, None);
    let mut b = w.bidiagonal();
    b.diag[0] = 0.0;
    if let Some(e) = b.superdiag.first_mut() {
        *e = 0.0;
    }
    Ok((b, w.rotations))
}

/// Bidiagonal matrix with the singular values of `(I − qqᵀ)·diag(σ)`.
/// The projected-out direction appears as a zero first row.
pub fn bidiagonalize_projection_update(sigma: &[f64], q: &[f64]) -> Result<BidiagonalMatrix> {
    bidiagonalize_projection_update_counted(sigma, q).map(|(b, _)| b)
}

fn subtraction_work(sigma: &[f64], x: &[f64], y: &[f64]) -> Result<(Work, Vec<f64>)> {
    check_sigma(sigma)?;
    check_len("x", x, sigma.len())?;
    check_len("y", y, sigma.len())?;
    let mut w = Work::diagonal(sigma);
    let mut y = y.to_vec();
    let x0 = w.reduce_spike(x, Some(&mut y));
    let spike: Vec<f64> = y.iter().map(|v| -x0 * v).collect();
    Ok((w, spike))
}

fn add_first_row(w: &mut Work, spike: &[f64]) {
    for (j, v) in spike.iter().enumerate() {
        let cur = w.at(0, j);
        w.set(0, j, cur + v);
    }
}

/// Bidiagonal form of `diag(σ) − x·yᵀ`, together with the number of rotations applied.
pub fn bidiagonalize_subtraction_update_counted(
    sigma: &[f64],
    x: &[f64],
    y: &[f64],
) -> Result<(BidiagonalMatrix, usize)> {
    let (mut w, spike) = subtraction_work(sigma, x, y)?;
    add_first_row(&mut w, &spike);
    w.fold_first_row();
    w.band_to_bidiagonal();
    Ok((w.bidiagonal(), w.rotations))
}

/// Bidiagonal matrix with the singular values of `diag(σ) − x·yᵀ`.
pub fn bidiagonalize_subtraction_update(
    sigma: &[f64],
    x: &[f64],
    y: &[f64],
) -> Result<BidiagonalMatrix> {
    bidiagonalize_subtraction_update_counted(sigma, x, y).map(|(b, _)| b)
}

/// Runs the subtraction update and records every intermediate form.
pub fn subtraction_update_stages(sigma: &[f64], x: &[f64], y: &[f64]) -> Result<SubtractionStages> {
    let (mut w, spike) = subtraction_work(sigma, x, y)?;
    let spiked = SpikedBidiagonal {
        firstrow: spike.clone(),
        body: w.bidiagonal(),
    };
    add_first_row(&mut w, &spike);
    w.fold_first_row();
    let banded = w.dense();
    w.band_to_bidiagonal();
    Ok(SubtractionStages {
        spiked,
        banded,
        bidiagonal: w.bidiagonal(),
        rotations: w.rotations,
    })
}

/// Singular values `(σ_min, σ_max)` of `[[f, g], [0, h]]`.
fn las2(f: f64, g: f64, h: f64) -> (f64, f64) {
    let (fa, ga, ha) = (f.abs(), g.abs(), h.abs());
    let fhmn = fa.min(ha);
    let fhmx = fa.max(ha);
    if fhmn == 0.0 {
        let ssmax = if fhmx == 0.0 {
            ga
        } else {
            let (big, small) = (fhmx.max(ga), fhmx.min(ga));
            big * (1.0 + (small / big) * (small / big)).sqrt()
        };
        (0.0, ssmax)
    } else if ga < fhmx {
        let as_ = 1.0 + fhmn / fhmx;
        let at = (fhmx - fhmn) / fhmx;
        let au = (ga / fhmx) * (ga / fhmx);
        let c = 2.0 / ((as_ * as_ + au).sqrt() + (at * at + au).sqrt());
        (fhmn * c, fhmx / c)
    } else {
        let au = fhmx / ga;
        if au == 0.0 {
            ((fhmn * fhmx) / ga, ga)
        } else {
            let as_ = 1.0 + fhmn / fhmx;
            let at = (fhmx - fhmn) / fhmx;
            let c = 1.0 / ((1.0 + (as_ * au) * (as_ * au)).sqrt() + (1.0 + (at * au) * (at * au)).sqrt());
            let ssmin = (fhmn * c) * au;
            (ssmin + ssmin, ga / (c + c))
        }
    }
}

/// Singular values of an upper bidiagonal matrix, non-increasing.
///
/// Implicit QR with Demmel–Kahan zero-shift sweeps when a shift would
/// destroy relative accuracy, Wilkinson-type shifts otherwise. Blocks are
/// reversed so that chasing always runs from the larger end. At most
/// `30·n` sweeps are performed.
pub fn bidiagonal_singular_values(b: &BidiagonalMatrix) -> Result<Vec<f64>> {
    let mut d = b.diag.clone();
    let mut e = b.superdiag.clone();
    if d.is_empty() || e.len() + 1 != d.len() {
        return Err(LowRankError::DimensionMismatch(
            "malformed bidiagonal matrix".into(),
        ));
    }
    if d.iter().chain(&e).any(|v| !v.is_finite()) {
        return Err(LowRankError::InvalidInput("non-finite bidiagonal entry".into()));
    }
    singular_values_in_place(&mut d, &mut e)?;
    Ok(d)
}

pub(crate) fn singular_values_in_place(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    let eps = EPS / 2.0;
    let unfl = f64::MIN_POSITIVE;
    let tolmul = 10f64.max(100f64.min(eps.powf(-0.125)));
    let tol = tolmul * eps;
    let max_sweeps = 30 * n;

    let smax_all = d.iter().chain(e.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
    if n > 1 && smax_all > 0.0 {
        let mut sminoa = d[0].abs();
        if sminoa != 0.0 {
            let mut mu = sminoa;
            for i in 1..n {
                mu = d[i].abs() * (mu / (mu + e[i - 1].abs()));
                sminoa = sminoa.min(mu);
                if sminoa == 0.0 {
                    break;
                }
            }
        }
        sminoa /= (n as f64).sqrt();
        let thresh = (tol * sminoa).max(6.0 * (n * n) as f64 * unfl);

        let mut sweeps = 0usize;
        // Index of the last row of the active block.
        let mut m = n - 1;
        let mut active: Option<(usize, usize)> = None;
        while m > 0 {
            let mut smax = d[m].abs();
            let mut split = None;
            for ll in (0..m).rev() {
                let abss = d[ll].abs();
                let abse = e[ll].abs();
                if abse <= thresh {
                    split = Some(ll);
                    break;
                }
                smax = smax.max(abss).max(abse);
            }
            let ll = match split {
                Some(ll) => {
                    e[ll] = 0.0;
                    if ll == m - 1 {
                        m -= 1;
                        continue;
                    }
                    ll + 1
                }
                None => 0,
            };
            // e[ll..m] nonzero; block is d[ll..=m].
            if ll == m - 1 {
                let (smin, smx) = las2(d[m - 1], e[m - 1], d[m]);
                d[m - 1] = smx;
                e[m - 1] = 0.0;
                d[m] = smin;
                if m < 2 {
                    break;
                }
                m -= 2;
                continue;
            }
            if active != Some((ll, m)) && d[ll].abs() < d[m].abs() {
                d[ll..=m].reverse();
                e[ll..m].reverse();
            }
            active = Some((ll, m));

            if e[m - 1].abs() <= tol * d[m].abs() {
                e[m - 1] = 0.0;
                continue;
            }
            let mut mu = d[ll].abs();
            let mut smin = mu;
            let mut deflated = false;
            for l in ll..m {
                if e[l].abs() <= tol * mu {
                    e[l] = 0.0;
                    deflated = true;
                    break;
                }
                mu = d[l + 1].abs() * (mu / (mu + e[l].abs()));
                smin = smin.min(mu);
            }
            if deflated {
                continue;
            }

            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(LowRankError::BidiagonalNoConvergence { sweeps: max_sweeps });
            }

            let mut shift = 0.0;
            if (n as f64) * tol * (smin / smax) > eps.max(0.01 * tol) {
                let sll = d[ll].abs();
                shift = las2(d[m - 1], e[m - 1], d[m]).0;
                if sll > 0.0 && (shift / sll) * (shift / sll) < eps {
                    shift = 0.0;
                }
            }

            if shift == 0.0 {
                let mut cs = 1.0;
                let mut oldcs = 1.0;
                let mut oldsn = 0.0;
                for i in ll..m {
                    let (c, s, r) = givens(d[i] * cs, e[i]);
                    cs = c;
                    let sn = s;
                    if i > ll {
                        e[i - 1] = oldsn * r;
                    }
                    let (oc, os, di) = givens(oldcs * r, d[i + 1] * sn);
                    oldcs = oc;
                    oldsn = os;
                    d[i] = di;
                }
                let h = d[m] * cs;
                d[m] = h * oldcs;
                e[m - 1] = h * oldsn;
            } else {
                let mut f = (d[ll].abs() - shift) * (1f64.copysign(d[ll]) + shift / d[ll]);
                let mut g = e[ll];
                for i in ll..m {
                    let (cosr, sinr, r) = givens(f, g);
                    if i > ll {
                        e[i - 1] = r;
                    }
                    f = cosr * d[i] + sinr * e[i];
                    e[i] = cosr * e[i] - sinr * d[i];
                    g = sinr * d[i + 1];
                    d[i + 1] *= cosr;
                    let (cosl, sinl, r) = givens(f, g);
                    d[i] = r;
                    f = cosl * e[i] + sinl * d[i + 1];
                    d[i + 1] = cosl * d[i + 1] - sinl * e[i];
                    if i + 1 < m {
                        g = sinl * e[i + 1];
                        e[i + 1] *= cosl;
                    }
                }
                e[m - 1] = f;
            }
            if e[m - 1].abs() <= thresh {
                e[m - 1] = 0.0;
            }
        }
    }
    for v in d.iter_mut() {
        *v = v.abs();
    }
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::singular_values;
    use proptest::prelude::*;

    fn dense_values(m: &DenseMatrix) -> Vec<f64> {
        singular_values(m).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn bidiagonal_values_examples() {
        let b = BidiagonalMatrix::new(vec![3.0, 1.0], vec![0.0]).unwrap();
        assert_eq!(bidiagonal_singular_values(&b).unwrap(), vec![3.0, 1.0]);
        let b = BidiagonalMatrix::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_close(&bidiagonal_singular_values(&b).unwrap(), &[phi, 1.0 / phi], 1e-15);
        let b = BidiagonalMatrix::new(vec![-2.0], vec![]).unwrap();
        assert_eq!(bidiagonal_singular_values(&b).unwrap(), vec![2.0]);
        assert!(BidiagonalMatrix::new(vec![1.0, 2.0], vec![]).is_err());
    }

    #[test]
    fn bidiagonal_values_graded() {
        // Strongly graded matrix: small singular values keep relative accuracy.
        let d: Vec<f64> = (0..12).map(|i| 10f64.powi(-i)).collect();
        let e: Vec<f64> = (0..11).map(|i| 10f64.powi(-i) * 0.5).collect();
        let b = BidiagonalMatrix::new(d, e).unwrap();
        let s = bidiagonal_singular_values(&b).unwrap();
        let product: f64 = s.iter().product();
        let det: f64 = b.diag.iter().product();
        assert!((product / det - 1.0).abs() < 1e-13);
    }

    #[test]
    fn projection_examples() {
        let b = bidiagonalize_projection_update(&[2.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_close(&bidiagonal_singular_values(&b).unwrap(), &[1.0, 0.0], 1e-15);
        let b = bidiagonalize_projection_update(&[2.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_close(&bidiagonal_singular_values(&b).unwrap(), &[2.0, 0.0], 1e-15);

        let r = 1.0 / 3f64.sqrt();
        let q = [r, r, r];
        let b = bidiagonalize_projection_update(&[3.0, 2.0, 1.0], &q).unwrap();
        let p = DenseMatrix::from_fn(3, 3, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            (id - q[i] * q[j]) * [3.0, 2.0, 1.0][j]
        });
        assert_close(&bidiagonal_singular_values(&b).unwrap(), &dense_values(&p), 1e-12 * 3.0);
        assert!(matches!(
            bidiagonalize_projection_update(&[1.0, 1.0], &[1.0, 1.0]),
            Err(LowRankError::NotUnitVector { .. })
        ));
    }

    #[test]
    fn subtraction_examples() {
        let sigma = [3.0, 2.0, 0.5, 0.1];
        let b = bidiagonalize_subtraction_update(&sigma, &[0.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_close(&bidiagonal_singular_values(&b).unwrap(), &sigma, 1e-15);
        let b = bidiagonalize_subtraction_update(&[1.0, 1.0], &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_close(&bidiagonal_singular_values(&b).unwrap(), &[1.0, 0.0], 1e-15);
    }

    #[test]
    fn subtraction_stage_structure() {
        let n = 9;
        let sigma: Vec<f64> = (0..n).map(|i| 1.0 / (1 + i) as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 3) % 5) as f64 * 0.25 - 0.4).collect();
        let st = subtraction_update_stages(&sigma, &x, &y).unwrap();
        let d1 = st.spiked.to_dense();
        for i in 1..n {
            for j in 0..n {
                if j != i && j != i + 1 {
                    assert_eq!(d1[(i, j)], 0.0, "spiked ({i},{j})");
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if j < i || j > i + 2 {
                    assert_eq!(st.banded[(i, j)], 0.0, "banded ({i},{j})");
                }
            }
        }
        let target = DenseMatrix::from_fn(n, n, |i, j| {
            (if i == j { sigma[i] } else { 0.0 }) - x[i] * y[j]
        });
        let want = dense_values(&target);
        for m in [&d1, &st.banded, &st.bidiagonal.to_dense()] {
            assert_close(&dense_values(m), &want, 1e-13 * 40.0);
        }
    }

    fn spectrum(values: Vec<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = values.into_iter().map(f64::abs).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn projection_matches_dense(raw in prop::collection::vec((0.0f64..1.0, -1.0f64..1.0), 1..=12)) {
            let sigma = spectrum(raw.iter().map(|p| p.0).collect());
            let mut q: Vec<f64> = raw.iter().map(|p| p.1).collect();
            let nq = norm2(&q);
            prop_assume!(nq > 1e-3);
            q.iter_mut().for_each(|v| *v /= nq);
            let n = sigma.len();
            let (b, rot) = bidiagonalize_projection_update_counted(&sigma, &q).unwrap();
            prop_assert!(rot <= 2 * n * n);
            let p = DenseMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                (id - q[i] * q[j]) * sigma[j]
            });
            let want = dense_values(&p);
            let got = bidiagonal_singular_values(&b).unwrap();
            let scale = sigma[0].max(f64::MIN_POSITIVE);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-12 * scale, "{:?} {:?}", got, want);
            }
            prop_assert!((b.frobenius_norm() - p.frobenius_norm()).abs() <= 1e-13 * p.frobenius_norm().max(1e-300) + 1e-15 * scale);
        }

        #[test]
        fn subtraction_matches_dense(raw in prop::collection::vec((0.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..=12)) {
            let sigma = spectrum(raw.iter().map(|p| p.0).collect());
            let x: Vec<f64> = raw.iter().map(|p| p.1).collect();
            let y: Vec<f64> = raw.iter().map(|p| p.2).collect();
            let n = sigma.len();
            let (b, rot) = bidiagonalize_subtraction_update_counted(&sigma, &x, &y).unwrap();
            prop_assert!(rot <= 3 * n * n);
            let target = DenseMatrix::from_fn(n, n, |i, j| (if i == j { sigma[i] } else { 0.0 }) - x[i] * y[j]);
            let want = dense_values(&target);
            let got = bidiagonal_singular_values(&b).unwrap();
            let scale = sigma[0] + norm2(&x) * norm2(&y);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-11 * scale, "{:?} {:?}", got, want);
            }
            let fro = target.frobenius_norm();
            prop_assert!((b.frobenius_norm() - fro).abs() <= 1e-13 * fro + 1e-15 * scale);
        }

        #[test]
        fn bidiagonal_matches_dense(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=50)) {
            let d: Vec<f64> = raw.iter().map(|p| p.0).collect();
            let e: Vec<f64> = raw.iter().skip(1).map(|p| p.1).collect();
            let b = BidiagonalMatrix::new(d, e).unwrap();
            let got = bidiagonal_singular_values(&b).unwrap();
            let want = dense_values(&b.to_dense());
            let scale = b.to_dense().max_abs().max(f64::MIN_POSITIVE);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-13 * scale * 4.0, "{:?} {:?}", got, want);
            }
        }
    }
}
