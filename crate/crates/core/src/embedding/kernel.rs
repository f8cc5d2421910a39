//! Kernels of negative and positive type on finite sets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::PointEmbedding;
use crate::error::{Error, Result};
use crate::spectral::sorted_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    NegativeType,
    PositiveType,
}

/// Symmetric kernel on `{0, …, n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelMatrix {
    values: Vec<Vec<f64>>,
}

impl KernelMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if values.iter().any(|r| r.len() != n) {
            return Err(Error::Embedding("kernel matrix is not square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (values[i][j], values[j][i]);
                if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Embedding(format!("kernel not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.values[i][j])
    }

    /// `Σ c_i c_j k(i, j)`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            for (j, k) in row.iter().enumerate() {
                s += c[i] * c[j] * k;
            }
        }
        s
    }
}

/// Largest eigenvalue of `PKP` with `P` the projection onto mean-zero
/// vectors must be `≤ tol·max(1, max|k|)`; otherwise the top eigenvector is
/// returned as a witness.
pub fn negative_type_test(k: &KernelMatrix, tol: f64) -> Result<()> {
    let n = k.len();
    if n < 2 {
        return Ok(());
    }
    let p = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let pkp = &p * k.matrix() * &p;
    let pkp = (&pkp + pkp.transpose()) * 0.5;
    let (values, vectors) = sorted_eigen(pkp);
    let top = values[n - 1];
    if top > tol * k.max_abs().max(1.0) {
        let witness = vectors.column(n - 1).iter().copied().collect();
        return Err(Error::NotNegativeType { value: top, witness });
    }
    Ok(())
}

/// Largest normalized `Σ c_i c_j k(i, j)` over random unit mean-zero `c`.
pub fn random_negative_type_probe(k: &KernelMatrix, trials: usize, seed: u64) -> f64 {
    let n = k.len();
    if n < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = c.iter().sum::<f64>() / n as f64;
        c.iter_mut().for_each(|x| *x -= mean);
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        if norm2 > 0.0 {
            worst = worst.max(k.quadratic_form(&c) / norm2);
        }
    }
    worst
}

/// Smallest eigenvalue is `≥ −tol·max(1, max|k|)`.
pub fn is_positive_type(k: &KernelMatrix, tol: f64) -> bool {
    if k.is_empty() {
        return true;
    }
    let (values, _) = sorted_eigen(k.matrix());
    values[0] >= -tol * k.max_abs().max(1.0)
}

/// `k(x, y) = ‖φx − φy‖²` for a Hilbert-space embedding.
pub fn embedding_to_neg_kernel(e: &PointEmbedding) -> Result<KernelMatrix> {
    if e.p() != 2.0 {
        return Err(Error::NotHilbert(e.p()));
    }
    let n = e.len();
    KernelMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { e.dist(i, j).powi(2) })
}

/// Hilbert embedding with `‖φx − φy‖² = k(x, y)`, built from the Gram matrix
/// `G(x, y) = (k(x, o) + k(y, o) − k(x, y))/2` based at `o = base`.
/// Eigenvalues of `G` below `1e-9·max|G|` in magnitude are dropped; more
/// negative ones mean `k` is not of negative type.
pub fn neg_kernel_to_embedding(k: &KernelMatrix, base: usize) -> Result<PointEmbedding> {
    let n = k.len();
    if n == 0 {
        return PointEmbedding::new(Vec::new(), 2.0);
    }
    if base >= n {
        return Err(Error::Embedding(format!("base point {base} out of range")));
    }
    if (0..n).any(|i| k.get(i, i).abs() > 1e-12 * k.max_abs().max(1.0)) {
        return Err(Error::Embedding("kernel must vanish on the diagonal".into()));
    }
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * (k.get(i, base) + k.get(j, base) - k.get(i, j)));
    let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let (values, vectors) = sorted_eigen(g);
    if values[0] < -1e-9 * scale {
        let witness = vectors.column(0).iter().copied().collect();
        return Err(Error::NotNegativeType { value: values[0], witness });
    }
    let keep: Vec<usize> = (0..n).filter(|&c| values[c] > 1e-9 * scale).collect();
    let coords: Vec<Vec<f64>> =
        (0..n).map(|i| keep.iter().map(|&c| vectors[(i, c)] * values[c].sqrt()).collect()).collect();
    PointEmbedding::new(coords, 2.0)
}

/// `m_ℓ(r) = ℓ(1 − e^{−r/ℓ})`.
pub fn bernstein(r: f64, l: f64) -> f64 {
    -l * (-r / l).exp_m1()
}

/// Result of truncating a negative-type kernel at scale `ℓ`.
#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    pub kernel: KernelMatrix,
    pub l: f64,
    /// Extremes of `m_ℓ(k)/min(k, ℓ)` over entries with `k > 0`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Ratios lie in `[1 − e^{−1}, 1]` within `1e-12`.
    pub ratio_ok: bool,
    /// Bounded by `ℓ` entrywise.
    pub bounded: bool,
}

/// `m_ℓ ∘ k`; negative type is preserved since `m_ℓ` is a Bernstein function.
pub fn bernstein_truncate(k: &KernelMatrix, l: f64) -> Result<BernsteinReport> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Embedding(format!("truncation scale {l} must be positive")));
    }
    let n = k.len();
    let kernel = KernelMatrix::from_fn(n, |i, j| bernstein(k.get(i, j), l))?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let v = k.get(i, j);
            if v > 0.0 {
                let ratio = kernel.get(i, j) / v.min(l);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
    }
    if lo > hi {
        lo = 1.0;
        hi = 1.0;
    }
    let floor = -(-1.0f64).exp_m1();
    let ratio_ok = lo >= floor - 1e-12 && hi <= 1.0 + 1e-12;
    let bounded = kernel.values().iter().flatten().all(|&v| v <= l * (1.0 + 1e-12));
    Ok(BernsteinReport { kernel, l, min_ratio: lo, max_ratio: hi, ratio_ok, bounded })
}
