//! Embeddings of finite metric spaces into `ℓ_p`, their compression
//! profiles, and the constructions built on them.

mod box_cone;
mod cone;
mod envelope;
mod kernel;
mod product;

pub use box_cone::{box_to_cone_embedding, BoxConeEmbedding, BoxConePair};
pub use cone::{slice_to_cone_embedding, ConeCheck, ConeEmbedding, ConeInequalityReport, ConePoint};
pub use envelope::{concave_envelopes, EnvelopePair};
pub use kernel::{
    bernstein, bernstein_truncate, embedding_to_neg_kernel, is_positive_type, neg_kernel_to_embedding, negative_type_test,
    random_negative_type_probe, BernsteinReport, KernelKind, KernelMatrix,
};
pub use product::{product_embedding, product_envelopes, ProductEmbedding, ProductFactor};

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Element, FiniteQuotientGroup};

/// One coordinate vector per point, measured in the `p`-norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEmbedding {
    vectors: Vec<Vec<f64>>,
    p: f64,
}

impl PointEmbedding {
    pub fn new(vectors: Vec<Vec<f64>>, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Embedding(format!("norm exponent {p} outside [1, ∞)")));
        }
        if let Some(first) = vectors.first() {
            let dim = first.len();
            if vectors.iter().any(|v| v.len() != dim) {
                return Err(Error::Embedding("vectors have different dimensions".into()));
            }
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Embedding("non-finite coordinate".into()));
        }
        Ok(Self { vectors, p })
    }

    /// Every point sent to the origin of `ℝ^dim`.
    pub fn zero(points: usize, dim: usize, p: f64) -> Self {
        Self { vectors: vec![vec![0.0; dim]; points], p }
    }

    /// Points of `ℤ/m` on the circle of circumference `m` (radius `m/2π`):
    /// chords between residues at cyclic distance `k` lie in `[2k/π, k]`.
    pub fn circle(m: usize) -> Self {
        let r = m as f64 / (2.0 * PI);
        let vectors = (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        Self { vectors, p: 2.0 }
    }

    /// Circle embedding of a cyclic group, placing each element by its residue.
    pub fn cyclic_group(group: &FiniteQuotientGroup) -> Result<Self> {
        let m = group.order();
        let circle = Self::circle(m);
        let map = (0..m)
            .map(|i| match group.element(i) {
                Element::Residue(r) => Ok(*r as usize % m),
                _ => Err(Error::Embedding("circle embedding needs a cyclic group".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(circle.pullback(&map))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn norm(&self, i: usize) -> f64 {
        p_norm(self.vectors[i].iter().copied(), self.p)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        p_norm(self.vectors[i].iter().zip(&self.vectors[j]).map(|(a, b)| a - b), self.p)
    }

    /// `φ ∘ π` for a map `π` given by its values.
    pub fn pullback(&self, map: &[usize]) -> Self {
        Self { vectors: map.iter().map(|&i| self.vectors[i].clone()).collect(), p: self.p }
    }

    /// Coordinate concatenation; the result uses exponent `p`.
    pub fn direct_sum(parts: &[&PointEmbedding], p: f64) -> Result<Self> {
        let n = parts.first().map_or(0, |e| e.len());
        if parts.iter().any(|e| e.len() != n) {
            return Err(Error::Embedding("summands cover different point sets".into()));
        }
        let vectors = (0..n).map(|i| parts.iter().flat_map(|e| e.vectors[i].iter().copied()).collect()).collect();
        Self::new(vectors, p)
    }

    /// `point,x0,x1,…` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point");
        for k in 0..self.dim() {
            out.push_str(&format!(",x{k}"));
        }
        out.push('\n');
        for (i, v) in self.vectors.iter().enumerate() {
            out.push_str(&i.to_string());
            for x in v {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn p_norm(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p == 2.0 {
        values.map(|x| x * x).sum::<f64>().sqrt()
    } else if p == 1.0 {
        values.map(f64::abs).sum()
    } else {
        values.map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Empirical control functions of an embedding on a finite metric space,
/// tabulated at the distinct positive distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionProfile {
    pub radii: Vec<f64>,
    /// `ρ̂_−(r) = min{‖ψx − ψx′‖ : d(x, x′) ≥ r}`.
    pub rho_minus: Vec<f64>,
    /// `ρ̂_+(r) = max{‖ψx − ψx′‖ : d(x, x′) ≤ r}`.
    pub rho_plus: Vec<f64>,
    /// `max{‖ψx − ψx′‖ : d(x, x′) = 0}`.
    pub zero_plus: f64,
    /// `max ‖ψx‖`.
    pub ball_radius: f64,
    /// `ρ̂_−` is positive at every tabulated radius.
    pub separating: bool,
}

/// Collects `(d, ‖Δ‖)` for every pair `i < j`.
pub fn pair_samples(embedding: &PointEmbedding, metric: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = embedding.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((metric[i][j], embedding.dist(i, j)));
        }
    }
    out
}

impl CompressionProfile {
    /// Profile of `(distance, norm)` samples. Radii are the distinct positive
    /// distances; zero-distance pairs (possible for pseudometrics) still count
    /// towards `ρ̂_+`.
    pub fn from_samples(samples: &[(f64, f64)], ball_radius: f64) -> Self {
        let mut all: Vec<(f64, f64)> = samples.to_vec();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut radii: Vec<f64> = all.iter().map(|s| s.0).filter(|&d| d > 0.0).collect();
        radii.dedup();
        let zero_plus = all.iter().filter(|s| s.0 <= 0.0).map(|s| s.1).fold(0.0, f64::max);
        let mut rho_plus = Vec::with_capacity(radii.len());
        let mut run_max = zero_plus;
        let mut k = 0;
        for &r in &radii {
            while k < all.len() && all[k].0 <= r {
                run_max = run_max.max(all[k].1);
                k += 1;
            }
            rho_plus.push(run_max);
        }
        let mut rho_minus = vec![0.0; radii.len()];
        let mut run_min = f64::INFINITY;
        let mut k = all.len();
        for (idx, &r) in radii.iter().enumerate().rev() {
            while k > 0 && all[k - 1].0 >= r {
                run_min = run_min.min(all[k - 1].1);
                k -= 1;
            }
            rho_minus[idx] = run_min;
        }
        let separating = rho_minus.iter().all(|&v| v > 0.0);
        Self { radii, rho_minus, rho_plus, zero_plus, ball_radius, separating }
    }

    /// `ρ̂_−` at an arbitrary `t`: the minimum over tabulated radii `≥ t`;
    /// infinite past the largest distance.
    pub fn rho_minus_at(&self, t: f64) -> f64 {
        let idx = self.radii.partition_point(|&r| r < t);
        self.rho_minus.get(idx).copied().unwrap_or(f64::INFINITY)
    }

    /// `ρ̂_+` at an arbitrary `t ≥ 0`.
    pub fn rho_plus_at(&self, t: f64) -> f64 {
        let idx = self.radii.partition_point(|&r| r <= t);
        if idx == 0 {
            self.zero_plus
        } else {
            self.rho_plus[idx - 1]
        }
    }

    /// `r,rho_minus,rho_plus` rows sorted by `r`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,rho_minus,rho_plus\n");
        for ((r, lo), hi) in self.radii.iter().zip(&self.rho_minus).zip(&self.rho_plus) {
            out.push_str(&format!("{r},{lo},{hi}\n"));
        }
        out
    }

    /// Least-squares line through `(r, ρ̂_+(r))` has zero residual (within `tol`).
    pub fn rho_plus_affine(&self, tol: f64) -> bool {
        let n = self.radii.len();
        if n < 3 {
            return true;
        }
        let mx = self.radii.iter().sum::<f64>() / n as f64;
        let my = self.rho_plus.iter().sum::<f64>() / n as f64;
        let sxx: f64 = self.radii.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = self.radii.iter().zip(&self.rho_plus).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        self.radii.iter().zip(&self.rho_plus).all(|(x, y)| (my + slope * (x - mx) - y).abs() <= tol * (1.0 + y.abs()))
    }
}

pub fn compression_profile(embedding: &PointEmbedding, metric: &[Vec<f64>]) -> Result<CompressionProfile> {
    if metric.len() != embedding.len() {
        return Err(Error::Embedding("embedding and metric cover different point sets".into()));
    }
    let ball = (0..embedding.len()).map(|i| embedding.norm(i)).fold(0.0, f64::max);
    Ok(CompressionProfile::from_samples(&pair_samples(embedding, metric), ball))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_metric(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect()).collect()
    }

    #[test]
    fn isometric_line_profile() {
        let e = PointEmbedding::new((0..5).map(|i| vec![i as f64]).collect(), 2.0).unwrap();
        let prof = compression_profile(&e, &path_metric(5)).unwrap();
        assert_eq!(prof.radii, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(prof.rho_minus, prof.radii);
        assert_eq!(prof.rho_plus, prof.radii);
        assert!(prof.separating && prof.rho_plus_affine(1e-12));
        assert_eq!(prof.to_csv().lines().next(), Some("r,rho_minus,rho_plus"));
    }

    #[test]
    fn constant_embedding_is_not_separating() {
        let prof = compression_profile(&PointEmbedding::zero(4, 3, 2.0), &path_metric(4)).unwrap();
        assert!(prof.rho_plus.iter().all(|&v| v == 0.0));
        assert!(!prof.separating);
    }

    #[test]
    fn circle_chords() {
        let e = PointEmbedding::circle(9);
        for i in 0..9usize {
            for j in 0..9usize {
                let k = (i as i64 - j as i64).rem_euclid(9).min((j as i64 - i as i64).rem_euclid(9)) as f64;
                let c = e.dist(i, j);
                assert!(c <= k + 1e-12 && c >= 2.0 * k / PI - 1e-12);
            }
        }
    }

    #[test]
    fn step_lookups() {
        let prof = CompressionProfile::from_samples(&[(1.0, 0.5), (2.0, 3.0), (3.0, 2.0)], 0.0);
        assert_eq!(prof.rho_minus, vec![0.5, 2.0, 2.0]);
        assert_eq!(prof.rho_plus, vec![0.5, 3.0, 3.0]);
        assert_eq!(prof.rho_minus_at(1.5), 2.0);
        assert_eq!(prof.rho_plus_at(0.5), 0.0);
        assert_eq!(prof.rho_plus_at(2.5), 3.0);
        assert_eq!(prof.rho_minus_at(7.0), f64::INFINITY);
    }
}
