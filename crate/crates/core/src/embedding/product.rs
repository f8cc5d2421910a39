//! Direct-sum embeddings of finite products under the sum metric.

use serde::Serialize;

use super::{concave_envelopes, EnvelopePair, PointEmbedding};
use crate::error::{Error, Result};

/// One factor `(X_i, d_i)` with its embedding `ψ^i`.
#[derive(Debug, Clone)]
pub struct ProductFactor {
    pub embedding: PointEmbedding,
    pub metric: Vec<Vec<f64>>,
}

impl ProductFactor {
    pub fn new(embedding: PointEmbedding, metric: Vec<Vec<f64>>) -> Result<Self> {
        if metric.len() != embedding.len() || metric.iter().any(|r| r.len() != embedding.len()) {
            return Err(Error::Embedding("factor metric does not match its embedding".into()));
        }
        Ok(Self { embedding, metric })
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.embedding.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (self.metric[i][j], self.embedding.dist(i, j))))
    }

    fn separation(&self) -> f64 {
        self.pairs().map(|p| p.0).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min)
    }
}

/// Envelopes of the pooled empirical profiles `min_i ρ̂^i_−`, `max_i ρ̂^i_+`
/// on the grid of factor distances and their sums. `a` is the smallest
/// positive factor distance and `b = ρ̂_−(a)`.
pub fn product_envelopes(factors: &[ProductFactor]) -> Result<EnvelopePair> {
    let samples: Vec<(f64, f64)> = factors.iter().flat_map(|f| f.pairs()).filter(|p| p.0 > 0.0).collect();
    if samples.is_empty() {
        return Err(Error::Embedding("factors have no distinct points".into()));
    }
    let a = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut sums = vec![0.0f64];
    for f in factors {
        let mut ds: Vec<f64> = std::iter::once(0.0).chain(f.pairs().map(|p| p.0)).collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        sums = sums.iter().flat_map(|s| ds.iter().map(move |d| s + d)).collect();
        sums.sort_by(f64::total_cmp);
        sums.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    }
    let grid: Vec<f64> = sums.into_iter().filter(|&t| t >= a).collect();
    let f: Vec<f64> = grid
        .iter()
        .map(|&t| samples.iter().filter(|p| p.0 >= t).map(|p| p.1).fold(f64::INFINITY, f64::min))
        .collect();
    let big_f: Vec<f64> =
        grid.iter().map(|&t| samples.iter().filter(|p| p.0 <= t).map(|p| p.1).fold(0.0, f64::max)).collect();
    let b = f[0];
    if !(b > 0.0) {
        return Err(Error::Embedding("a factor embedding identifies distinct points".into()));
    }
    concave_envelopes(&f, &big_f, a, b, &grid)
}

/// `ψ_p = ⊕ψ^i` on the product with the sum metric, checked against
/// `(b^{p−1} c(d))^{1/p} ≤ ‖Δψ_p‖_p ≤ C(d)` on every pair.
#[derive(Debug, Clone, Serialize)]
pub struct ProductEmbedding {
    pub embedding: PointEmbedding,
    pub sizes: Vec<usize>,
    pub pairs_checked: usize,
    /// Smallest `‖Δ‖_p − lower` and `upper − ‖Δ‖_p` seen.
    pub lower_slack: f64,
    pub upper_slack: f64,
    /// First pair `(i, j, d, ‖Δ‖)` violating either bound.
    pub violation: Option<(usize, usize, f64, f64)>,
}

impl ProductEmbedding {
    /// Product coordinates of a point; the last factor varies fastest.
    pub fn coordinates(&self, mut point: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for (k, &n) in self.sizes.iter().enumerate().rev() {
            out[k] = point % n;
            point /= n;
        }
        out
    }
}

pub fn product_embedding(factors: &[ProductFactor], p: f64, env: &EnvelopePair) -> Result<ProductEmbedding> {
    if factors.is_empty() {
        return Err(Error::Embedding("empty product".into()));
    }
    for (i, f) in factors.iter().enumerate() {
        if f.embedding.p() != p {
            return Err(Error::Embedding(format!("factor {i} is measured in ℓ_{} rather than ℓ_{p}", f.embedding.p())));
        }
        let sep = f.separation();
        if sep < env.a * (1.0 - 1e-12) {
            return Err(Error::BelowSeparation { factor: i, got: sep, a: env.a });
        }
    }
    let sizes: Vec<usize> = factors.iter().map(|f| f.embedding.len()).collect();
    let total: usize = sizes.iter().product();
    let coords = |mut point: usize| {
        let mut out = vec![0; sizes.len()];
        for (k, &n) in sizes.iter().enumerate().rev() {
            out[k] = point % n;
            point /= n;
        }
        out
    };
    let points: Vec<Vec<usize>> = (0..total).map(coords).collect();
    let vectors: Vec<Vec<f64>> = points
        .iter()
        .map(|c| c.iter().zip(factors).flat_map(|(&x, f)| f.embedding.vector(x).iter().copied()).collect())
        .collect();
    let embedding = PointEmbedding::new(vectors, p)?;
    let tol = 1e-9;
    let (mut lower_slack, mut upper_slack) = (f64::INFINITY, f64::INFINITY);
    let mut violation = None;
    let mut pairs_checked = 0;
    for i in 0..total {
        for j in i + 1..total {
            let d: f64 = points[i].iter().zip(&points[j]).zip(factors).map(|((&x, &y), f)| f.metric[x][y]).sum();
            let norm = embedding.dist(i, j);
            let lower = (env.b.powf(p - 1.0) * env.lower_at(d)).powf(1.0 / p);
            let upper = env.upper_at(d);
            pairs_checked += 1;
            lower_slack = lower_slack.min(norm - lower);
            upper_slack = upper_slack.min(upper - norm);
            let bad = norm < lower - tol * lower.max(1.0) || norm > upper + tol * upper.max(1.0);
            if bad && violation.is_none() {
                violation = Some((i, j, d, norm));
            }
        }
    }
    Ok(ProductEmbedding { embedding, sizes, pairs_checked, lower_slack, upper_slack, violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic_factor(m: usize) -> ProductFactor {
        let metric = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let k = (i + m - j) % m;
                        k.min(m - k) as f64
                    })
                    .collect()
            })
            .collect();
        ProductFactor::new(PointEmbedding::circle(m), metric).unwrap()
    }

    #[test]
    fn torus_of_circles() {
        let factors = vec![cyclic_factor(5), cyclic_factor(7)];
        let env = product_envelopes(&factors).unwrap();
        assert!(env.violation(1e-9).is_none());
        let prod = product_embedding(&factors, 2.0, &env).unwrap();
        assert_eq!(prod.embedding.len(), 35);
        assert_eq!(prod.pairs_checked, 35 * 34 / 2);
        assert!(prod.violation.is_none(), "{:?}", prod.violation);
        assert_eq!(prod.coordinates(8), vec![1, 1]);
    }

    #[test]
    fn separation_is_enforced() {
        let mut f = cyclic_factor(4);
        let env = product_envelopes(&[f.clone()]).unwrap();
        for row in f.metric.iter_mut() {
            for d in row.iter_mut() {
                *d *= 0.5;
            }
        }
        f.embedding = PointEmbedding::circle(4);
        assert!(matches!(product_embedding(&[f], 2.0, &env), Err(Error::BelowSeparation { factor: 0, .. })));
    }
}
