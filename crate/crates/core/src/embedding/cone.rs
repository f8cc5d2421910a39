//! Gluing slice embeddings at dyadic levels into an embedding of the cone.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{CompressionProfile, PointEmbedding};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A point `(s, y)` of the cone over `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ConePoint {
    #[serde(with = "rational::serde_str")]
    pub s: Rational,
    pub y: usize,
}

/// `Φ(s, y) = s ⊕ θ_s φ_n(y) ⊕ (1 − θ_s) φ_{n+1}(y)` for `2ⁿ ≤ s ≤ 2ⁿ⁺¹`,
/// `θ_s = (2ⁿ⁺¹ − s)/2ⁿ`, with one coordinate block per level in range.
#[derive(Debug, Clone, Serialize)]
pub struct ConeEmbedding {
    pub n_min: usize,
    pub n_max: usize,
    slices: Vec<PointEmbedding>,
    offsets: Vec<usize>,
    /// Measured `max_n max_y ‖φ_n(y)‖ / 2ⁿ`.
    pub d: f64,
    /// Every slice embedding has all its points at one norm.
    pub equal_norm: bool,
}

/// `slices[k]` embeds `(Y, d_{2^{n_min+k}})`; each must stay in the ball of
/// radius `d_bound·2ⁿ`.
pub fn slice_to_cone_embedding(slices: Vec<PointEmbedding>, d_bound: f64, n_min: usize) -> Result<ConeEmbedding> {
    let Some(first) = slices.first() else {
        return Err(Error::Embedding("no slice embeddings".into()));
    };
    let points = first.len();
    let mut offsets = Vec::with_capacity(slices.len());
    let mut offset = 1;
    let mut d = 0.0f64;
    let mut equal_norm = true;
    for (k, e) in slices.iter().enumerate() {
        if e.p() != 2.0 {
            return Err(Error::NotHilbert(e.p()));
        }
        if e.len() != points {
            return Err(Error::Embedding("slices cover different point sets".into()));
        }
        let level = n_min + k;
        let scale = 2f64.powi(level as i32);
        let norms: Vec<f64> = (0..points).map(|y| e.norm(y)).collect();
        let top = norms.iter().copied().fold(0.0, f64::max);
        if top > d_bound * scale * (1.0 + 1e-12) {
            return Err(Error::BallRadius { level, norm: top, bound: d_bound * scale });
        }
        let low = norms.iter().copied().fold(f64::INFINITY, f64::min);
        equal_norm &= top - low <= 1e-9 * top.max(1.0);
        d = d.max(top / scale);
        offsets.push(offset);
        offset += e.dim();
    }
    let n_max = n_min + slices.len() - 1;
    Ok(ConeEmbedding { n_min, n_max, slices, offsets, d, equal_norm })
}

impl ConeEmbedding {
    pub fn dim(&self) -> usize {
        1 + self.slices.iter().map(PointEmbedding::dim).sum::<usize>()
    }

    pub fn points(&self) -> usize {
        self.slices[0].len()
    }

    pub fn slice(&self, n: usize) -> &PointEmbedding {
        &self.slices[n - self.n_min]
    }

    // Interval index n with 2ⁿ ≤ s ≤ 2ⁿ⁺¹ inside the level range.
    fn interval(&self, s: Rational) -> Result<usize> {
        let lo = Rational::from_integer(1i128 << self.n_min);
        let hi = Rational::from_integer(1i128 << self.n_max);
        if s < lo || s > hi || self.n_max >= 100 {
            return Err(Error::Embedding(format!("radial coordinate {} outside [{lo}, {hi}]", rational::format(&s))));
        }
        let mut n = self.n_min;
        while n + 1 < self.n_max && Rational::from_integer(1i128 << (n + 1)) <= s {
            n += 1;
        }
        Ok(n)
    }

    pub fn eval(&self, p: ConePoint) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim()];
        v[0] = rational::to_f64(&p.s);
        if p.y >= self.points() {
            return Err(Error::Embedding(format!("point {} out of range", p.y)));
        }
        let n = self.interval(p.s)?;
        if self.n_max == self.n_min {
            self.write_block(&mut v, n, p.y, 1.0);
            return Ok(v);
        }
        let base = Rational::from_integer(1i128 << n);
        let theta = rational::to_f64(&((base * 2 - p.s) / base));
        self.write_block(&mut v, n, p.y, theta);
        self.write_block(&mut v, n + 1, p.y, 1.0 - theta);
        Ok(v)
    }

    fn write_block(&self, v: &mut [f64], n: usize, y: usize, weight: f64) {
        let k = n - self.n_min;
        let off = self.offsets[k];
        for (slot, x) in v[off..].iter_mut().zip(self.slices[k].vector(y)) {
            *slot = weight * x;
        }
    }

    /// The embedding restricted to a finite sample.
    pub fn sample(&self, points: &[ConePoint]) -> Result<PointEmbedding> {
        PointEmbedding::new(points.iter().map(|&p| self.eval(p)).collect::<Result<_>>()?, 2.0)
    }

    /// Checks the four inequalities on every pair of `points`. `level_metric`
    /// returns `d_u` on `Y` for a rational scale `u ≥ 1`; the cone distance
    /// is `min(|t − s| + d_{min(s,t)}, s + t − 2 + d_1)`, which is exact since
    /// `u ↦ s + t − 2u + d_u` is concave.
    pub fn verify<F>(&self, points: &[ConePoint], level_metric: F) -> Result<ConeInequalityReport>
    where
        F: Fn(Rational) -> Result<Vec<Vec<Rational>>>,
    {
        let mut metrics: HashMap<Rational, Vec<Vec<f64>>> = HashMap::new();
        let mut fetch = |u: Rational| -> Result<()> {
            if let std::collections::hash_map::Entry::Vacant(e) = metrics.entry(u) {
                let m = level_metric(u)?;
                if m.len() != self.points() {
                    return Err(Error::Embedding("level metric covers a different point set".into()));
                }
                e.insert(m.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect());
            }
            Ok(())
        };
        fetch(rational::one())?;
        for n in self.n_min..=self.n_max {
            fetch(Rational::from_integer(1i128 << n))?;
        }
        for p in points {
            fetch(p.s)?;
        }
        let mut samples = Vec::new();
        let mut ball = 0.0f64;
        for n in self.n_min..=self.n_max {
            let m = &metrics[&Rational::from_integer(1i128 << n)];
            let e = self.slice(n);
            samples.extend(super::pair_samples(e, m));
            ball = ball.max((0..e.len()).map(|y| e.norm(y)).fold(0.0, f64::max));
        }
        let profile = CompressionProfile::from_samples(&samples, ball);
        let vectors: Vec<Vec<f64>> = points.iter().map(|&p| self.eval(p)).collect::<Result<_>>()?;
        let d1 = &metrics[&rational::one()];
        let d = self.d;
        let checks: Vec<[ConeCheck; 4]> = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let mut out = [ConeCheck::default(), ConeCheck::default(), ConeCheck::default(), ConeCheck::default()];
                for j in i + 1..points.len() {
                    let (a, b) = if points[i].s <= points[j].s { (points[i], points[j]) } else { (points[j], points[i]) };
                    let (s, t) = (rational::to_f64(&a.s), rational::to_f64(&b.s));
                    let ds = metrics[&a.s][a.y][b.y];
                    let d_gamma = (t - s + ds).min(s + t - 2.0 + d1[a.y][b.y]);
                    let norm = super::p_norm(vectors[i].iter().zip(&vectors[j]).map(|(x, y)| x - y), 2.0);
                    let pair = (a, b);
                    if b.s >= a.s * 2 {
                        out[0].record(pair, d_gamma / 8.0, norm);
                        out[1].record(pair, norm, (5.0 * d + 1.0) * d_gamma);
                    }
                    if b.s <= a.s * 2 {
                        let upper = 3.0 * profile.rho_plus_at(4.0 * d_gamma) + (12.0 * d + 1.0) * d_gamma;
                        out[2].record(pair, norm, upper);
                        let lower = if ds > 0.0 { profile.rho_minus_at(ds / 2.0).powi(2) / 8.0 } else { 0.0 };
                        out[3].record(pair, lower, norm * norm - (t - s) * (t - s));
                    }
                }
                out
            })
            .collect();
        let mut merged = [ConeCheck::default(), ConeCheck::default(), ConeCheck::default(), ConeCheck::default()];
        for row in checks {
            for (m, c) in merged.iter_mut().zip(row) {
                m.merge(c);
            }
        }
        let [far_lower, far_upper, near_upper, near_lower] = merged;
        Ok(ConeInequalityReport { d, equal_norm: self.equal_norm, profile, far_lower, far_upper, near_upper, near_lower })
    }
}

/// Tally of `lhs ≤ rhs` over pairs, at relative tolerance `1e-9`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConeCheck {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` seen.
    pub min_slack: Option<f64>,
    /// First violating pair with its two sides.
    pub witness: Option<(ConePoint, ConePoint, f64, f64)>,
}

impl ConeCheck {
    fn record(&mut self, pair: (ConePoint, ConePoint), lhs: f64, rhs: f64) {
        self.pairs += 1;
        let slack = rhs - lhs;
        self.min_slack = Some(self.min_slack.map_or(slack, |m: f64| m.min(slack)));
        if lhs > rhs + 1e-9 * lhs.abs().max(rhs.abs()).max(1.0) {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some((pair.0, pair.1, lhs, rhs));
            }
        }
    }

    fn merge(&mut self, other: ConeCheck) {
        self.pairs += other.pairs;
        self.violations += other.violations;
        self.min_slack = match (self.min_slack, other.min_slack) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if self.witness.is_none() {
            self.witness = other.witness;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Far pairs (`t ≥ 2s`): `d_Γ/8 ≤ ‖ΔΦ‖ ≤ (5D+1)d_Γ`. Near pairs
/// (`s ≤ t ≤ 2s`): `‖ΔΦ‖ ≤ 3ρ̂_+(4d_Γ) + (12D+1)d_Γ` and
/// `‖ΔΦ‖² − (t−s)² ≥ ρ̂_−(d_s/2)²/8`, with `ρ̂_±` pooled over the slices.
#[derive(Debug, Clone, Serialize)]
pub struct ConeInequalityReport {
    pub d: f64,
    pub equal_norm: bool,
    pub profile: CompressionProfile,
    pub far_lower: ConeCheck,
    pub far_upper: ConeCheck,
    pub near_upper: ConeCheck,
    pub near_lower: ConeCheck,
}

impl ConeInequalityReport {
    pub fn passed(&self) -> bool {
        self.far_lower.passed() && self.far_upper.passed() && self.near_upper.passed() && self.near_lower.passed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(s: i128, y: usize) -> ConePoint {
        ConePoint { s: Rational::from_integer(s), y }
    }

    #[test]
    fn constant_slices_give_radial_coordinate() {
        let cone = slice_to_cone_embedding(vec![PointEmbedding::zero(3, 1, 2.0); 3], 1.0, 0).unwrap();
        assert_eq!(cone.eval(point(3, 1)).unwrap()[0], 3.0);
        assert!(cone.eval(point(3, 1)).unwrap()[1..].iter().all(|&x| x == 0.0));
        assert!(cone.eval(point(5, 0)).is_err());
    }

    #[test]
    fn continuous_at_dyadic_levels() {
        let e = PointEmbedding::new(vec![vec![0.5], vec![-0.5]], 2.0).unwrap();
        let cone = slice_to_cone_embedding(vec![e.clone(), e.clone(), e], 1.0, 0).unwrap();
        let eps = Rational::new(1, 1_000_000);
        let two = Rational::from_integer(2);
        let left = cone.eval(ConePoint { s: two - eps, y: 0 }).unwrap();
        let at = cone.eval(ConePoint { s: two, y: 0 }).unwrap();
        let right = cone.eval(ConePoint { s: two + eps, y: 0 }).unwrap();
        for k in 0..at.len() {
            assert!((left[k] - at[k]).abs() < 1e-5 && (right[k] - at[k]).abs() < 1e-5);
        }
        assert_eq!(&at[1..], &[0.0, 0.5, 0.0]);
    }

    #[test]
    fn ball_radius_rejected() {
        let e = PointEmbedding::new(vec![vec![5.0], vec![0.0]], 2.0).unwrap();
        assert!(matches!(slice_to_cone_embedding(vec![e], 1.0, 1), Err(Error::BallRadius { level: 1, .. })));
    }
}
