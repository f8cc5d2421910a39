//! Slices of the completion cone from box-space embeddings.

use serde::Serialize;

use super::{bernstein_truncate, embedding_to_neg_kernel, neg_kernel_to_embedding, PointEmbedding};
use crate::error::{Error, Result};
use crate::profinite::{slice_decomposition, slice_metric_closed_form, TruncatedCompletion};
use crate::rational::{self, Rational};

/// One pair of the slice with both sides of the certified bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoxConePair {
    pub g: usize,
    pub h: usize,
    pub delta_prev: u32,
    pub delta_cur: u32,
    #[serde(with = "rational::serde_str")]
    pub d_s: Rational,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `Ψ_s = (φ_{N−1} ∘ π_{N−1}) ⊕ Bernstein(φ_N ∘ π_N, ℓ = (s·a_N)²)` with
/// `N = N_s`, checked on every pair against
/// `(ρ_−(δ_{N−1}) + √(1 − e^{−1})·ρ_−(min(δ_N, s·a_N)))/√2 ≤ ‖ΔΨ_s‖ ≤ ρ_+(δ_{N−1}) + ρ_+(min(δ_N, s·a_N))`.
/// These bounds depend on `s` only through `d_s′`, which is within
/// constants of `d_s`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxConeEmbedding {
    #[serde(with = "rational::serde_str")]
    pub s: Rational,
    pub n_s: usize,
    /// `s·a_1 < 1`: only the truncated level-1 embedding is used.
    pub below_first_scale: bool,
    pub l: f64,
    pub embedding: PointEmbedding,
    pub bernstein_ratio_ok: bool,
    pub pairs: usize,
    /// `d_s′/2 ≤ d_s ≤ d_s′ + 1` on every pair.
    pub sandwich_ok: bool,
    pub lower_violation: Option<BoxConePair>,
    pub upper_violation: Option<BoxConePair>,
    /// Extremes of `‖ΔΨ‖/lower` and `‖ΔΨ‖/upper` over pairs with positive bounds.
    pub min_lower_ratio: f64,
    pub max_upper_ratio: f64,
}

impl BoxConeEmbedding {
    pub fn passed(&self) -> bool {
        self.bernstein_ratio_ok && self.sandwich_ok && self.lower_violation.is_none() && self.upper_violation.is_none()
    }
}

/// `box_embeddings[n − 1]` embeds `G_n` with `ρ_−(δ_n) ≤ ‖Δφ_n‖ ≤ ρ_+(δ_n)`;
/// the certificate is rechecked before use.
pub fn box_to_cone_embedding(
    trunc: &TruncatedCompletion,
    s: Rational,
    box_embeddings: &[PointEmbedding],
    rho_minus: &dyn Fn(f64) -> f64,
    rho_plus: &dyn Fn(f64) -> f64,
) -> Result<BoxConeEmbedding> {
    let level = trunc.level();
    if box_embeddings.len() < level {
        return Err(Error::Embedding(format!("need box embeddings for levels 1..={level}")));
    }
    let deltas = trunc.delta_matrices();
    for n in 1..=level {
        let e = &box_embeddings[n - 1];
        let order = trunc.chain().group(n).order();
        if e.len() != order {
            return Err(Error::Embedding(format!("level {n} embedding has {} points, group has {order}", e.len())));
        }
        if e.p() != 2.0 {
            return Err(Error::NotHilbert(e.p()));
        }
        for g in 0..trunc.len() {
            for h in g + 1..trunc.len() {
                let (a, b) = (trunc.project(n, g), trunc.project(n, h));
                let r = deltas[n][g][h] as f64;
                let norm = e.dist(a, b);
                if norm < rho_minus(r) * (1.0 - 1e-9) || norm > rho_plus(r) * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::Embedding(format!("level {n} embedding violates its control functions at ({a}, {b})")));
                }
            }
        }
    }
    let dec = slice_decomposition(trunc, s)?;
    let big_n = dec.level_used;
    let cap = rational::to_f64(&dec.cap);
    let l = cap * cap;
    let pull = |n: usize| {
        let map: Vec<usize> = (0..trunc.len()).map(|g| trunc.project(n, g)).collect();
        box_embeddings[n - 1].pullback(&map)
    };
    let kernel = embedding_to_neg_kernel(&pull(big_n))?;
    let truncated = bernstein_truncate(&kernel, l)?;
    let recovered = neg_kernel_to_embedding(&truncated.kernel, 0)?;
    let embedding = if big_n >= 2 {
        PointEmbedding::direct_sum(&[&pull(big_n - 1), &recovered], 2.0)?
    } else {
        recovered
    };
    let d_s = slice_metric_closed_form(trunc, s)?;
    let sandwich_ok = dec.d_prime.iter().enumerate().all(|(g, row)| {
        row.iter().enumerate().all(|(h, dp)| {
            let ds = d_s.get(g, h);
            *dp <= ds * 2 && ds <= dp + rational::one()
        })
    });
    let floor = (-(-1.0f64).exp_m1()).sqrt();
    let mut lower_violation = None;
    let mut upper_violation = None;
    let (mut min_lower_ratio, mut max_upper_ratio) = (f64::INFINITY, 0.0f64);
    let mut pairs = 0;
    for g in 0..trunc.len() {
        for h in g + 1..trunc.len() {
            let (dp, dc) = (dec.delta_prev[g][h], dec.delta_cur[g][h]);
            let capped = (dc as f64).min(cap);
            let norm = embedding.dist(g, h);
            let lower = (rho_minus(dp as f64) + floor * rho_minus(capped)) / 2f64.sqrt();
            let upper = rho_plus(dp as f64) + rho_plus(capped);
            pairs += 1;
            if lower > 0.0 {
                min_lower_ratio = min_lower_ratio.min(norm / lower);
            }
            if upper > 0.0 {
                max_upper_ratio = max_upper_ratio.max(norm / upper);
            }
            let pair = || BoxConePair { g, h, delta_prev: dp, delta_cur: dc, d_s: d_s.get(g, h), norm, lower, upper };
            // The Gram factorization is accurate to about 1e-6 relative.
            if norm < lower * (1.0 - 1e-6) && lower_violation.is_none() {
                lower_violation = Some(pair());
            }
            if norm > upper * (1.0 + 1e-6) + 1e-9 && upper_violation.is_none() {
                upper_violation = Some(pair());
            }
        }
    }
    Ok(BoxConeEmbedding {
        s,
        n_s: dec.n_s,
        below_first_scale: dec.n_s == 0,
        l,
        embedding,
        bernstein_ratio_ok: truncated.ratio_ok,
        pairs,
        sandwich_ok,
        lower_violation,
        upper_violation,
        min_lower_ratio,
        max_upper_ratio,
    })
}
