//! Concave-type envelopes of control functions sampled on a grid.

use serde::Serialize;

use crate::error::{Error, Result};

/// `c ≤ f` and `C ≥ F` with `c(t)/t` nonincreasing and `C(t)/t`
/// nondecreasing, tabulated on `grid`.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopePair {
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub big_f: Vec<f64>,
    pub c: Vec<f64>,
    pub big_c: Vec<f64>,
    pub a: f64,
    pub b: f64,
    // Running min of f(s)/s and running max of F(s)/s.
    m: Vec<f64>,
    big_m: Vec<f64>,
}

/// `c(t) = t·min_{a≤s≤t} f(s)/s` and `C(t) = t·max_{a≤s≤t} F(s)/s` over grid
/// points `s`. Entries of `f` may be `+∞` (no constraint) except the first.
pub fn concave_envelopes(f: &[f64], big_f: &[f64], a: f64, b: f64, grid: &[f64]) -> Result<EnvelopePair> {
    let n = grid.len();
    if n == 0 || f.len() != n || big_f.len() != n {
        return Err(Error::Embedding("samples and grid must have the same nonzero length".into()));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Embedding("a and b must be positive".into()));
    }
    if grid[0] < a || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Embedding("grid must be increasing and start at or above a".into()));
    }
    if !f[0].is_finite() {
        return Err(Error::Embedding("f must be finite at the first grid point".into()));
    }
    for i in 1..n {
        if f[i] < f[i - 1] || big_f[i] < big_f[i - 1] {
            return Err(Error::NotMonotone { index: i });
        }
    }
    if let Some(i) = f.iter().position(|&v| v < b) {
        return Err(Error::Embedding(format!("f falls below b at grid index {i}")));
    }
    let mut m = Vec::with_capacity(n);
    let mut big_m = Vec::with_capacity(n);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        lo = lo.min(f[i] / grid[i]);
        hi = hi.max(big_f[i] / grid[i]);
        m.push(lo);
        big_m.push(hi);
    }
    let c = grid.iter().zip(&m).map(|(t, m)| t * m).collect();
    let big_c = grid.iter().zip(&big_m).map(|(t, m)| t * m).collect();
    Ok(EnvelopePair { grid: grid.to_vec(), f: f.to_vec(), big_f: big_f.to_vec(), c, big_c, a, b, m, big_m })
}

impl EnvelopePair {
    // Largest grid index with grid value ≤ t, allowing for rounding in t.
    fn index_at(&self, t: f64) -> Option<usize> {
        let k = self.grid.partition_point(|&g| g <= t * (1.0 + 1e-12));
        k.checked_sub(1)
    }

    /// `c(t)` off the grid, using the ratio bound at the last grid point `≤ t`;
    /// extended homogeneously below the grid.
    pub fn lower_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.index_at(t) {
            Some(k) => t * self.m[k],
            None => t * self.m[0],
        }
    }

    /// `C(t)` off the grid; below the grid `F(θa) = θF(a)`.
    pub fn upper_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.index_at(t) {
            Some(k) => t * self.big_m[k],
            None => t * self.big_m[0],
        }
    }

    /// First violated law, checked at relative tolerance `tol`: `c ≤ f`,
    /// `C ≥ F`, monotonicity, and `c(θr) ≥ θc(r)`, `C(θr) ≤ θC(r)` on every
    /// grid pair.
    pub fn violation(&self, tol: f64) -> Option<String> {
        let n = self.grid.len();
        let slack = |x: f64| tol * x.abs().max(1.0);
        for i in 0..n {
            if self.c[i] > self.f[i] + slack(self.f[i]) {
                return Some(format!("c > f at t = {}", self.grid[i]));
            }
            if self.big_c[i] < self.big_f[i] - slack(self.big_f[i]) {
                return Some(format!("C < F at t = {}", self.grid[i]));
            }
            if i > 0 && (self.c[i] < self.c[i - 1] - slack(self.c[i]) || self.big_c[i] < self.big_c[i - 1] - slack(self.big_c[i])) {
                return Some(format!("envelope decreases at t = {}", self.grid[i]));
            }
        }
        for j in 0..n {
            for i in 0..j {
                let theta = self.grid[i] / self.grid[j];
                if self.c[i] < theta * self.c[j] - slack(self.c[j]) {
                    return Some(format!("c(θr) < θc(r) at r = {}, θr = {}", self.grid[j], self.grid[i]));
                }
                if self.big_c[i] > theta * self.big_c[j] + slack(self.big_c[j]) {
                    return Some(format!("C(θr) > θC(r) at r = {}, θr = {}", self.grid[j], self.grid[i]));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_is_its_own_envelope() {
        let grid: Vec<f64> = (0..=400).map(|i| 1.0 + i as f64 * 0.01).collect();
        let f: Vec<f64> = grid.iter().map(|t| t.sqrt()).collect();
        let env = concave_envelopes(&f, &f, 1.0, 1.0, &grid).unwrap();
        for (c, f) in env.c.iter().zip(&f) {
            assert!((c - f).abs() < 1e-12);
        }
        assert!(env.violation(1e-9).is_none());
    }

    #[test]
    fn linear_envelope() {
        let grid: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let f: Vec<f64> = grid.iter().map(|t| 3.0 * t).collect();
        let env = concave_envelopes(&f, &f, 1.0, 3.0, &grid).unwrap();
        assert_eq!(env.c, f);
        assert_eq!(env.big_c, f);
    }

    #[test]
    fn rejects_bad_input() {
        let grid = [1.0, 2.0, 3.0];
        assert!(matches!(concave_envelopes(&[1.0, 0.5, 2.0], &[1.0, 1.0, 1.0], 1.0, 0.1, &grid), Err(Error::NotMonotone { index: 1 })));
        assert!(concave_envelopes(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], 1.0, 2.0, &grid).is_err());
    }
}
