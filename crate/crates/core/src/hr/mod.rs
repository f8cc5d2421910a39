//! Hulanicki–Reiter families: finitely supported probability vectors varying
//! slowly on close pairs, with supports in uniformly bounded balls.

mod cone;
mod kernel;

pub use cone::{
    cone_hr_certificate, cone_hr_from_slice_hr, marginal_certificate, marginalize_cone_hr, ConeHrCertificate,
    ConeHrFamily, MarginalCertificate, VariationCheck,
};
pub use kernel::{induced_group_kernel, InducedKernel, InducedKernelInput, SupportEcho};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::Realization;
use crate::profinite::{slice_metric_closed_form, TruncatedCompletion};
use crate::rational::{self, Rational};

/// One atom of a finitely supported measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mass {
    pub point: usize,
    #[serde(with = "rational::serde_str")]
    pub mass: Rational,
}

/// Whether "close" means `d ≤ R` or `d < R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Closeness {
    AtMost,
    Below,
}

impl Closeness {
    fn holds(self, d: Rational, r: Rational) -> bool {
        match self {
            Closeness::AtMost => d <= r,
            Closeness::Below => d < r,
        }
    }
}

/// `x ↦ a(x)` with parameters `(R, ε, S)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrFamily {
    assignment: Vec<Vec<Mass>>,
    #[serde(with = "rational::serde_str")]
    pub r: Rational,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub s: Rational,
}

impl HrFamily {
    /// Atoms are merged and sorted; every vector must be a probability vector
    /// on `0..points`.
    pub fn new(points: usize, raw: Vec<Vec<(usize, Rational)>>, r: Rational, eps: Rational, s: Rational) -> Result<Self> {
        if raw.len() != points {
            return Err(Error::Family(format!("{} vectors for {points} points", raw.len())));
        }
        let mut assignment = Vec::with_capacity(points);
        for (x, atoms) in raw.into_iter().enumerate() {
            let mut atoms = atoms;
            atoms.sort_by_key(|a| a.0);
            let mut merged: Vec<Mass> = Vec::with_capacity(atoms.len());
            for (p, m) in atoms {
                if p >= points {
                    return Err(Error::Family(format!("vector {x} charges point {p} outside the domain")));
                }
                if m < rational::zero() {
                    return Err(Error::Family(format!("vector {x} has negative mass")));
                }
                match merged.last_mut() {
                    Some(last) if last.point == p => last.mass += m,
                    _ => merged.push(Mass { point: p, mass: m }),
                }
            }
            merged.retain(|a| !rational::is_zero(&a.mass));
            let total: Rational = merged.iter().map(|a| a.mass).sum();
            if total != rational::one() {
                return Err(Error::Family(format!("vector {x} has total mass {}", rational::format(&total))));
            }
            assignment.push(merged);
        }
        Ok(Self { assignment, r, eps, s })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn vector(&self, x: usize) -> &[Mass] {
        &self.assignment[x]
    }

    /// `‖a(x) − a(x′)‖_1`.
    pub fn variation(&self, x: usize, x2: usize) -> Rational {
        l1_distance(&self.assignment[x], &self.assignment[x2])
    }

    /// `point,support,mass` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,support,mass\n");
        for (x, v) in self.assignment.iter().enumerate() {
            for a in v {
                out.push_str(&format!("{x},{},{}\n", a.point, rational::format(&a.mass)));
            }
        }
        out
    }
}

pub(crate) fn l1_distance(a: &[Mass], b: &[Mass]) -> Rational {
    let (mut i, mut j) = (0, 0);
    let mut total = rational::zero();
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) if p.point == q.point => {
                total += rational::abs(&(p.mass - q.mass));
                i += 1;
                j += 1;
            }
            (Some(p), Some(q)) if p.point < q.point => {
                total += p.mass;
                i += 1;
            }
            (Some(p), None) => {
                total += p.mass;
                i += 1;
            }
            (_, Some(q)) => {
                total += q.mass;
                j += 1;
            }
            (None, None) => break,
        }
    }
    total
}

/// Exact verdict of [`verify_hr`] with worst witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrCertificate {
    pub passed: bool,
    pub variation_ok: bool,
    pub support_ok: bool,
    pub close_pairs: usize,
    #[serde(with = "rational::serde_str")]
    pub max_variation: Rational,
    pub variation_witness: Option<(usize, usize)>,
    #[serde(with = "rational::serde_str")]
    pub max_support: Rational,
    /// `(x, p)` with `p ∈ supp a(x)` at the largest distance.
    pub support_witness: Option<(usize, usize)>,
}

/// Checks `‖a(x) − a(x′)‖_1 ≤ ε` on close pairs and `supp a(x) ⊆ B(x, S)`.
pub fn verify_hr(family: &HrFamily, metric: &[Vec<Rational>], closeness: Closeness) -> Result<HrCertificate> {
    let n = family.len();
    if metric.len() != n || metric.iter().any(|r| r.len() != n) {
        return Err(Error::Family("metric and family cover different point sets".into()));
    }
    let rows: Vec<(usize, Rational, Option<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut close = 0;
            let mut worst = rational::zero();
            let mut witness = None;
            for x2 in x + 1..n {
                if closeness.holds(metric[x][x2], family.r) {
                    close += 1;
                    let v = family.variation(x, x2);
                    if witness.is_none() || v > worst {
                        worst = v;
                        witness = Some((x, x2));
                    }
                }
            }
            (close, worst, witness)
        })
        .collect();
    let mut close_pairs = 0;
    let mut max_variation = rational::zero();
    let mut variation_witness = None;
    for (c, v, w) in rows {
        close_pairs += c;
        if w.is_some() && (variation_witness.is_none() || v > max_variation) {
            max_variation = v;
            variation_witness = w;
        }
    }
    let mut max_support = rational::zero();
    let mut support_witness = None;
    for x in 0..n {
        for a in family.vector(x) {
            let d = metric[x][a.point];
            if support_witness.is_none() || d > max_support {
                max_support = d;
                support_witness = Some((x, a.point));
            }
        }
    }
    let variation_ok = max_variation <= family.eps;
    let support_ok = max_support <= family.s;
    Ok(HrCertificate {
        passed: variation_ok && support_ok,
        variation_ok,
        support_ok,
        close_pairs,
        max_variation,
        variation_witness,
        max_support,
        support_witness,
    })
}

/// `s·d` on the truncated completion.
pub fn scaled_completion_metric(trunc: &TruncatedCompletion, s: Rational) -> Vec<Vec<Rational>> {
    let m = trunc.len();
    (0..m).map(|g| (0..m).map(|h| s * trunc.distance(g, h)).collect()).collect()
}

/// A singleton family with the level it was cut at.
#[derive(Debug, Clone, Serialize)]
pub struct SingletonHr {
    pub family: HrFamily,
    pub n_star: usize,
}

// Greatest n ≤ N with s·a_n ≥ r, zero if none.
fn cut_level(trunc: &TruncatedCompletion, s: Rational, r: Rational) -> usize {
    (1..=trunc.level()).filter(|&n| s * trunc.weights().get(n) >= r).max().unwrap_or(0)
}

// BFS-least element of G_N over each class of the level-n projection.
fn representatives(trunc: &TruncatedCompletion, n: usize) -> Vec<usize> {
    let classes = if n == 0 { 1 } else { trunc.chain().group(n).order() };
    let mut rep = vec![usize::MAX; classes];
    for g in 0..trunc.len() {
        let c = trunc.project(n, g);
        if rep[c] == usize::MAX {
            rep[c] = g;
        }
    }
    rep
}

/// `a(g) = δ` at the BFS-least element sharing `g`'s level-`n*` projection,
/// `n*` greatest with `s·a_{n*} ≥ R`. Relative to `s·d` the variation is
/// zero on pairs at distance `< R` and `S = s·a_{n*+1}` (the diameter when
/// `n* = 0`).
pub fn singleton_hr(trunc: &TruncatedCompletion, s: Rational, r: Rational) -> Result<SingletonHr> {
    if s < rational::one() || r <= rational::zero() {
        return Err(Error::Family("singleton families need s ≥ 1 and R > 0".into()));
    }
    let n_star = cut_level(trunc, s, r);
    let rep = representatives(trunc, n_star);
    let raw = (0..trunc.len()).map(|g| vec![(rep[trunc.project(n_star, g)], rational::one())]).collect();
    let support = if n_star == 0 {
        scaled_completion_metric(trunc, s).iter().flatten().copied().max().unwrap_or_else(rational::zero)
    } else {
        s * trunc.weights().get(n_star + 1)
    };
    let family = HrFamily::new(trunc.len(), raw, r, rational::zero(), support)?;
    Ok(SingletonHr { family, n_star })
}

/// A Følner-averaged singleton family for the warped slice `(G_N, d_s)`.
#[derive(Debug, Clone, Serialize)]
pub struct AveragedHr {
    pub family: HrFamily,
    pub n_star: usize,
    pub window: u64,
}

/// `a(g) = L⁻¹ Σ_{k<L} δ_{rep(σᵏg)}` with `σ` the first generator,
/// `L = ⌈2R/ε⌉` and representatives cut at scale `R′ = 2R`. On a chain of
/// cyclic groups a pair at warped distance `≤ R` differs by at most `R`
/// generator moves at the cut level, so the variation is `≤ 2R/L ≤ ε`, and
/// supports lie within `R′ + L − 1` of `g`.
pub fn averaged_singleton_hr(trunc: &TruncatedCompletion, s: Rational, r: Rational, eps: Rational) -> Result<AveragedHr> {
    if s < rational::one() || r <= rational::zero() || eps <= rational::zero() {
        return Err(Error::Family("averaged families need s ≥ 1, R > 0 and ε > 0".into()));
    }
    if trunc.level() == 0 || !trunc.chain().groups().iter().all(|g| matches!(g.realization(), Realization::Cyclic { .. })) {
        return Err(Error::Family("averaging along a generator needs a chain of cyclic groups".into()));
    }
    let window = rational::ceil_u64(&(r * 2 / eps)).max(1);
    let r_cut = r * 2;
    let n_star = cut_level(trunc, s, r_cut);
    let rep = representatives(trunc, n_star);
    let group = trunc.chain().group(trunc.level());
    let sigma = group.generators().non_identity().next().ok_or_else(|| Error::Family("no generators".into()))?;
    let weight = Rational::new(1, window as i128);
    let raw = (0..trunc.len())
        .map(|g| {
            let mut h = g;
            let mut atoms = Vec::with_capacity(window as usize);
            for _ in 0..window {
                atoms.push((rep[trunc.project(n_star, h)], weight));
                h = group.left_mul(sigma, h);
            }
            atoms
        })
        .collect();
    let support = r_cut + Rational::from_integer(window as i128 - 1);
    let family = HrFamily::new(trunc.len(), raw, r, eps, support)?;
    Ok(AveragedHr { family, n_star, window })
}

/// Verifies an averaged family against the closed-form warped slice metric.
pub fn averaged_certificate(trunc: &TruncatedCompletion, s: Rational, avg: &AveragedHr) -> Result<HrCertificate> {
    let d_s = slice_metric_closed_form(trunc, s)?;
    verify_hr(&avg.family, &d_s.values, Closeness::AtMost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profinite::{QuotientChain, WeightSequence};
    use crate::rational::q;

    fn fix_b() -> TruncatedCompletion {
        let chain = QuotientChain::cyclic(3, 3).unwrap();
        let weights = WeightSequence::new(vec![q(1, 1), q(1, 2), q(1, 16)]).unwrap();
        TruncatedCompletion::build(chain, weights, 3, false).unwrap()
    }

    fn line(n: usize) -> Vec<Vec<Rational>> {
        (0..n).map(|i| (0..n).map(|j| Rational::from_integer((i as i128 - j as i128).abs())).collect()).collect()
    }

    #[test]
    fn constant_family_passes() {
        let fam = HrFamily::new(4, vec![vec![(0, q(1, 1))]; 4], q(10, 1), q(0, 1), q(3, 1)).unwrap();
        let cert = verify_hr(&fam, &line(4), Closeness::AtMost).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.max_variation, q(0, 1));
    }

    #[test]
    fn identity_family_threshold() {
        let raw: Vec<_> = (0..4).map(|x| vec![(x, q(1, 1))]).collect();
        let tight = HrFamily::new(4, raw.clone(), q(1, 1), q(1, 1), q(0, 1)).unwrap();
        let cert = verify_hr(&tight, &line(4), Closeness::AtMost).unwrap();
        assert!(!cert.passed);
        assert_eq!(cert.max_variation, q(2, 1));
        assert_eq!(cert.variation_witness, Some((0, 1)));
        let loose = HrFamily::new(4, raw.clone(), q(1, 1), q(2, 1), q(0, 1)).unwrap();
        assert!(verify_hr(&loose, &line(4), Closeness::AtMost).unwrap().passed);
        let short = HrFamily::new(4, raw, q(1, 2), q(0, 1), q(0, 1)).unwrap();
        assert!(verify_hr(&short, &line(4), Closeness::AtMost).unwrap().passed);
    }

    #[test]
    fn rejects_non_probability() {
        assert!(HrFamily::new(1, vec![vec![(0, q(1, 2))]], q(1, 1), q(1, 1), q(1, 1)).is_err());
        assert!(HrFamily::new(1, vec![vec![(0, q(3, 2)), (0, q(-1, 2))]], q(1, 1), q(1, 1), q(1, 1)).is_err());
    }

    #[test]
    fn singleton_on_fix_b() {
        let trunc = fix_b();
        let single = singleton_hr(&trunc, q(8, 1), q(3, 1)).unwrap();
        assert_eq!(single.n_star, 2);
        assert_eq!(single.family.s, q(1, 2));
        let cert = verify_hr(&single.family, &scaled_completion_metric(&trunc, q(8, 1)), Closeness::Below).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.max_variation, q(0, 1));
        let top = singleton_hr(&trunc, q(1, 1), q(2, 1)).unwrap();
        assert_eq!(top.n_star, 0);
        let ident = singleton_hr(&trunc, q(16, 1), q(1, 1)).unwrap();
        assert_eq!(ident.n_star, 3);
        assert_eq!(ident.family.s, q(0, 1));
    }

    #[test]
    fn averaged_on_warped_slices() {
        let trunc = fix_b();
        for s in [1, 2, 4, 8, 16, 40] {
            let avg = averaged_singleton_hr(&trunc, q(s, 1), q(1, 1), q(1, 2)).unwrap();
            assert_eq!(avg.window, 4);
            let cert = averaged_certificate(&trunc, q(s, 1), &avg).unwrap();
            assert!(cert.passed, "s = {s}: {cert:?}");
        }
    }
}
