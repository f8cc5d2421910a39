//! Families on the cone glued from slice families by radial averaging, and
//! their marginals back on a slice.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{l1_distance, verify_hr, Closeness, HrCertificate, HrFamily};
use crate::embedding::ConePoint;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A family on sampled cone points: every integer level in `1..=r_max` and
/// the midpoints `m + 1/2` of the cutoff region `[1, 2M]`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeHrFamily {
    pub points: Vec<ConePoint>,
    pub family: HrFamily,
    /// Averaging window `M = ⌈R/ε⌉`.
    pub window: u64,
    /// The common support radius of the slice families.
    #[serde(with = "rational::serde_str")]
    pub slice_s: Rational,
    pub base_point: usize,
}

impl ConeHrFamily {
    pub fn index_of(&self, p: ConePoint) -> Option<usize> {
        self.points.iter().position(|&q| q == p)
    }
}

/// `a(r, y) = φ(r)δ_{(1,y₀)} + (1 − φ(r))·M⁻¹ Σ_{m=⌊r⌋−M+1}^{⌊r⌋} c_m(y)`
/// placed on level `m`, with `φ(r) = clamp((2M − r)/M, 0, 1)`. Slice
/// families must share `(R, ε, S)`. The family carries `(R, 7ε, M + S)`;
/// [`cone_hr_certificate`] also allows the `2M + diam(Y, d_1)` radius of
/// the cutoff region.
pub fn cone_hr_from_slice_hr(
    slices: &BTreeMap<u64, HrFamily>,
    r: Rational,
    eps: Rational,
    r_max: u64,
    base_point: usize,
) -> Result<ConeHrFamily> {
    if r <= rational::zero() || eps <= rational::zero() || r_max == 0 {
        return Err(Error::Family("cone families need R > 0, ε > 0 and at least one level".into()));
    }
    let first = slices.values().next().ok_or_else(|| Error::MissingSlice("1".into()))?;
    let y_count = first.len();
    let slice_s = first.s;
    for (m, f) in slices {
        if f.len() != y_count || f.s != slice_s || f.r != r || f.eps != eps {
            return Err(Error::Family(format!("slice family at level {m} has different domain or parameters")));
        }
    }
    if base_point >= y_count {
        return Err(Error::Family(format!("base point {base_point} out of range")));
    }
    let window = rational::ceil_u64(&(r / eps)).max(1);
    let big_m = Rational::from_integer(window as i128);
    let mut levels: Vec<Rational> = (1..=r_max).map(|m| Rational::from_integer(m as i128)).collect();
    let half = Rational::new(1, 2);
    for m in 1..(2 * window).min(r_max) {
        levels.push(Rational::from_integer(m as i128) + half);
    }
    levels.sort();
    let points: Vec<ConePoint> = levels.iter().flat_map(|&s| (0..y_count).map(move |y| ConePoint { s, y })).collect();
    let integer_index = |m: u64, y: usize| -> usize {
        let before = levels.iter().filter(|&&l| l < Rational::from_integer(m as i128)).count();
        before * y_count + y
    };
    let mut raw = Vec::with_capacity(points.len());
    for p in &points {
        let phi = rational::max(rational::zero(), rational::min(rational::one(), (big_m * 2 - p.s) / big_m));
        let mut atoms = Vec::new();
        if !rational::is_zero(&phi) {
            atoms.push((integer_index(1, base_point), phi));
        }
        let rest = rational::one() - phi;
        if !rational::is_zero(&rest) {
            let top = rational::floor_u64(&p.s);
            let weight = rest / big_m;
            for m in (top + 1 - window)..=top {
                let c = slices.get(&m).ok_or_else(|| Error::MissingSlice(m.to_string()))?;
                for a in c.vector(p.y) {
                    atoms.push((integer_index(m, a.point), weight * a.mass));
                }
            }
        }
        raw.push(atoms);
    }
    let n = points.len();
    let family = HrFamily::new(n, raw, r, eps * 7, big_m + slice_s)?;
    Ok(ConeHrFamily { points, family, window, slice_s, base_point })
}

/// Worst variation over one class of pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationCheck {
    pub pairs: usize,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    #[serde(with = "rational::serde_str")]
    pub max_variation: Rational,
    pub witness: Option<(ConePoint, ConePoint)>,
}

impl VariationCheck {
    fn new(bound: Rational) -> Self {
        Self { pairs: 0, bound, max_variation: rational::zero(), witness: None }
    }

    fn record(&mut self, a: ConePoint, b: ConePoint, v: Rational) {
        self.pairs += 1;
        if self.witness.is_none() || v > self.max_variation {
            self.max_variation = v;
            self.witness = Some((a, b));
        }
    }

    pub fn passed(&self) -> bool {
        self.max_variation <= self.bound
    }
}

/// Same-level pairs with `d_r ≤ R` vary by `≤ ε`, radial moves by `k ≤ R` by
/// `≤ 6ε`, and all pairs at cone distance `≤ R` by `≤ 7ε`; supports lie
/// within `max(M + S, 2M + diam(Y, d_1))`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeHrCertificate {
    /// Slice levels whose family failed its own certificate.
    pub slice_failures: Vec<u64>,
    pub same_level: VariationCheck,
    pub radial: VariationCheck,
    pub combined: VariationCheck,
    #[serde(with = "rational::serde_str")]
    pub support_bound: Rational,
    #[serde(with = "rational::serde_str")]
    pub max_support: Rational,
    pub support_witness: Option<(ConePoint, ConePoint)>,
}

impl ConeHrCertificate {
    pub fn passed(&self) -> bool {
        self.slice_failures.is_empty()
            && self.same_level.passed()
            && self.radial.passed()
            && self.combined.passed()
            && self.max_support <= self.support_bound
    }
}

struct Metrics<F> {
    cache: HashMap<Rational, Vec<Vec<Rational>>>,
    source: F,
}

impl<F: Fn(Rational) -> Result<Vec<Vec<Rational>>>> Metrics<F> {
    fn get(&mut self, u: Rational) -> Result<&Vec<Vec<Rational>>> {
        if !self.cache.contains_key(&u) {
            let m = (self.source)(u)?;
            self.cache.insert(u, m);
        }
        Ok(&self.cache[&u])
    }

    // Exact cone distance: u ↦ s + t − 2u + d_u is concave on [1, min(s, t)].
    fn cone(&mut self, a: ConePoint, b: ConePoint) -> Result<Rational> {
        let (lo, hi) = if a.s <= b.s { (a.s, b.s) } else { (b.s, a.s) };
        let along = hi - lo + self.get(lo)?[a.y][b.y];
        let below = lo + hi - Rational::from_integer(2) + self.get(rational::one())?[a.y][b.y];
        Ok(rational::min(along, below))
    }
}

/// Exhaustive certificate; `level_metric(u)` is `d_u` on `Y` and
/// `slice_metric(m)` the metric each slice family was built for.
pub fn cone_hr_certificate<F, G>(
    cone: &ConeHrFamily,
    slices: &BTreeMap<u64, HrFamily>,
    level_metric: F,
    slice_metric: G,
) -> Result<ConeHrCertificate>
where
    F: Fn(Rational) -> Result<Vec<Vec<Rational>>>,
    G: Fn(u64) -> Result<Vec<Vec<Rational>>>,
{
    let mut slice_failures = Vec::new();
    for (&m, f) in slices {
        if !verify_hr(f, &slice_metric(m)?, Closeness::AtMost)?.passed {
            slice_failures.push(m);
        }
    }
    let mut metrics = Metrics { cache: HashMap::new(), source: level_metric };
    let r = cone.family.r;
    let eps = cone.family.eps / 7;
    let diam1 = metrics.get(rational::one())?.iter().flatten().copied().max().unwrap_or_else(rational::zero);
    let big_m = Rational::from_integer(cone.window as i128);
    let support_bound = rational::max(big_m + cone.slice_s, big_m * 2 + diam1);
    let mut same_level = VariationCheck::new(eps);
    let mut radial = VariationCheck::new(eps * 6);
    let mut combined = VariationCheck::new(eps * 7);
    let pts = &cone.points;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (a, b) = (pts[i], pts[j]);
            let d = metrics.cone(a, b)?;
            let same = a.s == b.s && metrics.get(a.s)?[a.y][b.y] <= r;
            let radial_move = a.y == b.y && a.s != b.s && rational::abs(&(a.s - b.s)) <= r;
            if !(same || radial_move || d <= r) {
                continue;
            }
            let v = l1_distance(cone.family.vector(i), cone.family.vector(j));
            if same {
                same_level.record(a, b, v);
            }
            if radial_move {
                radial.record(a, b, v);
            }
            if d <= r {
                combined.record(a, b, v);
            }
        }
    }
    let mut max_support = rational::zero();
    let mut support_witness = None;
    for (i, &p) in pts.iter().enumerate() {
        for atom in cone.family.vector(i) {
            let d = metrics.cone(p, pts[atom.point])?;
            if support_witness.is_none() || d > max_support {
                max_support = d;
                support_witness = Some((p, pts[atom.point]));
            }
        }
    }
    Ok(ConeHrCertificate { slice_failures, same_level, radial, combined, support_bound, max_support, support_witness })
}

/// `b(s, y)(y′) = Σ_t a(s, y)(t, y′)` on the slice at level `s`, with support
/// radius `2·S_cone`.
pub fn marginalize_cone_hr(cone: &ConeHrFamily, s: Rational, support_bound: Rational) -> Result<HrFamily> {
    let rows: Vec<usize> = (0..cone.points.len()).filter(|&i| cone.points[i].s == s).collect();
    if rows.is_empty() {
        return Err(Error::MissingSlice(rational::format(&s)));
    }
    let raw = rows
        .iter()
        .map(|&i| cone.family.vector(i).iter().map(|a| (cone.points[a.point].y, a.mass)).collect())
        .collect();
    HrFamily::new(rows.len(), raw, cone.family.r, cone.family.eps, support_bound * 2)
}

/// `‖b(y) − b(y′)‖_1 ≤ ‖a(s,y) − a(s,y′)‖_1` on all pairs, and supports
/// within `2·S_cone` in `(Y, d_s)`.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalCertificate {
    pub contraction_ok: bool,
    pub contraction_witness: Option<(usize, usize)>,
    pub support: HrCertificate,
}

impl MarginalCertificate {
    pub fn passed(&self) -> bool {
        self.contraction_ok && self.support.support_ok
    }
}

pub fn marginal_certificate(cone: &ConeHrFamily, s: Rational, marginal: &HrFamily, d_s: &[Vec<Rational>]) -> Result<MarginalCertificate> {
    let rows: Vec<usize> = (0..cone.points.len()).filter(|&i| cone.points[i].s == s).collect();
    if rows.len() != marginal.len() {
        return Err(Error::Family("marginal does not match the cone level".into()));
    }
    let mut contraction_witness = None;
    'outer: for (y, &i) in rows.iter().enumerate() {
        for (y2, &j) in rows.iter().enumerate().skip(y + 1) {
            if marginal.variation(y, y2) > l1_distance(cone.family.vector(i), cone.family.vector(j)) {
                contraction_witness = Some((y, y2));
                break 'outer;
            }
        }
    }
    let support = verify_hr(marginal, d_s, Closeness::AtMost)?;
    Ok(MarginalCertificate { contraction_ok: contraction_witness.is_none(), contraction_witness, support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn constant_slices(levels: u64, y: usize, r: Rational, eps: Rational) -> BTreeMap<u64, HrFamily> {
        (1..=levels).map(|m| (m, HrFamily::new(y, vec![vec![(0, q(1, 1))]; y], r, eps, q(2, 1)).unwrap())).collect()
    }

    fn discrete(y: usize) -> impl Fn(Rational) -> Result<Vec<Vec<Rational>>> {
        move |u: Rational| {
            let one = rational::min(u, q(2, 1));
            Ok((0..y).map(|i| (0..y).map(|j| if i == j { q(0, 1) } else { one }).collect()).collect())
        }
    }

    #[test]
    fn constant_slices_interpolate_two_deltas() {
        let slices = constant_slices(8, 3, q(1, 1), q(1, 2));
        let cone = cone_hr_from_slice_hr(&slices, q(1, 1), q(1, 2), 8, 0).unwrap();
        assert_eq!(cone.window, 2);
        let i = cone.index_of(ConePoint { s: q(3, 1), y: 1 }).unwrap();
        // φ(3) = 1/2: half on (1, 0), half on levels 2 and 3 at y = 0.
        let atoms: Vec<(ConePoint, Rational)> = cone.family.vector(i).iter().map(|a| (cone.points[a.point], a.mass)).collect();
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[0], (ConePoint { s: q(1, 1), y: 0 }, q(1, 2)));
        let cert = cone_hr_certificate(&cone, &slices, discrete(3), |_| discrete(3)(q(1, 1))).unwrap();
        assert!(cert.passed(), "{cert:?}");
        let marg = marginalize_cone_hr(&cone, q(5, 1), cert.support_bound).unwrap();
        assert!(marg.vector(0) == marg.vector(2));
    }

    #[test]
    fn missing_slice_named() {
        let mut slices = constant_slices(6, 2, q(1, 1), q(1, 2));
        slices.remove(&4);
        match cone_hr_from_slice_hr(&slices, q(1, 1), q(1, 2), 6, 0) {
            Err(Error::MissingSlice(level)) => assert_eq!(level, "4"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unit_window() {
        let slices = constant_slices(4, 2, q(1, 1), q(1, 1));
        let cone = cone_hr_from_slice_hr(&slices, q(1, 1), q(1, 1), 4, 1).unwrap();
        assert_eq!(cone.window, 1);
        let i = cone.index_of(ConePoint { s: q(3, 1), y: 0 }).unwrap();
        assert_eq!(cone.family.vector(i).len(), 1);
        assert_eq!(cone.points[cone.family.vector(i)[0].point], ConePoint { s: q(3, 1), y: 0 });
    }
}
