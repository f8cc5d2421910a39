//! Quotient chains, their truncated completions, box spaces and the closed
//! form of the slice metrics.
//!
//! Levels are 1-based: `groups[0]` is `G_1`. The trivial group `G_0` is
//! implicit, so `δ_0 ≡ 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::group::{FiniteQuotientGroup, GeneratorSet};
use crate::metric::{FiniteMetricSpace, Provenance, WarpedDistanceMatrix};
use crate::rational::{self, Rational};
use crate::warp::WarpSystem;

/// Finite quotients `G_1, …, G_N` of one group with connecting epimorphisms
/// `f_n : G_n → G_{n−1}` compatible with the generator images.
#[derive(Debug, Clone)]
pub struct QuotientChain {
    groups: Vec<FiniteQuotientGroup>,
    /// `connecting[n][g]` is `f_{n+2}(g)` for `g ∈ G_{n+2}`.
    connecting: Vec<Vec<usize>>,
}

impl QuotientChain {
    /// Derives each `f_n` from the generator labels (a word for `g` in `G_n`
    /// is sent to the same word in `G_{n−1}`) and verifies it is well
    /// defined, surjective and that orders strictly increase.
    pub fn new(groups: Vec<FiniteQuotientGroup>) -> Result<Self> {
        let mut connecting = Vec::new();
        for pair in groups.windows(2) {
            connecting.push(derive_connecting(&pair[1], &pair[0])?);
        }
        Self::with_connecting(groups, connecting)
    }

    /// Uses explicit connecting maps, `connecting[k]` sending `G_{k+2}` to `G_{k+1}`.
    pub fn with_connecting(groups: Vec<FiniteQuotientGroup>, connecting: Vec<Vec<usize>>) -> Result<Self> {
        if connecting.len() + 1 != groups.len().max(1) {
            return Err(Error::Chain("one connecting map per consecutive pair is required".into()));
        }
        for (k, pair) in groups.windows(2).enumerate() {
            let (lower, upper) = (&pair[0], &pair[1]);
            if upper.generators() != lower.generators() {
                return Err(Error::Chain(format!("levels {} and {} use different generator labels", k + 1, k + 2)));
            }
            if upper.order() <= lower.order() {
                return Err(Error::Chain(format!("|G_{}| is not larger than |G_{}|", k + 2, k + 1)));
            }
            let f = &connecting[k];
            if f.len() != upper.order() || f.iter().any(|&x| x >= lower.order()) {
                return Err(Error::Chain(format!("connecting map {} has the wrong shape", k + 2)));
            }
            for g in 0..upper.order() {
                for s in 0..upper.generators().len() {
                    if f[upper.left_mul(s, g)] != lower.left_mul(s, f[g]) {
                        return Err(Error::Chain(format!("f_{} does not commute with generator {s} at {g}", k + 2)));
                    }
                }
            }
            let mut hit = vec![false; lower.order()];
            f.iter().for_each(|&x| hit[x] = true);
            if hit.iter().any(|h| !h) {
                return Err(Error::Chain(format!("f_{} is not surjective", k + 2)));
            }
        }
        Ok(Self { groups, connecting })
    }

    /// `ℤ/m, ℤ/m², …, ℤ/m^levels`.
    pub fn cyclic(m: u64, levels: usize) -> Result<Self> {
        let groups = (1..=levels as u32).map(|k| FiniteQuotientGroup::cyclic(m.pow(k))).collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    /// `SL_dim(ℤ/m_k)` for the given moduli, each dividing the next.
    pub fn special_linear(dim: usize, moduli: &[u64], cap: usize) -> Result<Self> {
        for w in moduli.windows(2) {
            if w[1] % w[0] != 0 {
                return Err(Error::Chain(format!("{} does not divide {}", w[0], w[1])));
            }
        }
        let groups = moduli.iter().map(|&m| FiniteQuotientGroup::special_linear(dim, m, cap)).collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn depth(&self) -> usize {
        self.groups.len()
    }

    /// `G_n` for `1 ≤ n ≤ depth`.
    pub fn group(&self, n: usize) -> &FiniteQuotientGroup {
        &self.groups[n - 1]
    }

    pub fn groups(&self) -> &[FiniteQuotientGroup] {
        &self.groups
    }

    pub fn generators(&self) -> Option<&GeneratorSet> {
        self.groups.first().map(|g| g.generators())
    }

    /// `f_n : G_n → G_{n−1}` for `2 ≤ n ≤ depth`.
    pub fn connecting(&self, n: usize) -> &[usize] {
        &self.connecting[n - 2]
    }

    pub fn diameters(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.diameter()).collect()
    }
}

fn derive_connecting(upper: &FiniteQuotientGroup, lower: &FiniteQuotientGroup) -> Result<Vec<usize>> {
    if upper.generators() != lower.generators() {
        return Err(Error::Chain("consecutive levels use different generator labels".into()));
    }
    let mut f = vec![usize::MAX; upper.order()];
    f[0] = 0;
    // Elements are in breadth-first order, so each has a predecessor already mapped.
    for g in 0..upper.order() {
        if f[g] == usize::MAX {
            return Err(Error::Chain("element order is not breadth-first".into()));
        }
        for s in upper.generators().non_identity() {
            let h = upper.left_mul(s, g);
            let image = lower.left_mul(s, f[g]);
            if f[h] == usize::MAX {
                f[h] = image;
            } else if f[h] != image {
                return Err(Error::Chain("generator images do not define a homomorphism".into()));
            }
        }
    }
    Ok(f)
}

/// Positive, strictly decreasing weights `a_1 > a_2 > …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSequence {
    #[serde(with = "rational::serde_vec")]
    a: Vec<Rational>,
}

impl WeightSequence {
    pub fn new(a: Vec<Rational>) -> Result<Self> {
        if a.iter().any(|x| *x <= rational::zero()) {
            return Err(Error::Weights("weights must be positive".into()));
        }
        if a.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Weights("weights must be strictly decreasing".into()));
        }
        Ok(Self { a })
    }

    /// `a_1` followed by `a_{n+1} = a_n / (2·diam G_n)` (or `a_n / 2` when `G_n` is trivial).
    pub fn halving(chain: &QuotientChain, a1: Rational) -> Result<Self> {
        let mut a = vec![a1];
        for n in 1..chain.depth() {
            let diam = chain.group(n).diameter().max(1) as i128;
            a.push(a[n - 1] / Rational::from_integer(2 * diam));
        }
        Self::new(a)
    }

    /// `a_n` for `n ≥ 1`; zero past the end.
    pub fn get(&self, n: usize) -> Rational {
        self.a.get(n - 1).copied().unwrap_or_else(rational::zero)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.a
    }

    /// First index `n < level` with `a_{n+1} ≥ a_n / diam(G_n)`.
    pub fn convention_violation(&self, chain: &QuotientChain, level: usize) -> Option<Error> {
        for n in 1..level.min(self.len()) {
            let diam = chain.group(n).diameter();
            if diam == 0 {
                continue;
            }
            let limit = self.get(n) / Rational::from_integer(diam as i128);
            if self.get(n + 1) >= limit {
                return Some(Error::WeightConvention {
                    index: n,
                    next: n + 1,
                    got: rational::format(&self.get(n + 1)),
                    limit: rational::format(&limit),
                });
            }
        }
        None
    }
}

/// `G_N` with the metric `d(g, g′) = a_{n(g,g′)}`, `n(g, g′)` the least level
/// where the projections differ.
#[derive(Debug, Clone)]
pub struct TruncatedCompletion {
    chain: QuotientChain,
    weights: WeightSequence,
    level: usize,
    /// `proj[n][g] = π_n(g)` for `0 ≤ n ≤ level`.
    proj: Vec<Vec<usize>>,
    convention_overridden: bool,
}

impl TruncatedCompletion {
    /// Rejects weight sequences violating the convention unless
    /// `allow_convention_violation` is set, in which case the result is
    /// flagged.
    pub fn build(chain: QuotientChain, weights: WeightSequence, level: usize, allow_convention_violation: bool) -> Result<Self> {
        if level > chain.depth() {
            return Err(Error::Chain(format!("level {level} exceeds the chain depth {}", chain.depth())));
        }
        if weights.len() < level {
            return Err(Error::Weights(format!("{} weights for level {level}", weights.len())));
        }
        let mut convention_overridden = false;
        if let Some(err) = weights.convention_violation(&chain, level) {
            if !allow_convention_violation {
                return Err(err);
            }
            convention_overridden = true;
        }
        let size = if level == 0 { 1 } else { chain.group(level).order() };
        let mut proj = vec![Vec::new(); level + 1];
        if level > 0 {
            proj[level] = (0..size).collect();
            for n in (1..level).rev() {
                let f = chain.connecting(n + 1);
                proj[n] = proj[n + 1].iter().map(|&g| f[g]).collect();
            }
        }
        proj[0] = vec![0; size];
        Ok(Self { chain, weights, level, proj, convention_overridden })
    }

    pub fn chain(&self) -> &QuotientChain {
        &self.chain
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn convention_overridden(&self) -> bool {
        self.convention_overridden
    }

    pub fn len(&self) -> usize {
        self.proj[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `π_n(g)` as an element index of `G_n`.
    pub fn project(&self, n: usize, g: usize) -> usize {
        self.proj[n][g]
    }

    /// `n(g, g′)`, or `None` when `g = g′`.
    pub fn first_difference(&self, g: usize, g2: usize) -> Option<usize> {
        (1..=self.level).find(|&n| self.proj[n][g] != self.proj[n][g2])
    }

    pub fn distance(&self, g: usize, g2: usize) -> Rational {
        self.first_difference(g, g2).map_or_else(rational::zero, |n| self.weights.get(n))
    }

    /// `max_n a_n·[π_n g ≠ π_n g′]`.
    pub fn distance_by_max(&self, g: usize, g2: usize) -> Rational {
        (1..=self.level)
            .filter(|&n| self.proj[n][g] != self.proj[n][g2])
            .map(|n| self.weights.get(n))
            .max()
            .unwrap_or_else(rational::zero)
    }

    pub fn metric_space(&self) -> Result<FiniteMetricSpace> {
        FiniteMetricSpace::from_fn(self.len(), |g, g2| self.distance(g, g2))
    }

    /// Left multiplication by the generators on `(G_N, d)`.
    pub fn warp_system(&self) -> Result<WarpSystem> {
        let space = self.metric_space()?;
        if self.level == 0 {
            let gens = self.chain.generators().cloned().unwrap_or(GeneratorSet::symmetric(&[])?);
            let action = vec![vec![0]; gens.len()];
            return WarpSystem::new(space, gens, action);
        }
        WarpSystem::left_multiplication(space, self.chain.group(self.level))
    }

    /// `δ_n(g, g′) = d_{G_n}(π_n g, π_n g′)` for `0 ≤ n ≤ level`.
    pub fn delta_matrices(&self) -> Vec<Vec<Vec<u32>>> {
        let m = self.len();
        (0..=self.level)
            .map(|n| {
                if n == 0 {
                    return vec![vec![0; m]; m];
                }
                let group = self.chain.group(n);
                let table = group.distance_matrix();
                (0..m).map(|g| (0..m).map(|h| table[self.proj[n][g]][self.proj[n][h]]).collect()).collect()
            })
            .collect()
    }
}

/// `d_s(g, g′) = min(min_{1≤n≤N} [δ_{n−1} + s·a_n], δ_N)`.
pub fn slice_metric_closed_form(trunc: &TruncatedCompletion, s: Rational) -> Result<WarpedDistanceMatrix> {
    if s < rational::one() {
        return Err(Error::Metric("slice scale must be at least 1".into()));
    }
    Ok(closed_form_with(trunc, s, &trunc.delta_matrices()))
}

fn closed_form_with(trunc: &TruncatedCompletion, s: Rational, delta: &[Vec<Vec<u32>>]) -> WarpedDistanceMatrix {
    let m = trunc.len();
    let big = trunc.level();
    let values = (0..m)
        .map(|g| {
            (0..m)
                .map(|h| {
                    let mut best = Rational::from_integer(delta[big][g][h] as i128);
                    for n in 1..=big {
                        let v = Rational::from_integer(delta[n - 1][g][h] as i128) + s * trunc.weights().get(n);
                        if v < best {
                            best = v;
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();
    WarpedDistanceMatrix::new(Provenance::ClosedForm, values)
}

/// The pseudometric `d_s′ = δ_{N_s−1} + min(s·a_{N_s}, δ_{N_s})` comparing
/// with `d_s` up to constants independent of `s`.
#[derive(Debug, Clone, Serialize)]
pub struct SliceDecomposition {
    #[serde(with = "rational::serde_str")]
    pub s: Rational,
    /// Largest `n ≤ N` with `s·a_n ≥ 1`, zero if none.
    pub n_s: usize,
    /// The level whose terms are used; `max(n_s, 1)`. With `n_s = 0` the
    /// formula is read with `δ_0 ≡ 0`.
    pub level_used: usize,
    #[serde(with = "rational::serde_str")]
    pub cap: Rational,
    pub delta_prev: Vec<Vec<u32>>,
    pub delta_cur: Vec<Vec<u32>>,
    #[serde(skip)]
    pub d_prime: Vec<Vec<Rational>>,
}

pub fn slice_decomposition(trunc: &TruncatedCompletion, s: Rational) -> Result<SliceDecomposition> {
    if trunc.level() == 0 {
        return Err(Error::Chain("decomposition needs level at least 1".into()));
    }
    let n_s = (1..=trunc.level()).filter(|&n| s * trunc.weights().get(n) >= rational::one()).max().unwrap_or(0);
    let level_used = n_s.max(1);
    let mut delta = trunc.delta_matrices();
    let cap = s * trunc.weights().get(level_used);
    let delta_cur = std::mem::take(&mut delta[level_used]);
    let delta_prev = std::mem::take(&mut delta[level_used - 1]);
    let d_prime = delta_prev
        .iter()
        .zip(&delta_cur)
        .map(|(p, c)| {
            p.iter()
                .zip(c)
                .map(|(&p, &c)| Rational::from_integer(p as i128) + rational::min(cap, Rational::from_integer(c as i128)))
                .collect()
        })
        .collect();
    Ok(SliceDecomposition { s, n_s, level_used, cap, delta_prev, delta_cur, d_prime })
}

impl SliceDecomposition {
    /// First pair violating `d_s′ ≤ 2·d_s` or `d_s ≤ d_s′ + 1`.
    pub fn sandwich_violation(&self, d_s: &WarpedDistanceMatrix) -> Option<(usize, usize)> {
        let one = rational::one();
        let two = Rational::from_integer(2);
        for (g, row) in self.d_prime.iter().enumerate() {
            for (h, dp) in row.iter().enumerate() {
                let ds = d_s.get(g, h);
                if *dp > two * ds || ds > dp + one {
                    return Some((g, h));
                }
            }
        }
        None
    }
}

/// One level of the box space.
#[derive(Debug, Clone)]
pub struct BoxLevel {
    pub n: usize,
    pub order: usize,
    pub diameter: u32,
    pub cayley: Multigraph,
}

pub fn box_space(chain: &QuotientChain) -> Vec<BoxLevel> {
    chain
        .groups()
        .iter()
        .enumerate()
        .map(|(k, g)| BoxLevel { n: k + 1, order: g.order(), diameter: g.diameter(), cayley: g.cayley_graph() })
        .collect()
}

/// `s(n) = diam(G_n)/a_n`.
pub fn section_scale(trunc: &TruncatedCompletion, n: usize) -> Rational {
    Rational::from_integer(trunc.chain().group(n).diameter() as i128) / trunc.weights().get(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionScaleReport {
    pub n: usize,
    #[serde(with = "rational::serde_str")]
    pub s: Rational,
    /// `max (d_s − δ_n)`; lies in `[0, 1]` when the certificate holds.
    #[serde(with = "rational::serde_str")]
    pub max_deviation: Rational,
    #[serde(with = "rational::serde_str")]
    pub min_deviation: Rational,
    pub vacuous: bool,
    pub passed: bool,
    pub witness: Option<(usize, usize)>,
}

/// Checks `δ_n ≤ d_{s(n)} ≤ δ_n + 1` on all pairs with the closed form.
pub fn section_scale_check(trunc: &TruncatedCompletion, n: usize) -> Result<SectionScaleReport> {
    if n == 0 || n > trunc.level() {
        return Err(Error::Chain(format!("section level {n} outside 1..={}", trunc.level())));
    }
    let s = section_scale(trunc, n);
    if trunc.chain().group(n).order() == 1 {
        return Ok(SectionScaleReport {
            n,
            s,
            max_deviation: rational::zero(),
            min_deviation: rational::zero(),
            vacuous: true,
            passed: true,
            witness: None,
        });
    }
    let delta = trunc.delta_matrices();
    let ds = closed_form_with(trunc, rational::max(s, rational::one()), &delta);
    let mut max_dev = rational::zero();
    let mut min_dev = rational::zero();
    let mut witness = None;
    for g in 0..trunc.len() {
        for h in 0..trunc.len() {
            let dev = ds.get(g, h) - Rational::from_integer(delta[n][g][h] as i128);
            if dev > max_dev {
                max_dev = dev;
            }
            if dev < min_dev {
                min_dev = dev;
            }
            if witness.is_none() && (dev < rational::zero() || dev > rational::one()) {
                witness = Some((g, h));
            }
        }
    }
    Ok(SectionScaleReport { n, s, max_deviation: max_dev, min_deviation: min_dev, vacuous: false, passed: witness.is_none(), witness })
}
