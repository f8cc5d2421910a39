//! Built-in models and random warp systems for tests, benches and the CLI.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::embedding::PointEmbedding;
use crate::error::Result;
use crate::group::GeneratorSet;
use crate::metric::FiniteMetricSpace;
use crate::profinite::{QuotientChain, TruncatedCompletion, WeightSequence};
use crate::rational::{self, q, Rational};
use crate::torus::{IntegerMatrixGens, RationalTorusModel};
use crate::warp::WarpSystem;

/// Which built-in model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fixture {
    /// The 8-cycle with its arc metric, rotated by `±1`.
    Z8Rot,
    /// `ℤ/3ⁿ` for `n = 1, 2, 3` with weights `(1, 1/2, 1/16)`.
    Z3Chain,
    /// `SL₂(ℤ)` on the denominator-6 points of the 2-torus.
    Sl2Q6,
    /// Powers of two in the plane, doubled coordinatewise.
    Exp2Window,
}

impl Fixture {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "FIX-A" | "A" | "Z8-ROT" => Some(Self::Z8Rot),
            "FIX-B" | "B" | "Z3-CHAIN" => Some(Self::Z3Chain),
            "FIX-C" | "C" | "SL2-Q6" => Some(Self::Sl2Q6),
            "FIX-D" | "D" | "EXP2-WINDOW" => Some(Self::Exp2Window),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Z8Rot => "FIX-A",
            Self::Z3Chain => "FIX-B",
            Self::Sl2Q6 => "FIX-C",
            Self::Exp2Window => "FIX-D",
        }
    }
}

/// Cyclic group `ℤ/m` acting on the `m`-cycle by rotation.
pub fn rotation_system(m: usize) -> Result<WarpSystem> {
    let space = FiniteMetricSpace::from_fn(m, |i, j| {
        let k = (i as i128 - j as i128).rem_euclid(m as i128);
        rational::int(k.min(m as i128 - k))
    })?;
    let gens = GeneratorSet::symmetric(&[("+1", "-1")])?;
    let action = vec![(0..m).map(|x| (x + 1) % m).collect(), (0..m).map(|x| (x + m - 1) % m).collect(), (0..m).collect()];
    WarpSystem::new(space, gens, action)
}

pub fn fix_a() -> Result<WarpSystem> {
    rotation_system(8)
}

pub fn fix_b_chain() -> Result<QuotientChain> {
    QuotientChain::cyclic(3, 3)
}

pub fn fix_b_weights() -> Result<WeightSequence> {
    WeightSequence::new(vec![q(1, 1), q(1, 2), q(1, 16)])
}

/// The completion truncated at `level ≤ 3`.
pub fn fix_b(level: usize) -> Result<TruncatedCompletion> {
    TruncatedCompletion::build(fix_b_chain()?, fix_b_weights()?, level, false)
}

/// Circle embeddings of `ℤ/3ⁿ`, `n = 1, 2, 3`, with controls `2r/π ≤ ‖Δ‖ ≤ r`.
pub fn fix_b_box_embeddings() -> Result<Vec<PointEmbedding>> {
    fix_b_chain()?.groups().iter().map(PointEmbedding::cyclic_group).collect()
}

/// Slice embeddings at the dyadic scales `2ⁿ`, `n ∈ levels`: the circle
/// embedding of `G_{N_s}` pulled back to `G_3`.
pub fn fix_b_dyadic_slices(levels: std::ops::RangeInclusive<u32>) -> Result<Vec<PointEmbedding>> {
    let trunc = fix_b(3)?;
    let boxes = fix_b_box_embeddings()?;
    levels
        .map(|n| {
            let s = Rational::from_integer(1i128 << n);
            let level = crate::profinite::slice_decomposition(&trunc, s)?.level_used;
            let map: Vec<usize> = (0..trunc.len()).map(|g| trunc.project(level, g)).collect();
            Ok(boxes[level - 1].pullback(&map))
        })
        .collect()
}

/// FIX-C: the torus model, the elementary generators and `x₁ = (1/2, 1/3)`.
pub struct FixC {
    pub model: RationalTorusModel,
    pub gens: IntegerMatrixGens,
    pub x1: usize,
}

pub fn fix_c() -> Result<FixC> {
    let model = RationalTorusModel::new(2, 6)?;
    let gens = IntegerMatrixGens::elementary(2)?;
    let x1 = model.locate(&[q(1, 2), q(1, 3)])?;
    Ok(FixC { model, gens, x1 })
}

/// FIX-D with window `W`: points `(2^i, 2^j)`, `|i|, |j| ≤ W`, under the ℓ1
/// metric; `a±` doubles or halves the first coordinate, `b±` the second.
pub struct FixD {
    pub window: i32,
    pub system: WarpSystem,
}

impl FixD {
    pub fn index(&self, i: i32, j: i32) -> usize {
        let side = (2 * self.window + 1) as usize;
        (i + self.window) as usize * side + (j + self.window) as usize
    }

    /// `x_n = (2ⁿ, 2⁻ⁿ)` and `x_n′ = (2ⁿ⁺¹, 1)`.
    pub fn pair(&self, n: i32) -> (usize, usize) {
        (self.index(n, -n), self.index(n + 1, 0))
    }
}

fn pow2(k: i32) -> Rational {
    if k >= 0 {
        Rational::from_integer(1i128 << k)
    } else {
        Rational::new(1, 1i128 << (-k))
    }
}

pub fn fix_d(window: i32) -> Result<FixD> {
    let side = 2 * window + 1;
    let coords: Vec<(i32, i32)> = (-window..=window).flat_map(|i| (-window..=window).map(move |j| (i, j))).collect();
    let space = FiniteMetricSpace::from_fn(coords.len(), |a, b| {
        let (p, r) = (coords[a], coords[b]);
        rational::abs(&(pow2(p.0) - pow2(r.0))) + rational::abs(&(pow2(p.1) - pow2(r.1)))
    })?
    .with_labels(coords.iter().map(|(i, j)| format!("(2^{i},2^{j})")).collect())?;
    let gens = GeneratorSet::symmetric(&[("a+", "a-"), ("b+", "b-")])?;
    let shift = |di: i32, dj: i32| -> Vec<Option<usize>> {
        coords
            .iter()
            .map(|&(i, j)| {
                let (i2, j2) = (i + di, j + dj);
                (i2.abs() <= window && j2.abs() <= window).then(|| ((i2 + window) * side + j2 + window) as usize)
            })
            .collect()
    };
    let action = vec![shift(1, 0), shift(-1, 0), shift(0, 1), shift(0, -1), shift(0, 0)];
    let system = WarpSystem::partial(space, gens, action)?;
    Ok(FixD { window, system })
}

/// Shortest-path closure of a symmetric matrix with positive off-diagonal
/// entries; the result is a metric.
pub fn metric_closure(mut d: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// How distances of a random system relate to its action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomKind {
    /// Random rationals with denominators up to 6 in `[1/6, 4]`, closed.
    Arbitrary,
    /// Entries drawn from `[1, 3]` and closed, so `L ≤ 3`.
    Lipschitz,
    /// Invariant under the generated group: maximum over the orbit of each pair.
    Isometric,
}

fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

/// A random system on `points` points with `pairs` generator pairs.
pub fn random_warp_system<R: Rng>(rng: &mut R, points: usize, pairs: usize, kind: RandomKind) -> Result<WarpSystem> {
    let labels: Vec<(String, String)> = (0..pairs).map(|k| (format!("s{k}"), format!("s{k}^-1"))).collect();
    let label_refs: Vec<(&str, &str)> = labels.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let gens = GeneratorSet::symmetric(&label_refs)?;
    let mut perms = Vec::with_capacity(pairs);
    let mut action = Vec::with_capacity(2 * pairs + 1);
    for _ in 0..pairs {
        let p = random_permutation(rng, points);
        action.push(p.clone());
        action.push(invert(&p));
        perms.push(p);
    }
    action.push((0..points).collect());
    let mut raw = vec![vec![rational::zero(); points]; points];
    for i in 0..points {
        for j in i + 1..points {
            let v = match kind {
                RandomKind::Arbitrary => {
                    let den = rng.gen_range(1..=6);
                    q(rng.gen_range(1..=4 * den), den)
                }
                RandomKind::Lipschitz | RandomKind::Isometric => {
                    let den = rng.gen_range(1..=4);
                    q(rng.gen_range(den..=3 * den), den)
                }
            };
            raw[i][j] = v;
            raw[j][i] = v;
        }
    }
    let mut d = metric_closure(raw);
    if kind == RandomKind::Isometric {
        d = orbit_maximum(&d, &perms);
    }
    WarpSystem::new(FiniteMetricSpace::new(d)?, gens, action)
}

// d′(x, y) = max over the orbit of the pair (x, y) under the generated group;
// a maximum of metrics is a metric and d′ is invariant.
fn orbit_maximum(d: &[Vec<Rational>], perms: &[Vec<usize>]) -> Vec<Vec<Rational>> {
    let n = d.len();
    let mut out = vec![vec![rational::zero(); n]; n];
    let mut done = vec![vec![false; n]; n];
    for x in 0..n {
        for y in 0..n {
            if done[x][y] {
                continue;
            }
            let mut orbit = vec![(x, y)];
            done[x][y] = true;
            let mut k = 0;
            while k < orbit.len() {
                let (a, b) = orbit[k];
                for p in perms {
                    let next = (p[a], p[b]);
                    if !done[next.0][next.1] {
                        done[next.0][next.1] = true;
                        orbit.push(next);
                    }
                }
                k += 1;
            }
            let top = orbit.iter().map(|&(a, b)| d[a][b]).max().unwrap_or_else(rational::zero);
            for (a, b) in orbit {
                out[a][b] = top;
            }
        }
    }
    out
}
