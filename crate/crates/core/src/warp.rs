//! Warp systems and the distance functions built from them: the warped
//! metric, the one-step and half-step distances, δ tables, level metrics and
//! cone distances.

use std::collections::VecDeque;
use std::ops::Add;

use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{FiniteQuotientGroup, GeneratorSet};
use crate::metric::{integer_matrix, FiniteMetricSpace, Provenance, WarpedDistanceMatrix};
use crate::rational::{self, Rational};

/// A finite metric space with a (possibly partial) action of a symmetric
/// generating set. `action[s][x]` is `s·x`, or `None` where the image leaves
/// the point set.
#[derive(Debug, Clone)]
pub struct WarpSystem {
    space: FiniteMetricSpace,
    gens: GeneratorSet,
    action: Vec<Vec<Option<usize>>>,
    lipschitz: Rational,
    min_ratio: Rational,
    truncated: bool,
}

impl WarpSystem {
    /// Every generator acts by a permutation of the points.
    pub fn new(space: FiniteMetricSpace, gens: GeneratorSet, action: Vec<Vec<usize>>) -> Result<Self> {
        let partial = action.into_iter().map(|row| row.into_iter().map(Some).collect()).collect();
        let system = Self::partial(space, gens, partial)?;
        if system.truncated {
            unreachable!("total maps are never truncated");
        }
        Ok(system)
    }

    /// Generators act by partial injections; undefined images are omitted
    /// from the generator edges and the system is flagged as truncated.
    pub fn partial(space: FiniteMetricSpace, gens: GeneratorSet, action: Vec<Vec<Option<usize>>>) -> Result<Self> {
        let n = space.len();
        if action.len() != gens.len() {
            return Err(Error::Action(format!("{} maps given for {} generator labels", action.len(), gens.len())));
        }
        let mut truncated = false;
        for (s, map) in action.iter().enumerate() {
            if map.len() != n {
                return Err(Error::Action(format!("map of {:?} has the wrong length", gens.label(s))));
            }
            let mut hit = vec![false; n];
            for (x, y) in map.iter().enumerate() {
                match *y {
                    Some(y) if y >= n => return Err(Error::Action(format!("image {y} out of range"))),
                    Some(y) => {
                        if std::mem::replace(&mut hit[y], true) {
                            return Err(Error::Action(format!("{:?} is not injective at image {y}", gens.label(s))));
                        }
                        if action[gens.inverse_of(s)][y] != Some(x) {
                            return Err(Error::Action(format!(
                                "{:?} and {:?} are not mutually inverse at point {x}",
                                gens.label(s),
                                gens.label(gens.inverse_of(s))
                            )));
                        }
                    }
                    None => truncated = true,
                }
            }
        }
        if action[gens.identity()].iter().enumerate().any(|(x, y)| *y != Some(x)) {
            return Err(Error::Action("identity label must fix every point".into()));
        }

        let mut lipschitz: Option<Rational> = None;
        let mut min_ratio: Option<Rational> = None;
        for s in gens.non_identity() {
            for x in 0..n {
                for x2 in x + 1..n {
                    if let (Some(y), Some(y2)) = (action[s][x], action[s][x2]) {
                        let r = space.base(y, y2) / space.base(x, x2);
                        lipschitz = Some(lipschitz.map_or(r, |l| rational::max(l, r)));
                        min_ratio = Some(min_ratio.map_or(r, |l| rational::min(l, r)));
                    }
                }
            }
        }
        // A permutation cannot shrink every distance, so the maximum is at
        // least 1; partial maps may, and are clamped.
        let lipschitz = rational::max(lipschitz.unwrap_or_else(rational::one), rational::one());
        let min_ratio = min_ratio.unwrap_or_else(rational::one);
        Ok(Self { space, gens, action, lipschitz, min_ratio, truncated })
    }

    /// The action of `group` on itself by left multiplication, on the given
    /// metric (points indexed like the group elements).
    pub fn left_multiplication(space: FiniteMetricSpace, group: &FiniteQuotientGroup) -> Result<Self> {
        if space.len() != group.order() {
            return Err(Error::Action("space and group sizes differ".into()));
        }
        let action = (0..group.generators().len()).map(|s| group.left_table(s).to_vec()).collect();
        Self::new(space, group.generators().clone(), action)
    }

    pub fn with_scale(&self, scale: Rational) -> Result<Self> {
        let mut out = self.clone();
        out.space = out.space.with_scale(scale)?;
        Ok(out)
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn scale(&self) -> Rational {
        self.space.scale()
    }

    pub fn act(&self, label: usize, x: usize) -> Option<usize> {
        self.action[label][x]
    }

    pub fn action(&self) -> &[Vec<Option<usize>>] {
        &self.action
    }

    /// Largest ratio `d(sx, sx')/d(x, x')` over generators and point pairs.
    pub fn lipschitz(&self) -> Rational {
        self.lipschitz
    }

    pub fn min_ratio(&self) -> Rational {
        self.min_ratio
    }

    pub fn is_isometric(&self) -> bool {
        self.lipschitz == rational::one() && self.min_ratio == rational::one()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Breadth-first word distances from `x` along generator moves, stopping
    /// after `radius` layers when given.
    pub fn orbit_bfs(&self, x: usize, radius: Option<u32>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[x] = Some(0);
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            if radius.is_some_and(|r| du >= r) {
                continue;
            }
            for s in self.gens.non_identity() {
                if let Some(v) = self.action[s][u] {
                    if dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        queue.push_back(v);
                    }
                }
            }
        }
        dist
    }

    /// Points reachable from `x` in canonical BFS order.
    pub fn orbit(&self, x: usize) -> Vec<usize> {
        let dist = self.orbit_bfs(x, None);
        let mut pts: Vec<usize> = (0..self.len()).filter(|&y| dist[y].is_some()).collect();
        pts.sort_by_key(|&y| (dist[y], y));
        pts
    }

    // Effective edge weight: the metric edge, shortened to 1 along generator moves.
    fn edge_weights(&self) -> Vec<Vec<Rational>> {
        let mut w = self.space.scaled_matrix();
        let one = rational::one();
        for s in self.gens.non_identity() {
            for x in 0..self.len() {
                if let Some(y) = self.action[s][x] {
                    if w[x][y] > one {
                        w[x][y] = one;
                        w[y][x] = one;
                    }
                }
            }
        }
        w
    }
}

/// All-pairs shortest paths on a complete graph with the given weights, one
/// dense Dijkstra per source.
pub fn dense_shortest_paths<T>(w: &[Vec<T>], zero: T) -> Vec<Vec<T>>
where
    T: Clone + Ord + Add<Output = T> + Send + Sync,
{
    let n = w.len();
    (0..n)
        .into_par_iter()
        .map(|src| {
            let mut dist: Vec<Option<T>> = vec![None; n];
            let mut done = vec![false; n];
            dist[src] = Some(zero.clone());
            for _ in 0..n {
                let mut best: Option<usize> = None;
                for v in 0..n {
                    if !done[v] {
                        if let Some(dv) = &dist[v] {
                            if best.is_none_or(|b| dv < dist[b].as_ref().unwrap()) {
                                best = Some(v);
                            }
                        }
                    }
                }
                let Some(u) = best else { break };
                done[u] = true;
                let du = dist[u].clone().unwrap();
                for v in 0..n {
                    if !done[v] {
                        let cand = du.clone() + w[u][v].clone();
                        if dist[v].as_ref().is_none_or(|dv| cand < *dv) {
                            dist[v] = Some(cand);
                        }
                    }
                }
            }
            dist.into_iter().map(|d| d.expect("complete graph is connected")).collect()
        })
        .collect()
}

/// The greatest metric below `s·d` giving every generator move length at most
/// one: shortest paths over metric edges `s·d(x, x')` and unit generator edges.
pub fn warped_metric(system: &WarpSystem) -> WarpedDistanceMatrix {
    let w = system.edge_weights();
    let values = match integer_matrix(&w) {
        Some((ints, denom)) => dense_shortest_paths(&ints, 0i128)
            .into_iter()
            .map(|row| row.into_iter().map(|v| Rational::new(v, denom)).collect())
            .collect(),
        None => dense_shortest_paths(&w, rational::zero()),
    };
    WarpedDistanceMatrix::new(Provenance::Warped, values)
}

/// One-step distance `D(x, x') = min_γ |γ| + s·d(γx, x')` with γ ranging over
/// the word ball of radius `min(L^{d_Γ}·d_Γ, s·d(x, x'))`.
pub fn one_step_distance(system: &WarpSystem, warped: &WarpedDistanceMatrix, radius_cap: u64) -> Result<WarpedDistanceMatrix> {
    let n = system.len();
    let lip = rational::to_f64(&system.lipschitz());
    let isometric_bound = system.lipschitz() == rational::one();
    let rows: Result<Vec<Vec<Rational>>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let radii: Vec<u64> = (0..n)
                .map(|x2| {
                    let sd = rational::floor_u64(&system.space().dist(x, x2));
                    let dg = warped.get(x, x2);
                    let lb = if isometric_bound {
                        rational::floor_u64(&dg)
                    } else {
                        let f = lip.powf(rational::to_f64(&dg)) * rational::to_f64(&dg);
                        if f >= sd as f64 {
                            sd
                        } else {
                            (f + 1e-9).floor() as u64
                        }
                    };
                    sd.min(lb)
                })
                .collect();
            let required = radii.iter().copied().max().unwrap_or(0);
            if required > radius_cap {
                return Err(Error::BallRadiusOverflow { required, cap: radius_cap });
            }
            let reach = system.orbit_bfs(x, Some(required as u32));
            let row = (0..n)
                .map(|x2| {
                    let mut best = system.space().dist(x, x2);
                    for (z, dz) in reach.iter().enumerate() {
                        if let Some(dz) = dz {
                            if *dz as u64 <= radii[x2] {
                                let c = Rational::from_integer(*dz as i128) + system.space().dist(z, x2);
                                if c < best {
                                    best = c;
                                }
                            }
                        }
                    }
                    best
                })
                .collect();
            Ok(row)
        })
        .collect();
    Ok(WarpedDistanceMatrix::new(Provenance::OneStep, rows?))
}

/// Checks `d_Γ ≤ D ≤ L^{d_Γ}·d_Γ` entrywise; the upper side is evaluated in
/// floating point with relative slack `1e-12`. Returns the first failing pair.
pub fn one_step_sandwich(system: &WarpSystem, warped: &WarpedDistanceMatrix, one_step: &WarpedDistanceMatrix) -> Option<(usize, usize)> {
    let lip = rational::to_f64(&system.lipschitz());
    let n = system.len();
    for x in 0..n {
        for x2 in 0..n {
            let dg = warped.get(x, x2);
            let big = one_step.get(x, x2);
            if big < dg {
                return Some((x, x2));
            }
            let upper = lip.powf(rational::to_f64(&dg)) * rational::to_f64(&dg);
            if rational::to_f64(&big) > upper * (1.0 + 1e-12) {
                return Some((x, x2));
            }
        }
    }
    None
}

/// Result of the half-step distance search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HalfStep {
    /// `min(s·d(x, x2), |γ|)`; `orbit_distance` is `None` when `x2` is not in
    /// the orbit of `x` (the orbit was enumerated completely).
    Exact {
        #[serde(with = "rational::serde_str")]
        value: Rational,
        orbit_distance: Option<u32>,
    },
    /// The word ball of the given radius does not reach `x2` and `s·d` is too
    /// large to rule out a longer word.
    Undetermined {
        radius: u32,
        #[serde(with = "rational::serde_str")]
        upper_bound: Rational,
    },
}

impl HalfStep {
    pub fn value(&self) -> Option<Rational> {
        match self {
            HalfStep::Exact { value, .. } => Some(*value),
            HalfStep::Undetermined { .. } => None,
        }
    }
}

/// `Δ(x, x2) = min(s·d(x, x2), min{|γ| : γx = x2})`, searching words up to
/// `radius`.
pub fn half_step_distance(system: &WarpSystem, x: usize, x2: usize, radius: u32) -> HalfStep {
    let sd = system.space().dist(x, x2);
    let reach = system.orbit_bfs(x, Some(radius));
    if let Some(k) = reach[x2] {
        return HalfStep::Exact { value: rational::min(sd, Rational::from_integer(k as i128)), orbit_distance: Some(k) };
    }
    // The orbit is exhausted when no point of the last layer has an unvisited neighbour.
    let frontier_open = reach.iter().enumerate().any(|(u, d)| {
        d.is_some_and(|d| d == radius)
            && system.generators().non_identity().any(|s| system.act(s, u).is_some_and(|v| reach[v].is_none()))
    });
    if !frontier_open {
        return HalfStep::Exact { value: sd, orbit_distance: None };
    }
    if sd <= Rational::from_integer(radius as i128 + 1) {
        return HalfStep::Exact { value: sd, orbit_distance: None };
    }
    HalfStep::Undetermined { radius, upper_bound: sd }
}

#[derive(Debug, Clone)]
enum DeltaValues {
    Int { denom: i128, layers: Vec<Vec<Vec<i128>>> },
    Exact(Vec<Vec<Vec<Rational>>>),
}

/// `δ_n(y, y')` for `n = 0..=n_max`: the cheapest unscaled metric cost of
/// joining `y` to `y'` with `n` generator moves interleaved with metric moves.
#[derive(Debug, Clone)]
pub struct DeltaTable {
    values: DeltaValues,
}

impl DeltaTable {
    pub fn n_max(&self) -> usize {
        match &self.values {
            DeltaValues::Int { layers, .. } => layers.len() - 1,
            DeltaValues::Exact(layers) => layers.len() - 1,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            DeltaValues::Int { layers, .. } => layers[0].len(),
            DeltaValues::Exact(layers) => layers[0].len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: usize, y: usize, y2: usize) -> Rational {
        match &self.values {
            DeltaValues::Int { denom, layers } => Rational::new(layers[n][y][y2], *denom),
            DeltaValues::Exact(layers) => layers[n][y][y2],
        }
    }

    pub fn layer(&self, n: usize) -> Vec<Vec<Rational>> {
        let m = self.len();
        (0..m).map(|y| (0..m).map(|y2| self.get(n, y, y2)).collect()).collect()
    }
}

fn delta_layers<T>(d: &[Vec<T>], action: &[Vec<Option<usize>>], n_max: usize) -> Vec<Vec<Vec<T>>>
where
    T: Clone + Ord + Add<Output = T> + Send + Sync,
{
    let n = d.len();
    let mut layers = vec![d.to_vec()];
    for _ in 0..n_max {
        let prev = layers.last().unwrap();
        let next: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|y| {
                // m[w] = min over (z, s) with s·z = w of δ_k(y, z)
                let mut m: Vec<Option<T>> = vec![None; n];
                for z in 0..n {
                    for map in action {
                        if let Some(w) = map[z] {
                            if m[w].as_ref().is_none_or(|c| prev[y][z] < *c) {
                                m[w] = Some(prev[y][z].clone());
                            }
                        }
                    }
                }
                (0..n)
                    .map(|y2| {
                        m.iter()
                            .enumerate()
                            .filter_map(|(w, mw)| mw.as_ref().map(|mw| mw.clone() + d[w][y2].clone()))
                            .min()
                            .expect("identity keeps every point reachable")
                    })
                    .collect()
            })
            .collect();
        layers.push(next);
    }
    layers
}

/// δ tables up to `n_max` on the unscaled metric.
pub fn delta_n(system: &WarpSystem, n_max: usize) -> DeltaTable {
    let base = system.space().base_matrix();
    let values = match integer_matrix(base) {
        Some((ints, denom)) => DeltaValues::Int { denom, layers: delta_layers(&ints, system.action(), n_max) },
        None => DeltaValues::Exact(delta_layers(base, system.action(), n_max)),
    };
    DeltaTable { values }
}

/// Level metric `d_s(y, y') = min_n (n + s·δ_n(y, y'))` with its smallest
/// minimizing `n`.
#[derive(Debug, Clone)]
pub struct LevelMetric {
    pub scale: Rational,
    pub matrix: WarpedDistanceMatrix,
    pub minimizer: Vec<Vec<usize>>,
}

fn level_pair(delta: &DeltaTable, s: Rational, y: usize, y2: usize) -> (Rational, usize) {
    let mut best = s * delta.get(0, y, y2);
    let mut arg = 0;
    for n in 1..=delta.n_max() {
        let v = Rational::from_integer(n as i128) + s * delta.get(n, y, y2);
        if v < best {
            best = v;
            arg = n;
        }
    }
    (best, arg)
}

fn check_stabilized(delta: &DeltaTable, value: Rational, y: usize, y2: usize) -> Result<()> {
    let bound = delta.n_max() as u64 + 1;
    if value > Rational::from_integer(bound as i128) {
        return Err(Error::LevelNotStabilized { x: y, y: y2, current: rational::format(&value), bound });
    }
    Ok(())
}

/// Terms with `n > n_max` are at least `n_max + 1`, so the minimum is final
/// once it does not exceed that; otherwise the first offending pair is named.
pub fn level_metric(s: Rational, delta: &DeltaTable) -> Result<LevelMetric> {
    if s <= rational::zero() {
        return Err(Error::Metric("scale must be positive".into()));
    }
    let n = delta.len();
    let mut values = vec![vec![rational::zero(); n]; n];
    let mut minimizer = vec![vec![0; n]; n];
    for y in 0..n {
        for y2 in 0..n {
            let (v, arg) = level_pair(delta, s, y, y2);
            check_stabilized(delta, v, y, y2)?;
            values[y][y2] = v;
            minimizer[y][y2] = arg;
        }
    }
    Ok(LevelMetric { scale: s, matrix: WarpedDistanceMatrix::new(Provenance::LevelS, values), minimizer })
}

/// `d_s(y, y2)` for a single pair.
pub fn level_distance(delta: &DeltaTable, s: Rational, y: usize, y2: usize) -> Result<Rational> {
    let (v, _) = level_pair(delta, s, y, y2);
    check_stabilized(delta, v, y, y2)?;
    Ok(v)
}

/// Distance on the cone between `(s, y)` and `(t, y2)`: `|t − s| + d_{min(s,t)}(y, y2)`.
pub fn cone_distance(delta: &DeltaTable, (s, y): (Rational, usize), (t, y2): (Rational, usize)) -> Result<Rational> {
    if s < rational::one() || t < rational::one() {
        return Err(Error::Metric("cone levels must be at least 1".into()));
    }
    Ok((t - s).abs() + level_distance(delta, rational::min(s, t), y, y2)?)
}

/// Scale beyond which the level metric between two points equals their orbit
/// word distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Stabilization {
    SameOrbit {
        word_distance: u32,
        #[serde(with = "rational::serde_str")]
        s_star: Rational,
    },
    DifferentOrbits,
}

/// `N = min{|γ| : γy = y2}` and `s* = max_{n<N} (N − n)/δ_n(y, y2)`; the
/// table must reach `N − 1`.
pub fn stabilization_threshold(system: &WarpSystem, delta: &DeltaTable, y: usize, y2: usize) -> Result<Stabilization> {
    let Some(n_word) = system.orbit_bfs(y, None)[y2] else {
        return Ok(Stabilization::DifferentOrbits);
    };
    if n_word == 0 {
        return Ok(Stabilization::SameOrbit { word_distance: 0, s_star: rational::zero() });
    }
    if delta.n_max() + 1 < n_word as usize {
        return Err(Error::Metric(format!("delta table reaches n = {}, need {}", delta.n_max(), n_word - 1)));
    }
    let big = n_word as i128;
    let s_star = (0..n_word as usize)
        .map(|n| Rational::from_integer(big - n as i128) / delta.get(n, y, y2))
        .max()
        .unwrap();
    Ok(Stabilization::SameOrbit { word_distance: n_word, s_star })
}
