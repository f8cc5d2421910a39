//! Independent reference computations used by the integration tests.
//! Nothing here calls the library routine it is compared against.

#![allow(dead_code)]

use warpcone::rational::{self, Rational};
use warpcone::{Element, FiniteQuotientGroup, WarpSystem};

/// Path infimum by layered relaxation: `f_0(y) = s·d(x, y)` and
/// `f_{k+1}(y) = min_{z, γ} f_k(z) + |γ| + s·d(γz, y)` over `|γ| ≤ 1`.
/// An optimal sequence uses at most `⌈s·d(x, x′)⌉` generator moves, so that
/// many rounds reach the infimum.
pub fn path_infimum_warped(system: &WarpSystem) -> Vec<Vec<Rational>> {
    let n = system.len();
    let gens = system.generators();
    let sd = |a: usize, b: usize| system.space().dist(a, b);
    let rounds = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| rational::ceil_u64(&sd(a, b)))
        .max()
        .unwrap_or(0) as usize;
    (0..n)
        .map(|x| {
            let mut f: Vec<Rational> = (0..n).map(|y| sd(x, y)).collect();
            for _ in 0..rounds {
                let mut next = f.clone();
                for z in 0..n {
                    for label in 0..gens.len() {
                        let Some(gz) = system.act(label, z) else { continue };
                        let cost = if label == gens.identity() { rational::zero() } else { rational::one() };
                        for y in 0..n {
                            let v = f[z] + cost + sd(gz, y);
                            if v < next[y] {
                                next[y] = v;
                            }
                        }
                    }
                }
                f = next;
            }
            f
        })
        .collect()
}

/// `δ_n(y, y′)` by enumerating every alternating sequence
/// `y = z_0, s_1 z_0 → z_1, …` with `n` generator moves (identity allowed).
pub fn brute_delta(system: &WarpSystem, n: usize, y: usize, y2: usize) -> Rational {
    let d = |a: usize, b: usize| system.space().base(a, b);
    fn go(system: &WarpSystem, d: &dyn Fn(usize, usize) -> Rational, left: usize, at: usize, target: usize) -> Rational {
        if left == 0 {
            return d(at, target);
        }
        let mut best: Option<Rational> = None;
        for z in 0..system.len() {
            let step = d(at, z);
            for label in 0..system.generators().len() {
                if let Some(sz) = system.act(label, z) {
                    let v = step + go(system, d, left - 1, sz, target);
                    if best.map_or(true, |b| v < b) {
                        best = Some(v);
                    }
                }
            }
        }
        best.unwrap_or_else(|| d(at, target))
    }
    go(system, &d, n, y, y2)
}

/// Breadth-first distances along the generator maps.
pub fn bfs_word_distances(system: &WarpSystem, start: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; system.len()];
    dist[start] = Some(0);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        let dx = dist[x].unwrap();
        for label in system.generators().non_identity() {
            if let Some(y) = system.act(label, x) {
                if dist[y].is_none() {
                    dist[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
    }
    dist
}

/// Residue of a cyclic group element.
pub fn residue(group: &FiniteQuotientGroup, i: usize) -> u64 {
    match group.element(i) {
        Element::Residue(r) => *r,
        other => panic!("not a residue: {other:?}"),
    }
}

/// Element index of residue `r`.
pub fn by_residue(group: &FiniteQuotientGroup, r: u64) -> usize {
    group.index_of(&Element::Residue(r % group.order() as u64)).expect("residue present")
}

fn cyclic_distance(a: u64, b: u64, m: u64) -> u64 {
    let k = (a + m - b % m) % m;
    k.min(m - k)
}

/// `d_s` on `ℤ/3^N` straight from residues:
/// `min(min_n [δ_{n−1} + s·a_n], δ_N)` with `δ_n` the cyclic distance mod `3ⁿ`.
pub fn z3_slice_metric(residues: &[u64], weights: &[Rational], s: Rational) -> Vec<Vec<Rational>> {
    let big = weights.len();
    let delta = |n: usize, a: u64, b: u64| -> Rational {
        if n == 0 {
            rational::zero()
        } else {
            Rational::from_integer(cyclic_distance(a, b, 3u64.pow(n as u32)) as i128)
        }
    };
    residues
        .iter()
        .map(|&a| {
            residues
                .iter()
                .map(|&b| {
                    let mut best = delta(big, a, b);
                    for n in 1..=big {
                        let v = delta(n - 1, a, b) + s * weights[n - 1];
                        if v < best {
                            best = v;
                        }
                    }
                    best
                })
                .collect()
        })
        .collect()
}

/// Word metric `δ_n` on `ℤ/3ⁿ` pulled back along residues.
pub fn z3_delta(residues: &[u64], n: u32) -> Vec<Vec<u64>> {
    let m = 3u64.pow(n);
    residues.iter().map(|&a| residues.iter().map(|&b| cyclic_distance(a, b, m)).collect()).collect()
}

/// Normalized Laplacian spectrum of the `m`-cycle, ascending.
pub fn cycle_spectrum(m: usize) -> Vec<f64> {
    let mut v: Vec<f64> =
        (0..m).map(|k| 1.0 - (2.0 * std::f64::consts::PI * k as f64 / m as f64).cos()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `c(t_i) = t_i·min_{j≤i} f_j/t_j` evaluated pointwise.
pub fn grid_envelope(f: &[f64], grid: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let m = (0..=i).map(|j| f[j] / grid[j]).fold(f64::INFINITY, f64::min);
            grid[i] * m
        })
        .collect()
}
