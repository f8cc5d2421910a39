//! `SL_n(ℤ)` acting on rational points of the torus `ℝⁿ/ℤⁿ`: orbits,
//! stabilizer congruences and orbit metrics.
//!
//! A point with denominator `q` is stored by its numerators `k_i ∈ 0..q`.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::group::{elementary_labels, GeneratorSet};
use crate::metric::FiniteMetricSpace;
use crate::rational::{self, Rational};
use crate::warp::{delta_n, level_distance, stabilization_threshold, Stabilization, WarpSystem};

/// All points `(k_1/q, …, k_n/q)` of the torus, indexed in mixed radix
/// (last coordinate fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalTorusModel {
    dim: usize,
    denominator: u64,
}

impl RationalTorusModel {
    pub fn new(dim: usize, denominator: u64) -> Result<Self> {
        if dim == 0 || denominator == 0 {
            return Err(Error::Metric("torus needs positive dimension and denominator".into()));
        }
        (denominator as u128)
            .checked_pow(dim as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::Metric("torus model too large".into()))?;
        Ok(Self { dim, denominator })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn len(&self) -> usize {
        (self.denominator as usize).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: &[u64]) -> usize {
        k.iter().fold(0usize, |acc, &x| acc * self.denominator as usize + (x % self.denominator) as usize)
    }

    pub fn numerators(&self, mut i: usize) -> Vec<u64> {
        let q = self.denominator as usize;
        let mut k = vec![0u64; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = (i % q) as u64;
            i /= q;
        }
        k
    }

    /// Index of the point with the given rational coordinates; each must have
    /// denominator dividing `q`.
    pub fn locate(&self, x: &[Rational]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::Metric("coordinate count does not match the dimension".into()));
        }
        let q = self.denominator as i128;
        let k = x
            .iter()
            .map(|c| {
                let scaled = c * Rational::from_integer(q);
                if !scaled.is_integer() {
                    return Err(Error::Metric(format!("{} does not have denominator dividing {q}", rational::format(c))));
                }
                Ok(scaled.to_integer().rem_euclid(q) as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.index(&k))
    }

    pub fn label(&self, i: usize) -> String {
        let parts: Vec<String> = self
            .numerators(i)
            .iter()
            .map(|&k| rational::format(&Rational::new(k as i128, self.denominator as i128)))
            .collect();
        format!("({})", parts.join(","))
    }

    fn circular(&self, a: u64, b: u64) -> u64 {
        let d = a.abs_diff(b);
        d.min(self.denominator - d)
    }

    /// Squared quotient ℓ2 distance, exact.
    pub fn l2_squared(&self, i: usize, j: usize) -> Rational {
        let (a, b) = (self.numerators(i), self.numerators(j));
        let sum: u64 = a.iter().zip(&b).map(|(&x, &y)| self.circular(x, y).pow(2)).sum();
        Rational::new(sum as i128, (self.denominator as i128).pow(2))
    }

    /// Quotient ℓ1 distance, exact.
    pub fn l1(&self, i: usize, j: usize) -> Rational {
        let (a, b) = (self.numerators(i), self.numerators(j));
        let sum: u64 = a.iter().zip(&b).map(|(&x, &y)| self.circular(x, y)).sum();
        Rational::new(sum as i128, self.denominator as i128)
    }

    /// Finite metric space of the model with the quotient ℓ1 metric.
    pub fn l1_space(&self) -> Result<FiniteMetricSpace> {
        let n = self.len();
        FiniteMetricSpace::from_fn(n, |i, j| self.l1(i, j))?.with_labels((0..n).map(|i| self.label(i)).collect())
    }

    /// First triple violating the ℓ2 triangle inequality, decided exactly on
    /// squared values: `√c ≤ √a + √b` iff `c − a − b ≤ 0` or `(c − a − b)² ≤ 4ab`.
    pub fn l2_triangle_violation(&self, points: &[usize]) -> Option<(usize, usize, usize)> {
        for &i in points {
            for &j in points {
                for &k in points {
                    let (a, b, c) = (self.l2_squared(i, j), self.l2_squared(j, k), self.l2_squared(i, k));
                    let e = c - a - b;
                    let four = Rational::from_integer(4);
                    if e > rational::zero() && e * e > four * a * b {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    /// Permutation of the model induced by an integer matrix.
    pub fn matrix_action(&self, a: &IntMatrix) -> Vec<usize> {
        let q = self.denominator as i128;
        (0..self.len())
            .map(|i| {
                let k = self.numerators(i);
                let image: Vec<u64> = (0..self.dim)
                    .map(|r| {
                        let v: i128 = (0..self.dim).map(|c| a.get(r, c) as i128 * k[c] as i128).sum();
                        v.rem_euclid(q) as u64
                    })
                    .collect();
                self.index(&image)
            })
            .collect()
    }
}

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IntMatrix {
    pub dim: usize,
    pub entries: Vec<i64>,
}

impl IntMatrix {
    pub fn new(dim: usize, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Group("matrix entry count does not match the dimension".into()));
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    pub fn elementary(dim: usize, i: usize, j: usize, sign: i64) -> Self {
        let mut m = Self::identity(dim);
        m.entries[i * dim + j] = sign;
        m
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.dim + c]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let entries = (0..n * n)
            .map(|idx| {
                let (r, c) = (idx / n, idx % n);
                (0..n).map(|k| self.get(r, k).checked_mul(other.get(k, c)).expect("matrix entry overflow")).sum()
            })
            .collect();
        Self { dim: n, entries }
    }

    pub fn determinant(&self) -> i128 {
        let m: Vec<i128> = self.entries.iter().map(|&x| x as i128).collect();
        match self.dim {
            1 => m[0],
            2 => m[0] * m[3] - m[1] * m[2],
            3 => m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6]),
            _ => panic!("determinants implemented for dim <= 3"),
        }
    }
}

/// The elementary generators `E_ij(±1)` of `SL_n(ℤ)` plus the identity,
/// labelled like [`crate::group::FiniteQuotientGroup::special_linear`].
#[derive(Debug, Clone)]
pub struct IntegerMatrixGens {
    pub gens: GeneratorSet,
    pub matrices: Vec<IntMatrix>,
}

impl IntegerMatrixGens {
    pub fn elementary(dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Group("elementary generators supported for n = 2, 3".into()));
        }
        let names = elementary_labels(dim);
        let pairs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let gens = GeneratorSet::symmetric(&pairs)?;
        let mut matrices = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    matrices.push(IntMatrix::elementary(dim, i, j, 1));
                    matrices.push(IntMatrix::elementary(dim, i, j, -1));
                }
            }
        }
        matrices.push(IntMatrix::identity(dim));
        for (s, m) in matrices.iter().enumerate() {
            debug_assert_eq!(m.mul(&matrices[gens.inverse_of(s)]), IntMatrix::identity(dim));
        }
        Ok(Self { gens, matrices })
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim
    }

    /// Word ball in `SL_n(ℤ)`: distinct matrices with their word lengths, in
    /// breadth-first order.
    pub fn word_ball(&self, radius: u32) -> Vec<(IntMatrix, u32)> {
        let id = IntMatrix::identity(self.dim());
        let mut seen = HashMap::from([(id.clone(), 0u32)]);
        let mut out = vec![(id, 0)];
        let mut head = 0;
        while head < out.len() {
            let (m, len) = out[head].clone();
            head += 1;
            if len == radius {
                continue;
            }
            for s in self.gens.non_identity() {
                let next = self.matrices[s].mul(&m);
                if !seen.contains_key(&next) {
                    seen.insert(next.clone(), len + 1);
                    out.push((next, len + 1));
                }
            }
        }
        out
    }

    /// The action on the whole model as a warp system with the ℓ1 metric.
    pub fn warp_system(&self, model: &RationalTorusModel) -> Result<WarpSystem> {
        if model.dim() != self.dim() {
            return Err(Error::Action("matrix and torus dimensions differ".into()));
        }
        let action = self.matrices.iter().map(|m| model.matrix_action(m)).collect();
        WarpSystem::new(model.l1_space()?, self.gens.clone(), action)
    }
}

/// An orbit with its Schreier action and word distances.
#[derive(Debug, Clone, Serialize)]
pub struct Orbit {
    /// Model indices in breadth-first order from the base point.
    pub points: Vec<usize>,
    /// `action[s][i]` is the orbit index of `s·points[i]`.
    pub action: Vec<Vec<usize>>,
    /// Quotient word metric `min{|γ| : γ·y = y′}`.
    pub word_distance: Vec<Vec<u32>>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Schreier graph: `y` joined to `s·y` for every non-identity label.
    pub fn graph(&self, gens: &GeneratorSet) -> Multigraph {
        let adj = (0..self.len()).map(|y| gens.non_identity().map(|s| self.action[s][y]).collect()).collect();
        Multigraph::from_adjacency(adj).expect("symmetric generators give a symmetric graph")
    }

    pub fn diameter(&self) -> u32 {
        self.word_distance.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Orbit of model point `x` under the generators, failing beyond `cap` points.
pub fn orbit(model: &RationalTorusModel, gens: &IntegerMatrixGens, x: usize, cap: usize) -> Result<Orbit> {
    let perms: Vec<Vec<usize>> = gens.matrices.iter().map(|m| model.matrix_action(m)).collect();
    let mut index = HashMap::from([(x, 0usize)]);
    let mut points = vec![x];
    let mut queue = VecDeque::from([x]);
    while let Some(u) = queue.pop_front() {
        for s in gens.gens.non_identity() {
            let v = perms[s][u];
            if !index.contains_key(&v) {
                if points.len() >= cap {
                    return Err(Error::OrbitCap { cap, visited: points.len(), frontier: queue.len() + 1 });
                }
                index.insert(v, points.len());
                points.push(v);
                queue.push_back(v);
            }
        }
    }
    let action: Vec<Vec<usize>> = perms.iter().map(|p| points.iter().map(|&y| index[&p[y]]).collect()).collect();
    let m = points.len();
    let word_distance = (0..m)
        .map(|src| {
            let mut dist = vec![u32::MAX; m];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for s in gens.gens.non_identity() {
                    let v = action[s][u];
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect();
    Ok(Orbit { points, action, word_distance })
}

/// Both evaluations of whether `A` fixes `x_m = (q_1^{−m}, …, q_n^{−m})`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilizerCertificate {
    pub matrix: IntMatrix,
    pub q: Vec<u64>,
    pub m: u32,
    /// `A·x_m ≡ x_m mod 1`, evaluated with exact rationals.
    pub direct: bool,
    /// `a_{i,t} ≡ 0 mod q_t^m` for `t ≠ i` and `a_{i,i} ≡ 1 mod q_i^m`.
    pub congruence: bool,
    /// `(i, t, a_{i,t} mod q_t^m, q_t^m)` for every entry.
    pub residues: Vec<(usize, usize, u64, u64)>,
}

impl StabilizerCertificate {
    pub fn agrees(&self) -> bool {
        self.direct == self.congruence
    }
}

pub fn check_coprime(q: &[u64]) -> Result<()> {
    use num_integer::Integer;
    for (i, &a) in q.iter().enumerate() {
        if a < 2 {
            return Err(Error::Metric(format!("modulus {a} must exceed 1")));
        }
        for &b in &q[i + 1..] {
            if a.gcd(&b) != 1 {
                return Err(Error::NotCoprime { a, b });
            }
        }
    }
    Ok(())
}

pub fn stabilizer_congruence_check(a: &IntMatrix, q: &[u64], m: u32) -> Result<StabilizerCertificate> {
    check_coprime(q)?;
    let n = a.dim;
    if q.len() != n {
        return Err(Error::Metric("one modulus per coordinate is required".into()));
    }
    if a.determinant() != 1 {
        return Err(Error::Group("matrix must have determinant 1".into()));
    }
    let powers: Vec<i128> = q.iter().map(|&qi| (qi as i128).pow(m)).collect();
    let x: Vec<Rational> = powers.iter().map(|&p| Rational::new(1, p)).collect();
    let direct = (0..n).all(|i| {
        let ax: Rational = (0..n).map(|t| Rational::from_integer(a.get(i, t) as i128) * x[t]).sum();
        (ax - x[i]).is_integer()
    });
    let mut residues = Vec::new();
    let mut congruence = true;
    for i in 0..n {
        for t in 0..n {
            let r = (a.get(i, t) as i128).rem_euclid(powers[t]);
            let target = if i == t { 1 % powers[t] } else { 0 };
            congruence &= r == target;
            residues.push((i, t, r as u64, powers[t] as u64));
        }
    }
    Ok(StabilizerCertificate { matrix: a.clone(), q: q.to_vec(), m, direct, congruence, residues })
}

/// Stabilizer evidence over a word ball of `SL_n(ℤ)`.
#[derive(Debug, Clone, Serialize)]
pub struct NestedStabilizerReport {
    pub radius: u32,
    pub ball_size: usize,
    pub m_max: u32,
    /// Direct and congruence evaluations agree on every matrix and `m`.
    pub all_agree: bool,
    pub disagreements: Vec<(IntMatrix, u32)>,
    /// `Stab(x_{m+1}) ⊆ Stab(x_m)` within the ball for every `m < m_max`.
    pub nested: bool,
    pub nesting_witnesses: Vec<(IntMatrix, u32)>,
    /// Non-identity ball elements fixing every `x_m`, `m ≤ m_max`, with word lengths.
    pub common_nontrivial: Vec<(IntMatrix, u32)>,
}

pub fn nested_stabilizer_check(q: &[u64], m_max: u32, radius: u32) -> Result<NestedStabilizerReport> {
    check_coprime(q)?;
    let gens = IntegerMatrixGens::elementary(q.len())?;
    let ball = gens.word_ball(radius);
    let mut report = NestedStabilizerReport {
        radius,
        ball_size: ball.len(),
        m_max,
        all_agree: true,
        disagreements: Vec::new(),
        nested: true,
        nesting_witnesses: Vec::new(),
        common_nontrivial: Vec::new(),
    };
    for (a, len) in &ball {
        let mut fixes = Vec::new();
        for m in 1..=m_max {
            let cert = stabilizer_congruence_check(a, q, m)?;
            if !cert.agrees() {
                report.all_agree = false;
                report.disagreements.push((a.clone(), m));
            }
            fixes.push(cert.direct);
        }
        for m in 1..m_max as usize {
            if fixes[m] && !fixes[m - 1] {
                report.nested = false;
                report.nesting_witnesses.push((a.clone(), m as u32));
            }
        }
        if *len > 0 && m_max > 0 && fixes.iter().all(|&f| f) {
            report.common_nontrivial.push((a.clone(), *len));
        }
    }
    Ok(report)
}

/// Comparison of the level metric on an orbit with its word metric.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedExpanderReport {
    pub orbit_size: usize,
    #[serde(with = "rational::serde_str")]
    pub s: Rational,
    #[serde(with = "rational::serde_str")]
    pub s_star: Rational,
    pub isometric: bool,
    pub witness: Option<(usize, usize)>,
    #[serde(skip)]
    pub graph: Multigraph,
}

/// Largest stabilization threshold over pairs of the orbit, with the δ table
/// long enough for the orbit diameter.
pub fn orbit_threshold(system: &WarpSystem, orbit: &Orbit) -> Result<Rational> {
    let delta = delta_n(system, orbit.diameter() as usize);
    let mut s_star = rational::zero();
    for &y in &orbit.points {
        for &y2 in &orbit.points {
            if let Stabilization::SameOrbit { s_star: t, .. } = stabilization_threshold(system, &delta, y, y2)? {
                s_star = rational::max(s_star, t);
            }
        }
    }
    Ok(s_star)
}

/// Verifies that `d_s` restricted to the orbit equals the orbit word metric.
pub fn embedded_expander_check(system: &WarpSystem, orbit: &Orbit, s: Rational) -> Result<EmbeddedExpanderReport> {
    let s_star = orbit_threshold(system, orbit)?;
    if s < s_star {
        return Err(Error::BelowThreshold { got: rational::format(&s), required: rational::format(&s_star) });
    }
    let delta = delta_n(system, orbit.diameter() as usize);
    let mut witness = None;
    'outer: for (i, &y) in orbit.points.iter().enumerate() {
        for (j, &y2) in orbit.points.iter().enumerate() {
            let ds = level_distance(&delta, s, y, y2)?;
            if ds != Rational::from_integer(orbit.word_distance[i][j] as i128) {
                witness = Some((i, j));
                break 'outer;
            }
        }
    }
    Ok(EmbeddedExpanderReport {
        orbit_size: orbit.len(),
        s,
        s_star,
        isometric: witness.is_none(),
        witness,
        graph: orbit.graph(system.generators()),
    })
}
