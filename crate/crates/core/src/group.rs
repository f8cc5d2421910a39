//! Finite quotient groups given by explicit data, with generating sets,
//! word metrics and Cayley graphs.
//!
//! Elements are enumerated breadth-first from the identity, processing the
//! generator labels in their declared order; that order is the canonical
//! element indexing used everywhere else in the crate.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Multigraph;

/// Symmetric generating set with an explicit identity label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSet {
    labels: Vec<String>,
    inverse: Vec<usize>,
    identity: usize,
}

impl GeneratorSet {
    pub fn new(labels: Vec<String>, inverse: Vec<usize>, identity: usize) -> Result<Self> {
        let n = labels.len();
        if inverse.len() != n {
            return Err(Error::Generators("inverse pairing has the wrong length".into()));
        }
        if identity >= n {
            return Err(Error::Generators("identity label missing".into()));
        }
        for (i, &j) in inverse.iter().enumerate() {
            if j >= n || inverse[j] != i {
                return Err(Error::Generators(format!("pairing is not an involution at {:?}", labels[i])));
            }
        }
        if inverse[identity] != identity {
            return Err(Error::Generators("identity must be its own inverse".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::Generators(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels, inverse, identity })
    }

    /// Builds `{s, s⁻¹ : (s, s⁻¹) in pairs} ∪ {id}`; a pair `(s, s)` declares
    /// an involution. The identity label `id` is appended last.
    pub fn symmetric(pairs: &[(&str, &str)]) -> Result<Self> {
        let mut labels = Vec::new();
        let mut inverse = Vec::new();
        for &(a, b) in pairs {
            if a == b {
                labels.push(a.to_string());
                inverse.push(labels.len() - 1);
            } else {
                let i = labels.len();
                labels.push(a.to_string());
                labels.push(b.to_string());
                inverse.push(i + 1);
                inverse.push(i);
            }
        }
        labels.push("id".to_string());
        inverse.push(labels.len() - 1);
        let identity = labels.len() - 1;
        Self::new(labels, inverse, identity)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn inverse_of(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    /// Indices of the non-identity labels, in declared order.
    pub fn non_identity(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(move |&i| i != self.identity)
    }
}

/// A word in the generator labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupWord {
    pub letters: Vec<usize>,
}

impl GroupWord {
    /// Number of non-identity letters.
    pub fn length(&self, gens: &GeneratorSet) -> usize {
        self.letters.iter().filter(|&&l| l != gens.identity()).count()
    }
}

/// Concrete representation of a group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    Residue(u64),
    /// Row-major square matrix with entries reduced mod the modulus.
    Matrix(Vec<u64>),
    /// Image list of a permutation of `0..degree`.
    Perm(Vec<u32>),
    /// Row index into an explicit multiplication table.
    Index(usize),
}

/// How elements multiply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Realization {
    Cyclic { modulus: u64 },
    SpecialLinear { dim: usize, modulus: u64 },
    /// `(p·q)(i) = p(q(i))`.
    Permutation { degree: usize },
    Table { table: Vec<Vec<usize>>, identity: usize },
}

impl Realization {
    pub fn identity(&self) -> Element {
        match self {
            Realization::Cyclic { .. } => Element::Residue(0),
            Realization::SpecialLinear { dim, modulus } => {
                let mut m = vec![0; dim * dim];
                for i in 0..*dim {
                    m[i * dim + i] = 1 % modulus;
                }
                Element::Matrix(m)
            }
            Realization::Permutation { degree } => Element::Perm((0..*degree as u32).collect()),
            Realization::Table { identity, .. } => Element::Index(*identity),
        }
    }

    pub fn validate(&self, e: &Element) -> Result<()> {
        let ok = match (self, e) {
            (Realization::Cyclic { modulus }, Element::Residue(r)) => r < modulus,
            (Realization::SpecialLinear { dim, modulus }, Element::Matrix(m)) => {
                m.len() == dim * dim && m.iter().all(|x| x < modulus) && det_mod(*dim, m, *modulus) == 1 % modulus
            }
            (Realization::Permutation { degree }, Element::Perm(p)) => {
                let mut seen = vec![false; *degree];
                p.len() == *degree
                    && p.iter().all(|&i| {
                        let i = i as usize;
                        i < *degree && !std::mem::replace(&mut seen[i], true)
                    })
            }
            (Realization::Table { table, .. }, Element::Index(i)) => *i < table.len(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Group(format!("{e:?} is not an element of {self:?}")))
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (Realization::Cyclic { modulus }, Element::Residue(x), Element::Residue(y)) => {
                Element::Residue(((*x as u128 + *y as u128) % *modulus as u128) as u64)
            }
            (Realization::SpecialLinear { dim, modulus }, Element::Matrix(x), Element::Matrix(y)) => {
                Element::Matrix(mat_mul_mod(*dim, x, y, *modulus))
            }
            (Realization::Permutation { .. }, Element::Perm(p), Element::Perm(q)) => {
                Element::Perm(q.iter().map(|&i| p[i as usize]).collect())
            }
            (Realization::Table { table, .. }, Element::Index(i), Element::Index(j)) => Element::Index(table[*i][*j]),
            _ => panic!("element kinds do not match the realization"),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match (self, a) {
            (Realization::Cyclic { modulus }, Element::Residue(x)) => Element::Residue((modulus - x % modulus) % modulus),
            (Realization::SpecialLinear { dim, modulus }, Element::Matrix(m)) => Element::Matrix(adjugate_mod(*dim, m, *modulus)),
            (Realization::Permutation { .. }, Element::Perm(p)) => {
                let mut inv = vec![0u32; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j as usize] = i as u32;
                }
                Element::Perm(inv)
            }
            (Realization::Table { table, identity }, Element::Index(i)) => {
                let j = (0..table.len())
                    .find(|&j| table[*i][j] == *identity)
                    .expect("table element without inverse");
                Element::Index(j)
            }
            _ => panic!("element kind does not match the realization"),
        }
    }
}

fn mat_mul_mod(dim: usize, x: &[u64], y: &[u64], m: u64) -> Vec<u64> {
    let mut out = vec![0u64; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc: u128 = 0;
            for k in 0..dim {
                acc += x[i * dim + k] as u128 * y[k * dim + j] as u128;
            }
            out[i * dim + j] = (acc % m as u128) as u64;
        }
    }
    out
}

fn det_mod(dim: usize, m: &[u64], modulus: u64) -> u64 {
    let signed: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    det_i128(dim, &signed).rem_euclid(modulus as i128) as u64
}

fn det_i128(dim: usize, m: &[i128]) -> i128 {
    match dim {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => panic!("determinants implemented for dim <= 3"),
    }
}

// Inverse of a determinant-one matrix is its adjugate.
fn adjugate_mod(dim: usize, m: &[u64], modulus: u64) -> Vec<u64> {
    let s: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    let adj: Vec<i128> = match dim {
        1 => vec![1],
        2 => vec![s[3], -s[1], -s[2], s[0]],
        3 => {
            let c = |r0: usize, r1: usize, c0: usize, c1: usize| s[r0 * 3 + c0] * s[r1 * 3 + c1] - s[r0 * 3 + c1] * s[r1 * 3 + c0];
            // adj[i][j] = cofactor[j][i]
            vec![
                c(1, 2, 1, 2),
                -c(0, 2, 1, 2),
                c(0, 1, 1, 2),
                -c(1, 2, 0, 2),
                c(0, 2, 0, 2),
                -c(0, 1, 0, 2),
                c(1, 2, 0, 1),
                -c(0, 2, 0, 1),
                c(0, 1, 0, 1),
            ]
        }
        _ => panic!("inverses implemented for dim <= 3"),
    };
    adj.into_iter().map(|x| x.rem_euclid(modulus as i128) as u64).collect()
}

/// Elementary matrix `E_ij(sign)` of size `dim`, entries reduced mod `modulus`.
pub fn elementary(dim: usize, i: usize, j: usize, positive: bool, modulus: u64) -> Element {
    let mut m = vec![0u64; dim * dim];
    for k in 0..dim {
        m[k * dim + k] = 1 % modulus;
    }
    m[i * dim + j] = if positive { 1 % modulus } else { (modulus - 1) % modulus };
    Element::Matrix(m)
}

/// Labels `E{i}{j}+` / `E{i}{j}-` (1-based) for the elementary generators.
pub fn elementary_labels(dim: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                out.push((format!("E{}{}+", i + 1, j + 1), format!("E{}{}-", i + 1, j + 1)));
            }
        }
    }
    out
}

/// A finite group with a symmetric generating set, enumerated from the
/// identity.
#[derive(Debug, Clone)]
pub struct FiniteQuotientGroup {
    realization: Realization,
    gens: GeneratorSet,
    gen_images: Vec<Element>,
    elements: Vec<Element>,
    index: HashMap<Element, usize>,
    /// `left[s][g]` is the index of `s·g`.
    left: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    word_len: Vec<u32>,
}

impl FiniteQuotientGroup {
    /// Enumerates the subgroup generated by `gen_images`; fails if it has more
    /// than `cap` elements or the images are inconsistent with the pairing.
    pub fn new(realization: Realization, gens: GeneratorSet, gen_images: Vec<Element>, cap: usize) -> Result<Self> {
        if gen_images.len() != gens.len() {
            return Err(Error::Group("one image per generator label is required".into()));
        }
        for e in &gen_images {
            realization.validate(e)?;
        }
        let id = realization.identity();
        if gen_images[gens.identity()] != id {
            return Err(Error::Group("identity label must map to the identity".into()));
        }
        for s in 0..gens.len() {
            let prod = realization.mul(&gen_images[s], &gen_images[gens.inverse_of(s)]);
            if prod != id {
                return Err(Error::Group(format!(
                    "image of {:?} is not inverse to image of {:?}",
                    gens.label(s),
                    gens.label(gens.inverse_of(s))
                )));
            }
        }

        let mut elements = vec![id.clone()];
        let mut index = HashMap::from([(id, 0usize)]);
        let mut word_len = vec![0u32];
        let mut queue = VecDeque::from([0usize]);
        while let Some(g) = queue.pop_front() {
            for s in gens.non_identity() {
                let h = realization.mul(&gen_images[s], &elements[g]);
                if !index.contains_key(&h) {
                    if elements.len() >= cap {
                        return Err(Error::Group(format!("group exceeds the cap of {cap} elements")));
                    }
                    index.insert(h.clone(), elements.len());
                    elements.push(h);
                    word_len.push(word_len[g] + 1);
                    queue.push_back(elements.len() - 1);
                }
            }
        }
        if let Realization::Table { table, .. } = &realization {
            if elements.len() != table.len() {
                let missing = (0..table.len()).find(|i| !index.contains_key(&Element::Index(*i))).unwrap_or(0);
                return Err(Error::NotGenerated { element: missing });
            }
        }

        let left = gen_images
            .iter()
            .map(|img| elements.iter().map(|g| index[&realization.mul(img, g)]).collect())
            .collect();
        let inverse = elements.iter().map(|g| index[&realization.inverse(g)]).collect();
        Ok(Self { realization, gens, gen_images, elements, index, left, inverse, word_len })
    }

    /// `ℤ/m` with generators `{+1, -1, id}`.
    pub fn cyclic(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Group("modulus must be positive".into()));
        }
        let gens = GeneratorSet::symmetric(&[("+1", "-1")])?;
        let images = vec![Element::Residue(1 % modulus), Element::Residue((modulus - 1) % modulus), Element::Residue(0)];
        Self::new(Realization::Cyclic { modulus }, gens, images, usize::MAX)
    }

    /// `SL_dim(ℤ/m)` with the elementary generators `E_ij(±1)` and the identity.
    pub fn special_linear(dim: usize, modulus: u64, cap: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) || modulus < 2 {
            return Err(Error::Group("special linear groups need dim in 2..=3 and modulus >= 2".into()));
        }
        let names = elementary_labels(dim);
        let pairs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let gens = GeneratorSet::symmetric(&pairs)?;
        let mut images = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    images.push(elementary(dim, i, j, true, modulus));
                    images.push(elementary(dim, i, j, false, modulus));
                }
            }
        }
        let realization = Realization::SpecialLinear { dim, modulus };
        images.push(realization.identity());
        Self::new(realization, gens, images, cap)
    }

    /// Group generated by explicit permutations; each gets a label `g{k}` and,
    /// unless it is an involution, an inverse label `g{k}'`.
    pub fn from_permutations(degree: usize, perms: &[Vec<u32>]) -> Result<Self> {
        let realization = Realization::Permutation { degree };
        let mut names = Vec::new();
        let mut images = Vec::new();
        for (k, p) in perms.iter().enumerate() {
            let e = Element::Perm(p.clone());
            realization.validate(&e)?;
            let inv = realization.inverse(&e);
            if inv == e {
                names.push((format!("g{k}"), format!("g{k}")));
                images.push(e);
            } else {
                names.push((format!("g{k}"), format!("g{k}'")));
                images.push(e);
                images.push(inv);
            }
        }
        let pairs: Vec<(&str, &str)> = names.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let gens = GeneratorSet::symmetric(&pairs)?;
        images.push(realization.identity());
        Self::new(realization, gens, images, usize::MAX)
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn generator_image(&self, label: usize) -> usize {
        self.index[&self.gen_images[label]]
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn index_of(&self, e: &Element) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.index[&self.realization.mul(&self.elements[a], &self.elements[b])]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// `s·g` for generator label `s`.
    pub fn left_mul(&self, label: usize, g: usize) -> usize {
        self.left[label][g]
    }

    pub fn left_table(&self, label: usize) -> &[usize] {
        &self.left[label]
    }

    /// Word length `|g|` with respect to the generating set.
    pub fn word_length(&self, g: usize) -> u32 {
        self.word_len[g]
    }

    pub fn diameter(&self) -> u32 {
        self.word_len.iter().copied().max().unwrap_or(0)
    }

    /// Elements of word length at most `radius` with their exact lengths, in
    /// canonical (breadth-first) order.
    pub fn word_ball(&self, radius: u32) -> Vec<(usize, u32)> {
        (0..self.order())
            .filter(|&g| self.word_len[g] <= radius)
            .map(|g| (g, self.word_len[g]))
            .collect()
    }

    /// Right-invariant word metric: `min{|γ| : γ·g = g2}`.
    pub fn distance(&self, g: usize, g2: usize) -> Result<u32> {
        if g >= self.order() || g2 >= self.order() {
            return Err(Error::Group(format!("element index out of range ({g}, {g2})")));
        }
        Ok(self.word_len[self.mul(g2, self.inverse[g])])
    }

    pub fn distance_matrix(&self) -> Vec<Vec<u32>> {
        (0..self.order())
            .map(|g| {
                let ginv = self.inverse[g];
                (0..self.order()).map(|h| self.word_len[self.mul(h, ginv)]).collect()
            })
            .collect()
    }

    /// Cayley graph: vertex `g` is joined to `s·g` for every non-identity label.
    pub fn cayley_graph(&self) -> Multigraph {
        let adj = (0..self.order())
            .map(|g| self.gens.non_identity().map(|s| self.left[s][g]).collect())
            .collect();
        Multigraph::from_adjacency(adj).expect("symmetric generating set gives a symmetric graph")
    }

    /// Evaluates a word right to left: `letters[0]` is applied last.
    pub fn evaluate(&self, word: &GroupWord) -> usize {
        word.letters.iter().rev().fold(self.identity(), |g, &s| self.left[s][g])
    }

    /// Checks closure, identity, inverses and associativity. Triples are
    /// exhaustive when `order ≤ exhaustive_limit`, otherwise `samples` random
    /// triples are drawn.
    pub fn verify_axioms(&self, exhaustive_limit: usize, samples: usize, seed: u64) -> Result<()> {
        let n = self.order();
        for g in 0..n {
            if self.mul(0, g) != g || self.mul(g, 0) != g {
                return Err(Error::Group(format!("identity law fails at {g}")));
            }
            if self.mul(g, self.inverse[g]) != 0 || self.mul(self.inverse[g], g) != 0 {
                return Err(Error::Group(format!("inverse law fails at {g}")));
            }
        }
        let check = |a: usize, b: usize, c: usize| -> Result<()> {
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                return Err(Error::Group(format!("associativity fails at ({a}, {b}, {c})")));
            }
            Ok(())
        };
        if n <= exhaustive_limit {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        check(a, b, c)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
            }
        }
        Ok(())
    }
}
