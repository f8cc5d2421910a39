//! Finite metric spaces with exact rational distances.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Points `0..n` with an exact distance matrix and a positive scale `s`; the
/// effective metric is `s·d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    dist: Vec<Vec<Rational>>,
    scale: Rational,
    labels: Vec<String>,
}

impl FiniteMetricSpace {
    /// Validates zero diagonal, symmetry, positivity off the diagonal and the
    /// triangle inequality (all triples).
    pub fn new(dist: Vec<Vec<Rational>>) -> Result<Self> {
        let n = dist.len();
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Metric(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if !row[i].is_zero() {
                return Err(Error::Metric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if row[j] != dist[j][i] {
                    return Err(Error::Metric(format!("asymmetric at ({i}, {j})")));
                }
                if row[j] <= rational::zero() {
                    return Err(Error::Metric(format!("non-positive distance at ({i}, {j})")));
                }
            }
        }
        if let Some((i, j, k)) = triangle_violation(&dist) {
            return Err(Error::Metric(format!("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")));
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self { dist, scale: rational::one(), labels })
    }

    /// Builds the matrix from a distance function on `0..n`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Rational) -> Result<Self> {
        Self::new((0..n).map(|i| (0..n).map(|j| if i == j { rational::zero() } else { f(i, j) }).collect()).collect())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Metric("one label per point is required".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: Rational) -> Result<Self> {
        if scale <= rational::zero() {
            return Err(Error::Metric("scale must be positive".into()));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn scale(&self) -> Rational {
        self.scale
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Unscaled distance `d(i, j)`.
    pub fn base(&self, i: usize, j: usize) -> Rational {
        self.dist[i][j]
    }

    /// Scaled distance `s·d(i, j)`.
    pub fn dist(&self, i: usize, j: usize) -> Rational {
        self.scale * self.dist[i][j]
    }

    pub fn base_matrix(&self) -> &[Vec<Rational>] {
        &self.dist
    }

    pub fn scaled_matrix(&self) -> Vec<Vec<Rational>> {
        self.dist.iter().map(|row| row.iter().map(|d| self.scale * d).collect()).collect()
    }

    pub fn diameter(&self) -> Rational {
        self.dist.iter().flatten().copied().max().unwrap_or_else(rational::zero) * self.scale
    }

    /// Smallest positive unscaled distance.
    pub fn separation(&self) -> Option<Rational> {
        self.dist.iter().flatten().copied().filter(|d| !d.is_zero()).min()
    }
}

/// First triple `(i, j, k)` with `d(i,k) > d(i,j) + d(j,k)`.
pub fn triangle_violation(dist: &[Vec<Rational>]) -> Option<(usize, usize, usize)> {
    let n = dist.len();
    match integer_matrix(dist) {
        Some((ints, _)) => {
            for j in 0..n {
                for i in 0..n {
                    let dij = ints[i][j];
                    for k in 0..n {
                        if ints[i][k] > dij + ints[j][k] {
                            return Some((i, j, k));
                        }
                    }
                }
            }
            None
        }
        None => {
            for j in 0..n {
                for i in 0..n {
                    for k in 0..n {
                        if dist[i][k] > dist[i][j] + dist[j][k] {
                            return Some((i, j, k));
                        }
                    }
                }
            }
            None
        }
    }
}

/// Rescales a rational matrix to integers over a common denominator.
/// Headroom of 2⁶⁰ is kept so path sums cannot overflow on desk-scale inputs.
pub fn integer_matrix(m: &[Vec<Rational>]) -> Option<(Vec<Vec<i128>>, i128)> {
    let denom = rational::common_denominator(m.iter().flatten())?;
    let limit: i128 = 1 << 60;
    let ints: Option<Vec<Vec<i128>>> = m
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| rational::scaled_integer(r, denom).filter(|v| v.abs() < limit))
                .collect()
        })
        .collect();
    ints.map(|ints| (ints, denom))
}

/// Symmetric distance matrix produced by one of the warped-metric operations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpedDistanceMatrix {
    pub provenance: Provenance,
    #[serde(serialize_with = "serialize_matrix")]
    pub values: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Warped,
    LevelS,
    OneStep,
    HalfStep,
    ClosedForm,
}

fn serialize_matrix<S: serde::Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for row in m {
        let row: Vec<String> = row.iter().map(rational::format).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl WarpedDistanceMatrix {
    pub fn new(provenance: Provenance, values: Vec<Vec<Rational>>) -> Self {
        Self { provenance, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.values[i][j]
    }

    /// CSV with one row per point, entries as `p/q`.
    pub fn to_csv(&self) -> String {
        let n = self.len();
        let mut out = String::from("point");
        for j in 0..n {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push(',');
                out.push_str(&rational::format(v));
            }
            out.push('\n');
        }
        out
    }

    /// Zero diagonal, symmetric, triangle inequality.
    pub fn is_pseudometric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| self.values[i][i].is_zero() && (0..n).all(|j| self.values[i][j] == self.values[j][i]))
            && triangle_violation(&self.values).is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn path(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(n, |i, j| int((i as i128 - j as i128).abs())).unwrap()
    }

    #[test]
    fn validation() {
        assert!(path(4).diameter() == int(3));
        let bad = vec![vec![int(0), int(1), int(5)], vec![int(1), int(0), int(1)], vec![int(5), int(1), int(0)]];
        assert!(matches!(FiniteMetricSpace::new(bad), Err(Error::Metric(_))));
        let asym = vec![vec![int(0), int(1)], vec![int(2), int(0)]];
        assert!(FiniteMetricSpace::new(asym).is_err());
        let zero = vec![vec![int(0), int(0)], vec![int(0), int(0)]];
        assert!(FiniteMetricSpace::new(zero).is_err());
    }

    #[test]
    fn scaling() {
        let s = path(3).with_scale(q(3, 2)).unwrap();
        assert_eq!(s.dist(0, 2), int(3));
        assert_eq!(s.base(0, 2), int(2));
        assert_eq!(s.separation(), Some(int(1)));
        assert!(path(2).with_scale(int(0)).is_err());
    }

    #[test]
    fn csv_rendering() {
        let m = WarpedDistanceMatrix::new(Provenance::Warped, vec![vec![int(0), q(1, 2)], vec![q(1, 2), int(0)]]);
        assert_eq!(m.to_csv(), "point,0,1\n0,0/1,1/2\n1,1/2,0/1\n");
        assert!(m.is_pseudometric());
    }
}
