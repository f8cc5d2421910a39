//! Serializable descriptions of custom models, shared with the CLI config.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GeneratorSet;
use crate::metric::FiniteMetricSpace;
use crate::profinite::{QuotientChain, TruncatedCompletion, WeightSequence};
use crate::rational::{self, Rational};
use crate::warp::WarpSystem;

/// One generator given by its images; `-1` marks an undefined image. The
/// inverse map is derived and labelled `name^-1` unless `involution` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub map: Vec<i64>,
    #[serde(default)]
    pub involution: bool,
}

/// A finite metric space with a generator action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpSystemSpec {
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(with = "rational::serde_vec_vec")]
    pub metric: Vec<Vec<Rational>>,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default = "rational::one", with = "rational::serde_str")]
    pub scale: Rational,
}

impl WarpSystemSpec {
    pub fn build(&self) -> Result<WarpSystem> {
        let n = self.metric.len();
        let mut space = FiniteMetricSpace::new(self.metric.clone())?;
        if !self.labels.is_empty() {
            space = space.with_labels(self.labels.clone())?;
        }
        let space = space.with_scale(self.scale)?;
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut maps: Vec<Vec<Option<usize>>> = Vec::new();
        for g in &self.generators {
            if g.map.len() != n {
                return Err(Error::Action(format!("generator {:?} maps {} of {n} points", g.name, g.map.len())));
            }
            let map: Vec<Option<usize>> = g
                .map
                .iter()
                .map(|&y| match y {
                    -1 => Ok(None),
                    y if y >= 0 && (y as usize) < n => Ok(Some(y as usize)),
                    y => Err(Error::Action(format!("image {y} of {:?} out of range", g.name))),
                })
                .collect::<Result<_>>()?;
            if g.involution {
                pairs.push((g.name.clone(), g.name.clone()));
                maps.push(map);
            } else {
                let mut inv = vec![None; n];
                for (x, y) in map.iter().enumerate() {
                    if let Some(y) = *y {
                        if inv[y].replace(x).is_some() {
                            return Err(Error::Action(format!("{:?} is not injective", g.name)));
                        }
                    }
                }
                pairs.push((g.name.clone(), format!("{}^-1", g.name)));
                maps.push(map);
                maps.push(inv);
            }
        }
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let gens = GeneratorSet::symmetric(&refs)?;
        maps.push((0..n).map(Some).collect());
        WarpSystem::partial(space, gens, maps)
    }
}

/// A quotient chain with weights and a truncation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainSpec {
    /// `ℤ/mⁿ`, `n = 1..=levels`.
    Cyclic {
        base: u64,
        levels: usize,
        #[serde(with = "rational::serde_vec")]
        weights: Vec<Rational>,
        level: Option<usize>,
    },
    /// `SL_dim(ℤ/m_k)` over the moduli.
    SpecialLinear {
        dim: usize,
        moduli: Vec<u64>,
        #[serde(with = "rational::serde_vec")]
        weights: Vec<Rational>,
        level: Option<usize>,
        #[serde(default = "default_cap")]
        cap: usize,
    },
}

fn default_cap() -> usize {
    100_000
}

impl ChainSpec {
    pub fn chain(&self) -> Result<QuotientChain> {
        match self {
            ChainSpec::Cyclic { base, levels, .. } => QuotientChain::cyclic(*base, *levels),
            ChainSpec::SpecialLinear { dim, moduli, cap, .. } => QuotientChain::special_linear(*dim, moduli, *cap),
        }
    }

    /// Builds the truncation; `allow_convention_violation` keeps weights that
    /// break the diameter convention and flags the result.
    pub fn build(&self, allow_convention_violation: bool) -> Result<TruncatedCompletion> {
        let chain = self.chain()?;
        let (weights, level) = match self {
            ChainSpec::Cyclic { weights, level, .. } | ChainSpec::SpecialLinear { weights, level, .. } => (weights, level),
        };
        let level = level.unwrap_or(chain.depth());
        TruncatedCompletion::build(chain, WeightSequence::new(weights.clone())?, level, allow_convention_violation)
    }
}
