//! Warped metrics and warped cones over finite models.

pub mod descriptor;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod group;
pub mod hr;
pub mod metric;
pub mod profinite;
pub mod rational;
pub mod spectral;
pub mod torus;
pub mod warp;

pub use embedding::{CompressionProfile, KernelMatrix, PointEmbedding};
pub use error::{Error, Result};
pub use graph::Multigraph;
pub use group::{Element, FiniteQuotientGroup, GeneratorSet, GroupWord, Realization};
pub use hr::{HrCertificate, HrFamily};
pub use metric::{FiniteMetricSpace, Provenance, WarpedDistanceMatrix};
pub use profinite::{QuotientChain, TruncatedCompletion, WeightSequence};
pub use rational::Rational;
pub use warp::{DeltaTable, HalfStep, LevelMetric, Stabilization, WarpSystem};
