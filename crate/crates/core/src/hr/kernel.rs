//! Positive-type kernels on a group induced from kernels on a slice.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::embedding::{is_positive_type, KernelMatrix};
use crate::error::{Error, Result};
use crate::group::FiniteQuotientGroup;
use crate::rational::{self, Rational};
use crate::spectral::sorted_eigen;

/// A positive-type kernel on the points of `G_N`, acted on by left
/// multiplication, and a word ball of `G_N` with lengths.
#[derive(Debug, Clone)]
pub struct InducedKernelInput<'a> {
    pub kernel: &'a KernelMatrix,
    pub group: &'a FiniteQuotientGroup,
    pub ball: Vec<(usize, u32)>,
}

/// `k(y, y′) = 0` beyond distance `N` forces `h(γ) = 0` whenever every point
/// is moved more than `N`.
#[derive(Debug, Clone, Serialize)]
pub struct SupportEcho {
    #[serde(with = "rational::serde_str")]
    pub radius: Rational,
    pub kernel_controlled: bool,
    /// Ball elements with `min_y d(y, γy) > N`.
    pub displaced: usize,
    /// First displaced element with `h(γ) ≠ 0`.
    pub witness: Option<usize>,
}

impl SupportEcho {
    pub fn holds(&self) -> bool {
        !self.kernel_controlled || self.witness.is_none()
    }
}

/// `h(γ) = |Y|⁻¹ Σ_y k(y, γy)` on the ball and the Gram matrix
/// `[h(γ⁻¹γ′)]` over it.
#[derive(Debug, Clone, Serialize)]
pub struct InducedKernel {
    pub ball: Vec<(usize, u32)>,
    pub h: Vec<f64>,
    pub gram_min_eigenvalue: f64,
    /// Smallest eigenvalue `≥ −1e-8`.
    pub psd: bool,
    pub echo: Option<SupportEcho>,
}

/// `metric` with radius `N` enables the controlled-support check.
pub fn induced_group_kernel(input: &InducedKernelInput<'_>, metric: Option<(&[Vec<Rational>], Rational)>) -> Result<InducedKernel> {
    let group = input.group;
    let order = group.order();
    if input.kernel.len() != order {
        return Err(Error::Embedding("kernel must live on the points of the acting group".into()));
    }
    if !is_positive_type(input.kernel, 1e-9) {
        return Err(Error::Embedding("slice kernel is not of positive type".into()));
    }
    let members: Vec<usize> = input.ball.iter().map(|b| b.0).collect();
    if members.iter().any(|&g| g >= order || !members.contains(&group.inverse(g))) {
        return Err(Error::BallNotSymmetric);
    }
    let h_all: Vec<f64> = (0..order)
        .map(|g| (0..order).map(|y| input.kernel.get(y, group.mul(g, y))).sum::<f64>() / order as f64)
        .collect();
    let n = members.len();
    let gram = DMatrix::from_fn(n, n, |i, j| h_all[group.mul(group.inverse(members[i]), members[j])]);
    let gram = (&gram + gram.transpose()) * 0.5;
    let min = if n == 0 { 0.0 } else { sorted_eigen(gram).0[0] };
    let echo = metric.map(|(d, radius)| {
        let kernel_controlled =
            (0..order).all(|y| (0..order).all(|y2| d[y][y2] <= radius || input.kernel.get(y, y2) == 0.0));
        let mut displaced = 0;
        let mut witness = None;
        for &g in &members {
            if (0..order).all(|y| d[y][group.mul(g, y)] > radius) {
                displaced += 1;
                if h_all[g] != 0.0 && witness.is_none() {
                    witness = Some(g);
                }
            }
        }
        SupportEcho { radius, kernel_controlled, displaced, witness }
    });
    Ok(InducedKernel {
        ball: input.ball.clone(),
        h: members.iter().map(|&g| h_all[g]).collect(),
        gram_min_eigenvalue: min,
        psd: min >= -1e-8,
        echo,
    })
}
