//! Spectral gaps of the normalized Laplacian `L = I − D^{-1/2} A D^{-1/2}`,
//! Cheeger bounds and expander-family reports.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Multigraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralOptions {
    /// Graphs up to this many vertices get a full dense eigendecomposition.
    pub dense_limit: usize,
    /// Krylov dimension per Lanczos cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target residual `‖Lv − λv‖` as a multiple of the degree.
    pub residual_factor: f64,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { dense_limit: 2000, krylov_dim: 120, max_restarts: 200, residual_factor: 1e-8, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSpectrum {
    pub id: String,
    pub vertices: usize,
    /// Common degree when regular, otherwise the maximum degree.
    pub degree: usize,
    pub regular: bool,
    pub mode: SolveMode,
    /// Sorted ascending; dense mode only.
    pub adjacency_eigenvalues: Option<Vec<f64>>,
    pub laplacian_eigenvalues: Option<Vec<f64>>,
    /// `None` for a single vertex, where the gap is undefined.
    pub lambda2: Option<f64>,
    pub cheeger_lower: Option<f64>,
    pub cheeger_upper: Option<f64>,
    /// `‖Lv − λ_2 v‖` for the reported unit eigenvector.
    pub residual: Option<f64>,
}

fn normalized_adjacency(g: &Multigraph) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let n = g.vertex_count();
    let deg: Vec<f64> = (0..n).map(|u| g.degree(u) as f64).collect();
    let rows = (0..n)
        .map(|u| {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for &v in g.neighbours(u) {
                let w = 1.0 / (deg[u] * deg[v]).sqrt();
                match row.iter_mut().find(|(x, _)| *x == v) {
                    Some(e) => e.1 += w,
                    None => row.push((v, w)),
                }
            }
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    (rows, deg)
}

fn apply(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|row| row.iter().map(|&(v, w)| w * x[v]).sum()).collect()
}

fn laplacian_residual(rows: &[Vec<(usize, f64)>], v: &[f64], lambda: f64) -> f64 {
    let mv = apply(rows, v);
    v.iter().zip(&mv).map(|(x, m)| (x - m - lambda * x).powi(2)).sum::<f64>().sqrt()
}

pub fn spectral_gap(id: &str, g: &Multigraph, opts: &SpectralOptions) -> Result<GraphSpectrum> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::Spectral("graph has no vertices".into()));
    }
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::Disconnected { a: comps[0][0], b: comps[1][0] });
    }
    let regular = g.regular_degree();
    let degree = regular.unwrap_or_else(|| (0..n).map(|u| g.degree(u)).max().unwrap_or(0));
    let mut out = GraphSpectrum {
        id: id.to_string(),
        vertices: n,
        degree,
        regular: regular.is_some(),
        mode: SolveMode::Dense,
        adjacency_eigenvalues: None,
        laplacian_eigenvalues: None,
        lambda2: None,
        cheeger_lower: None,
        cheeger_upper: None,
        residual: None,
    };
    if n == 1 {
        out.laplacian_eigenvalues = Some(vec![0.0]);
        out.adjacency_eigenvalues = Some(vec![g.degree(0) as f64]);
        return Ok(out);
    }
    if (0..n).any(|u| g.degree(u) == 0) {
        return Err(Error::Spectral("isolated vertex".into()));
    }
    let (rows, deg) = normalized_adjacency(g);
    let (lambda2, vector) = if n <= opts.dense_limit {
        let (lap, adj, l2, v) = dense_solve(g, &rows);
        out.laplacian_eigenvalues = Some(lap);
        out.adjacency_eigenvalues = Some(adj);
        (l2, v)
    } else {
        out.mode = SolveMode::Iterative;
        lanczos_gap(&rows, &deg, degree as f64, opts)?
    };
    let residual = laplacian_residual(&rows, &vector, lambda2);
    out.lambda2 = Some(lambda2);
    out.cheeger_lower = Some(lambda2 / 2.0);
    out.cheeger_upper = Some((2.0 * lambda2.max(0.0)).sqrt());
    out.residual = Some(residual);
    Ok(out)
}

/// Eigenvalues ascending with matching eigenvector columns.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_solve(g: &Multigraph, rows: &[Vec<(usize, f64)>]) -> (Vec<f64>, Vec<f64>, f64, Vec<f64>) {
    let n = rows.len();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for (u, row) in rows.iter().enumerate() {
        for &(v, w) in row {
            lap[(u, v)] -= w;
        }
    }
    let (lap_values, lap_vectors) = sorted_eigen(lap);
    let adj_values = match g.regular_degree() {
        Some(d) => {
            let mut a: Vec<f64> = lap_values.iter().map(|mu| d as f64 * (1.0 - mu)).collect();
            a.reverse();
            a
        }
        None => {
            let mut a = DMatrix::<f64>::zeros(n, n);
            for u in 0..n {
                for &v in g.neighbours(u) {
                    a[(u, v)] += 1.0;
                }
            }
            sorted_eigen(a).0
        }
    };
    let v = lap_vectors.column(1).iter().copied().collect();
    (lap_values.clone(), adj_values, lap_values[1], v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(a: &mut [f64]) -> f64 {
    let norm = dot(a, a).sqrt();
    if norm > 0.0 {
        a.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn project_out(v: &mut [f64], u: &[f64]) {
    let c = dot(v, u);
    v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
}

/// Second eigenpair of `L` by restarted Lanczos on `M + I` with the top
/// eigenvector `D^{1/2}·1` deflated and full reorthogonalization.
fn lanczos_gap(rows: &[Vec<(usize, f64)>], deg: &[f64], degree: f64, opts: &SpectralOptions) -> Result<(f64, Vec<f64>)> {
    let n = rows.len();
    let mut top: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    normalize(&mut top);
    let op = |x: &[f64]| -> Vec<f64> {
        let mut y = apply(rows, x);
        y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        project_out(&mut y, &top);
        y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project_out(&mut start, &top);
    normalize(&mut start);
    let target = opts.residual_factor * degree;
    let m = opts.krylov_dim.min(n - 1).max(1);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            let mut w = op(&basis[j]);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    project_out(&mut w, b);
                }
                project_out(&mut w, &top);
            }
            let b = normalize(&mut w);
            if j + 1 == m || b < 1e-12 {
                break;
            }
            beta.push(b);
            basis.push(w);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let (_, vectors) = sorted_eigen(t);
        let mut ritz = vec![0.0; n];
        for (i, b) in basis.iter().enumerate().take(k) {
            let c = vectors[(i, k - 1)];
            ritz.iter_mut().zip(b).for_each(|(r, x)| *r += c * x);
        }
        project_out(&mut ritz, &top);
        normalize(&mut ritz);
        let lambda = 1.0 - (dot(&op(&ritz), &ritz) - 1.0);
        let residual = laplacian_residual(rows, &ritz, lambda);
        if best.as_ref().is_none_or(|b| residual < b.2) {
            best = Some((lambda, ritz.clone(), residual));
        }
        if residual <= target {
            return Ok((lambda, ritz));
        }
        start = ritz;
    }
    let (lambda, v, residual) = best.expect("at least one Lanczos cycle");
    Err(Error::Spectral(format!("Lanczos did not converge: λ2 ≈ {lambda}, residual {residual:e} > {target:e} ({} entries)", v.len())))
}

/// Exact conductance `min_S e(S, S̄)/min(vol S, vol S̄)` by Gray-code
/// enumeration of all cuts; at most 24 vertices.
pub fn exact_conductance(g: &Multigraph) -> Result<f64> {
    let n = g.vertex_count();
    if !(2..=24).contains(&n) {
        return Err(Error::Spectral("exhaustive cut enumeration needs 2..=24 vertices".into()));
    }
    let deg: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let total: usize = deg.iter().sum();
    let mut in_set = vec![false; n];
    let (mut cut, mut vol) = (0i64, 0usize);
    let mut best = f64::INFINITY;
    // Vertex n−1 stays outside S; both sides of every cut are still covered.
    for step in 1u64..(1u64 << (n - 1)) {
        let v = step.trailing_zeros() as usize;
        let (mut inside, mut outside) = (0i64, 0i64);
        for &w in g.neighbours(v) {
            if w == v {
                continue;
            }
            if in_set[w] {
                inside += 1;
            } else {
                outside += 1;
            }
        }
        if in_set[v] {
            in_set[v] = false;
            cut += inside - outside;
            vol -= deg[v];
        } else {
            in_set[v] = true;
            cut += outside - inside;
            vol += deg[v];
        }
        let denom = vol.min(total - vol);
        if denom > 0 {
            best = best.min(cut as f64 / denom as f64);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyRow {
    pub n: usize,
    pub order: usize,
    pub degree: usize,
    pub lambda2: f64,
    pub cheeger_lo: f64,
    pub cheeger_hi: f64,
    pub residual: f64,
    pub mode: SolveMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyTrend {
    Empty,
    /// Gaps strictly decrease over the tested range.
    GapToZero,
    /// Observed lower bound over the tested range.
    BoundedBelow { c: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub rows: Vec<FamilyRow>,
    pub trend: FamilyTrend,
    pub mixed_degrees: bool,
}

impl FamilyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,order,lambda2,cheeger_lo,cheeger_hi\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.n, r.order, r.lambda2, r.cheeger_lo, r.cheeger_hi));
        }
        out
    }
}

/// Gaps of `(n, graph)` pairs, solved in parallel.
pub fn expander_family_report(graphs: &[(usize, Multigraph)], opts: &SpectralOptions) -> Result<FamilyReport> {
    let spectra: Vec<Result<GraphSpectrum>> =
        graphs.par_iter().map(|(n, g)| spectral_gap(&format!("level-{n}"), g, opts)).collect();
    let mut rows = Vec::new();
    for ((n, _), spec) in graphs.iter().zip(spectra) {
        let spec = spec?;
        let lambda2 = spec.lambda2.ok_or_else(|| Error::Spectral(format!("level {n} has a single vertex")))?;
        rows.push(FamilyRow {
            n: *n,
            order: spec.vertices,
            degree: spec.degree,
            lambda2,
            cheeger_lo: spec.cheeger_lower.unwrap(),
            cheeger_hi: spec.cheeger_upper.unwrap(),
            residual: spec.residual.unwrap(),
            mode: spec.mode,
        });
    }
    let mixed_degrees = rows.windows(2).any(|w| w[0].degree != w[1].degree);
    let trend = if rows.is_empty() {
        FamilyTrend::Empty
    } else if rows.len() > 1 && rows.windows(2).all(|w| w[1].lambda2 < w[0].lambda2) {
        FamilyTrend::GapToZero
    } else {
        FamilyTrend::BoundedBelow { c: rows.iter().map(|r| r.lambda2).fold(f64::INFINITY, f64::min) }
    };
    Ok(FamilyReport { rows, trend, mixed_degrees })
}

/// Eigenvector check helper: `‖Lv − λv‖` for an arbitrary vector.
pub fn residual_of(g: &Multigraph, v: &[f64], lambda: f64) -> f64 {
    let (rows, _) = normalized_adjacency(g);
    let mut u = DVector::from_column_slice(v);
    let norm = u.norm();
    if norm > 0.0 {
        u /= norm;
    }
    laplacian_residual(&rows, u.as_slice(), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cycle_and_complete_gaps() {
        let opts = SpectralOptions::default();
        let c8 = spectral_gap("c8", &Multigraph::cycle(8), &opts).unwrap();
        assert!((c8.lambda2.unwrap() - (1.0 - (PI / 4.0).cos())).abs() < 1e-10);
        assert!(c8.residual.unwrap() < 1e-10);
        let k5 = spectral_gap("k5", &Multigraph::complete(5), &opts).unwrap();
        assert!((k5.lambda2.unwrap() - 1.25).abs() < 1e-10);
        let single = spectral_gap("pt", &Multigraph::from_edges(1, &[]).unwrap(), &opts).unwrap();
        assert!(single.lambda2.is_none());
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = Multigraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let err = spectral_gap("g", &g, &SpectralOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Disconnected { a: 0, b: 2 }));
    }

    #[test]
    fn iterative_matches_dense() {
        let g = Multigraph::cycle(60);
        let dense = spectral_gap("c", &g, &SpectralOptions::default()).unwrap();
        let opts = SpectralOptions { dense_limit: 10, ..SpectralOptions::default() };
        let iter = spectral_gap("c", &g, &opts).unwrap();
        assert_eq!(iter.mode, SolveMode::Iterative);
        assert!((iter.lambda2.unwrap() - dense.lambda2.unwrap()).abs() < 1e-8);
        assert!(iter.residual.unwrap() <= 2e-8);
    }

    #[test]
    fn conductance_of_small_graphs() {
        // Cycle C_6: best cut splits it in halves, 2 / 6.
        let h = exact_conductance(&Multigraph::cycle(6)).unwrap();
        assert!((h - 1.0 / 3.0).abs() < 1e-12);
        let k4 = exact_conductance(&Multigraph::complete(4)).unwrap();
        assert!((k4 - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn family_trends() {
        let opts = SpectralOptions::default();
        let graphs: Vec<(usize, Multigraph)> = (1..=3).map(|n| (n, Multigraph::cycle(3usize.pow(n as u32)))).collect();
        let report = expander_family_report(&graphs, &opts).unwrap();
        assert_eq!(report.trend, FamilyTrend::GapToZero);
        assert!(report.to_csv().starts_with("n,order,lambda2,cheeger_lo,cheeger_hi\n1,3,"));
        assert_eq!(expander_family_report(&[], &opts).unwrap().trend, FamilyTrend::Empty);
    }
}
