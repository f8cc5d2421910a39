//! Undirected multigraphs in adjacency-multiset form.
//!
//! `adj[u]` lists one entry per edge end at `u`, so `adj[u].len()` is the
//! degree. A loop at `u` appears once in `adj[u]` and contributes one to the
//! degree; an ordinary edge `{u, v}` appears in both `adj[u]` and `adj[v]`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    adj: Vec<Vec<usize>>,
}

impl Multigraph {
    pub fn from_adjacency(adj: Vec<Vec<usize>>) -> Result<Self> {
        let n = adj.len();
        let mut counts = std::collections::HashMap::new();
        for (u, list) in adj.iter().enumerate() {
            for &v in list {
                if v >= n {
                    return Err(Error::Parse(format!("neighbour {v} of {u} out of range")));
                }
                *counts.entry((u, v)).or_insert(0usize) += 1;
            }
        }
        for (&(u, v), &c) in &counts {
            if counts.get(&(v, u)).copied().unwrap_or(0) != c {
                return Err(Error::Parse(format!("adjacency not symmetric at ({u}, {v})")));
            }
        }
        Ok(Self { adj })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Parse(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            adj[u].push(v);
            if u != v {
                adj[v].push(u);
            }
        }
        Ok(Self { adj })
    }

    pub fn cycle(m: usize) -> Self {
        let adj = (0..m).map(|i| vec![(i + 1) % m, (i + m - 1) % m]).collect();
        Self { adj }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self { adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// Common degree, `None` for irregular graphs.
    pub fn regular_degree(&self) -> Option<usize> {
        let first = self.adj.first()?.len();
        self.adj.iter().all(|l| l.len() == first).then_some(first)
    }

    /// Multiplicity of `v` in `adj[u]`.
    pub fn multiplicity(&self, u: usize, v: usize) -> usize {
        self.adj[u].iter().filter(|&&w| w == v).count()
    }

    /// Connected components as lists of vertices, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// BFS distances from `source`; `None` marks unreachable vertices.
    pub fn bfs(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.adj.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// One `u v` line per undirected edge (loops as `u u`), `u <= v`, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, list) in self.adj.iter().enumerate() {
            let mut ends: Vec<usize> = list.iter().copied().filter(|&v| v >= u).collect();
            ends.sort_unstable();
            for v in ends {
                let _ = writeln!(out, "{u} {v}");
            }
        }
        out
    }

    /// Parses the edge-list format. Blank lines and `#` comments are ignored;
    /// the vertex count is one past the largest index unless `n` is given.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_vertex = None::<usize>;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |p: Option<&str>| -> Result<usize> {
                p.and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("edge list line {}: expected `u v`", lineno + 1)))
            };
            let u = parse(parts.next())?;
            let v = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("edge list line {}: trailing tokens", lineno + 1)));
            }
            max_vertex = Some(max_vertex.map_or(u.max(v), |m| m.max(u).max(v)));
            edges.push((u, v));
        }
        let count = n.unwrap_or_else(|| max_vertex.map_or(0, |m| m + 1));
        Self::from_edges(count, &edges)
    }
}
