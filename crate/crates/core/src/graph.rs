//! Simple undirected graphs and an exhaustive densest-subgraph solver.
//!
//! The graph side exists purely as an independent cross-check for the
//! reduction in [`crate::oracle`]: on small graphs the exact attack optimum
//! must select a vertex set whose induced edge count matches the exhaustive
//! densest-subgraph maximum.

use std::fs;
use std::path::Path;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Simple undirected graph with dense vertex indices `0..V`.
#[derive(Debug, Clone)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u64>,
}

/// Exhaustive enumeration refuses to examine more candidates than this.
pub const DENSEST_SUBSET_CAP: u64 = 10_000_000;

impl Graph {
    /// Builds a graph, rejecting self-loops and duplicate edges. Edges are
    /// normalized to `u < v`.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_vertices > 64 {
            return Err(Error::Construction(format!(
                "graph with {n_vertices} vertices exceeds the 64-vertex bitmask limit"
            )));
        }
        let mut normalized = Vec::new();
        let mut adjacency = vec![0u64; n_vertices];
        for (u, v) in edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::Construction(format!(
                    "edge ({u}, {v}) out of range for {n_vertices} vertices"
                )));
            }
            if u == v {
                return Err(Error::Construction(format!("self-loop at vertex {u}")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if adjacency[a] >> b & 1 == 1 {
                return Err(Error::Construction(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
            normalized.push((a, b));
        }
        Ok(Self { n_vertices, edges: normalized, adjacency })
    }

    /// Reads an edge-list file: first line `V E`, then `E` lines `u v`
    /// (0-indexed).
    pub fn from_edge_list_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_edge_list_str(&text)
    }

    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Construction("empty edge-list file".into()))?;
        let mut parts = header.split_whitespace();
        let parse = |s: Option<&str>, what: &str, row: usize| -> Result<usize> {
            s.and_then(|v| v.parse().ok()).ok_or_else(|| Error::Ingest {
                row: row as u64 + 1,
                message: format!("expected {what}"),
            })
        };
        let n_vertices = parse(parts.next(), "vertex count", 0)?;
        let n_edges = parse(parts.next(), "edge count", 0)?;
        let mut edges = Vec::with_capacity(n_edges);
        for (row, line) in lines {
            let mut parts = line.split_whitespace();
            let u = parse(parts.next(), "edge endpoint", row)?;
            let v = parse(parts.next(), "edge endpoint", row)?;
            edges.push((u, v));
        }
        if edges.len() != n_edges {
            return Err(Error::Construction(format!(
                "header declares {n_edges} edges, file has {}",
                edges.len()
            )));
        }
        Self::new(n_vertices, edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of edges induced by a vertex set.
    pub fn induced_edges(&self, vertices: &[usize]) -> usize {
        let mut mask = 0u64;
        for &v in vertices {
            mask |= 1 << v;
        }
        self.induced_edges_mask(mask)
    }

    fn induced_edges_mask(&self, mask: u64) -> usize {
        let mut doubled = 0;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            doubled += (self.adjacency[v] & mask).count_ones() as usize;
        }
        doubled / 2
    }

    /// Exhaustive densest-subgraph search over all vertex sets of size ≤ k:
    /// returns the maximum induced edge count and the first witness in
    /// lexicographic order.
    pub fn densest_subset(&self, k: usize) -> Result<(usize, Vec<usize>)> {
        let k = k.min(self.n_vertices);
        let mut candidates: u128 = 0;
        for size in 0..=k {
            candidates += binomial(self.n_vertices, size);
        }
        if candidates > DENSEST_SUBSET_CAP as u128 {
            return Err(Error::Capacity { required: candidates, cap: DENSEST_SUBSET_CAP });
        }
        let mut best_count = 0;
        let mut best_set = Vec::new();
        for size in 1..=k {
            for combo in (0..self.n_vertices).combinations(size) {
                let count = self.induced_edges(&combo);
                if count > best_count {
                    best_count = count;
                    best_set = combo;
                }
            }
        }
        Ok((best_count, best_set))
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut result: u128 = 1;
    for i in 0..k.min(n - k) {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}
