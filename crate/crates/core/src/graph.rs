//! Undirected graphs in compressed adjacency form and their normalized
//! operators.
//!
//! The symmetric normalized Laplacian is `L = I - D^{-1/2} A D^{-1/2}`, with
//! spectrum contained in [0,2]. The normalized adjacency is `P = I - L`.
//! Isolated nodes get a zero row in P, so L acts as the identity there and
//! the spectrum stays inside [0,2].

use std::collections::BTreeSet;

use crate::dense::Matrix;
use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Undirected simple graph in CSR form.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    degrees: Vec<usize>,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    /// Edges as (u, v) with u < v, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Builds a simple undirected graph: symmetrizes, drops self-loops,
/// deduplicates.
pub fn build_graph(edges: &[(usize, usize)], n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut set = BTreeSet::new();
    for &(u, v) in edges {
        if u >= n {
            return Err(Error::NodeIndexOutOfRange { index: u, nodes: n });
        }
        if v >= n {
            return Err(Error::NodeIndexOutOfRange { index: v, nodes: n });
        }
        if u == v {
            continue;
        }
        set.insert((u.min(v), u.max(v)));
    }

    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in &set {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(2 * set.len());
    let mut degrees = Vec::with_capacity(n);
    row_offsets.push(0);
    for mut nbrs in adjacency {
        nbrs.sort_unstable();
        degrees.push(nbrs.len());
        col_indices.extend_from_slice(&nbrs);
        row_offsets.push(col_indices.len());
    }

    Ok(Graph {
        n,
        row_offsets,
        col_indices,
        degrees,
    })
}

/// 2D 4-neighborhood grid; node (r, c) has index `r * width + c`.
pub fn grid_graph(height: usize, width: usize) -> Result<Graph> {
    if height == 0 || width == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let u = r * width + c;
            if c + 1 < width {
                edges.push((u, u + 1));
            }
            if r + 1 < height {
                edges.push((u, u + width));
            }
        }
    }
    build_graph(&edges, height * width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorMode {
    /// Symmetric normalized Laplacian, `I - D^{-1/2} A D^{-1/2}`.
    Laplacian,
    /// Normalized adjacency, `D^{-1/2} A D^{-1/2}`.
    Adjacency,
}

/// Matrix-free normalized graph operator. Immutable once built; safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct NormalizedOperator<'g> {
    graph: &'g Graph,
    scale: Vec<f64>,
    mode: OperatorMode,
}

impl<'g> NormalizedOperator<'g> {
    pub fn laplacian(graph: &'g Graph) -> Self {
        Self::new(graph, OperatorMode::Laplacian)
    }

    pub fn adjacency(graph: &'g Graph) -> Self {
        Self::new(graph, OperatorMode::Adjacency)
    }

    fn new(graph: &'g Graph, mode: OperatorMode) -> Self {
        let scale = graph
            .degrees
            .iter()
            .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
            .collect();
        Self { graph, scale, mode }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }

    pub fn node_count(&self) -> usize {
        self.graph.n
    }

    #[inline]
    fn propagate_row(&self, u: usize, x: &[f64]) -> f64 {
        let su = self.scale[u];
        let mut acc = 0.0;
        for &v in self.graph.neighbors(u) {
            acc += self.scale[v] * x[v];
        }
        su * acc
    }

    /// Applies the operator in its mode to a vector.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.graph.n {
            return Err(Error::DimensionMismatch {
                expected: self.graph.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.graph.n];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// Length-checked by the caller; reuses the output buffer.
    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        match self.mode {
            OperatorMode::Laplacian => {
                for (u, yu) in y.iter_mut().enumerate() {
                    *yu = x[u] - self.propagate_row(u, x);
                }
            }
            OperatorMode::Adjacency => {
                for (u, yu) in y.iter_mut().enumerate() {
                    *yu = self.propagate_row(u, x);
                }
            }
        }
    }

    /// Applies the operator to every column of an n-by-d matrix.
    ///
    /// Rows of the output are independent, so the parallel path writes
    /// disjoint slices and the result is bitwise identical to the
    /// sequential one.
    pub fn matmat(&self, x: &Matrix) -> Result<Matrix> {
        self.matmat_impl(x, cfg!(feature = "parallel"))
    }

    /// Sequential variant kept callable for benchmarking against the
    /// parallel path.
    pub fn matmat_serial(&self, x: &Matrix) -> Result<Matrix> {
        self.matmat_impl(x, false)
    }

    fn matmat_impl(&self, x: &Matrix, parallel: bool) -> Result<Matrix> {
        let n = self.graph.n;
        if x.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.rows(),
            });
        }
        let d = x.cols();
        let mut out = Matrix::zeros(n, d);
        let xd = x.data();
        let mode = self.mode;
        let fill = |(u, row): (usize, &mut [f64])| {
            let su = self.scale[u];
            for &v in self.graph.neighbors(u) {
                let c = su * self.scale[v];
                let src = &xd[v * d..(v + 1) * d];
                for (o, &s) in row.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
            if mode == OperatorMode::Laplacian {
                let src = &xd[u * d..(u + 1) * d];
                for (o, &s) in row.iter_mut().zip(src) {
                    *o = s - *o;
                }
            }
        };
        #[cfg(feature = "parallel")]
        if parallel {
            // batch rows per task; single rows are too little work
            out.data_mut()
                .par_chunks_mut(d)
                .with_min_len(64)
                .enumerate()
                .for_each(fill);
            return Ok(out);
        }
        let _ = parallel;
        out.data_mut().chunks_mut(d).enumerate().for_each(fill);
        Ok(out)
    }

    /// Densely materialized operator, for oracle construction and tests.
    pub fn to_dense(&self) -> Matrix {
        let n = self.graph.n;
        let mut m = Matrix::zeros(n, n);
        for u in 0..n {
            for &v in self.graph.neighbors(u) {
                m.set(u, v, self.scale[u] * self.scale[v]);
            }
        }
        if self.mode == OperatorMode::Laplacian {
            for u in 0..n {
                for v in 0..n {
                    let a = m.get(u, v);
                    m.set(u, v, if u == v { 1.0 - a } else { -a });
                }
            }
        }
        m
    }
}
