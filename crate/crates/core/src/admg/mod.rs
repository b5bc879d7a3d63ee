//! Acyclic directed mixed graphs.
//!
//! An [`Admg`] pairs a directed adjacency matrix (`directed[i][j]` means
//! `i -> j`) with a symmetric bidirected one (`i <-> j`, unmeasured
//! confounding). Separation queries go through [`LatentDag`], which replaces
//! every bidirected edge by an explicit latent parent of both endpoints.

pub(crate) mod format;
mod separation;

pub use format::{parse_edge_list, serialize_edge_list, ParseError};
pub use separation::{d_separated, m_separated, LatentDag};

use crate::gradeng::{GradError, Tape, Tensor, Var};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph with {d} vertices")]
    InvalidVertex { vertex: usize, d: usize },
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("directed part contains a cycle")]
    CyclicDirectedPart,
    #[error("query endpoints must be distinct and outside the conditioning set")]
    InvalidQuery,
    #[error("bidirected matrix is not symmetric at ({0}, {1})")]
    AsymmetricBidirected(usize, usize),
    #[error("adjacency matrix must be {d}x{d}")]
    BadShape { d: usize },
}

/// Binary structure `(S_B, S_Σ)` over `d` observed vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Admg {
    d: usize,
    directed: Vec<bool>,
    bidirected: Vec<bool>,
}

impl Admg {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            directed: vec![false; d * d],
            bidirected: vec![false; d * d],
        }
    }

    /// Builds a graph from edge lists; fails on self loops or bad vertices.
    pub fn from_edges(
        d: usize,
        directed: &[(usize, usize)],
        bidirected: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut g = Self::empty(d);
        for &(i, j) in directed {
            g.add_directed(i, j)?;
        }
        for &(i, j) in bidirected {
            g.add_bidirected(i, j)?;
        }
        Ok(g)
    }

    /// Builds a graph from dense boolean matrices.
    pub fn from_matrices(directed: Vec<Vec<bool>>, bidirected: Vec<Vec<bool>>) -> Result<Self, GraphError> {
        let d = directed.len();
        if directed.iter().any(|r| r.len() != d)
            || bidirected.len() != d
            || bidirected.iter().any(|r| r.len() != d)
        {
            return Err(GraphError::BadShape { d });
        }
        let mut g = Self::empty(d);
        for i in 0..d {
            if directed[i][i] || bidirected[i][i] {
                return Err(GraphError::SelfLoop(i));
            }
            for j in 0..d {
                if bidirected[i][j] != bidirected[j][i] {
                    return Err(GraphError::AsymmetricBidirected(i.min(j), i.max(j)));
                }
                g.directed[i * d + j] = directed[i][j];
                g.bidirected[i * d + j] = bidirected[i][j];
            }
        }
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn check(&self, i: usize, j: usize) -> Result<(), GraphError> {
        for v in [i, j] {
            if v >= self.d {
                return Err(GraphError::InvalidVertex { vertex: v, d: self.d });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        Ok(())
    }

    pub fn add_directed(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.check(i, j)?;
        self.directed[i * self.d + j] = true;
        Ok(())
    }

    pub fn remove_directed(&mut self, i: usize, j: usize) {
        self.directed[i * self.d + j] = false;
    }

    pub fn add_bidirected(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.check(i, j)?;
        self.bidirected[i * self.d + j] = true;
        self.bidirected[j * self.d + i] = true;
        Ok(())
    }

    pub fn has_directed(&self, i: usize, j: usize) -> bool {
        self.directed[i * self.d + j]
    }

    pub fn has_bidirected(&self, i: usize, j: usize) -> bool {
        self.bidirected[i * self.d + j]
    }

    /// Directed edges in row-major order.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let d = self.d;
        (0..d * d)
            .filter(|&k| self.directed[k])
            .map(|k| (k / d, k % d))
            .collect()
    }

    /// Bidirected edges as `(i, j)` with `i < j`.
    pub fn bidirected_edges(&self) -> Vec<(usize, usize)> {
        let d = self.d;
        (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_bidirected(i, j))
            .collect()
    }

    pub fn directed_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.d)
            .map(|i| self.directed[i * self.d..(i + 1) * self.d].to_vec())
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        is_acyclic(&self.directed_matrix())
    }
}

/// Kahn's algorithm on a square boolean adjacency matrix.
pub fn is_acyclic(adj: &[Vec<bool>]) -> bool {
    topological_order(adj).is_some()
}

/// A topological order of the directed graph, or `None` if it has a cycle.
pub fn topological_order(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut indegree: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| adj[i][j]).count()).collect();
    let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for w in (0..n).rev() {
            if adj[v][w] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(w);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// `tr(exp(W ∘ W)) - d` recorded on `tape`.
pub fn acyclicity_penalty(tape: &mut Tape, w: Var) -> Result<Var, GradError> {
    let d = tape.value(w).rows();
    let sq = tape.hadamard(w, w)?;
    let tr = tape.trace_expm(sq)?;
    let offset = tape.constant(Tensor::scalar(d as f64));
    tape.sub(tr, offset)
}

/// Value of the acyclicity penalty for a fixed matrix.
pub fn acyclicity_value(w: &Tensor) -> Result<f64, GradError> {
    let mut tape = Tape::new();
    let v = tape.constant(w.clone());
    let h = acyclicity_penalty(&mut tape, v)?;
    Ok(tape.value(h).item())
}
