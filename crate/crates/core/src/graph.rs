//! Undirected weighted graph in compressed adjacency form.
//!
//! Vertices are numbered `0..n`. For vertex `u`, its neighbors are
//! `adjncy[xadj[u]..xadj[u + 1]]` with edge weights at the same offsets in
//! `adjwgt`. Every undirected edge is stored twice, once per direction.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    xadj: Vec<usize>,
    adjncy: Vec<usize>,
    adjwgt: Vec<i64>,
    node_weights: Vec<i64>,
}

impl Graph {
    /// Builds a graph from raw adjacency arrays, checking every invariant
    /// (no self-loops, no parallel edges, symmetric edges with equal
    /// weights, positive edge weights, non-negative node weights).
    pub fn from_csr(xadj: Vec<usize>, adjncy: Vec<usize>, adjwgt: Vec<i64>, node_weights: Vec<i64>) -> Result<Self> {
        let g = Self {
            xadj,
            adjncy,
            adjwgt,
            node_weights,
        };
        g.check()?;
        Ok(g)
    }

    /// Builds a graph on `n` vertices from undirected `(u, v, weight)` triples.
    /// Each edge is listed once; node weights default to 1.
    pub fn from_edges(n: usize, edges: &[(usize, usize, i64)]) -> Result<Self> {
        let mut lists: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::SizeMismatch(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            lists[u].push((v, w));
            lists[v].push((u, w));
        }
        Self::from_adjacency_lists(lists, vec![1; n])
    }

    pub fn from_adjacency_lists(lists: Vec<Vec<(usize, i64)>>, node_weights: Vec<i64>) -> Result<Self> {
        let mut xadj = Vec::with_capacity(lists.len() + 1);
        xadj.push(0);
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        for list in &lists {
            for &(v, w) in list {
                adjncy.push(v);
                adjwgt.push(w);
            }
            xadj.push(adjncy.len());
        }
        Self::from_csr(xadj, adjncy, adjwgt, node_weights)
    }

    /// Graph with `n` vertices and no edges.
    pub fn edgeless(n: usize) -> Self {
        Self {
            xadj: vec![0; n + 1],
            adjncy: Vec::new(),
            adjwgt: Vec::new(),
            node_weights: vec![1; n],
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.n();
        let bad = |msg: String| Err(Error::SizeMismatch(msg));
        if self.xadj.first() != Some(&0)
            || self.xadj.windows(2).any(|w| w[0] > w[1])
            || *self.xadj.last().unwrap() != self.adjncy.len()
        {
            return bad("malformed row offsets".into());
        }
        if self.adjwgt.len() != self.adjncy.len() || self.node_weights.len() != n {
            return bad("weight arrays do not match adjacency".into());
        }
        if let Some(u) = self.node_weights.iter().position(|&c| c < 0) {
            return bad(format!("vertex {u} has negative node weight"));
        }
        let mut seen = HashSet::new();
        for u in 0..n {
            seen.clear();
            for (v, w) in self.neighbors(u) {
                if v >= n {
                    return bad(format!("vertex {u} lists neighbor {v} outside 0..{n}"));
                }
                if v == u {
                    return bad(format!("self-loop at vertex {u}"));
                }
                if w < 1 {
                    return bad(format!("edge ({u}, {v}) has non-positive weight {w}"));
                }
                if !seen.insert(v) {
                    return bad(format!("parallel edge ({u}, {v})"));
                }
                if self.edge_weight(v, u) != Some(w) {
                    return bad(format!("edge ({u}, {v}) has no matching backward edge"));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.xadj.len() - 1
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.adjncy.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.xadj[u + 1] - self.xadj[u]
    }

    pub fn neighbor_ids(&self, u: usize) -> &[usize] {
        &self.adjncy[self.xadj[u]..self.xadj[u + 1]]
    }

    pub fn neighbor_weights(&self, u: usize) -> &[i64] {
        &self.adjwgt[self.xadj[u]..self.xadj[u + 1]]
    }

    /// Iterates `(neighbor, edge weight)` of `u` in stored order.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.neighbor_ids(u)
            .iter()
            .copied()
            .zip(self.neighbor_weights(u).iter().copied())
    }

    /// Weight of edge `(u, v)`, linear in `deg(u)`.
    pub fn edge_weight(&self, u: usize, v: usize) -> Option<i64> {
        self.neighbors(u).find(|&(x, _)| x == v).map(|(_, w)| w)
    }

    pub fn node_weight(&self, u: usize) -> i64 {
        self.node_weights[u]
    }

    pub fn node_weights(&self) -> &[i64] {
        &self.node_weights
    }

    pub fn max_edge_weight(&self) -> i64 {
        self.adjwgt.iter().copied().max().unwrap_or(0)
    }

    /// Undirected edges `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Total weight of edges whose endpoints lie in different blocks.
    pub fn edge_cut(&self, block_of: &[usize]) -> i64 {
        self.edges()
            .filter(|&(u, v, _)| block_of[u] != block_of[v])
            .map(|(_, _, w)| w)
            .sum()
    }

    /// Subgraph induced by `vertices`; vertex `i` of the result is
    /// `vertices[i]` of `self`. Edges leaving the set are dropped.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut xadj = Vec::with_capacity(vertices.len() + 1);
        xadj.push(0);
        let mut adjncy = Vec::new();
        let mut adjwgt = Vec::new();
        for &u in vertices {
            for (v, w) in self.neighbors(u) {
                if local[v] != usize::MAX {
                    adjncy.push(local[v]);
                    adjwgt.push(w);
                }
            }
            xadj.push(adjncy.len());
        }
        let node_weights = vertices.iter().map(|&v| self.node_weights[v]).collect();
        Graph {
            xadj,
            adjncy,
            adjwgt,
            node_weights,
        }
    }

    /// Dense symmetric communication matrix with zero diagonal.
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let n = self.n();
        let mut c = vec![vec![0; n]; n];
        for u in 0..n {
            for (v, w) in self.neighbors(u) {
                c[u][v] = w;
            }
        }
        c
    }
}
