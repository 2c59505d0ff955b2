//! Process-to-PE bijections and the quadratic assignment objective.
//!
//! The objective sums `C[pi(i)][pi(j)] * D[i][j]` over all ordered PE pairs,
//! so every undirected communication edge contributes twice. The sparse
//! routines here walk the communication graph instead of the full matrix.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::topology::DistanceOracle;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mapping {
    /// process -> PE
    sigma: Vec<usize>,
    /// PE -> process
    pi: Vec<usize>,
}

impl Mapping {
    pub fn identity(n: usize) -> Self {
        Self {
            sigma: (0..n).collect(),
            pi: (0..n).collect(),
        }
    }

    /// Builds a mapping from `sigma[process] = pe`, checking bijectivity.
    pub fn from_sigma(sigma: Vec<usize>) -> Result<Self> {
        let n = sigma.len();
        let mut pi = vec![usize::MAX; n];
        for (u, &pe) in sigma.iter().enumerate() {
            if pe >= n {
                return Err(Error::Mapping(format!(
                    "process {u} is mapped to PE {pe}, outside 0..{n}"
                )));
            }
            if pi[pe] != usize::MAX {
                return Err(Error::Mapping(format!(
                    "PE {pe} is assigned to both process {} and process {u}",
                    pi[pe]
                )));
            }
            pi[pe] = u;
        }
        Ok(Self { sigma, pi })
    }

    /// Builds a mapping from `pi[pe] = process`.
    pub fn from_pi(pi: Vec<usize>) -> Result<Self> {
        let inv = Self::from_sigma(pi)?;
        Ok(Self {
            sigma: inv.pi,
            pi: inv.sigma,
        })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    #[inline]
    pub fn pe_of(&self, process: usize) -> usize {
        self.sigma[process]
    }

    #[inline]
    pub fn process_at(&self, pe: usize) -> usize {
        self.pi[pe]
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    /// Exchanges the PEs of processes `u` and `v`.
    pub fn apply_swap(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.len();
        if u >= n || v >= n {
            return Err(Error::InvalidSwap(format!("process ids ({u}, {v}) outside 0..{n}")));
        }
        if u == v {
            return Err(Error::InvalidSwap(format!("cannot swap process {u} with itself")));
        }
        self.swap_unchecked(u, v);
        Ok(())
    }

    #[inline]
    pub(crate) fn swap_unchecked(&mut self, u: usize, v: usize) {
        let (p, q) = (self.sigma[u], self.sigma[v]);
        self.sigma[u] = q;
        self.sigma[v] = p;
        self.pi[p] = v;
        self.pi[q] = u;
    }

    pub fn is_bijection(&self) -> bool {
        self.sigma.len() == self.pi.len()
            && self
                .sigma
                .iter()
                .enumerate()
                .all(|(u, &p)| p < self.pi.len() && self.pi[p] == u)
    }
}

fn check_sizes(g: &Graph, d: &DistanceOracle, m: &Mapping) -> Result<()> {
    if g.n() != d.pe_count() || g.n() != m.len() {
        return Err(Error::SizeMismatch(format!(
            "graph has {} processes, machine has {} PEs, mapping has {} entries",
            g.n(),
            d.pe_count(),
            m.len()
        )));
    }
    Ok(())
}

/// Verifies that `(max edge weight) * (max distance) * 2m` fits in an `i64`,
/// which bounds every partial sum the objective and gain routines form.
pub fn check_cost_bound(g: &Graph, d: &DistanceOracle) -> Result<()> {
    let bound = g
        .max_edge_weight()
        .checked_mul(d.topology().max_distance())
        .and_then(|x| x.checked_mul(2 * g.m() as i64));
    match bound {
        Some(_) => Ok(()),
        None => Err(Error::Overflow(
            "max edge weight * max distance * 2m exceeds 63 bits".into(),
        )),
    }
}

/// Objective of `m`, computed in `O(m)` distance lookups.
pub fn total_cost(g: &Graph, d: &DistanceOracle, m: &Mapping) -> Result<i64> {
    check_sizes(g, d, m)?;
    let overflow = || Error::Overflow("objective exceeds 63 bits".into());
    let mut cost: i64 = 0;
    for u in 0..g.n() {
        let pu = m.pe_of(u);
        for (v, w) in g.neighbors(u) {
            let term = w.checked_mul(d.get(pu, m.pe_of(v))).ok_or_else(overflow)?;
            cost = cost.checked_add(term).ok_or_else(overflow)?;
        }
    }
    Ok(cost)
}

/// Literal double sum over all PE pairs on dense matrices. Quadratic; meant
/// as a reference for the sparse routines.
pub fn total_cost_dense(c: &[Vec<i64>], d: &[Vec<i64>], m: &Mapping) -> Result<i64> {
    let n = m.len();
    for (name, mat) in [("communication", c), ("distance", d)] {
        if mat.len() != n || mat.iter().any(|row| row.len() != n) {
            return Err(Error::SizeMismatch(format!("{name} matrix is not {n}x{n}")));
        }
        for i in 0..n {
            for j in i + 1..n {
                if mat[i][j] != mat[j][i] {
                    return Err(Error::Asymmetric(i, j));
                }
            }
        }
    }
    let mut cost: i64 = 0;
    for i in 0..n {
        for j in 0..n {
            let term = c[m.process_at(i)][m.process_at(j)]
                .checked_mul(d[i][j])
                .ok_or_else(|| Error::Overflow("objective exceeds 63 bits".into()))?;
            cost = cost
                .checked_add(term)
                .ok_or_else(|| Error::Overflow("objective exceeds 63 bits".into()))?;
        }
    }
    Ok(cost)
}

/// Decrease of the objective if processes `u` and `v` exchanged PEs.
/// Positive means the swap improves the mapping. Runs in `O(deg u + deg v)`.
pub fn swap_gain(g: &Graph, d: &DistanceOracle, m: &Mapping, u: usize, v: usize) -> Result<i64> {
    check_sizes(g, d, m)?;
    let n = g.n();
    if u >= n || v >= n {
        return Err(Error::InvalidSwap(format!("process ids ({u}, {v}) outside 0..{n}")));
    }
    if u == v {
        return Err(Error::InvalidSwap(format!("cannot swap process {u} with itself")));
    }
    Ok(swap_gain_unchecked(g, d, m, u, v))
}

#[inline]
pub(crate) fn swap_gain_unchecked(g: &Graph, d: &DistanceOracle, m: &Mapping, u: usize, v: usize) -> i64 {
    let p = m.pe_of(u);
    let q = m.pe_of(v);
    let mut gain = 0i64;
    // the (u, v) edge keeps its length under the swap
    for (x, w) in g.neighbors(u) {
        if x != v {
            let r = m.pe_of(x);
            gain += w * (d.get(p, r) - d.get(q, r));
        }
    }
    for (x, w) in g.neighbors(v) {
        if x != u {
            let r = m.pe_of(x);
            gain += w * (d.get(q, r) - d.get(p, r));
        }
    }
    2 * gain
}
