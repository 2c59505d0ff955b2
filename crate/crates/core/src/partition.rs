//! Balanced k-way graph partitioning by recursive bisection.
//!
//! Each bisection grows block 0 greedily from a pseudo-peripheral vertex
//! until it holds exactly its target size, then improves the cut with
//! Fiduccia-Mattheyses passes whose moves alternate between the two sides,
//! so every accepted prefix is a sequence of vertex exchanges and the
//! sizes stay exact. With a positive imbalance a final k-way pass moves
//! single vertices as long as no block exceeds `L_max`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Refinement effort. Each preset fixes the number of FM passes per
/// bisection and the number of greedy-growing restarts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Quality {
    Fast,
    #[default]
    Eco,
    Strong,
}

impl Quality {
    pub fn fm_passes(self) -> usize {
        match self {
            Quality::Fast => 1,
            Quality::Eco => 3,
            Quality::Strong => 5,
        }
    }

    pub fn restarts(self) -> usize {
        match self {
            Quality::Fast => 1,
            Quality::Eco => 2,
            Quality::Strong => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Fast => "fast",
            Quality::Eco => "eco",
            Quality::Strong => "strong",
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Quality::Fast),
            "eco" => Ok(Quality::Eco),
            "strong" => Ok(Quality::Strong),
            other => Err(Error::Config(format!(
                "unknown preconfiguration `{other}` (expected strong, eco or fast)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    block_of: Vec<usize>,
    k: usize,
    block_sizes: Vec<usize>,
    epsilon: f64,
    l_max: usize,
}

impl Partition {
    pub fn new(block_of: Vec<usize>, k: usize, epsilon: f64) -> Result<Self> {
        let mut block_sizes = vec![0; k];
        for (v, &b) in block_of.iter().enumerate() {
            if b >= k {
                return Err(Error::InfeasiblePartition(format!(
                    "vertex {v} is in block {b}, outside 0..{k}"
                )));
            }
            block_sizes[b] += 1;
        }
        let l_max = l_max(block_of.len(), k, epsilon);
        Ok(Self {
            block_of,
            k,
            block_sizes,
            epsilon,
            l_max,
        })
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn block(&self, v: usize) -> usize {
        self.block_of[v]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn is_balanced(&self) -> bool {
        self.block_sizes.iter().all(|&s| s <= self.l_max)
    }

    pub fn cut(&self, g: &Graph) -> i64 {
        g.edge_cut(&self.block_of)
    }

    /// Vertices of each block in ascending order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (v, &b) in self.block_of.iter().enumerate() {
            blocks[b].push(v);
        }
        blocks
    }
}

/// `L_max = (1 + epsilon) * ceil(n / k)`, rounded down.
pub fn l_max(n: usize, k: usize, epsilon: f64) -> usize {
    let avg = n.div_ceil(k.max(1));
    let cap = ((1.0 + epsilon) * avg as f64 + 1e-9).floor() as usize;
    cap.max(avg)
}

/// Partitions `g` into `k` blocks of at most `L_max` vertices each.
/// With `epsilon = 0`, `k` must divide `n` and every block gets exactly
/// `n / k` vertices. Deterministic for a fixed seed.
pub fn partition(g: &Graph, k: usize, epsilon: f64, quality: Quality, seed: u64) -> Result<Partition> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InfeasiblePartition(format!(
            "block count {k} must lie in 1..={n}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InfeasiblePartition(format!(
            "imbalance {epsilon} must be non-negative"
        )));
    }
    if epsilon == 0.0 && !n.is_multiple_of(k) {
        return Err(Error::InfeasiblePartition(format!(
            "perfect balance needs k to divide n, but {k} does not divide {n}"
        )));
    }
    let sizes: Vec<usize> = (0..k).map(|b| n / k + usize::from(b < n % k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block_of = vec![0; n];
    let all: Vec<usize> = (0..n).collect();
    recursive_bisection(g, &all, 0, &sizes, quality, &mut rng, &mut block_of);

    let mut p = Partition::new(block_of, k, epsilon)?;
    if p.block_sizes.iter().any(|&s| s < p.l_max) {
        kway_move_refine(g, &mut p);
    }
    Ok(p)
}

fn recursive_bisection(
    g: &Graph,
    vertices: &[usize],
    first_block: usize,
    sizes: &[usize],
    quality: Quality,
    rng: &mut ChaCha8Rng,
    block_of: &mut [usize],
) {
    if sizes.len() == 1 {
        for &v in vertices {
            block_of[v] = first_block;
        }
        return;
    }
    let k0 = sizes.len().div_ceil(2);
    let n0: usize = sizes[..k0].iter().sum();
    let sub = g.induced_subgraph(vertices);
    let side = bisect_with(&sub, (n0, vertices.len() - n0), quality, rng);
    let (mut left, mut right) = (Vec::with_capacity(n0), Vec::new());
    for (i, &v) in vertices.iter().enumerate() {
        if side[i] == 0 {
            left.push(v);
        } else {
            right.push(v);
        }
    }
    recursive_bisection(g, &left, first_block, &sizes[..k0], quality, rng, block_of);
    recursive_bisection(g, &right, first_block + k0, &sizes[k0..], quality, rng, block_of);
}

/// Splits `g` into blocks of exactly `target_sizes.0` and `target_sizes.1`
/// vertices.
pub fn bisect(g: &Graph, target_sizes: (usize, usize), seed: u64) -> Result<Partition> {
    if target_sizes.0 + target_sizes.1 != g.n() {
        return Err(Error::SizeMismatch(format!(
            "target sizes {} + {} do not add up to {} vertices",
            target_sizes.0,
            target_sizes.1,
            g.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = bisect_with(g, target_sizes, Quality::default(), &mut rng);
    let epsilon = if target_sizes.0 == target_sizes.1 { 0.0 } else { 1.0 };
    let mut p = Partition::new(side.into_iter().map(usize::from).collect(), 2, epsilon)?;
    p.l_max = target_sizes.0.max(target_sizes.1);
    Ok(p)
}

pub(crate) fn bisect_with(g: &Graph, (n0, n1): (usize, usize), quality: Quality, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = g.n();
    debug_assert_eq!(n0 + n1, n);
    if n0 == 0 || n1 == 0 {
        return vec![u8::from(n0 == 0); n];
    }
    let mut best: Option<(i64, Vec<u8>)> = None;
    for _ in 0..quality.restarts() {
        let start = pseudo_peripheral(g, rng.random_range(0..n));
        let mut side = grow_block(g, start, n0, rng);
        fm_exchange_refine(g, &mut side, quality.fm_passes());
        let cut = cut_of(g, &side);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, side));
        }
    }
    best.unwrap().1
}

pub(crate) fn cut_of(g: &Graph, side: &[u8]) -> i64 {
    g.edges()
        .filter(|&(u, v, _)| side[u] != side[v])
        .map(|(_, _, w)| w)
        .sum()
}

/// Last vertex reached by BFS from `from`, within its component.
fn farthest(g: &Graph, from: usize) -> usize {
    let mut seen = vec![false; g.n()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    let mut last = from;
    while let Some(u) = queue.pop_front() {
        last = u;
        for &v in g.neighbor_ids(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    last
}

fn pseudo_peripheral(g: &Graph, start: usize) -> usize {
    farthest(g, farthest(g, start))
}

/// Greedy graph growing: block 0 starts at `start` and repeatedly absorbs
/// the frontier vertex whose move lowers the cut most (ties: lowest id)
/// until it has `n0` vertices. An exhausted frontier restarts from a random
/// unassigned vertex.
pub(crate) fn grow_block(g: &Graph, start: usize, n0: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = g.n();
    let mut side = vec![1u8; n];
    let wdeg: Vec<i64> = (0..n).map(|u| g.neighbor_weights(u).iter().sum()).collect();
    let mut conn = vec![0i64; n];
    let mut frontier: BTreeSet<(Reverse<i64>, usize)> = BTreeSet::new();
    let key = |conn: &[i64], v: usize| (Reverse(2 * conn[v] - wdeg[v]), v);
    let mut size = 0;
    let mut next = Some(start);
    while size < n0 {
        let u = match next.take().or_else(|| frontier.pop_first().map(|(_, v)| v)) {
            Some(u) => u,
            None => {
                let rest: Vec<usize> = (0..n).filter(|&v| side[v] == 1).collect();
                rest[rng.random_range(0..rest.len())]
            }
        };
        side[u] = 0;
        size += 1;
        for (v, w) in g.neighbors(u) {
            if side[v] == 1 {
                if conn[v] > 0 {
                    frontier.remove(&key(&conn, v));
                }
                conn[v] += w;
                frontier.insert(key(&conn, v));
            }
        }
    }
    side
}

/// FM passes with alternating moves. Only prefixes ending after a complete
/// exchange are kept, so the block sizes never change. Never increases the cut.
pub(crate) fn fm_exchange_refine(g: &Graph, side: &mut [u8], passes: usize) {
    const STALL_LIMIT: usize = 64;
    let n = g.n();
    for _ in 0..passes {
        let mut gain = vec![0i64; n];
        for u in 0..n {
            for (v, w) in g.neighbors(u) {
                gain[u] += if side[v] == side[u] { -w } else { w };
            }
        }
        let mut queues: [BTreeSet<(Reverse<i64>, usize)>; 2] = [BTreeSet::new(), BTreeSet::new()];
        for u in 0..n {
            queues[side[u] as usize].insert((Reverse(gain[u]), u));
        }
        let mut locked = vec![false; n];
        let mut moves: Vec<usize> = Vec::new();
        let (mut total, mut best_total, mut best_len) = (0i64, 0i64, 0usize);

        let do_move = |u: usize,
                       side: &mut [u8],
                       gain: &mut [i64],
                       queues: &mut [BTreeSet<(Reverse<i64>, usize)>; 2],
                       locked: &mut [bool]| {
            let from = side[u];
            queues[from as usize].remove(&(Reverse(gain[u]), u));
            locked[u] = true;
            let g_u = gain[u];
            side[u] = 1 - from;
            gain[u] = -g_u;
            for (v, w) in g.neighbors(u) {
                if locked[v] {
                    continue;
                }
                let q = &mut queues[side[v] as usize];
                q.remove(&(Reverse(gain[v]), v));
                gain[v] += if side[v] == from { 2 * w } else { -2 * w };
                q.insert((Reverse(gain[v]), v));
            }
            g_u
        };

        while let (Some(&(Reverse(g0), _)), Some(&(Reverse(g1), _))) = (queues[0].first(), queues[1].first()) {
            let first = if g1 > g0 { 1 } else { 0 };
            let u = queues[first].first().unwrap().1;
            total += do_move(u, side, &mut gain, &mut queues, &mut locked);
            moves.push(u);
            let Some(&(_, v)) = queues[1 - first].first() else {
                // no partner: undo this half-exchange below
                break;
            };
            total += do_move(v, side, &mut gain, &mut queues, &mut locked);
            moves.push(v);
            if total > best_total {
                best_total = total;
                best_len = moves.len();
            } else if (moves.len() - best_len) / 2 >= STALL_LIMIT {
                break;
            }
        }
        for &u in &moves[best_len..] {
            side[u] = 1 - side[u];
        }
        if best_total <= 0 {
            break;
        }
    }
}

/// Moves single vertices to the adjacent block with the largest cut
/// reduction while the target stays within `L_max`, until no such move
/// exists. Blocks are never emptied.
fn kway_move_refine(g: &Graph, p: &mut Partition) {
    let mut conn = vec![0i64; p.k];
    let mut touched = Vec::new();
    loop {
        let mut moved = false;
        for u in 0..g.n() {
            let own = p.block_of[u];
            for (v, w) in g.neighbors(u) {
                let b = p.block_of[v];
                if conn[b] == 0 {
                    touched.push(b);
                }
                conn[b] += w;
            }
            let mut best: Option<(i64, usize)> = None;
            for &b in &touched {
                if b == own || p.block_sizes[b] >= p.l_max {
                    continue;
                }
                let delta = conn[b] - conn[own];
                if delta > 0 && best.is_none_or(|(d, bb)| delta > d || (delta == d && b < bb)) {
                    best = Some((delta, b));
                }
            }
            for &b in &touched {
                conn[b] = 0;
            }
            touched.clear();
            if let Some((_, b)) = best {
                if p.block_sizes[own] > 1 {
                    p.block_sizes[own] -= 1;
                    p.block_sizes[b] += 1;
                    p.block_of[u] = b;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// How crossing edges are aggregated in a quotient graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotientWeight {
    /// Number of crossing edges.
    EdgeCount,
    /// Sum of crossing edge weights.
    WeightSum,
}

/// Graph on the blocks of `p`, with an edge between two blocks whenever an
/// edge of `g` crosses them, weighted by the number of crossing edges.
pub fn quotient_graph(g: &Graph, p: &Partition) -> Graph {
    quotient_graph_with(g, p, QuotientWeight::EdgeCount)
}

pub fn quotient_graph_with(g: &Graph, p: &Partition, weight: QuotientWeight) -> Graph {
    let mut acc = vec![0i64; p.k];
    let mut touched = Vec::new();
    let mut lists = Vec::with_capacity(p.k);
    for block in p.blocks() {
        let own = if block.is_empty() {
            usize::MAX
        } else {
            p.block(block[0])
        };
        for &u in &block {
            for (v, w) in g.neighbors(u) {
                let b = p.block(v);
                if b == own {
                    continue;
                }
                if acc[b] == 0 {
                    touched.push(b);
                }
                acc[b] += match weight {
                    QuotientWeight::EdgeCount => 1,
                    QuotientWeight::WeightSum => w,
                };
            }
        }
        touched.sort_unstable();
        lists.push(touched.iter().map(|&b| (b, acc[b])).collect::<Vec<_>>());
        for &b in &touched {
            acc[b] = 0;
        }
        touched.clear();
    }
    Graph::from_adjacency_lists(lists, vec![1; p.k]).expect("quotient graph is well formed")
}
