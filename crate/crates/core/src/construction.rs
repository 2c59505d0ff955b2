//! Initial mappings.
//!
//! The hierarchical constructors rely on nested PE numbering: every
//! subtree of the machine owns a contiguous range of PE ids, so placing a
//! group of processes on a subtree means handing it that id range.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mapping::Mapping;
use crate::partition::{partition, quotient_graph_with, Partition, Quality, QuotientWeight};
use crate::topology::HierarchyTopology;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Construction {
    Random,
    Identity,
    Growing,
    HierarchyBottomUp,
    #[default]
    HierarchyTopDown,
}

impl Construction {
    pub const ALL: [Construction; 5] = [
        Construction::Random,
        Construction::Identity,
        Construction::Growing,
        Construction::HierarchyBottomUp,
        Construction::HierarchyTopDown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Construction::Random => "random",
            Construction::Identity => "identity",
            Construction::Growing => "growing",
            Construction::HierarchyBottomUp => "hierarchybottomup",
            Construction::HierarchyTopDown => "hierarchytopdown",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Construction::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown construction algorithm `{s}`")))
    }
}

/// Builds an initial mapping of `g` onto `t` with the chosen algorithm.
pub fn construct(
    algorithm: Construction,
    g: &Graph,
    t: &HierarchyTopology,
    quality: Quality,
    seed: u64,
) -> Result<Mapping> {
    check_size(g, t)?;
    match algorithm {
        Construction::Random => Ok(construct_random(g.n(), seed)),
        Construction::Identity => Ok(construct_identity(g.n())),
        Construction::Growing => construct_growing(g, t, seed),
        Construction::HierarchyBottomUp => construct_bottom_up(g, t, quality, seed),
        Construction::HierarchyTopDown => construct_top_down(g, t, quality, seed),
    }
}

fn check_size(g: &Graph, t: &HierarchyTopology) -> Result<()> {
    if g.n() != t.pe_count() {
        return Err(Error::SizeMismatch(format!(
            "the model has {} vertices but the hierarchy describes {} PEs; they must be equal",
            g.n(),
            t.pe_count()
        )));
    }
    Ok(())
}

pub fn construct_identity(n: usize) -> Mapping {
    Mapping::identity(n)
}

/// Uniformly random permutation (Fisher-Yates), fixed by `seed`.
pub fn construct_random(n: usize, seed: u64) -> Mapping {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(&mut rng);
    Mapping::from_sigma(sigma).expect("shuffled identity is a bijection")
}

/// Heavy-edge-first breadth-first traversal; the `i`-th visited process is
/// placed on PE `i`.
pub fn construct_growing(g: &Graph, t: &HierarchyTopology, seed: u64) -> Result<Mapping> {
    check_size(g, t)?;
    if g.n() == 0 {
        return Ok(Mapping::identity(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..g.n());
    let order = growing_order(g, start, &mut rng);
    Mapping::from_pi(order)
}

/// Visit order of the growing traversal from `start`. Neighbors are queued
/// by descending edge weight (ties: ascending id); each further component
/// starts at a random unvisited vertex.
pub(crate) fn growing_order(g: &Graph, start: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.n();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut next_start = Some(start);
    let mut scratch: Vec<(usize, i64)> = Vec::new();
    while order.len() < n {
        let s = next_start.take().unwrap_or_else(|| {
            let rest: Vec<usize> = (0..n).filter(|&v| !visited[v]).collect();
            rest[rng.random_range(0..rest.len())]
        });
        visited[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            scratch.clear();
            scratch.extend(g.neighbors(u).filter(|&(v, _)| !visited[v]));
            scratch.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            for &(v, _) in &scratch {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order
}

/// Recursive perfectly balanced partitioning along the hierarchy, from the
/// top level down to groups of `a_1` processes.
pub fn construct_top_down(g: &Graph, t: &HierarchyTopology, quality: Quality, seed: u64) -> Result<Mapping> {
    check_size(g, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma = vec![0; g.n()];
    let all: Vec<usize> = (0..g.n()).collect();
    top_down(g, &all, t.extents(), 0, quality, &mut rng, &mut sigma)?;
    Mapping::from_sigma(sigma)
}

/// Places `vertices` (ascending ids of `g`) on the subtree described by
/// `extents` whose PE range starts at `pe_offset`.
fn top_down(
    g: &Graph,
    vertices: &[usize],
    extents: &[usize],
    pe_offset: usize,
    quality: Quality,
    rng: &mut ChaCha8Rng,
    sigma: &mut [usize],
) -> Result<()> {
    let (&arity, lower) = extents.split_last().expect("hierarchy has a level");
    if lower.is_empty() {
        // all PEs of a leaf group are equidistant; any order costs the same
        for (i, &v) in vertices.iter().enumerate() {
            sigma[v] = pe_offset + i;
        }
        return Ok(());
    }
    if arity == 1 {
        return top_down(g, vertices, lower, pe_offset, quality, rng, sigma);
    }
    let sub = g.induced_subgraph(vertices);
    let p = partition(&sub, arity, 0.0, quality, rng.next_u64())?;
    let child = vertices.len() / arity;
    for (b, block) in p.blocks().into_iter().enumerate() {
        let members: Vec<usize> = block.into_iter().map(|i| vertices[i]).collect();
        top_down(g, &members, lower, pe_offset + b * child, quality, rng, sigma)?;
    }
    Ok(())
}

/// Groups processes into blocks of `a_1`, contracts them into a quotient
/// graph whose edge weights sum the crossing communication, maps the
/// quotient onto `a_2..a_k` recursively, then expands the placement.
pub fn construct_bottom_up(g: &Graph, t: &HierarchyTopology, quality: Quality, seed: u64) -> Result<Mapping> {
    check_size(g, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = bottom_up(g, t.extents(), quality, &mut rng)?;
    Mapping::from_sigma(slots)
}

/// Returns the PE slot of every vertex of `g` on a machine with `extents`.
fn bottom_up(g: &Graph, extents: &[usize], quality: Quality, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = g.n();
    if extents.len() == 1 {
        return Ok((0..n).collect());
    }
    let group = extents[0];
    let groups = n / group;
    let p = if group == 1 {
        Partition::new((0..n).collect(), n, 0.0)?
    } else {
        partition(g, groups, 0.0, quality, rng.next_u64())?
    };
    let quotient = quotient_graph_with(g, &p, QuotientWeight::WeightSum);
    let group_slots = bottom_up(&quotient, &extents[1..], quality, rng)?;
    let mut slots = vec![0; n];
    for (b, block) in p.blocks().into_iter().enumerate() {
        for (rank, v) in block.into_iter().enumerate() {
            slots[v] = group_slots[b] * group + rank;
        }
    }
    Ok(slots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::total_cost;
    use crate::topology::{build_distance_matrix, parse_hierarchy};
    use proptest::prelude::*;

    fn topo(h: &str, d: &str) -> HierarchyTopology {
        parse_hierarchy(h, d).unwrap()
    }

    fn two_cliques() -> Graph {
        Graph::from_edges(4, &[(0, 1, 1), (2, 3, 1)]).unwrap()
    }

    /// Minimum objective over every permutation (Heap's algorithm).
    fn exhaustive_optimum(g: &Graph, t: &HierarchyTopology) -> i64 {
        let d = build_distance_matrix(t).unwrap();
        let n = g.n();
        let mut sigma: Vec<usize> = (0..n).collect();
        let cost = |s: &[usize]| total_cost(g, &d, &Mapping::from_sigma(s.to_vec()).unwrap()).unwrap();
        let mut best = cost(&sigma);
        let mut c = vec![0; n];
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    sigma.swap(0, i);
                } else {
                    sigma.swap(c[i], i);
                }
                best = best.min(cost(&sigma));
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        best
    }

    #[test]
    fn identity_and_random() {
        let m = construct_identity(4);
        assert_eq!(m.sigma(), &[0, 1, 2, 3]);
        assert_eq!(m.pi(), &[0, 1, 2, 3]);
        assert_eq!(construct_random(9, 5), construct_random(9, 5));
        assert_eq!(construct_random(1, 5), Mapping::identity(1));
        assert!(construct_random(50, 1).is_bijection());
    }

    #[test]
    fn random_is_uniform_per_position() {
        // per-process chi-squared over the 5 PEs, 2000 expected hits each
        let n = 5;
        let draws = 10_000;
        let mut counts = vec![vec![0u32; n]; n];
        for seed in 0..draws {
            let m = construct_random(n, seed);
            for u in 0..n {
                counts[u][m.pe_of(u)] += 1;
            }
        }
        let expected = draws as f64 / n as f64;
        for row in &counts {
            let chi2: f64 = row.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
            // 4 degrees of freedom, p = 0.001
            assert!(chi2 < 18.47, "chi2 = {chi2}, row = {row:?}");
        }
    }

    #[test]
    fn growing_on_path() {
        let g = Graph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]).unwrap();
        let t = topo("2:2", "1:10");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let order = growing_order(&g, 0, &mut rng);
        let m = Mapping::from_pi(order).unwrap();
        assert_eq!(m.sigma(), &[0, 1, 2, 3]);
        let d = build_distance_matrix(&t).unwrap();
        assert_eq!(total_cost(&g, &d, &m).unwrap(), 24);
    }

    #[test]
    fn growing_prefers_heavy_edges() {
        let g = Graph::from_edges(4, &[(0, 1, 1), (0, 2, 9), (0, 3, 5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(growing_order(&g, 0, &mut rng), vec![0, 2, 3, 1]);
    }

    #[test]
    fn growing_covers_components_and_is_deterministic() {
        let g = Graph::edgeless(8);
        let t = topo("2:2:2", "1:2:3");
        let m = construct_growing(&g, &t, 11).unwrap();
        assert!(m.is_bijection());
        assert_eq!(m, construct_growing(&g, &t, 11).unwrap());
        let g = Graph::from_edges(8, &[(0, 5, 1), (5, 7, 1), (2, 3, 4)]).unwrap();
        assert!(construct_growing(&g, &t, 3).unwrap().is_bijection());
    }

    #[test]
    fn single_level_keeps_identity_order() {
        let g = Graph::from_edges(5, &[(0, 4, 3), (1, 2, 1)]).unwrap();
        let t = topo("5", "1");
        assert_eq!(
            construct_top_down(&g, &t, Quality::Eco, 0).unwrap(),
            Mapping::identity(5)
        );
        assert_eq!(
            construct_bottom_up(&g, &t, Quality::Eco, 0).unwrap(),
            Mapping::identity(5)
        );
    }

    #[test]
    fn two_cliques_reach_optimum() {
        let g = two_cliques();
        let t = topo("2:2", "1:10");
        let d = build_distance_matrix(&t).unwrap();
        assert_eq!(exhaustive_optimum(&g, &t), 4);
        for seed in 0..5 {
            let td = construct_top_down(&g, &t, Quality::Eco, seed).unwrap();
            assert_eq!(total_cost(&g, &d, &td).unwrap(), 4);
            let bu = construct_bottom_up(&g, &t, Quality::Eco, seed).unwrap();
            assert_eq!(total_cost(&g, &d, &bu).unwrap(), 4);
        }
    }

    fn heavy_pairs() -> Graph {
        // pairs (0,5) (1,6) (2,7) (3,4) heavy, light ring across them
        let mut edges = vec![(0, 5, 100), (1, 6, 100), (2, 7, 100), (3, 4, 100)];
        edges.extend([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1), (4, 6, 1), (5, 7, 1)]);
        Graph::from_edges(8, &edges).unwrap()
    }

    #[test]
    fn heavy_pairs_are_colocated() {
        let g = heavy_pairs();
        let t = topo("2:2:2", "1:10:100");
        let d = build_distance_matrix(&t).unwrap();
        let optimum = exhaustive_optimum(&g, &t);
        let m = construct_top_down(&g, &t, Quality::Eco, 1).unwrap();
        for (a, b) in [(0, 5), (1, 6), (2, 7), (3, 4)] {
            assert_eq!(m.pe_of(a) / 2, m.pe_of(b) / 2, "pair ({a}, {b}) split: {m:?}");
        }
        assert_eq!(total_cost(&g, &d, &m).unwrap(), optimum);
    }

    #[test]
    fn size_mismatch_rejected() {
        let g = two_cliques();
        let t = topo("2:3", "1:10");
        for c in Construction::ALL {
            assert!(matches!(
                construct(c, &g, &t, Quality::Fast, 0),
                Err(Error::SizeMismatch(_))
            ));
        }
    }

    #[test]
    fn construction_names_round_trip() {
        for c in Construction::ALL {
            assert_eq!(c.as_str().parse::<Construction>().unwrap(), c);
        }
        assert!("topdown".parse::<Construction>().is_err());
        assert_eq!(Construction::default(), Construction::HierarchyTopDown);
    }

    proptest! {
        #[test]
        fn every_constructor_is_a_deterministic_bijection(
            seed in any::<u64>(),
            edges in proptest::collection::vec((0usize..12, 0usize..12, 1i64..20), 0..30),
            shape in prop_oneof![Just(("2:3:2", "1:4:9")), Just(("3:4", "1:5")), Just(("12", "2")), Just(("1:12", "3:4"))],
        ) {
            let mut seen = std::collections::HashSet::new();
            let edges: Vec<_> = edges
                .into_iter()
                .filter(|&(u, v, _)| u != v && seen.insert((u.min(v), u.max(v))))
                .collect();
            let g = Graph::from_edges(12, &edges).unwrap();
            let t = topo(shape.0, shape.1);
            for c in Construction::ALL {
                let m = construct(c, &g, &t, Quality::Fast, seed).unwrap();
                prop_assert!(m.is_bijection());
                prop_assert_eq!(m.len(), 12);
                prop_assert_eq!(m, construct(c, &g, &t, Quality::Fast, seed).unwrap());
            }
        }
    }
}
