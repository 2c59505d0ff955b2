//! Pair-exchange local search.
//!
//! Three neighborhoods are supported:
//!
//! * `nsquare`: every pair of PEs, visited in a fixed cyclic order. The
//!   search stops once a full cycle of `n(n-1)/2` visits produced no swap.
//! * `nsquarepruned`: the same sweep, but a visit is skipped when its gain
//!   cannot have changed since the previous visit of that pair, or when
//!   both processes are isolated. Skipped pairs are known to be
//!   non-improving, so the sequence of swaps is identical to `nsquare`.
//! * `communication`: pairs of processes at hop distance at most `d` in the
//!   communication graph, drawn uniformly at random. The search stops after
//!   `|P|` consecutive draws without an improving swap.
//!
//! Only strictly positive gains are accepted, so the objective decreases
//! with every swap and every search terminates.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mapping::{swap_gain_unchecked, total_cost, Mapping};
use crate::topology::DistanceOracle;

pub const DEFAULT_COMM_DISTANCE: usize = 10;
pub const DEFAULT_PAIR_CAP: usize = 100_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NeighborhoodKind {
    NSquare,
    NSquarePruned,
    #[default]
    Communication,
}

impl NeighborhoodKind {
    pub const ALL: [NeighborhoodKind; 3] = [
        NeighborhoodKind::NSquare,
        NeighborhoodKind::NSquarePruned,
        NeighborhoodKind::Communication,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NeighborhoodKind::NSquare => "nsquare",
            NeighborhoodKind::NSquarePruned => "nsquarepruned",
            NeighborhoodKind::Communication => "communication",
        }
    }
}

impl fmt::Display for NeighborhoodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NeighborhoodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NeighborhoodKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown local search neighborhood `{s}`")))
    }
}

/// How the communication neighborhood is traversed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PairOrder {
    /// Independent uniform draws from the pair set.
    #[default]
    WithReplacement,
    /// Random permutation of the pair set, reshuffled after each pass.
    ShuffledEpochs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    pub kind: NeighborhoodKind,
    /// Hop-distance bound for [`NeighborhoodKind::Communication`].
    pub comm_distance: usize,
    pub order: PairOrder,
    /// Upper bound on `|P|` for the communication neighborhood.
    pub pair_cap: usize,
    /// Bound on full sweeps for the N² neighborhoods.
    pub max_rounds: usize,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self {
            kind: NeighborhoodKind::default(),
            comm_distance: DEFAULT_COMM_DISTANCE,
            order: PairOrder::default(),
            pair_cap: DEFAULT_PAIR_CAP,
            max_rounds: usize::MAX,
        }
    }
}

impl NeighborhoodSpec {
    pub fn new(kind: NeighborhoodKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn communication(comm_distance: usize) -> Self {
        Self {
            kind: NeighborhoodKind::Communication,
            comm_distance,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub swaps_performed: u64,
    pub pairs_evaluated: u64,
    pub initial_cost: i64,
    pub final_cost: i64,
    pub rounds: u64,
    /// Sum of the gains of all accepted swaps.
    pub accumulated_gain: i64,
}

impl SearchStats {
    fn start(initial_cost: i64) -> Self {
        Self {
            initial_cost,
            final_cost: initial_cost,
            ..Self::default()
        }
    }

    fn accept(&mut self, gain: i64) {
        self.swaps_performed += 1;
        self.accumulated_gain += gain;
        self.final_cost -= gain;
    }
}

/// Runs the local search selected by `spec`.
pub fn local_search(
    g: &Graph,
    d: &DistanceOracle,
    m: &mut Mapping,
    spec: &NeighborhoodSpec,
    seed: u64,
) -> Result<SearchStats> {
    match spec.kind {
        NeighborhoodKind::NSquare => search_nsquare(g, d, m, spec.max_rounds),
        NeighborhoodKind::NSquarePruned => search_nsquare_pruned(g, d, m, spec.max_rounds),
        NeighborhoodKind::Communication => search_communication(g, d, m, spec, seed),
    }
}

/// Cyclic successor of the PE pair `(i, j)`, `i < j < n`.
#[inline]
fn next_pair(i: usize, j: usize, n: usize) -> (usize, usize) {
    if j + 1 < n {
        (i, j + 1)
    } else if i + 2 < n {
        (i + 1, i + 2)
    } else {
        (0, 1)
    }
}

/// Full pair-exchange sweep over PE pairs in cyclic order.
pub fn search_nsquare(g: &Graph, d: &DistanceOracle, m: &mut Mapping, max_rounds: usize) -> Result<SearchStats> {
    sweep(g, d, m, max_rounds, false)
}

/// [`search_nsquare`] with provably non-improving visits skipped.
pub fn search_nsquare_pruned(g: &Graph, d: &DistanceOracle, m: &mut Mapping, max_rounds: usize) -> Result<SearchStats> {
    sweep(g, d, m, max_rounds, true)
}

fn sweep(g: &Graph, d: &DistanceOracle, m: &mut Mapping, max_rounds: usize, pruned: bool) -> Result<SearchStats> {
    let mut stats = SearchStats::start(total_cost(g, d, m)?);
    let n = m.len();
    if n < 2 || max_rounds == 0 {
        return Ok(stats);
    }
    let cycle = (n * (n - 1) / 2) as u64;
    let max_visits = cycle.saturating_mul(max_rounds as u64);
    // visit index of the last change to a process's placement or to the
    // placement of one of its neighbors
    let mut changed_at = vec![0u64; n];
    let (mut i, mut j) = (0, 1);
    let mut visits = 0u64;
    let mut idle = 0u64;
    while idle < cycle && visits < max_visits {
        let (u, v) = (m.process_at(i), m.process_at(j));
        let now = visits;
        visits += 1;
        (i, j) = next_pair(i, j, n);

        if pruned {
            let isolated = g.degree(u) == 0 && g.degree(v) == 0;
            let unchanged = now >= cycle && changed_at[u].max(changed_at[v]) < now - cycle;
            if isolated || unchanged {
                idle += 1;
                continue;
            }
        }
        stats.pairs_evaluated += 1;
        let gain = swap_gain_unchecked(g, d, m, u, v);
        if gain > 0 {
            m.swap_unchecked(u, v);
            stats.accept(gain);
            idle = 0;
            if pruned {
                for x in [u, v] {
                    changed_at[x] = now;
                    for &y in g.neighbor_ids(x) {
                        changed_at[y] = now;
                    }
                }
            }
        } else {
            idle += 1;
        }
    }
    stats.rounds = visits.div_ceil(cycle);
    Ok(stats)
}

/// All unordered process pairs `(u, v)`, `u < v`, whose hop distance in
/// `g` lies in `1..=dist`, sorted. With `dist = 1` this is the edge set.
pub fn build_comm_pairs(g: &Graph, dist: usize) -> Result<Vec<(u32, u32)>> {
    build_comm_pairs_capped(g, dist, DEFAULT_PAIR_CAP)
}

pub fn build_comm_pairs_capped(g: &Graph, dist: usize, cap: usize) -> Result<Vec<(u32, u32)>> {
    if dist == 0 {
        return Err(Error::Config(
            "communication neighborhood distance must be at least 1".into(),
        ));
    }
    let n = g.n();
    if u32::try_from(n).is_err() {
        return Err(Error::Config(format!("{n} processes exceed the pair index range")));
    }
    let mut pairs = Vec::new();
    let mut depth = vec![usize::MAX; n];
    let mut reached = Vec::new();
    let mut queue = VecDeque::new();
    let mut row = Vec::new();
    for s in 0..n {
        depth[s] = 0;
        reached.push(s);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if depth[u] == dist {
                continue;
            }
            for &v in g.neighbor_ids(u) {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    reached.push(v);
                    queue.push_back(v);
                    if v > s {
                        row.push(v as u32);
                    }
                }
            }
        }
        for &v in &reached {
            depth[v] = usize::MAX;
        }
        reached.clear();
        if pairs.len() + row.len() > cap {
            return Err(Error::TooManyPairs { cap });
        }
        row.sort_unstable();
        pairs.extend(row.drain(..).map(|v| (s as u32, v)));
    }
    Ok(pairs)
}

/// Random-order swaps within the communication neighborhood.
pub fn search_communication(
    g: &Graph,
    d: &DistanceOracle,
    m: &mut Mapping,
    spec: &NeighborhoodSpec,
    seed: u64,
) -> Result<SearchStats> {
    if spec.kind != NeighborhoodKind::Communication {
        return Err(Error::Config(format!(
            "communication search requested with neighborhood `{}`",
            spec.kind
        )));
    }
    let mut stats = SearchStats::start(total_cost(g, d, m)?);
    let mut pairs = build_comm_pairs_capped(g, spec.comm_distance, spec.pair_cap)?;
    if pairs.is_empty() {
        return Ok(stats);
    }
    let limit = pairs.len() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    let mut cursor = pairs.len();
    while failures < limit {
        let (u, v) = match spec.order {
            PairOrder::WithReplacement => pairs[rng.random_range(0..pairs.len())],
            PairOrder::ShuffledEpochs => {
                if cursor == pairs.len() {
                    pairs.shuffle(&mut rng);
                    cursor = 0;
                }
                cursor += 1;
                pairs[cursor - 1]
            }
        };
        let (u, v) = (u as usize, v as usize);
        stats.pairs_evaluated += 1;
        let gain = swap_gain_unchecked(g, d, m, u, v);
        if gain > 0 {
            m.swap_unchecked(u, v);
            stats.accept(gain);
            failures = 0;
        } else {
            failures += 1;
        }
    }
    stats.rounds = stats.pairs_evaluated.div_ceil(limit);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::construct_random;
    use crate::mapping::swap_gain;
    use crate::topology::{build_distance_matrix, parse_hierarchy};
    use proptest::prelude::*;
    use rand::Rng;

    fn oracle(h: &str, d: &str) -> DistanceOracle {
        build_distance_matrix(&parse_hierarchy(h, d).unwrap()).unwrap()
    }

    fn random_graph(n: usize, density: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(density) {
                    edges.push((u, v, rng.random_range(1..=20)));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    /// Independent scan: true if some pair of processes improves `m`.
    fn has_improving_pair(g: &Graph, d: &DistanceOracle, m: &Mapping) -> bool {
        let base = total_cost(g, d, m).unwrap();
        let n = m.len();
        for u in 0..n {
            for v in u + 1..n {
                let mut t = m.clone();
                t.apply_swap(u, v).unwrap();
                if total_cost(g, d, &t).unwrap() < base {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn cyclic_pair_order() {
        let n = 4;
        let mut seq = vec![(0, 1)];
        for _ in 0..6 {
            let &(i, j) = seq.last().unwrap();
            seq.push(next_pair(i, j, n));
        }
        assert_eq!(seq, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 1)]);
    }

    #[test]
    fn locally_optimal_start_does_one_cycle() {
        let g = Graph::from_edges(4, &[(0, 1, 5), (2, 3, 5)]).unwrap();
        let d = oracle("2:2", "1:10");
        let mut m = Mapping::identity(4);
        let stats = search_nsquare(&g, &d, &mut m, usize::MAX).unwrap();
        assert_eq!(stats.swaps_performed, 0);
        assert_eq!(stats.pairs_evaluated, 6);
        assert_eq!(stats.rounds, 1);
        assert_eq!(m, Mapping::identity(4));
    }

    #[test]
    fn two_processes_never_swap() {
        // with two processes the swap leaves every distance unchanged
        let g = Graph::from_edges(2, &[(0, 1, 3)]).unwrap();
        let d = oracle("2", "4");
        let mut m = Mapping::identity(2);
        let stats = search_nsquare(&g, &d, &mut m, usize::MAX).unwrap();
        assert_eq!((stats.swaps_performed, stats.pairs_evaluated), (0, 1));
    }

    #[test]
    fn single_improving_swap() {
        // heavy pairs (0,2) and (1,3) start split across processors
        let g = Graph::from_edges(4, &[(0, 2, 5), (1, 3, 5)]).unwrap();
        let d = oracle("2:2", "1:10");
        let mut m = Mapping::identity(4);
        let stats = search_nsquare(&g, &d, &mut m, usize::MAX).unwrap();
        assert_eq!(stats.initial_cost, 200);
        assert_eq!(stats.final_cost, 20);
        assert_eq!(stats.swaps_performed, 1);
        assert_eq!(total_cost(&g, &d, &m).unwrap(), 20);
    }

    #[test]
    fn max_rounds_bounds_the_sweep() {
        let g = random_graph(16, 0.4, 3);
        let d = oracle("2:2:4", "1:10:100");
        let mut m = construct_random(16, 3);
        let stats = search_nsquare(&g, &d, &mut m, 1).unwrap();
        assert_eq!(stats.rounds, 1);
        assert!(stats.pairs_evaluated <= 120);
        let mut m = construct_random(16, 3);
        let stats = search_nsquare(&g, &d, &mut m, 0).unwrap();
        assert_eq!(stats.pairs_evaluated, 0);
    }

    #[test]
    fn nsquare_reaches_two_swap_optimum() {
        let d = oracle("2:2:2", "1:10:100");
        for seed in 0..20 {
            let g = random_graph(8, 0.4, seed);
            let mut m = construct_random(8, seed);
            let stats = search_nsquare(&g, &d, &mut m, usize::MAX).unwrap();
            assert!(!has_improving_pair(&g, &d, &m));
            assert_eq!(stats.final_cost, total_cost(&g, &d, &m).unwrap());
        }
    }

    #[test]
    fn pruned_matches_full_sweep() {
        let d = oracle("2:2:2:2", "1:3:10:30");
        for seed in 0..10 {
            let mut g = random_graph(16, 0.15, seed);
            if seed % 2 == 0 {
                // leave some processes isolated
                let edges: Vec<_> = g.edges().filter(|&(u, v, _)| u > 3 && v > 3).collect();
                g = Graph::from_edges(16, &edges).unwrap();
            }
            let mut a = construct_random(16, seed);
            let mut b = a.clone();
            let full = search_nsquare(&g, &d, &mut a, usize::MAX).unwrap();
            let pruned = search_nsquare_pruned(&g, &d, &mut b, usize::MAX).unwrap();
            assert_eq!(a, b);
            assert_eq!(full.final_cost, pruned.final_cost);
            assert_eq!(full.swaps_performed, pruned.swaps_performed);
            assert!(pruned.pairs_evaluated < full.pairs_evaluated);
            assert!(!has_improving_pair(&g, &d, &b));
        }
    }

    #[test]
    fn pruned_first_round_is_fully_dirty() {
        let d = oracle("2:2:2", "1:10:100");
        let g = random_graph(8, 0.9, 1);
        assert!((0..8).all(|u| g.degree(u) > 0));
        let mut a = construct_random(8, 2);
        let mut b = a.clone();
        let full = search_nsquare(&g, &d, &mut a, 1).unwrap();
        let pruned = search_nsquare_pruned(&g, &d, &mut b, 1).unwrap();
        assert_eq!(full.pairs_evaluated, pruned.pairs_evaluated);
        assert_eq!(full.pairs_evaluated, 28);
    }

    #[test]
    fn pruned_skips_isolated_pairs() {
        let g = Graph::edgeless(8);
        let d = oracle("2:2:2", "1:10:100");
        let mut m = Mapping::identity(8);
        let stats = search_nsquare_pruned(&g, &d, &mut m, usize::MAX).unwrap();
        assert_eq!(stats.pairs_evaluated, 0);
        assert_eq!(stats.rounds, 1);
    }

    #[test]
    fn comm_pairs_on_path() {
        let g = Graph::from_edges(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        assert_eq!(build_comm_pairs(&g, 1).unwrap(), vec![(0, 1), (1, 2)]);
        assert_eq!(build_comm_pairs(&g, 2).unwrap(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(build_comm_pairs(&g, 10).unwrap().len(), 3);
        assert!(build_comm_pairs(&g, 0).is_err());
        assert!(matches!(
            build_comm_pairs_capped(&g, 2, 2),
            Err(Error::TooManyPairs { cap: 2 })
        ));
    }

    #[test]
    fn comm_pairs_skip_other_components() {
        let g = Graph::from_edges(5, &[(0, 1, 1), (3, 4, 1)]).unwrap();
        assert_eq!(build_comm_pairs(&g, 4).unwrap(), vec![(0, 1), (3, 4)]);
    }

    #[test]
    fn communication_on_edgeless_graph() {
        let g = Graph::edgeless(4);
        let d = oracle("2:2", "1:10");
        let mut m = construct_random(4, 9);
        let before = m.clone();
        let stats = search_communication(&g, &d, &mut m, &NeighborhoodSpec::communication(3), 0).unwrap();
        assert_eq!(stats.pairs_evaluated, 0);
        assert_eq!(stats.swaps_performed, 0);
        assert_eq!(m, before);
    }

    #[test]
    fn communication_fixes_split_pairs() {
        // heavy pairs (0,2) and (1,3) start split across processors; the
        // light edge (0,1) puts (0,3) and (1,2) within distance 2
        let g = Graph::from_edges(4, &[(0, 2, 10), (1, 3, 10), (0, 1, 1)]).unwrap();
        let d = oracle("2:2", "1:10");
        // optimum from 4! enumeration: heavy pairs on shared processors,
        // light edge across: 2*(10 + 10) + 2*10 = 60
        let mut best = i64::MAX;
        for p in permutations(4) {
            best = best.min(total_cost(&g, &d, &Mapping::from_sigma(p).unwrap()).unwrap());
        }
        assert_eq!(best, 60);
        // a shuffled epoch meets an improving pair before three failures
        let shuffled = NeighborhoodSpec {
            order: PairOrder::ShuffledEpochs,
            ..NeighborhoodSpec::communication(2)
        };
        let mut reached = 0;
        for seed in 0..20 {
            let mut m = Mapping::identity(4);
            let stats = search_communication(&g, &d, &mut m, &shuffled, seed).unwrap();
            assert_eq!(stats.final_cost, best);
            assert_eq!(total_cost(&g, &d, &m).unwrap(), best);

            // with replacement, five failed draws in a row may stop early
            let mut m = Mapping::identity(4);
            let stats = search_communication(&g, &d, &mut m, &NeighborhoodSpec::communication(2), seed).unwrap();
            assert!(stats.final_cost == best || stats.final_cost == 402);
            assert_eq!(total_cost(&g, &d, &m).unwrap(), stats.final_cost);
            reached += usize::from(stats.final_cost == best);
        }
        assert!(reached >= 15);
    }

    #[test]
    fn shuffled_epochs_also_terminate() {
        let g = random_graph(16, 0.2, 4);
        let d = oracle("4:4", "1:10");
        let mut m = construct_random(16, 4);
        let spec = NeighborhoodSpec {
            order: PairOrder::ShuffledEpochs,
            ..NeighborhoodSpec::communication(2)
        };
        let stats = search_communication(&g, &d, &mut m, &spec, 1).unwrap();
        assert!(stats.final_cost <= stats.initial_cost);
        assert_eq!(stats.final_cost, total_cost(&g, &d, &m).unwrap());
    }

    #[test]
    fn communication_rejects_other_kinds() {
        let g = Graph::edgeless(4);
        let d = oracle("2:2", "1:10");
        let mut m = Mapping::identity(4);
        let spec = NeighborhoodSpec::new(NeighborhoodKind::NSquare);
        assert!(search_communication(&g, &d, &mut m, &spec, 0).is_err());
    }

    #[test]
    fn neighborhood_names() {
        for k in NeighborhoodKind::ALL {
            assert_eq!(k.as_str().parse::<NeighborhoodKind>().unwrap(), k);
        }
        assert!("n2".parse::<NeighborhoodKind>().is_err());
        let spec = NeighborhoodSpec::default();
        assert_eq!(spec.kind, NeighborhoodKind::Communication);
        assert_eq!(spec.comm_distance, 10);
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn searches_are_monotone_and_exact(
            gseed in any::<u64>(),
            seed in any::<u64>(),
            kind in prop_oneof![
                Just(NeighborhoodKind::NSquare),
                Just(NeighborhoodKind::NSquarePruned),
                Just(NeighborhoodKind::Communication),
            ],
            dist in 1usize..4,
        ) {
            let g = random_graph(16, 0.2, gseed);
            let d = oracle("2:4:2", "1:5:20");
            let mut m = construct_random(16, seed);
            let spec = NeighborhoodSpec { kind, comm_distance: dist, ..NeighborhoodSpec::default() };
            let initial = total_cost(&g, &d, &m).unwrap();
            let stats = local_search(&g, &d, &mut m, &spec, seed).unwrap();
            prop_assert!(m.is_bijection());
            prop_assert_eq!(stats.initial_cost, initial);
            prop_assert!(stats.final_cost <= stats.initial_cost);
            prop_assert_eq!(stats.final_cost, total_cost(&g, &d, &m).unwrap());
            prop_assert_eq!(stats.accumulated_gain, stats.initial_cost - stats.final_cost);

            let mut again = construct_random(16, seed);
            prop_assert_eq!(local_search(&g, &d, &mut again, &spec, seed).unwrap(), stats);
            prop_assert_eq!(again, m);
        }

        #[test]
        fn comm_pairs_grow_with_distance(gseed in any::<u64>()) {
            let g = random_graph(12, 0.2, gseed);
            let mut prev: Vec<(u32, u32)> = Vec::new();
            for dist in 1..12 {
                let cur = build_comm_pairs(&g, dist).unwrap();
                prop_assert!(prev.iter().all(|p| cur.binary_search(p).is_ok()));
                prev = cur;
            }
            prop_assert_eq!(build_comm_pairs(&g, 1).unwrap().len(), g.m());
        }

        #[test]
        fn accepted_gain_matches_swap_gain(gseed in any::<u64>(), u in 0usize..8, v in 0usize..8) {
            prop_assume!(u != v);
            let g = random_graph(8, 0.5, gseed);
            let d = oracle("2:2:2", "1:10:100");
            let m = construct_random(8, gseed);
            let gain = swap_gain(&g, &d, &m, u, v).unwrap();
            let mut t = m.clone();
            t.apply_swap(u, v).unwrap();
            prop_assert_eq!(total_cost(&g, &d, &m).unwrap() - total_cost(&g, &d, &t).unwrap(), gain);
        }
    }
}
