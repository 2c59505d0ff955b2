//! Homogeneous machine hierarchies and the PE distance function.
//!
//! A hierarchy `a_1:a_2:...:a_k` describes `a_1` cores per processor, `a_2`
//! processors per node and so on. PEs are numbered in nested order, so
//! `id = c_1 + a_1 * c_2 + a_1 * a_2 * c_3 + ...`, and two PEs whose lowest
//! common level is `l` are `d_l` apart.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest PE count for which a full distance matrix is materialized.
pub const DEFAULT_MATRIX_CAP: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyTopology {
    extents: Vec<usize>,
    level_distances: Vec<i64>,
    /// `strides[l] = a_1 * ... * a_{l+1}`
    strides: Vec<usize>,
}

impl HierarchyTopology {
    pub fn new(extents: Vec<usize>, level_distances: Vec<i64>) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::Hierarchy("hierarchy needs at least one level".into()));
        }
        if extents.len() != level_distances.len() {
            return Err(Error::Hierarchy(format!(
                "hierarchy has {} levels but {} distances were given",
                extents.len(),
                level_distances.len()
            )));
        }
        if let Some(a) = extents.iter().find(|&&a| a == 0) {
            return Err(Error::Hierarchy(format!("level extent {a} must be positive")));
        }
        if let Some(d) = level_distances.iter().find(|&&d| d < 1) {
            return Err(Error::Hierarchy(format!("level distance {d} must be positive")));
        }
        let mut strides = Vec::with_capacity(extents.len());
        let mut acc = 1usize;
        for &a in &extents {
            acc = acc
                .checked_mul(a)
                .ok_or_else(|| Error::Overflow("PE count does not fit in usize".into()))?;
            strides.push(acc);
        }
        Ok(Self {
            extents,
            level_distances,
            strides,
        })
    }

    /// Parses colon-separated extents and distances, e.g. `("4:16:2", "1:10:100")`.
    pub fn parse(hierarchy: &str, distances: &str) -> Result<Self> {
        let extents = parse_colon_list::<usize>(hierarchy, "hierarchy")?;
        let level_distances = parse_colon_list::<i64>(distances, "distance")?;
        Self::new(extents, level_distances)
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn level_distances(&self) -> &[i64] {
        &self.level_distances
    }

    pub fn levels(&self) -> usize {
        self.extents.len()
    }

    pub fn pe_count(&self) -> usize {
        *self.strides.last().unwrap()
    }

    pub fn max_distance(&self) -> i64 {
        self.level_distances.iter().copied().max().unwrap()
    }

    /// Distance without bounds checks; callers guarantee `i, j < pe_count`.
    #[inline]
    pub fn distance_unchecked(&self, i: usize, j: usize) -> i64 {
        if i == j {
            return 0;
        }
        for (l, &s) in self.strides.iter().enumerate() {
            if i / s == j / s {
                return self.level_distances[l];
            }
        }
        unreachable!("PE ids {i}, {j} are outside the hierarchy")
    }

    pub fn pe_distance(&self, i: usize, j: usize) -> Result<i64> {
        let pe_count = self.pe_count();
        for index in [i, j] {
            if index >= pe_count {
                return Err(Error::PeOutOfRange { index, pe_count });
            }
        }
        Ok(self.distance_unchecked(i, j))
    }

    /// Hierarchy with the lowest level removed (`a_2..a_k`), if any remain.
    pub fn without_lowest_level(&self) -> Option<Self> {
        if self.levels() == 1 {
            return None;
        }
        Self::new(self.extents[1..].to_vec(), self.level_distances[1..].to_vec()).ok()
    }
}

impl fmt::Display for HierarchyTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(":");
        write!(
            f,
            "{} / {}",
            join(self.extents.iter().map(ToString::to_string).collect()),
            join(self.level_distances.iter().map(ToString::to_string).collect())
        )
    }
}

fn parse_colon_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Hierarchy(format!("empty {what} string")));
    }
    s.split(':')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| Error::Hierarchy(format!("`{tok}` in {what} string `{s}` is not a positive integer")))
        })
        .collect()
}

pub fn parse_hierarchy(hierarchy: &str, distances: &str) -> Result<HierarchyTopology> {
    HierarchyTopology::parse(hierarchy, distances)
}

/// `D(i, j)` either as a stored matrix or computed on the fly from the
/// hierarchy. Both agree on every pair.
#[derive(Clone, Debug)]
pub enum DistanceOracle {
    Materialized {
        topology: HierarchyTopology,
        matrix: Vec<i64>,
    },
    Online(HierarchyTopology),
}

impl DistanceOracle {
    /// Builds the full matrix, refusing above `cap` PEs.
    pub fn materialized(topology: HierarchyTopology, cap: usize) -> Result<Self> {
        let n = topology.pe_count();
        if n > cap {
            return Err(Error::MatrixTooLarge { pe_count: n, cap });
        }
        let mut matrix = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[i * n + j] = topology.distance_unchecked(i, j);
            }
        }
        Ok(DistanceOracle::Materialized { topology, matrix })
    }

    pub fn online(topology: HierarchyTopology) -> Self {
        DistanceOracle::Online(topology)
    }

    pub fn topology(&self) -> &HierarchyTopology {
        match self {
            DistanceOracle::Materialized { topology, .. } | DistanceOracle::Online(topology) => topology,
        }
    }

    pub fn pe_count(&self) -> usize {
        self.topology().pe_count()
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self, DistanceOracle::Materialized { .. })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        match self {
            DistanceOracle::Materialized { topology, matrix } => matrix[i * topology.pe_count() + j],
            DistanceOracle::Online(t) => t.distance_unchecked(i, j),
        }
    }

    /// Dense row-major copy of `D`, for small instances and tests.
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let n = self.pe_count();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// Materialized distance matrix of `t` with the default size cap.
pub fn build_distance_matrix(t: &HierarchyTopology) -> Result<DistanceOracle> {
    DistanceOracle::materialized(t.clone(), DEFAULT_MATRIX_CAP)
}
