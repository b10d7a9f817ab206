//! Point groups of finite tagged point sets: operations, tagged matching,
//! detection under tolerance, Schoenflies classification and orbits.

mod classify;
mod detect;
mod matching;
mod operation;
mod schoenflies;

use thiserror::Error;

pub use classify::{check_closure, classify_schoenflies};
pub use detect::detect_point_group;
pub use matching::{operation_matches, TaggedPointSet, MAX_TAG};
pub use operation::{apply_operation, compose, OperationKind, SymmetryOperation};
pub use schoenflies::{close_under_products, Schoenflies};

pub(crate) use matching::PointIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("empty point set")]
    EmptySet,
    #[error("tag {0} outside 1..=113")]
    TagOutOfRange(u32),
    #[error("non-finite coordinate in point set")]
    NonFinite,
    #[error("continuous symmetry unsupported: {0}")]
    Degenerate(String),
    #[error("operations have different centers ({distance:.3e} apart)")]
    CenterMismatch { distance: f64 },
    #[error("operation set is not closed: {0}")]
    NotClosed(String),
    #[error("cannot classify operation set: {0}")]
    Unclassifiable(String),
    #[error("rotation of order {order} exceeds max_rotation_order {cap}")]
    RotationOrderExceedsCap { order: u32, cap: u32 },
    #[error("operation {0} does not map the point set to itself")]
    StaleOperation(String),
    #[error("unknown point group name {0:?}")]
    UnknownGroupName(String),
    #[error("{0}")]
    Tolerance(String),
}

/// A detected point group: operations in canonical order, all centered at
/// the centroid of the analyzed set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGroup {
    operations: Vec<SymmetryOperation>,
    schoenflies: Schoenflies,
}

impl PointGroup {
    pub(crate) fn new(operations: Vec<SymmetryOperation>, schoenflies: Schoenflies) -> Self {
        Self { operations, schoenflies }
    }

    pub fn operations(&self) -> &[SymmetryOperation] {
        &self.operations
    }

    pub fn schoenflies(&self) -> Schoenflies {
        self.schoenflies
    }

    pub fn name(&self) -> String {
        self.schoenflies.to_string()
    }

    pub fn order(&self) -> usize {
        self.operations.len()
    }

    pub fn center(&self) -> crate::Vec3 {
        self.operations[0].center
    }

    /// Whether some operation of this group has the same linear part as `op`.
    pub fn contains_linear(&self, op: &SymmetryOperation, angle_eps: f64) -> bool {
        let tol = classify::linear_tol(angle_eps);
        self.operations.iter().any(|o| o.same_linear_part(op, tol))
    }
}

/// Equivalence classes of item indices under a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    orbits: Vec<Vec<usize>>,
}

impl OrbitPartition {
    /// Normalizes: each orbit ascending, orbits ordered by smallest member.
    pub fn new(mut orbits: Vec<Vec<usize>>) -> Self {
        for o in &mut orbits {
            o.sort_unstable();
        }
        orbits.retain(|o| !o.is_empty());
        orbits.sort_by_key(|o| o[0]);
        Self { orbits }
    }

    pub fn singletons(n: usize) -> Self {
        Self { orbits: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn item_count(&self) -> usize {
        self.orbits.iter().map(Vec::len).sum()
    }

    /// Relabels items, e.g. from point indices to edge ids.
    pub fn map_items(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::new(self.orbits.iter().map(|o| o.iter().map(|&i| f(i)).collect()).collect())
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Orbits of `s` under `g`: the transitive closure of every operation's
/// permutation.
pub fn orbits(g: &PointGroup, s: &TaggedPointSet, geom_eps: f64) -> Result<OrbitPartition, SymmetryError> {
    let eps = s.abs_tolerance(geom_eps);
    let index = PointIndex::new(s, eps);
    let center = s.centroid();
    let perms = g
        .operations()
        .iter()
        .map(|op| {
            let op = op.recentered(center);
            index.match_operation(&op, eps).ok_or_else(|| SymmetryError::StaleOperation(op.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(orbits_from_permutations(s.len(), &perms))
}

pub(crate) fn orbits_from_permutations(n: usize, perms: &[Vec<usize>]) -> OrbitPartition {
    let mut parent: Vec<usize> = (0..n).collect();
    for perm in perms {
        for (i, &j) in perm.iter().enumerate() {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    OrbitPartition::new(groups.into_values().collect())
}
