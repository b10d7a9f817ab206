//! Edge fingerprints and edge symmetry.
//!
//! Each internal edge is represented by its midpoint, tagged with a weighted
//! hash of its normalized length and the degrees of its endpoints:
//!
//! ```text
//! H = (P1 * ceil(len / len_ref) + P2 * min(deg) + P3 * max(deg)) mod P0
//! ```
//!
//! with `len_ref = f_ref * (shortest edge length)`. The tag is `H + 1`, so it
//! falls in `1..=P0`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{edge_midpoints, vertex_degrees, Diagram, EdgeId, ToleranceConfig, VertexId};
use crate::point_group::{
    apply_operation, classify_schoenflies, detect_point_group, orbits_from_permutations, OrbitPartition, PointGroup,
    PointIndex, SymmetryError, TaggedPointSet, MAX_TAG,
};

/// Relative distance to an integer within which `len / len_ref` is snapped
/// to that integer before taking the ceiling.
pub const BIN_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FingerprintError {
    #[error("diagram has no edges")]
    NoEdges,
    #[error("diagram has no internal edges")]
    NoInternalEdges,
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("invalid fingerprint config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerprintConfig {
    pub p0: u32,
    pub p1: u32,
    pub p2: u32,
    pub p3: u32,
    pub f_ref: f64,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self { p0: 113, p1: 1, p2: 11, p3: 17, f_ref: 0.0185 }
    }
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

impl FingerprintConfig {
    pub fn with_f_ref(f_ref: f64) -> Self {
        Self { f_ref, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), FingerprintError> {
        if !is_prime(self.p0) || self.p0 > MAX_TAG {
            return Err(FingerprintError::InvalidConfig(format!("P0 = {} must be a prime <= {MAX_TAG}", self.p0)));
        }
        if !(self.f_ref.is_finite() && self.f_ref > 0.0) {
            return Err(FingerprintError::InvalidConfig(format!("f_ref = {} must be > 0", self.f_ref)));
        }
        Ok(())
    }
}

/// `f_ref` times the shortest edge (both kinds).
pub fn reference_length(d: &Diagram, f_ref: f64) -> Result<f64, FingerprintError> {
    d.edges()
        .iter()
        .map(|e| d.edge_length(e.id))
        .min_by(f64::total_cmp)
        .map(|min| f_ref * min)
        .ok_or(FingerprintError::NoEdges)
}

/// `ceil(len / len_ref)`, snapping values within [`BIN_GUARD`] of an integer.
pub fn length_bin(len: f64, len_ref: f64) -> u64 {
    let x = len / len_ref;
    let r = x.round();
    if (x - r).abs() <= BIN_GUARD * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// The weighted-sum hash shifted into `1..=P0`.
pub fn hash_tag(bin: u64, deg_a: usize, deg_b: usize, cfg: &FingerprintConfig) -> u32 {
    let (lo, hi) = (deg_a.min(deg_b) as u64, deg_a.max(deg_b) as u64);
    let p0 = u64::from(cfg.p0);
    let h = (u64::from(cfg.p1) * (bin % p0) + u64::from(cfg.p2) * lo + u64::from(cfg.p3) * hi) % p0;
    h as u32 + 1
}

/// Precomputed reference length and degrees for tagging many edges.
pub struct Fingerprinter<'a> {
    d: &'a Diagram,
    cfg: FingerprintConfig,
    len_ref: f64,
    degrees: BTreeMap<VertexId, usize>,
}

impl<'a> Fingerprinter<'a> {
    pub fn new(d: &'a Diagram, cfg: &FingerprintConfig) -> Result<Self, FingerprintError> {
        cfg.validate()?;
        Ok(Self { d, cfg: *cfg, len_ref: reference_length(d, cfg.f_ref)?, degrees: vertex_degrees(d) })
    }

    pub fn reference_length(&self) -> f64 {
        self.len_ref
    }

    /// Invariants entering the hash: length bin and sorted endpoint degrees.
    pub fn invariants(&self, edge: EdgeId) -> Result<(u64, usize, usize), FingerprintError> {
        let e = self.d.edge(edge).ok_or(FingerprintError::UnknownEdge(edge))?;
        let (a, b) = (self.degrees[&e.tail], self.degrees[&e.head]);
        Ok((length_bin(self.d.edge_length(edge), self.len_ref), a.min(b), a.max(b)))
    }

    pub fn tag(&self, edge: EdgeId) -> Result<u32, FingerprintError> {
        let (bin, lo, hi) = self.invariants(edge)?;
        Ok(hash_tag(bin, lo, hi, &self.cfg))
    }
}

pub fn fingerprint_edge(d: &Diagram, edge: EdgeId, cfg: &FingerprintConfig) -> Result<u32, FingerprintError> {
    Fingerprinter::new(d, cfg)?.tag(edge)
}

/// Internal-edge midpoints tagged by fingerprint, ascending by edge id.
pub fn tagged_midpoints(d: &Diagram, cfg: &FingerprintConfig) -> Result<TaggedPointSet, FingerprintError> {
    if d.internal_count() == 0 {
        return Err(FingerprintError::NoInternalEdges);
    }
    let fp = Fingerprinter::new(d, cfg)?;
    let items = edge_midpoints(d)
        .into_iter()
        .map(|(id, p)| fp.tag(id).map(|t| (p, t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TaggedPointSet::new(items)?)
}

/// Edge symmetry group with its orbits over internal edge ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSymmetry {
    pub group: PointGroup,
    /// Orbits as internal-edge ids, each ascending, ordered by first member.
    pub orbits: Vec<Vec<EdgeId>>,
    /// Orbits as indices into the tagged midpoint set.
    pub partition: OrbitPartition,
    pub tags: BTreeMap<EdgeId, u32>,
    /// Hash collisions and coincident midpoints worth a look.
    pub diagnostics: Vec<String>,
}

impl EdgeSymmetry {
    /// Orbit index of every internal edge.
    pub fn orbit_of(&self) -> BTreeMap<EdgeId, usize> {
        self.orbits.iter().enumerate().flat_map(|(k, o)| o.iter().map(move |&e| (e, k))).collect()
    }
}

fn collision_diagnostics(d: &Diagram, fp: &Fingerprinter<'_>, set: &TaggedPointSet, eps: f64) -> Vec<String> {
    let mut out = Vec::new();
    let mut by_tag: BTreeMap<u32, Vec<(u64, usize, usize)>> = BTreeMap::new();
    for &id in d.internal_edges() {
        let inv = fp.invariants(id).expect("internal edge exists");
        let tag = hash_tag(inv.0, inv.1, inv.2, &fp.cfg);
        let seen = by_tag.entry(tag).or_default();
        if !seen.contains(&inv) {
            seen.push(inv);
        }
    }
    for (tag, invs) in by_tag.iter().filter(|(_, v)| v.len() > 1) {
        out.push(format!("hash collision: tag {tag} shared by {} distinct (length bin, degree) classes", invs.len()));
    }
    let mut cells: HashMap<(i64, i64, i64, u32), Vec<usize>> = HashMap::new();
    let cell = eps.max(f64::MIN_POSITIVE);
    for (i, (p, t)) in set.items().iter().enumerate() {
        let key = ((p.x / cell).round() as i64, (p.y / cell).round() as i64, (p.z / cell).round() as i64, *t);
        cells.entry(key).or_default().push(i);
    }
    let ids = d.internal_edges();
    let mut coincident: Vec<(EdgeId, EdgeId)> = cells
        .values()
        .filter(|v| v.len() > 1)
        .flat_map(|v| v.windows(2).map(|w| (ids[w[0]], ids[w[1]])).collect::<Vec<_>>())
        .collect();
    coincident.sort_unstable();
    for (a, b) in coincident {
        out.push(format!("edges {a} and {b} have coincident midpoints and equal tags"));
    }
    out
}

/// Keeps the operations that carry every edge segment onto its matched edge,
/// not just its midpoint. Regular tetrahedron midpoints form an octahedron,
/// so the midpoint group alone can be larger than the edge group.
/// Returns the refined group with the permutation of each kept operation.
fn segment_preserving(
    d: &Diagram,
    set: &TaggedPointSet,
    group: PointGroup,
    tol: &ToleranceConfig,
) -> Result<(PointGroup, Vec<Vec<usize>>), SymmetryError> {
    let ids = d.internal_edges();
    let eps = set.abs_tolerance(tol.geom_eps);
    let index = PointIndex::new(set, eps);
    let endpoints = |e: EdgeId| {
        let edge = d.edge(e).expect("internal edge exists");
        (d.position(edge.tail), d.position(edge.head))
    };
    let mut kept = Vec::new();
    let mut perms = Vec::new();
    for op in group.operations() {
        let perm = index.match_operation(op, eps).ok_or_else(|| SymmetryError::StaleOperation(op.to_string()))?;
        let carries = perm.iter().enumerate().all(|(i, &j)| {
            let (a, b) = endpoints(ids[i]);
            let (c, e) = endpoints(ids[j]);
            let (qa, qb) = (apply_operation(op, a), apply_operation(op, b));
            ((qa - c).norm() <= eps && (qb - e).norm() <= eps) || ((qa - e).norm() <= eps && (qb - c).norm() <= eps)
        });
        if carries {
            kept.push(*op);
            perms.push(perm);
        }
    }
    if kept.len() == group.order() {
        return Ok((group, perms));
    }
    let name = classify_schoenflies(&kept, tol.angle_eps)?;
    Ok((PointGroup::new(kept, name), perms))
}

/// Detects the edge symmetry group from the tagged midpoints, restricted to
/// operations that also map edge endpoints consistently.
pub fn edge_symmetry(d: &Diagram, cfg: &FingerprintConfig, tol: &ToleranceConfig) -> Result<EdgeSymmetry, FingerprintError> {
    let set = tagged_midpoints(d, cfg)?;
    let fp = Fingerprinter::new(d, cfg)?;
    let (group, perms) = segment_preserving(d, &set, detect_point_group(&set, tol)?, tol)?;
    let partition = orbits_from_permutations(set.len(), &perms);
    let ids = d.internal_edges();
    let orbit_ids = partition.orbits().iter().map(|o| o.iter().map(|&i| ids[i]).collect()).collect();
    let tags = ids.iter().enumerate().map(|(i, &id)| (id, set.tag(i))).collect();
    let diagnostics = collision_diagnostics(d, &fp, &set, set.abs_tolerance(tol.geom_eps));
    Ok(EdgeSymmetry { group, orbits: orbit_ids, partition, tags, diagnostics })
}

/// Point group of the vertex positions with uniform tags.
pub fn vertex_symmetry(d: &Diagram, tol: &ToleranceConfig) -> Result<PointGroup, SymmetryError> {
    let set = TaggedPointSet::uniform(d.vertices().iter().map(|v| v.position))?;
    detect_point_group(&set, tol)
}
