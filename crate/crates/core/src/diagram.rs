//! Polyhedral diagram data model: vertices, oriented edges, face loops and
//! optional cells, together with the JSON interchange format and the derived
//! quantities the analysis needs (centers, degrees, midpoints, directions).

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

pub type VertexId = u32;
pub type EdgeId = u32;
pub type FaceId = u32;
pub type CellId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagramError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("non-closing face cycle in face {face}")]
    NonClosingFace { face: FaceId },
    #[error("internal edge {edge} is not referenced by any face")]
    OrphanInternalEdge { edge: EdgeId },
    #[error("zero-length edge {edge}")]
    ZeroLengthEdge { edge: EdgeId },
    #[error("non-finite coordinate on vertex {vertex}")]
    NonFinite { vertex: VertexId },
    #[error("empty point list")]
    EmptyPoints,
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

/// Tolerances shared by detection, rank decisions and geometric checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Matching tolerance as a fraction of the bounding-box diagonal.
    pub geom_eps: f64,
    /// Radians; used when comparing axis directions and linear parts.
    pub angle_eps: f64,
    /// Relative threshold (to the largest matrix entry) for rank decisions.
    pub rank_eps: f64,
    pub max_rotation_order: u32,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { geom_eps: 1e-4, angle_eps: 1e-3, rank_eps: 1e-9, max_rotation_order: 12 }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<(), DiagramError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.geom_eps) || !positive(self.angle_eps) || !positive(self.rank_eps) {
            return Err(DiagramError::InvalidTolerance(
                "geom_eps, angle_eps and rank_eps must be finite and > 0".into(),
            ));
        }
        if self.max_rotation_order < 2 {
            return Err(DiagramError::InvalidTolerance("max_rotation_order must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
    pub kind: EdgeKind,
}

/// One entry of a face loop: the edge traversed forward (`sign = 1`) or
/// backward (`sign = -1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceEntry {
    pub edge: EdgeId,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub id: FaceId,
    pub entries: Vec<FaceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub id: CellId,
    pub faces: Vec<FaceId>,
}

/// A structurally valid polyhedral diagram.
///
/// Construction goes through [`Diagram::new`], which checks id uniqueness,
/// references, face-loop closure, face coverage of internal edges and rejects
/// zero-length edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    cells: Option<Vec<Cell>>,
    vertex_index: HashMap<VertexId, usize>,
    edge_index: HashMap<EdgeId, usize>,
    internal: Vec<EdgeId>,
}

impl Diagram {
    pub fn new(
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        faces: Vec<Face>,
        cells: Option<Vec<Cell>>,
    ) -> Result<Self, DiagramError> {
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if !(v.position.x.is_finite() && v.position.y.is_finite() && v.position.z.is_finite()) {
                return Err(DiagramError::NonFinite { vertex: v.id });
            }
            if vertex_index.insert(v.id, i).is_some() {
                return Err(DiagramError::DuplicateId { kind: "vertex", id: v.id });
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id, i).is_some() {
                return Err(DiagramError::DuplicateId { kind: "edge", id: e.id });
            }
            for end in [e.tail, e.head] {
                if !vertex_index.contains_key(&end) {
                    return Err(DiagramError::DanglingReference(format!(
                        "edge {} references missing vertex {}",
                        e.id, end
                    )));
                }
            }
        }

        let mut face_ids = HashSet::new();
        let mut referenced = HashSet::new();
        for f in &faces {
            if !face_ids.insert(f.id) {
                return Err(DiagramError::DuplicateId { kind: "face", id: f.id });
            }
            if f.entries.is_empty() {
                return Err(DiagramError::NonClosingFace { face: f.id });
            }
            let mut oriented = Vec::with_capacity(f.entries.len());
            for entry in &f.entries {
                let Some(&ei) = edge_index.get(&entry.edge) else {
                    return Err(DiagramError::DanglingReference(format!(
                        "face {} references missing edge {}",
                        f.id, entry.edge
                    )));
                };
                let e = &edges[ei];
                let (from, to) = match entry.sign {
                    1 => (e.tail, e.head),
                    -1 => (e.head, e.tail),
                    s => {
                        return Err(DiagramError::Malformed(format!(
                            "face {} uses sign {s}; expected 1 or -1",
                            f.id
                        )))
                    }
                };
                oriented.push((from, to));
                referenced.insert(entry.edge);
            }
            let n = oriented.len();
            let closes = (0..n).all(|j| oriented[j].1 == oriented[(j + 1) % n].0);
            if !closes {
                return Err(DiagramError::NonClosingFace { face: f.id });
            }
        }

        if let Some(cells) = &cells {
            let mut cell_ids = HashSet::new();
            for c in cells {
                if !cell_ids.insert(c.id) {
                    return Err(DiagramError::DuplicateId { kind: "cell", id: c.id });
                }
                if let Some(missing) = c.faces.iter().find(|f| !face_ids.contains(f)) {
                    return Err(DiagramError::DanglingReference(format!(
                        "cell {} references missing face {}",
                        c.id, missing
                    )));
                }
            }
        }

        let mut internal: Vec<EdgeId> = edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Internal)
            .map(|e| e.id)
            .collect();
        internal.sort_unstable();
        if let Some(&orphan) = internal.iter().find(|id| !referenced.contains(id)) {
            return Err(DiagramError::OrphanInternalEdge { edge: orphan });
        }

        let d = Self { vertices, edges, faces, cells, vertex_index, edge_index, internal };
        let min_len = d.geom_tolerance(ToleranceConfig::default().geom_eps);
        for e in &d.edges {
            if d.edge_vector(e.id).norm() <= min_len {
                return Err(DiagramError::ZeroLengthEdge { edge: e.id });
            }
        }
        Ok(d)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn cells(&self) -> Option<&[Cell]> {
        self.cells.as_deref()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertex_index.get(&id).map(|&i| &self.vertices[i])
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edge_index.get(&id).map(|&i| &self.edges[i])
    }

    pub fn position(&self, id: VertexId) -> Vec3 {
        self.vertices[self.vertex_index[&id]].position
    }

    /// Internal edge ids in ascending order; this is the column order of `q`.
    pub fn internal_edges(&self) -> &[EdgeId] {
        &self.internal
    }

    pub fn internal_count(&self) -> usize {
        self.internal.len()
    }

    /// Column of an internal edge in the length vector.
    pub fn internal_column(&self, id: EdgeId) -> Option<usize> {
        self.internal.binary_search(&id).ok()
    }

    /// `head - tail` of an edge.
    pub fn edge_vector(&self, id: EdgeId) -> Vec3 {
        let e = self.edge(id).expect("edge id checked by caller");
        self.position(e.head) - self.position(e.tail)
    }

    pub fn edge_length(&self, id: EdgeId) -> f64 {
        self.edge_vector(id).norm()
    }

    /// Current lengths of the internal edges, in column order.
    pub fn internal_lengths(&self) -> Vec<f64> {
        self.internal.iter().map(|&e| self.edge_length(e)).collect()
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(self.vertices.iter().map(|v| v.position))
    }

    /// Absolute geometric tolerance: `geom_eps` times the bounding-box diagonal.
    pub fn geom_tolerance(&self, geom_eps: f64) -> f64 {
        geom_eps * self.bbox_diagonal()
    }

    /// Same topology with new vertex positions (looked up by vertex id).
    pub fn with_positions(&self, positions: &BTreeMap<VertexId, Vec3>) -> Result<Self, DiagramError> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex { id: v.id, position: positions.get(&v.id).copied().unwrap_or(v.position) })
            .collect();
        Self::new(vertices, self.edges.clone(), self.faces.clone(), self.cells.clone())
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let mut d = self.clone();
        for v in &mut d.vertices {
            v.position += offset;
        }
        d
    }

    /// Vertex adjacency over all edges, both kinds.
    fn adjacency(&self) -> HashMap<VertexId, Vec<VertexId>> {
        let mut adj: HashMap<VertexId, Vec<VertexId>> =
            self.vertices.iter().map(|v| (v.id, Vec::new())).collect();
        for e in &self.edges {
            adj.get_mut(&e.tail).unwrap().push(e.head);
            adj.get_mut(&e.head).unwrap().push(e.tail);
        }
        adj
    }

    /// Number of connected components of the vertex graph.
    pub fn component_count(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = HashSet::new();
        let mut components = 0;
        for v in &self.vertices {
            if !seen.insert(v.id) {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([v.id]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[&u] {
                    if seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }
}

pub(crate) fn bbox_diagonal(points: impl IntoIterator<Item = Vec3>) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    let mut any = false;
    for p in points {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
        any = true;
    }
    if any {
        (hi - lo).norm()
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Interchange format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocVertex {
    id: u32,
    p: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocEdge {
    id: u32,
    tail: u32,
    head: u32,
    kind: EdgeKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocFace {
    id: u32,
    #[serde(rename = "loop")]
    entries: Vec<(u32, i8)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocCell {
    id: u32,
    faces: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    vertices: Vec<DocVertex>,
    edges: Vec<DocEdge>,
    faces: Vec<DocFace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<DocCell>>,
}

/// Parses a diagram from its JSON interchange document.
pub fn parse_diagram(text: &str) -> Result<Diagram, DiagramError> {
    let doc: Document =
        serde_json::from_str(text).map_err(|e| DiagramError::Malformed(e.to_string()))?;
    Diagram::new(
        doc.vertices
            .into_iter()
            .map(|v| Vertex { id: v.id, position: Vec3::new(v.p[0], v.p[1], v.p[2]) })
            .collect(),
        doc.edges
            .into_iter()
            .map(|e| Edge { id: e.id, tail: e.tail, head: e.head, kind: e.kind })
            .collect(),
        doc.faces
            .into_iter()
            .map(|f| Face {
                id: f.id,
                entries: f.entries.into_iter().map(|(edge, sign)| FaceEntry { edge, sign }).collect(),
            })
            .collect(),
        doc.cells
            .map(|cs| cs.into_iter().map(|c| Cell { id: c.id, faces: c.faces }).collect()),
    )
}

fn to_document(d: &Diagram) -> Document {
    Document {
        vertices: d
            .vertices
            .iter()
            .map(|v| DocVertex { id: v.id, p: [v.position.x, v.position.y, v.position.z] })
            .collect(),
        edges: d
            .edges
            .iter()
            .map(|e| DocEdge { id: e.id, tail: e.tail, head: e.head, kind: e.kind })
            .collect(),
        faces: d
            .faces
            .iter()
            .map(|f| DocFace { id: f.id, entries: f.entries.iter().map(|e| (e.edge, e.sign)).collect() })
            .collect(),
        cells: d
            .cells
            .as_ref()
            .map(|cs| cs.iter().map(|c| DocCell { id: c.id, faces: c.faces.clone() }).collect()),
    }
}

/// Serializes to the interchange format (compact JSON).
pub fn serialize_diagram(d: &Diagram) -> String {
    serde_json::to_string(&to_document(d)).expect("diagram documents always serialize")
}

pub fn serialize_diagram_pretty(d: &Diagram) -> String {
    serde_json::to_string_pretty(&to_document(d)).expect("diagram documents always serialize")
}

/// Serde value form of the interchange document, for embedding in reports.
pub fn diagram_to_value(d: &Diagram) -> serde_json::Value {
    serde_json::to_value(to_document(d)).expect("diagram documents always serialize")
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Ok,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub locus: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub components: usize,
    /// Norm of the signed edge-vector sum, per face id.
    pub closure_residuals: BTreeMap<FaceId, f64>,
    /// Largest distance of a face vertex from the plane of the remaining vertices.
    pub planarity_residuals: BTreeMap<FaceId, f64>,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn max_closure_residual(&self) -> f64 {
        self.closure_residuals.values().copied().fold(0.0, f64::max)
    }

    pub fn max_planarity_residual(&self) -> f64 {
        self.planarity_residuals.values().copied().fold(0.0, f64::max)
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }
}

/// Vertex ids around a face, in loop order.
pub fn face_vertex_cycle(d: &Diagram, face: &Face) -> Vec<VertexId> {
    face.entries
        .iter()
        .map(|entry| {
            let e = d.edge(entry.edge).expect("face references checked at construction");
            if entry.sign > 0 {
                e.tail
            } else {
                e.head
            }
        })
        .collect()
}

fn face_closure_residual(d: &Diagram, face: &Face) -> f64 {
    face.entries
        .iter()
        .fold(Vec3::zeros(), |acc, entry| acc + d.edge_vector(entry.edge) * f64::from(entry.sign))
        .norm()
}

/// Distance of each vertex from the least-squares plane of the others, maximized.
fn face_planarity_residual(points: &[Vec3]) -> f64 {
    if points.len() < 4 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for k in 0..points.len() {
        let others: Vec<Vec3> =
            points.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, p)| *p).collect();
        let c = others.iter().sum::<Vec3>() / others.len() as f64;
        let mut cov = nalgebra::Matrix3::<f64>::zeros();
        for p in &others {
            let r = p - c;
            cov += r * r.transpose();
        }
        let eig = cov.symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let normal = eig.eigenvectors.column(imin).into_owned();
        worst = worst.max((points[k] - c).dot(&normal).abs());
    }
    worst
}

/// Reports connectivity, short edges, and per-face closure and planarity
/// residuals. Findings are data; this never fails.
pub fn validate(d: &Diagram, tol: &ToleranceConfig) -> ValidationReport {
    let eps = d.geom_tolerance(tol.geom_eps);
    let mut findings = Vec::new();

    let components = d.component_count();
    let connected = components <= 1;
    findings.push(Finding {
        severity: if connected { Severity::Ok } else { Severity::Warning },
        locus: "diagram".into(),
        message: format!("{components} connected component(s)"),
        value: Some(components as f64),
    });

    for e in d.edges() {
        let len = d.edge_length(e.id);
        if len <= eps {
            findings.push(Finding {
                severity: Severity::Error,
                locus: format!("edge {}", e.id),
                message: "zero-length edge".into(),
                value: Some(len),
            });
        }
    }

    let mut closure_residuals = BTreeMap::new();
    let mut planarity_residuals = BTreeMap::new();
    for f in d.faces() {
        let closure = face_closure_residual(d, f);
        closure_residuals.insert(f.id, closure);
        if closure > eps {
            findings.push(Finding {
                severity: Severity::Warning,
                locus: format!("face {}", f.id),
                message: "face does not close geometrically".into(),
                value: Some(closure),
            });
        }
        let pts: Vec<Vec3> = face_vertex_cycle(d, f).into_iter().map(|v| d.position(v)).collect();
        let planarity = face_planarity_residual(&pts);
        planarity_residuals.insert(f.id, planarity);
        if planarity > eps {
            findings.push(Finding {
                severity: Severity::Warning,
                locus: format!("face {}", f.id),
                message: "face is not planar".into(),
                value: Some(planarity),
            });
        }
    }

    ValidationReport { connected, components, closure_residuals, planarity_residuals, findings }
}

// ---------------------------------------------------------------------------
// Derived quantities

/// Unweighted centroid; this is the symmetry center of a point set.
pub fn geometric_center(points: &[Vec3]) -> Result<Vec3, DiagramError> {
    if points.is_empty() {
        return Err(DiagramError::EmptyPoints);
    }
    Ok(points.iter().sum::<Vec3>() / points.len() as f64)
}

/// Incident-edge count per vertex, both edge kinds; isolated vertices get 0.
pub fn vertex_degrees(d: &Diagram) -> BTreeMap<VertexId, usize> {
    let mut deg: BTreeMap<VertexId, usize> = d.vertices().iter().map(|v| (v.id, 0)).collect();
    for e in d.edges() {
        *deg.get_mut(&e.tail).unwrap() += 1;
        *deg.get_mut(&e.head).unwrap() += 1;
    }
    deg
}

/// Midpoints of the internal edges, ascending by edge id.
pub fn edge_midpoints(d: &Diagram) -> Vec<(EdgeId, Vec3)> {
    d.internal_edges()
        .iter()
        .map(|&id| {
            let e = d.edge(id).unwrap();
            (id, (d.position(e.tail) + d.position(e.head)) * 0.5)
        })
        .collect()
}

/// Unit tail-to-head direction of every edge.
pub fn edge_directions(d: &Diagram) -> Result<BTreeMap<EdgeId, Vec3>, DiagramError> {
    d.edges()
        .iter()
        .map(|e| {
            let v = d.edge_vector(e.id);
            let n = v.norm();
            if n == 0.0 || !n.is_finite() {
                Err(DiagramError::ZeroLengthEdge { edge: e.id })
            } else {
                Ok((e.id, v / n))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    const SQUARE: &str = r#"{
        "vertices": [{"id":0,"p":[0,0,0]},{"id":1,"p":[1,0,0]},{"id":2,"p":[1,1,0]},{"id":3,"p":[0,1,0]}],
        "edges": [{"id":0,"tail":0,"head":1,"kind":"internal"},{"id":1,"tail":1,"head":2,"kind":"internal"},
                  {"id":2,"tail":2,"head":3,"kind":"internal"},{"id":3,"tail":3,"head":0,"kind":"internal"}],
        "faces": [{"id":0,"loop":[[0,1],[1,1],[2,1],[3,1]]}]
    }"#;

    #[test]
    fn parses_unit_square() {
        let d = parse_diagram(SQUARE).unwrap();
        assert_eq!(d.internal_count(), 4);
        assert_eq!(d.vertices().len(), 4);
    }

    #[test]
    fn parses_cube_document() {
        let text = serialize_diagram(&models::cube(1.0));
        let d = parse_diagram(&text).unwrap();
        assert_eq!(d.internal_count(), 12);
        assert_eq!(d.faces().len(), 6);
        assert_eq!(d.cells().unwrap().len(), 1);
    }

    #[test]
    fn rejects_non_closing_face() {
        let text = r#"{
            "vertices": [{"id":0,"p":[0,0,0]},{"id":1,"p":[1,0,0]},{"id":2,"p":[1,1,0]},{"id":3,"p":[0,1,0]}],
            "edges": [{"id":0,"tail":0,"head":1,"kind":"internal"},{"id":1,"tail":2,"head":3,"kind":"internal"}],
            "faces": [{"id":0,"loop":[[0,1],[1,1]]}]
        }"#;
        let err = parse_diagram(text).unwrap_err();
        assert_eq!(err, DiagramError::NonClosingFace { face: 0 });
        assert!(err.to_string().contains("non-closing face cycle"));
    }

    #[test]
    fn rejects_dangling_and_duplicate_ids() {
        let dangling = SQUARE.replace(r#""tail":3,"head":0"#, r#""tail":3,"head":9"#);
        assert!(matches!(parse_diagram(&dangling), Err(DiagramError::DanglingReference(_))));
        let dup = SQUARE.replace(r#"{"id":3,"p":[0,1,0]}"#, r#"{"id":2,"p":[0,1,0]}"#);
        assert!(matches!(parse_diagram(&dup), Err(DiagramError::DuplicateId { kind: "vertex", id: 2 })));
        assert!(matches!(parse_diagram("{not json"), Err(DiagramError::Malformed(_))));
    }

    #[test]
    fn rejects_orphan_internal_edge_and_zero_length() {
        let orphan = SQUARE.replace(
            r#"{"id":3,"tail":3,"head":0,"kind":"internal"}]"#,
            r#"{"id":3,"tail":3,"head":0,"kind":"internal"},{"id":4,"tail":0,"head":2,"kind":"internal"}]"#,
        );
        assert_eq!(parse_diagram(&orphan).unwrap_err(), DiagramError::OrphanInternalEdge { edge: 4 });
        let zero = SQUARE.replace(r#"{"id":1,"p":[1,0,0]}"#, r#"{"id":1,"p":[0,0,0]}"#);
        assert!(matches!(parse_diagram(&zero), Err(DiagramError::ZeroLengthEdge { .. })));
    }

    #[test]
    fn validation_of_square_and_two_squares() {
        let tol = ToleranceConfig::default();
        let r = validate(&models::unit_square(), &tol);
        assert!(r.connected);
        assert_eq!(r.max_closure_residual(), 0.0);
        assert_eq!(r.warnings().count(), 0);

        let two = models::two_disjoint_squares();
        let r = validate(&two, &tol);
        assert!(!r.connected);
        assert_eq!(r.components, 2);
    }

    #[test]
    fn displaced_vertex_reported_as_warning() {
        let sq = models::unit_square();
        let mut moved = BTreeMap::new();
        moved.insert(2, Vec3::new(1.0, 1.0, 0.1));
        let d = sq.with_positions(&moved).unwrap();
        let r = validate(&d, &ToleranceConfig::default());
        assert!((r.max_planarity_residual() - 0.1).abs() < 1e-12);
        assert!(r.max_closure_residual() < 1e-15);
        let w: Vec<_> = r.warnings().collect();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].locus, "face 0");
        assert!((w[0].value.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn centers() {
        let sq: Vec<Vec3> = models::unit_square().vertices().iter().map(|v| v.position).collect();
        assert_eq!(geometric_center(&sq).unwrap(), Vec3::new(0.5, 0.5, 0.0));
        let p = Vec3::new(3.0, -1.0, 2.5);
        assert_eq!(geometric_center(&[p]).unwrap(), p);
        let cube: Vec<Vec3> = models::cube(2.0).vertices().iter().map(|v| v.position).collect();
        assert!(geometric_center(&cube).unwrap().norm() < 1e-15);
        assert_eq!(geometric_center(&[]), Err(DiagramError::EmptyPoints));
    }

    #[test]
    fn degrees() {
        assert!(vertex_degrees(&models::unit_square()).values().all(|&d| d == 2));
        assert!(vertex_degrees(&models::cube(1.0)).values().all(|&d| d == 3));
        let dt = models::double_tetrahedron();
        let deg = vertex_degrees(&dt);
        assert_eq!(deg[&0], 6);
        assert!(deg.iter().filter(|(&v, _)| v != 0).all(|(_, &d)| d == 3));
        assert_eq!(deg.values().sum::<usize>(), 2 * dt.edges().len());
    }

    #[test]
    fn midpoints_of_square() {
        let mids = edge_midpoints(&models::unit_square());
        let expect = [(0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)];
        for (i, (id, m)) in mids.iter().enumerate() {
            assert_eq!(*id, i as u32);
            assert_eq!(*m, Vec3::new(expect[i].0, expect[i].1, 0.0));
        }
    }

    #[test]
    fn midpoints_exclude_external_edges() {
        let d = models::single_edge_with_loads();
        let mids = edge_midpoints(&d);
        assert_eq!(mids.len(), d.internal_count());
        assert!(mids.contains(&(0, Vec3::new(1.0, 0.0, 0.0))));
        assert!(d.edges().iter().any(|e| e.kind == EdgeKind::External));
        for (id, _) in &mids {
            assert_eq!(d.edge(*id).unwrap().kind, EdgeKind::Internal);
        }
    }

    #[test]
    fn directions() {
        let d = models::single_edge_with_loads();
        let dirs = edge_directions(&d).unwrap();
        assert_eq!(dirs[&0], Vec3::new(1.0, 0.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sq = models::rectangle(1.0, 1.0);
        let diag = Diagram::new(
            vec![
                Vertex { id: 0, position: Vec3::zeros() },
                Vertex { id: 1, position: Vec3::new(1.0, 1.0, 0.0) },
                Vertex { id: 2, position: Vec3::new(1.0, 0.0, 0.0) },
            ],
            vec![
                Edge { id: 0, tail: 0, head: 1, kind: EdgeKind::Internal },
                Edge { id: 1, tail: 1, head: 2, kind: EdgeKind::Internal },
                Edge { id: 2, tail: 2, head: 0, kind: EdgeKind::Internal },
            ],
            vec![Face {
                id: 0,
                entries: (0..3).map(|edge| FaceEntry { edge, sign: 1 }).collect(),
            }],
            None,
        )
        .unwrap();
        let u = edge_directions(&diag).unwrap()[&0];
        assert!((u - Vec3::new(h, h, 0.0)).norm() < 1e-15);
        assert!(edge_directions(&sq).unwrap().values().all(|u| (u.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bad_tolerances_rejected() {
        let mut t = ToleranceConfig::default();
        assert!(t.validate().is_ok());
        t.max_rotation_order = 1;
        assert!(t.validate().is_err());
        t = ToleranceConfig { geom_eps: 0.0, ..Default::default() };
        assert!(t.validate().is_err());
    }
}
