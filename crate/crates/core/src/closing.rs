//! The algebraic formulation: closing equation `A q = 0`, the constrained
//! system `M q = t`, reduced row echelon form, geometric degrees of freedom,
//! length solving and geometry reconstruction.

use std::collections::{BTreeMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::diagram::{edge_directions, Diagram, DiagramError, EdgeId, EdgeKind, FaceId, VertexId};
use crate::Vec3;

/// Relative residual allowed on zero rows of an augmented RREF before the
/// system is declared inconsistent.
pub const CONSISTENCY_EPS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosingError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("unknown internal edge {0}")]
    UnknownEdge(EdgeId),
    #[error("edge {0} is fixed more than once")]
    DuplicateFix(EdgeId),
    #[error("column count mismatch: {left} vs {right}")]
    ColumnMismatch { left: usize, right: usize },
    #[error("missing assignment for independent edge {0}")]
    MissingAssignment(EdgeId),
    #[error("edge {0} is not an independent edge of this system")]
    ExtraAssignment(EdgeId),
    #[error("inconsistent system: residual {residual:.3e} on a zero row")]
    Inconsistent { residual: f64 },
    #[error("diagram is disconnected")]
    Disconnected,
    #[error("length vector has {got} entries, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("lengths do not close the diagram: edge {edge} misses by {residual:.3e}")]
    NotClosing { edge: EdgeId, residual: f64 },
}

/// Internal edge lengths in ascending edge-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthVector {
    edges: Vec<EdgeId>,
    values: Vec<f64>,
}

impl LengthVector {
    pub fn new(edges: Vec<EdgeId>, values: Vec<f64>) -> Result<Self, ClosingError> {
        if edges.len() != values.len() {
            return Err(ClosingError::LengthMismatch { expected: edges.len(), got: values.len() });
        }
        Ok(Self { edges, values })
    }

    /// Current lengths of a diagram's internal edges.
    pub fn from_diagram(d: &Diagram) -> Self {
        Self { edges: d.internal_edges().to_vec(), values: d.internal_lengths() }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, edge: EdgeId) -> Option<f64> {
        self.edges.binary_search(&edge).ok().map(|i| self.values[i])
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// Edges whose length is zero or negative.
    pub fn non_positive(&self) -> Vec<EdgeId> {
        self.edges.iter().zip(&self.values).filter(|(_, &v)| v <= 0.0).map(|(&e, _)| e).collect()
    }
}

/// A linear system over the internal-edge length vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Edge id of every column.
    pub columns: Vec<EdgeId>,
}

impl LinearSystem {
    pub fn column_of(&self, edge: EdgeId) -> Option<usize> {
        self.columns.binary_search(&edge).ok()
    }

    pub fn residual(&self, q: &LengthVector) -> f64 {
        (&self.matrix * q.as_dvector() - &self.rhs).amax()
    }
}

/// Closing equation of a diagram, optionally with fixed-length rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosingSystem {
    /// `3 |F|` rows; rows `3k..3k+3` are the x, y, z closure of `face_rows[k]`.
    pub a: DMatrix<f64>,
    /// Right-hand side of the A rows; nonzero only when external edges sit in face loops.
    pub a_rhs: DVector<f64>,
    pub face_rows: Vec<FaceId>,
    pub columns: Vec<EdgeId>,
    pub fixed_rows: Vec<(EdgeId, f64)>,
}

impl ClosingSystem {
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    /// `M`: A stacked over one unit row per fixed edge.
    pub fn m(&self) -> DMatrix<f64> {
        let n = self.columns.len();
        let mut m = DMatrix::zeros(self.a.nrows() + self.fixed_rows.len(), n);
        m.rows_mut(0, self.a.nrows()).copy_from(&self.a);
        for (i, (edge, _)) in self.fixed_rows.iter().enumerate() {
            let col = self.columns.binary_search(edge).expect("fixed edges are validated");
            m[(self.a.nrows() + i, col)] = 1.0;
        }
        m
    }

    pub fn t(&self) -> DVector<f64> {
        let mut t = DVector::zeros(self.a.nrows() + self.fixed_rows.len());
        t.rows_mut(0, self.a.nrows()).copy_from(&self.a_rhs);
        for (i, (_, len)) in self.fixed_rows.iter().enumerate() {
            t[self.a.nrows() + i] = *len;
        }
        t
    }

    pub fn to_system(&self) -> LinearSystem {
        LinearSystem { matrix: self.m(), rhs: self.t(), columns: self.columns.clone() }
    }
}

/// Face-closure rows over fixed unit edge directions: entry `(3f + c, e)` is
/// `sign(f, e) * u_e[c]`. External edges move their signed vector to the rhs.
pub fn build_closing(d: &Diagram) -> Result<ClosingSystem, ClosingError> {
    let dirs = edge_directions(d)?;
    let columns = d.internal_edges().to_vec();
    let nf = d.faces().len();
    let mut a = DMatrix::zeros(3 * nf, columns.len());
    let mut a_rhs = DVector::zeros(3 * nf);
    for (k, face) in d.faces().iter().enumerate() {
        for entry in &face.entries {
            let edge = d.edge(entry.edge).unwrap();
            let s = f64::from(entry.sign);
            match edge.kind {
                EdgeKind::Internal => {
                    let col = d.internal_column(entry.edge).unwrap();
                    let u = dirs[&entry.edge];
                    for c in 0..3 {
                        a[(3 * k + c, col)] += s * u[c];
                    }
                }
                EdgeKind::External => {
                    let v = d.edge_vector(entry.edge);
                    for c in 0..3 {
                        a_rhs[3 * k + c] -= s * v[c];
                    }
                }
            }
        }
    }
    Ok(ClosingSystem {
        a,
        a_rhs,
        face_rows: d.faces().iter().map(|f| f.id).collect(),
        columns,
        fixed_rows: Vec::new(),
    })
}

/// Appends one unit row per fixed internal edge.
pub fn add_fixed_edges(sys: &ClosingSystem, fixes: &BTreeMap<EdgeId, f64>) -> Result<ClosingSystem, ClosingError> {
    let mut out = sys.clone();
    for (&edge, &len) in fixes {
        if sys.columns.binary_search(&edge).is_err() {
            return Err(ClosingError::UnknownEdge(edge));
        }
        if out.fixed_rows.iter().any(|(e, _)| *e == edge) {
            return Err(ClosingError::DuplicateFix(edge));
        }
        out.fixed_rows.push((edge, len));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrefResult {
    pub r: DMatrix<f64>,
    pub pivot_columns: Vec<usize>,
    pub rank: usize,
}

/// Gauss-Jordan elimination on row-major rows, pivoting only within the first
/// `pivot_limit` columns. Partial pivoting by largest magnitude, ties to the
/// lowest row. Entries at or below `rank_eps * max|entry|` (over the pivot
/// columns) are flushed to zero.
fn gauss_jordan(rows: &mut [Vec<f64>], pivot_limit: usize, rank_eps: f64) -> Vec<usize> {
    let scale = rows
        .iter()
        .flat_map(|r| r[..pivot_limit].iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        for r in rows.iter_mut() {
            for v in r[..pivot_limit].iter_mut() {
                *v = 0.0;
            }
        }
        return Vec::new();
    }
    let thresh = rank_eps * scale;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..pivot_limit {
        if next == rows.len() {
            break;
        }
        let mut best = next;
        let mut best_abs = rows[next][col].abs();
        for (r, row) in rows.iter().enumerate().skip(next + 1) {
            let a = row[col].abs();
            if a > best_abs {
                best = r;
                best_abs = a;
            }
        }
        if best_abs <= thresh {
            for row in rows.iter_mut().skip(next) {
                row[col] = 0.0;
            }
            continue;
        }
        rows.swap(next, best);
        let inv = 1.0 / rows[next][col];
        let pivot_row = &mut rows[next];
        for v in pivot_row[col..].iter_mut() {
            *v *= inv;
        }
        pivot_row[col] = 1.0;
        let support: Vec<usize> = (col + 1..ncols).filter(|&j| pivot_row[j] != 0.0).collect();
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next || row[col] == 0.0 {
                continue;
            }
            let f = row[col];
            row[col] = 0.0;
            for &j in &support {
                let v = row[j] - f * pivot_row[j];
                row[j] = if j < pivot_limit && v.abs() <= thresh { 0.0 } else { v };
            }
        }
        pivots.push(col);
        next += 1;
    }
    pivots
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Deterministic reduced row echelon form.
pub fn rref(matrix: &DMatrix<f64>, rank_eps: f64) -> RrefResult {
    let mut rows = to_rows(matrix);
    let pivot_columns = gauss_jordan(&mut rows, matrix.ncols(), rank_eps);
    RrefResult { r: from_rows(&rows, matrix.ncols()), rank: pivot_columns.len(), pivot_columns }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gdof {
    pub m: usize,
    /// Non-pivot columns as edge ids, ascending.
    pub independent_edges: Vec<EdgeId>,
}

/// Geometric degrees of freedom: `m = e_int - rank`, independent edges are the
/// non-pivot columns.
pub fn gdof(matrix: &DMatrix<f64>, columns: &[EdgeId], rank_eps: f64) -> Gdof {
    let pivots: HashSet<usize> = rref(matrix, rank_eps).pivot_columns.into_iter().collect();
    let independent_edges: Vec<EdgeId> =
        (0..matrix.ncols()).filter(|c| !pivots.contains(c)).map(|c| columns[c]).collect();
    Gdof { m: independent_edges.len(), independent_edges }
}

/// Solves for all lengths given values on exactly the independent edges.
pub fn solve_lengths(
    sys: &LinearSystem,
    assignments: &BTreeMap<EdgeId, f64>,
    rank_eps: f64,
) -> Result<LengthVector, ClosingError> {
    let n = sys.columns.len();
    let mut rows: Vec<Vec<f64>> = (0..sys.matrix.nrows())
        .map(|i| {
            let mut r: Vec<f64> = sys.matrix.row(i).iter().copied().collect();
            r.push(sys.rhs[i]);
            r
        })
        .collect();
    let pivots = gauss_jordan(&mut rows, n, rank_eps);
    let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
    let free: Vec<usize> = (0..n).filter(|c| !pivot_set.contains(c)).collect();

    for &edge in assignments.keys() {
        match sys.column_of(edge) {
            Some(c) if !pivot_set.contains(&c) => {}
            _ => return Err(ClosingError::ExtraAssignment(edge)),
        }
    }
    let mut q = vec![0.0; n];
    for &c in &free {
        let edge = sys.columns[c];
        q[c] = *assignments.get(&edge).ok_or(ClosingError::MissingAssignment(edge))?;
    }

    let rhs_scale = sys.rhs.amax().max(1.0);
    for row in rows.iter().skip(pivots.len()) {
        if row[n].abs() > CONSISTENCY_EPS * rhs_scale {
            return Err(ClosingError::Inconsistent { residual: row[n].abs() });
        }
    }
    for (r, &p) in pivots.iter().enumerate() {
        let row = &rows[r];
        q[p] = row[n] - free.iter().map(|&j| row[j] * q[j]).sum::<f64>();
    }

    let out = LengthVector { edges: sys.columns.clone(), values: q };
    let scale = rhs_scale.max(out.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let residual = sys.residual(&out);
    if residual > CONSISTENCY_EPS * scale {
        return Err(ClosingError::Inconsistent { residual });
    }
    Ok(out)
}

/// Rebuilds vertex positions from edge lengths by walking a breadth-first
/// spanning tree from `root`; every non-tree edge must agree within
/// `geom_eps` of the larger bounding-box diagonal.
pub fn reconstruct_geometry(
    d: &Diagram,
    q: &LengthVector,
    root: VertexId,
    root_position: Vec3,
    geom_eps: f64,
) -> Result<Diagram, ClosingError> {
    if q.edges() != d.internal_edges() {
        return Err(ClosingError::LengthMismatch { expected: d.internal_count(), got: q.len() });
    }
    if d.vertex(root).is_none() {
        return Err(DiagramError::DanglingReference(format!("root vertex {root}")).into());
    }
    let dirs = edge_directions(d)?;
    let vector = |edge: EdgeId| -> Vec3 {
        match q.get(edge) {
            Some(len) => dirs[&edge] * len,
            None => d.edge_vector(edge),
        }
    };

    let mut incident: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for e in d.edges() {
        incident.entry(e.tail).or_default().push(e.id);
        incident.entry(e.head).or_default().push(e.id);
    }

    let mut pos: BTreeMap<VertexId, Vec3> = BTreeMap::new();
    let mut tree: HashSet<EdgeId> = HashSet::new();
    pos.insert(root, root_position);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let pu = pos[&u];
        for &eid in incident.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            let e = d.edge(eid).unwrap();
            let (other, p) = if e.tail == u { (e.head, pu + vector(eid)) } else { (e.tail, pu - vector(eid)) };
            if !pos.contains_key(&other) {
                pos.insert(other, p);
                tree.insert(eid);
                queue.push_back(other);
            }
        }
    }
    if pos.len() != d.vertices().len() {
        return Err(ClosingError::Disconnected);
    }

    let diag = d.bbox_diagonal().max(crate::diagram::bbox_diagonal(pos.values().copied()));
    let eps = geom_eps * diag;
    for e in d.edges() {
        if tree.contains(&e.id) {
            continue;
        }
        let residual = (pos[&e.head] - pos[&e.tail] - vector(e.id)).norm();
        if residual > eps {
            return Err(ClosingError::NotClosing { edge: e.id, residual });
        }
    }
    Ok(d.with_positions(&pos)?)
}
