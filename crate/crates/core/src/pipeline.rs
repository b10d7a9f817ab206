//! From edge orbits to symmetry constraints, degrees-of-freedom reports,
//! symmetric manipulation and preservation checks.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closing::{build_closing, gdof, reconstruct_geometry, solve_lengths, ClosingError, ClosingSystem, LengthVector, LinearSystem};
use crate::diagram::{geometric_center, Diagram, EdgeId, ToleranceConfig};
use crate::fingerprint::{edge_symmetry, tagged_midpoints, EdgeSymmetry, FingerprintConfig, FingerprintError};
use crate::point_group::{operation_matches, SymmetryError, SymmetryOperation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Closing(#[from] ClosingError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("orbit partition does not match the internal edges: {0}")]
    BadPartition(String),
    #[error("degrees-of-freedom bound violated: {0}")]
    BoundViolation(String),
    #[error("{edge} is not an independent edge; independent edges are {valid:?}")]
    NotIndependent { edge: EdgeId, valid: Vec<EdgeId> },
    #[error("scaling factor for edge {edge} must be finite and > 0, got {lambda}")]
    BadScaling { edge: EdgeId, lambda: f64 },
    #[error("diagram is not symmetric as claimed: edges {a} and {b} share an orbit but differ in length by {gap:.3e}")]
    NotSymmetric { a: EdgeId, b: EdgeId, gap: f64 },
    #[error("diagram failed validation: {0}")]
    Invalid(String),
    #[error("diagram is disconnected")]
    Disconnected,
    #[error("symmetry was not preserved: missing {0:?}")]
    NotPreserved(Vec<String>),
}

/// Rows `e_l - e_r` tying equal lengths inside every orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryConstraintMatrix {
    /// `(l, r)` column pairs: `+1` at `l`, `-1` at `r`.
    pub rows: Vec<(usize, usize)>,
    pub columns: Vec<EdgeId>,
}

impl SymmetryConstraintMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.rows.len(), self.columns.len());
        for (i, &(l, r)) in self.rows.iter().enumerate() {
            s[(i, l)] = 1.0;
            s[(i, r)] = -1.0;
        }
        s
    }

    /// Largest `|q_l - q_r|` over the rows.
    pub fn residual(&self, q: &LengthVector) -> f64 {
        self.rows.iter().map(|&(l, r)| (q.values()[l] - q.values()[r]).abs()).fold(0.0, f64::max)
    }
}

/// Chains each ascending orbit `i_1 < i_2 < ... < i_k` into rows
/// `(i_j, i_{j+1})`, `k - 1` per orbit.
pub fn build_symmetry_matrix(orbits: &[Vec<EdgeId>], columns: &[EdgeId]) -> Result<SymmetryConstraintMatrix, PipelineError> {
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for orbit in orbits {
        let mut cols = Vec::with_capacity(orbit.len());
        for &e in orbit {
            let c = columns
                .binary_search(&e)
                .map_err(|_| PipelineError::BadPartition(format!("orbit references unknown edge {e}")))?;
            if !seen.insert(e) {
                return Err(PipelineError::BadPartition(format!("edge {e} appears in two orbits")));
            }
            cols.push(c);
        }
        cols.sort_unstable();
        rows.extend(cols.windows(2).map(|w| (w[0], w[1])));
    }
    if seen.len() != columns.len() {
        return Err(PipelineError::BadPartition(format!("{} of {} edges covered", seen.len(), columns.len())));
    }
    Ok(SymmetryConstraintMatrix { rows, columns: columns.to_vec() })
}

/// `M_sym`: S stacked below M, right-hand side extended with zeros.
pub fn stack_symmetric(m: &LinearSystem, s: &SymmetryConstraintMatrix) -> Result<LinearSystem, PipelineError> {
    if m.columns.len() != s.columns.len() {
        return Err(ClosingError::ColumnMismatch { left: m.columns.len(), right: s.columns.len() }.into());
    }
    let (mr, n) = (m.matrix.nrows(), m.columns.len());
    let mut matrix = DMatrix::zeros(mr + s.row_count(), n);
    matrix.rows_mut(0, mr).copy_from(&m.matrix);
    matrix.rows_mut(mr, s.row_count()).copy_from(&s.to_dense());
    let mut rhs = DVector::zeros(mr + s.row_count());
    rhs.rows_mut(0, mr).copy_from(&m.rhs);
    Ok(LinearSystem { matrix, rhs, columns: m.columns.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdofReport {
    pub group: String,
    pub order: usize,
    pub e_int: usize,
    pub orbit_count: usize,
    pub rows_of_s: usize,
    pub m_raw: usize,
    pub m_sym: usize,
    pub reduction: f64,
    pub independent_edges_raw: Vec<EdgeId>,
    pub independent_edges_sym: Vec<EdgeId>,
    pub elapsed_ms: f64,
}

/// Degrees of freedom before and after the symmetry rows, with the
/// `1 <= m_raw / m_sym <= |G|` and `rows(S) = e_int - orbits` self-checks.
pub fn gdof_report(
    sys: &LinearSystem,
    sym: &EdgeSymmetry,
    s: &SymmetryConstraintMatrix,
    tol: &ToleranceConfig,
) -> Result<GdofReport, PipelineError> {
    let m_sys = stack_symmetric(sys, s)?;
    let raw = gdof(&sys.matrix, &sys.columns, tol.rank_eps);
    let symm = gdof(&m_sys.matrix, &m_sys.columns, tol.rank_eps);
    let e_int = sys.columns.len();
    let order = sym.group.order();
    let reduction = match (raw.m, symm.m) {
        (0, 0) => 1.0,
        (r, 0) => r as f64 / 0.0,
        (r, m) => r as f64 / m as f64,
    };
    if s.row_count() != e_int - sym.orbits.len() {
        return Err(PipelineError::BoundViolation(format!(
            "rows(S) = {} but e_int - orbits = {}",
            s.row_count(),
            e_int - sym.orbits.len()
        )));
    }
    if symm.m > raw.m || !(1.0..=order as f64).contains(&reduction) {
        return Err(PipelineError::BoundViolation(format!(
            "m_raw = {}, m_sym = {}, |G| = {order}",
            raw.m, symm.m
        )));
    }
    Ok(GdofReport {
        group: sym.group.name(),
        order,
        e_int,
        orbit_count: sym.orbits.len(),
        rows_of_s: s.row_count(),
        m_raw: raw.m,
        m_sym: symm.m,
        reduction,
        independent_edges_raw: raw.independent_edges,
        independent_edges_sym: symm.independent_edges,
        elapsed_ms: 0.0,
    })
}

/// Everything computed about a diagram before manipulation.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub diagram: Diagram,
    pub symmetry: EdgeSymmetry,
    pub closing: ClosingSystem,
    pub s: SymmetryConstraintMatrix,
    pub m_sym: LinearSystem,
    pub report: GdofReport,
    pub elapsed: Duration,
}

impl Analysis {
    pub fn independent_edges(&self) -> &[EdgeId] {
        &self.report.independent_edges_sym
    }

    /// Current lengths; they satisfy `M_sym q = t` when the diagram is symmetric.
    pub fn baseline_lengths(&self) -> LengthVector {
        LengthVector::from_diagram(&self.diagram)
    }

    /// Fails when lengths inside an orbit disagree beyond the geometric tolerance.
    pub fn check_baseline(&self, tol: &ToleranceConfig) -> Result<(), PipelineError> {
        let q = self.baseline_lengths();
        let eps = self.diagram.geom_tolerance(tol.geom_eps);
        for &(l, r) in &self.s.rows {
            let gap = (q.values()[l] - q.values()[r]).abs();
            if gap > eps {
                return Err(PipelineError::NotSymmetric { a: self.s.columns[l], b: self.s.columns[r], gap });
            }
        }
        Ok(())
    }
}

/// Edge symmetry, closing system, `S`, `M_sym` and the degrees-of-freedom report.
pub fn analyze(d: &Diagram, cfg: &FingerprintConfig, tol: &ToleranceConfig) -> Result<Analysis, PipelineError> {
    let start = Instant::now();
    let symmetry = edge_symmetry(d, cfg, tol)?;
    let closing = build_closing(d)?;
    let sys = closing.to_system();
    let s = build_symmetry_matrix(&symmetry.orbits, &closing.columns)?;
    let m_sym = stack_symmetric(&sys, &s)?;
    let mut report = gdof_report(&sys, &symmetry, &s, tol)?;
    let elapsed = start.elapsed();
    report.elapsed_ms = elapsed.as_secs_f64() * 1e3;
    Ok(Analysis { diagram: d.clone(), symmetry, closing, s, m_sym, report, elapsed })
}

/// Per-edge scaling factors `q_i <- lambda_i q_i` on independent edges; absent
/// edges keep `lambda = 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManipulationSpec {
    pub scaling: BTreeMap<EdgeId, f64>,
}

impl ManipulationSpec {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with(mut self, edge: EdgeId, lambda: f64) -> Self {
        self.scaling.insert(edge, lambda);
        self
    }

    pub fn validate(&self, independent: &[EdgeId]) -> Result<(), PipelineError> {
        for (&edge, &lambda) in &self.scaling {
            if independent.binary_search(&edge).is_err() {
                return Err(PipelineError::NotIndependent { edge, valid: independent.to_vec() });
            }
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(PipelineError::BadScaling { edge, lambda });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Manipulation {
    pub lengths: LengthVector,
    pub diagram: Diagram,
    pub warnings: Vec<String>,
}

/// Rebuilds `d` from lengths `q`, rooted at its lowest vertex id, then moves
/// the result so its vertex centroid coincides with that of `d`.
pub fn rebuild_with_lengths(d: &Diagram, q: &LengthVector, tol: &ToleranceConfig) -> Result<Diagram, PipelineError> {
    let root = d.vertices().iter().map(|v| v.id).min().expect("diagram has vertices");
    let rebuilt = reconstruct_geometry(d, q, root, d.position(root), tol.geom_eps)?;
    let centroid = |x: &Diagram| geometric_center(&x.vertices().iter().map(|v| v.position).collect::<Vec<_>>()).unwrap();
    Ok(rebuilt.translated(centroid(d) - centroid(&rebuilt)))
}

/// Scales the independent edges of `M_sym`, re-solves the dependent ones and
/// rebuilds the geometry.
pub fn manipulate(
    analysis: &Analysis,
    q0: &LengthVector,
    spec: &ManipulationSpec,
    tol: &ToleranceConfig,
) -> Result<Manipulation, PipelineError> {
    let independent = analysis.independent_edges();
    spec.validate(independent)?;
    if spec.scaling.values().all(|&l| l == 1.0) && *q0 == analysis.baseline_lengths() {
        // keep the input geometry bit for bit
        return Ok(Manipulation { lengths: q0.clone(), diagram: analysis.diagram.clone(), warnings: Vec::new() });
    }
    let assignments: BTreeMap<EdgeId, f64> = independent
        .iter()
        .map(|&e| {
            let base = q0.get(e).expect("independent edges are internal");
            (e, base * spec.scaling.get(&e).copied().unwrap_or(1.0))
        })
        .collect();
    let lengths = solve_lengths(&analysis.m_sym, &assignments, tol.rank_eps)?;
    let diagram = rebuild_with_lengths(&analysis.diagram, &lengths, tol)?;
    let warnings = lengths
        .non_positive()
        .into_iter()
        .map(|e| format!("edge {e} has non-positive length {}", lengths.get(e).unwrap()))
        .collect();
    Ok(Manipulation { lengths, diagram, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub preserved: bool,
    pub original_group: String,
    pub original_order: usize,
    pub new_group: String,
    pub new_order: usize,
    /// Operations of the original group that no longer map the new diagram.
    pub missing: Vec<String>,
    /// Number of operations gained by the new diagram.
    pub gained: usize,
    /// Whether the fresh edge orbits of the new diagram differ from the original.
    pub orbit_drift: bool,
}

/// Checks every operation of the original edge group against the recentered,
/// freshly fingerprinted midpoints of `new`.
pub fn verify_preservation(
    original: &Diagram,
    new: &Diagram,
    cfg: &FingerprintConfig,
    tol: &ToleranceConfig,
) -> Result<PreservationReport, PipelineError> {
    if !original.is_connected() {
        return Err(PipelineError::Disconnected);
    }
    let before = edge_symmetry(original, cfg, tol)?;
    preservation_against(&before, new, cfg, tol)
}

pub(crate) fn preservation_against(
    before: &EdgeSymmetry,
    new: &Diagram,
    cfg: &FingerprintConfig,
    tol: &ToleranceConfig,
) -> Result<PreservationReport, PipelineError> {
    let set = tagged_midpoints(new, cfg)?;
    let center = set.centroid();
    let missing: Vec<SymmetryOperation> = before
        .group
        .operations()
        .iter()
        .map(|op| op.recentered(center))
        .filter(|op| operation_matches(op, &set, tol.geom_eps).is_none())
        .collect();
    let after = edge_symmetry(new, cfg, tol)?;
    let gained = after
        .group
        .operations()
        .iter()
        .filter(|op| !before.group.contains_linear(op, tol.angle_eps))
        .count();
    Ok(PreservationReport {
        preserved: missing.is_empty(),
        original_group: before.group.name(),
        original_order: before.group.order(),
        new_group: after.group.name(),
        new_order: after.group.order(),
        missing: missing.iter().map(ToString::to_string).collect(),
        gained,
        orbit_drift: after.orbits != before.orbits,
    })
}

/// Missing operations as values, for callers that need their parameters.
pub fn missing_operations(
    original: &Diagram,
    new: &Diagram,
    cfg: &FingerprintConfig,
    tol: &ToleranceConfig,
) -> Result<Vec<SymmetryOperation>, PipelineError> {
    let before = edge_symmetry(original, cfg, tol)?;
    let set = tagged_midpoints(new, cfg)?;
    let center = set.centroid();
    Ok(before
        .group
        .operations()
        .iter()
        .map(|op| op.recentered(center))
        .filter(|op| operation_matches(op, &set, tol.geom_eps).is_none())
        .collect())
}

#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub analysis: Analysis,
    pub manipulation: Manipulation,
    pub preservation: PreservationReport,
}

/// Analyze, constrain, check the baseline, manipulate, rebuild and verify.
/// Preservation is a postcondition: a failed check is an error.
pub fn full_pipeline(
    d: &Diagram,
    spec: &ManipulationSpec,
    cfg: &FingerprintConfig,
    tol: &ToleranceConfig,
) -> Result<AnalysisResult, PipelineError> {
    if !d.is_connected() {
        return Err(PipelineError::Disconnected);
    }
    let analysis = analyze(d, cfg, tol)?;
    run_manipulation(analysis, spec, cfg, tol)
}

/// The manipulation half of [`full_pipeline`] on an existing analysis.
pub fn run_manipulation(
    analysis: Analysis,
    spec: &ManipulationSpec,
    cfg: &FingerprintConfig,
    tol: &ToleranceConfig,
) -> Result<AnalysisResult, PipelineError> {
    analysis.check_baseline(tol)?;
    let q0 = analysis.baseline_lengths();
    let manipulation = manipulate(&analysis, &q0, spec, tol)?;
    let preservation = preservation_against(&analysis.symmetry, &manipulation.diagram, cfg, tol)?;
    if !preservation.preserved {
        return Err(PipelineError::NotPreserved(preservation.missing));
    }
    Ok(AnalysisResult { analysis, manipulation, preservation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closing::rref;
    use crate::models;
    use crate::point_group::{OperationKind, Schoenflies};
    use crate::Vec3;

    fn cfg() -> FingerprintConfig {
        FingerprintConfig::default()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn symmetry_matrix_rows() {
        let s = build_symmetry_matrix(&[vec![0, 1, 2, 3]], &[0, 1, 2, 3]).unwrap();
        assert_eq!(s.rows, vec![(0, 1), (1, 2), (2, 3)]);
        let s = build_symmetry_matrix(&[vec![0, 2], vec![1, 3]], &[0, 1, 2, 3]).unwrap();
        assert_eq!(s.row_count(), 2);
        let s = build_symmetry_matrix(&[vec![0], vec![1], vec![2]], &[0, 1, 2]).unwrap();
        assert_eq!(s.row_count(), 0);
        assert!(build_symmetry_matrix(&[vec![0, 9]], &[0, 1]).is_err());
        assert!(build_symmetry_matrix(&[vec![0, 1], vec![1]], &[0, 1]).is_err());
    }

    #[test]
    fn dense_rows_sum_to_zero() {
        let s = build_symmetry_matrix(&[vec![3, 0, 2], vec![1]], &[0, 1, 2, 3]).unwrap();
        let dense = s.to_dense();
        for i in 0..dense.nrows() {
            assert_eq!(dense.row(i).iter().filter(|v| **v != 0.0).count(), 2);
            assert_eq!(dense.row(i).sum(), 0.0);
        }
    }

    #[test]
    fn stacking() {
        let sq = build_closing(&models::unit_square()).unwrap().to_system();
        let s = build_symmetry_matrix(&[vec![0, 1, 2, 3]], &sq.columns).unwrap();
        let stacked = stack_symmetric(&sq, &s).unwrap();
        assert_eq!(stacked.matrix.nrows(), 6);
        assert_eq!(rref(&stacked.matrix, 1e-9).rank, 3);

        let empty = SymmetryConstraintMatrix { rows: vec![], columns: sq.columns.clone() };
        assert_eq!(stack_symmetric(&sq, &empty).unwrap(), sq);

        let other = SymmetryConstraintMatrix { rows: vec![], columns: vec![0, 1] };
        assert!(stack_symmetric(&sq, &other).is_err());
    }

    #[test]
    fn square_with_symmetry_rows_solves_uniformly() {
        let a = analyze(&models::unit_square(), &cfg(), &tol()).unwrap();
        assert_eq!(a.independent_edges(), &[3]);
        let q = solve_lengths(&a.m_sym, &BTreeMap::from([(3, 2.0)]), 1e-9).unwrap();
        assert_eq!(q.values(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn reports() {
        let r = analyze(&models::cube(1.0), &cfg(), &tol()).unwrap().report;
        assert_eq!((r.order, r.rows_of_s, r.m_raw, r.m_sym), (48, 11, 3, 1));
        assert_eq!(r.reduction, 3.0);

        let r = analyze(&models::double_tetrahedron(), &cfg(), &tol()).unwrap().report;
        assert_eq!((r.order, r.m_raw, r.m_sym), (2, 2, 1));
        assert_eq!(r.reduction, 2.0);

        let r = analyze(&models::equilateral_triangle(), &cfg(), &tol()).unwrap().report;
        assert_eq!((r.group.as_str(), r.m_raw, r.m_sym, r.reduction), ("D3h", 1, 1, 1.0));
    }

    #[test]
    fn identity_manipulation_returns_the_input() {
        let d = models::unit_square();
        let out = full_pipeline(&d, &ManipulationSpec::identity(), &cfg(), &tol()).unwrap();
        assert_eq!(out.manipulation.lengths.values(), &[1.0; 4]);
        for v in d.vertices() {
            assert!((out.manipulation.diagram.position(v.id) - v.position).norm() < 1e-12);
        }
        assert!(out.preservation.preserved);
        assert_eq!((out.preservation.original_order, out.preservation.new_order), (16, 16));
    }

    #[test]
    fn uniform_scaling_of_square() {
        let out = full_pipeline(&models::unit_square(), &ManipulationSpec::identity().with(3, 2.0), &cfg(), &tol()).unwrap();
        assert_eq!(out.manipulation.lengths.values(), &[2.0; 4]);
        assert!(out.preservation.preserved);
        assert_eq!(out.preservation.new_order, 16);
    }

    #[test]
    fn rectangle_grows_into_square() {
        let rect = models::rectangle(2.0, 1.0);
        let a = analyze(&rect, &cfg(), &tol()).unwrap();
        assert_eq!(a.independent_edges(), &[2, 3]);
        let out = run_manipulation(a, &ManipulationSpec::identity().with(2, 0.5), &cfg(), &tol()).unwrap();
        assert_eq!(out.manipulation.lengths.values(), &[1.0; 4]);
        let p = out.preservation;
        assert!(p.preserved);
        assert_eq!((p.original_order, p.new_order, p.gained), (8, 16, 8));
        assert!(p.orbit_drift);
    }

    #[test]
    fn breaking_an_orbit_is_detected() {
        let sq = models::unit_square();
        let q = LengthVector::new(vec![0, 1, 2, 3], vec![2.0, 1.0, 2.0, 1.0]).unwrap();
        let rect = rebuild_with_lengths(&sq, &q, &tol()).unwrap();
        let p = verify_preservation(&sq, &rect, &cfg(), &tol()).unwrap();
        assert!(!p.preserved);
        assert_eq!(p.new_order, 8);
        let missing = missing_operations(&sq, &rect, &cfg(), &tol()).unwrap();
        assert!(missing.iter().any(|op| op.kind == OperationKind::ProperRotation
            && op.axis.cross(&Vec3::z()).norm() < 1e-9
            && ((op.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9
                || (op.angle - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-9)));
    }

    #[test]
    fn manipulation_errors() {
        let d = models::unit_square();
        let spec = ManipulationSpec::identity().with(99, 2.0);
        match full_pipeline(&d, &spec, &cfg(), &tol()) {
            Err(PipelineError::NotIndependent { edge: 99, valid }) => assert_eq!(valid, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
        let spec = ManipulationSpec::identity().with(3, -1.0);
        assert!(matches!(full_pipeline(&d, &spec, &cfg(), &tol()), Err(PipelineError::BadScaling { .. })));
        assert!(matches!(
            full_pipeline(&models::two_disjoint_squares(), &ManipulationSpec::identity(), &cfg(), &tol()),
            Err(PipelineError::Disconnected)
        ));
    }

    #[test]
    fn double_tetrahedron_scales_together() {
        let d = models::double_tetrahedron();
        let a = analyze(&d, &cfg(), &tol()).unwrap();
        let edge = a.independent_edges()[0];
        let out = run_manipulation(a, &ManipulationSpec::identity().with(edge, 2.0), &cfg(), &tol()).unwrap();
        let q0 = LengthVector::from_diagram(&d);
        for (new, old) in out.manipulation.lengths.values().iter().zip(q0.values()) {
            assert!((new - 2.0 * old).abs() < 1e-9);
        }
        assert!(out.preservation.preserved);
        assert_eq!(out.preservation.new_group, Schoenflies::Ci.to_string());
    }
}
