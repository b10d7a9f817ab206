//! JSON report documents shared by the command line and the HTTP service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagram::{serialize_diagram, validate, Diagram, EdgeId, Severity, ToleranceConfig};
use crate::fingerprint::FingerprintConfig;
use crate::pipeline::{analyze, Analysis, AnalysisResult, PipelineError, PreservationReport};
use crate::point_group::{OperationKind, SymmetryOperation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationRecord {
    pub kind: OperationKind,
    pub axis: [f64; 3],
    pub angle: f64,
    pub center: [f64; 3],
}

impl From<&SymmetryOperation> for OperationRecord {
    fn from(op: &SymmetryOperation) -> Self {
        Self { kind: op.kind, axis: op.axis.into(), angle: op.angle, center: op.center.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSection {
    pub name: String,
    pub order: usize,
    pub operations: Vec<OperationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub color: usize,
    pub edges: Vec<EdgeId>,
    /// Current length of each edge, same order as `edges`.
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdofSection {
    pub e_int: usize,
    pub orbit_count: usize,
    pub rows_of_s: usize,
    pub m_raw: usize,
    pub m_sym: usize,
    pub reduction: f64,
    pub independent_edges_raw: Vec<EdgeId>,
    pub independent_edges_sym: Vec<EdgeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReportDocument {
    pub schema_version: u32,
    pub input_digest: String,
    pub group: GroupSection,
    pub orbits: Vec<OrbitRecord>,
    pub gdof: GdofSection,
    pub warnings: Vec<String>,
    pub elapsed_ms: f64,
}

impl AnalysisReportDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report documents always serialize")
    }

    /// Copy with the timing field zeroed, for comparisons.
    pub fn without_timing(&self) -> Self {
        Self { elapsed_ms: 0.0, ..self.clone() }
    }

    /// Orbit color of every internal edge.
    pub fn edge_colors(&self) -> BTreeMap<EdgeId, usize> {
        self.orbits.iter().flat_map(|o| o.edges.iter().map(move |&e| (e, o.color))).collect()
    }
}

/// `sha256:<hex>` of the compact interchange serialization.
pub fn input_digest(d: &Diagram) -> String {
    let hash = Sha256::digest(serialize_diagram(d).as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn validation_warnings(d: &Diagram, tol: &ToleranceConfig) -> Result<Vec<String>, PipelineError> {
    let report = validate(d, tol);
    let describe = |f: &crate::diagram::Finding| match f.value {
        Some(v) => format!("{}: {} ({v:.3e})", f.locus, f.message),
        None => format!("{}: {}", f.locus, f.message),
    };
    if let Some(f) = report.findings.iter().find(|f| f.severity == Severity::Error) {
        return Err(PipelineError::Invalid(describe(f)));
    }
    Ok(report.findings.iter().filter(|f| f.severity == Severity::Warning).map(describe).collect())
}

pub fn report_document(analysis: &Analysis, mut warnings: Vec<String>) -> AnalysisReportDocument {
    let d = &analysis.diagram;
    let r = &analysis.report;
    warnings.extend(analysis.symmetry.diagnostics.iter().cloned());
    AnalysisReportDocument {
        schema_version: SCHEMA_VERSION,
        input_digest: input_digest(d),
        group: GroupSection {
            name: r.group.clone(),
            order: r.order,
            operations: analysis.symmetry.group.operations().iter().map(OperationRecord::from).collect(),
        },
        orbits: analysis
            .symmetry
            .orbits
            .iter()
            .enumerate()
            .map(|(color, edges)| OrbitRecord {
                color,
                edges: edges.clone(),
                lengths: edges.iter().map(|&e| d.edge_length(e)).collect(),
            })
            .collect(),
        gdof: GdofSection {
            e_int: r.e_int,
            orbit_count: r.orbit_count,
            rows_of_s: r.rows_of_s,
            m_raw: r.m_raw,
            m_sym: r.m_sym,
            reduction: r.reduction,
            independent_edges_raw: r.independent_edges_raw.clone(),
            independent_edges_sym: r.independent_edges_sym.clone(),
        },
        warnings,
        elapsed_ms: r.elapsed_ms,
    }
}

/// Validates, analyzes and renders the report in one step.
pub fn analyze_document(
    d: &Diagram,
    cfg: &FingerprintConfig,
    tol: &ToleranceConfig,
) -> Result<(Analysis, AnalysisReportDocument), PipelineError> {
    let warnings = validation_warnings(d, tol)?;
    let analysis = analyze(d, cfg, tol)?;
    let doc = report_document(&analysis, warnings);
    Ok((analysis, doc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationDocument {
    pub scaling: BTreeMap<EdgeId, f64>,
    pub lengths: BTreeMap<EdgeId, f64>,
    pub preservation: PreservationReport,
    pub warnings: Vec<String>,
    /// The manipulated diagram in interchange form.
    pub diagram: serde_json::Value,
}

pub fn manipulation_document(result: &AnalysisResult, scaling: &BTreeMap<EdgeId, f64>) -> ManipulationDocument {
    let m = &result.manipulation;
    ManipulationDocument {
        scaling: scaling.clone(),
        lengths: m.lengths.edges().iter().copied().zip(m.lengths.values().iter().copied()).collect(),
        preservation: result.preservation.clone(),
        warnings: m.warnings.clone(),
        diagram: crate::diagram::diagram_to_value(&m.diagram),
    }
}
