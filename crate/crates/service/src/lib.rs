//! HTTP service for live, symmetry-preserving manipulation of one diagram.
//!
//! Routes:
//!
//! | method | path              | body                      |
//! |--------|-------------------|---------------------------|
//! | GET    | `/api/health`     |                           |
//! | POST   | `/api/load`       | interchange document      |
//! | GET    | `/api/diagram`    |                           |
//! | GET    | `/api/analysis`   |                           |
//! | POST   | `/api/manipulate` | `{"<edge id>": lambda}`   |
//! | POST   | `/api/reset`      |                           |
//! | GET    | `/*`              | static files, if enabled  |
//!
//! Scaling factors are relative to the loaded diagram and accumulate across
//! requests: posting `{"3": 2.0}` and then `{"5": 0.5}` yields the diagram
//! for `{3: 2.0, 5: 0.5}`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;

use polysym_core::closing::LengthVector;
use polysym_core::diagram::{parse_diagram, Diagram, EdgeId, EdgeKind, ToleranceConfig};
use polysym_core::fingerprint::FingerprintConfig;
use polysym_core::pipeline::{run_manipulation, Analysis, ManipulationSpec, PipelineError, PreservationReport};
use polysym_core::report::{analyze_document, AnalysisReportDocument};
use serde::Serialize;
use serde_json::{json, Value};

pub const DEFAULT_PORT: u16 = 7341;

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Response {
    fn json(status: u16, value: &impl Serialize) -> Self {
        let body = serde_json::to_vec(value).expect("response bodies always serialize");
        Self { status, content_type: "application/json", body }
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        Self::json(status, &json!({ "error": message.into() }))
    }

    /// Body parsed as JSON; panics on non-JSON bodies.
    pub fn json_body(&self) -> Value {
        serde_json::from_slice(&self.body).expect("JSON response body")
    }
}

/// One loaded diagram and its state at some revision. Never mutated once
/// published; writers build a new snapshot and swap it in.
#[derive(Debug)]
struct Session {
    id: u64,
    base: Arc<Analysis>,
    spec: ManipulationSpec,
    current: Diagram,
    lengths: LengthVector,
    revision: u64,
    report: AnalysisReportDocument,
    preservation: Option<PreservationReport>,
    warnings: Vec<String>,
}

pub struct Service {
    cfg: FingerprintConfig,
    tol: ToleranceConfig,
    static_dir: Option<PathBuf>,
    session: RwLock<Option<Arc<Session>>>,
    writer: Mutex<u64>,
}

impl Service {
    pub fn new(cfg: FingerprintConfig, tol: ToleranceConfig, static_dir: Option<PathBuf>) -> Self {
        Self { cfg, tol, static_dir, session: RwLock::new(None), writer: Mutex::new(0) }
    }

    fn snapshot(&self) -> Option<Arc<Session>> {
        self.session.read().expect("session lock").clone()
    }

    fn publish(&self, s: Session) {
        *self.session.write().expect("session lock") = Some(Arc::new(s));
    }

    /// Dispatches one request. Query strings are ignored.
    pub fn handle(&self, method: &str, url: &str, body: &[u8]) -> Response {
        let path = url.split('?').next().unwrap_or("");
        match (method, path) {
            ("GET", "/api/health") => self.health(),
            ("POST", "/api/load") => self.load(body),
            ("GET", "/api/diagram") => self.diagram(),
            ("GET", "/api/analysis") => self.analysis(),
            ("POST", "/api/manipulate") => self.manipulate(body),
            ("POST", "/api/reset") => self.reset(),
            (_, "/api/health" | "/api/load" | "/api/diagram" | "/api/analysis" | "/api/manipulate" | "/api/reset") => {
                Response::error(405, format!("{method} not allowed on {path}"))
            }
            ("GET", p) if !p.starts_with("/api/") => self.static_file(p),
            _ => Response::error(404, format!("no route for {method} {path}")),
        }
    }

    fn health(&self) -> Response {
        let s = self.snapshot();
        Response::json(
            200,
            &json!({
                "status": "ok",
                "loaded": s.is_some(),
                "revision": s.as_ref().map(|s| s.revision),
            }),
        )
    }

    fn load(&self, body: &[u8]) -> Response {
        let Ok(text) = std::str::from_utf8(body) else {
            return Response::error(400, "body is not UTF-8");
        };
        let d = match parse_diagram(text) {
            Ok(d) => d,
            Err(e) => return Response::error(400, e.to_string()),
        };
        if !d.is_connected() {
            return Response::error(422, PipelineError::Disconnected.to_string());
        }
        let (analysis, report) = match analyze_document(&d, &self.cfg, &self.tol) {
            Ok(x) => x,
            Err(e) => return Response::error(422, e.to_string()),
        };
        let mut next_id = self.writer.lock().expect("writer lock");
        *next_id += 1;
        let session = Session {
            id: *next_id,
            lengths: analysis.baseline_lengths(),
            current: d,
            base: Arc::new(analysis),
            spec: ManipulationSpec::identity(),
            revision: 0,
            report,
            preservation: None,
            warnings: Vec::new(),
        };
        let out = json!({
            "session": session.id,
            "revision": 0,
            "group": session.report.group.name,
            "order": session.report.group.order,
            "independent_edges": session.base.independent_edges(),
        });
        self.publish(session);
        Response::json(200, &out)
    }

    fn geometry(s: &Session) -> Value {
        let colors = s.report.edge_colors();
        let independent = s.base.independent_edges();
        let d = &s.current;
        json!({
            "session": s.id,
            "revision": s.revision,
            "group": s.report.group.name,
            "order": s.report.group.order,
            "vertices": d.vertices().iter().map(|v| json!({ "id": v.id, "p": [v.position.x, v.position.y, v.position.z] })).collect::<Vec<_>>(),
            "edges": d.edges().iter().map(|e| json!({
                "id": e.id,
                "tail": e.tail,
                "head": e.head,
                "kind": if e.kind == EdgeKind::Internal { "internal" } else { "external" },
                "color": colors.get(&e.id),
                "independent": independent.contains(&e.id),
            })).collect::<Vec<_>>(),
            "independent_edges": independent,
            "scaling": s.spec.scaling,
        })
    }

    fn diagram(&self) -> Response {
        match self.snapshot() {
            Some(s) => Response::json(200, &Self::geometry(&s)),
            None => Response::error(404, "no diagram loaded"),
        }
    }

    fn analysis(&self) -> Response {
        match self.snapshot() {
            Some(s) => Response::json(200, &s.report),
            None => Response::error(404, "no diagram loaded"),
        }
    }

    fn manipulate(&self, body: &[u8]) -> Response {
        let request: BTreeMap<String, f64> = if body.iter().all(u8::is_ascii_whitespace) {
            BTreeMap::new()
        } else {
            match serde_json::from_slice(body) {
                Ok(m) => m,
                Err(e) => return Response::error(400, format!("expected {{\"<edge id>\": lambda}}: {e}")),
            }
        };
        let _guard = self.writer.lock().expect("writer lock");
        let Some(s) = self.snapshot() else {
            return Response::error(404, "no diagram loaded");
        };
        let valid = s.base.independent_edges().to_vec();
        let mut spec = s.spec.clone();
        for (key, &lambda) in &request {
            let Ok(edge) = key.trim().parse::<EdgeId>() else {
                return Response::json(400, &json!({ "error": format!("{key:?} is not an edge id"), "valid": valid }));
            };
            spec.scaling.insert(edge, lambda);
        }
        if let Err(e) = spec.validate(&valid) {
            return Response::json(400, &json!({ "error": e.to_string(), "valid": valid }));
        }
        if request.is_empty() {
            return Response::json(200, &Self::manipulation_body(&s));
        }

        let result = match run_manipulation((*s.base).clone(), &spec, &self.cfg, &self.tol) {
            Ok(r) => r,
            Err(e @ PipelineError::NotSymmetric { .. }) => return Response::error(409, e.to_string()),
            Err(e @ PipelineError::NotPreserved(_)) => return Response::error(500, e.to_string()),
            Err(e) => return Response::error(422, e.to_string()),
        };
        let m = result.manipulation;
        if let Err(e) = self.verify(&s.base, &m.lengths, &m.diagram) {
            return Response::error(500, e);
        }
        let report = match analyze_document(&m.diagram, &self.cfg, &self.tol) {
            Ok((_, r)) => r,
            Err(e) => return Response::error(500, e.to_string()),
        };
        let next = Session {
            id: s.id,
            base: Arc::clone(&s.base),
            spec,
            current: m.diagram,
            lengths: m.lengths,
            revision: s.revision + 1,
            report,
            preservation: Some(result.preservation),
            warnings: m.warnings,
        };
        let out = Self::manipulation_body(&next);
        self.publish(next);
        Response::json(200, &out)
    }

    /// The stacked system holds for the solved lengths, and every rebuilt
    /// edge vector is its length times the original unit direction.
    fn verify(&self, base: &Analysis, q: &LengthVector, d: &Diagram) -> Result<(), String> {
        let eps = base.diagram.geom_tolerance(self.tol.geom_eps).max(1e-9);
        let scale = q.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let residual = base.m_sym.residual(q);
        if residual > eps * scale {
            return Err(format!("stacked system residual {residual:.3e} after manipulation"));
        }
        for (&e, &len) in q.edges().iter().zip(q.values()) {
            let u = base.diagram.edge_vector(e) / base.diagram.edge_length(e);
            let gap = (d.edge_vector(e) - len * u).norm();
            if gap > eps * scale {
                return Err(format!("edge {e} deviates from its direction by {gap:.3e}"));
            }
        }
        Ok(())
    }

    fn manipulation_body(s: &Session) -> Value {
        let mut body = Self::geometry(s);
        let p = s.preservation.clone();
        body["preserved"] = json!(p.as_ref().map_or(true, |p| p.preserved));
        body["original_order"] = json!(s.base.report.order);
        body["new_order"] = json!(s.report.group.order);
        body["preservation"] = json!(p);
        body["lengths"] = json!(s.lengths.edges().iter().zip(s.lengths.values()).map(|(e, v)| (e.to_string(), *v)).collect::<BTreeMap<_, _>>());
        body["warnings"] = json!(s.warnings);
        body
    }

    fn reset(&self) -> Response {
        let _guard = self.writer.lock().expect("writer lock");
        let Some(s) = self.snapshot() else {
            return Response::error(404, "no diagram loaded");
        };
        let base = &s.base;
        let report = match analyze_document(&base.diagram, &self.cfg, &self.tol) {
            Ok((_, r)) => r,
            Err(e) => return Response::error(500, e.to_string()),
        };
        let next = Session {
            id: s.id,
            base: Arc::clone(base),
            spec: ManipulationSpec::identity(),
            current: base.diagram.clone(),
            lengths: base.baseline_lengths(),
            revision: 0,
            report,
            preservation: None,
            warnings: Vec::new(),
        };
        let out = Self::geometry(&next);
        self.publish(next);
        Response::json(200, &out)
    }

    fn static_file(&self, path: &str) -> Response {
        let Some(root) = &self.static_dir else {
            return Response::error(404, "static files are not enabled");
        };
        let rel = path.trim_start_matches('/');
        let rel = if rel.is_empty() { "index.html" } else { rel };
        let rel = Path::new(rel);
        if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return Response::error(404, "not found");
        }
        match std::fs::read(root.join(rel)) {
            Ok(body) => Response { status: 200, content_type: content_type(rel), body },
            Err(_) => Response::error(404, "not found"),
        }
    }
}

fn content_type(p: &Path) -> &'static str {
    match p.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// Binds `127.0.0.1:port` (0 picks a free port) and starts `workers`
/// threads pulling requests off the listener.
pub fn start(service: Arc<Service>, port: u16, workers: usize) -> std::io::Result<(SocketAddr, Vec<JoinHandle<()>>)> {
    let server = tiny_http::Server::http(("127.0.0.1", port)).map_err(std::io::Error::other)?;
    let addr = server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("not an IP listener"))?;
    let server = Arc::new(server);
    let handles = (0..workers.max(1))
        .map(|_| {
            let (server, service) = (Arc::clone(&server), Arc::clone(&service));
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = Vec::new();
                    let response = match request.as_reader().read_to_end(&mut body) {
                        Ok(_) => service.handle(request.method().as_str(), request.url(), &body),
                        Err(e) => Response::error(400, e.to_string()),
                    };
                    let header =
                        tiny_http::Header::from_bytes("Content-Type", response.content_type).expect("static header");
                    let out =
                        tiny_http::Response::from_data(response.body).with_status_code(response.status).with_header(header);
                    let _ = request.respond(out);
                }
            })
        })
        .collect();
    Ok((addr, handles))
}

/// Serves until the process is killed.
pub fn serve(service: Arc<Service>, port: u16, workers: usize) -> std::io::Result<()> {
    let (_, handles) = start(service, port, workers)?;
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}
