use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use polysym_core::diagram::{serialize_diagram, ToleranceConfig};
use polysym_core::fingerprint::FingerprintConfig;
use polysym_core::models;
use polysym_service::{start, Response, Service};
use serde_json::Value;

fn service() -> Service {
    Service::new(FingerprintConfig::default(), ToleranceConfig::default(), None)
}

fn loaded(d: &polysym_core::diagram::Diagram) -> Service {
    let s = service();
    let r = s.handle("POST", "/api/load", serialize_diagram(d).as_bytes());
    assert_eq!(r.status, 200, "{}", String::from_utf8_lossy(&r.body));
    s
}

fn get(s: &Service, path: &str) -> Response {
    s.handle("GET", path, b"")
}

fn post(s: &Service, path: &str, body: &str) -> Response {
    s.handle("POST", path, body.as_bytes())
}

fn colors(v: &Value) -> std::collections::BTreeSet<u64> {
    v["edges"].as_array().unwrap().iter().filter_map(|e| e["color"].as_u64()).collect()
}

#[test]
fn nothing_loaded_is_404() {
    let s = service();
    for r in [get(&s, "/api/diagram"), get(&s, "/api/analysis"), post(&s, "/api/reset", ""), post(&s, "/api/manipulate", "{}")] {
        assert_eq!(r.status, 404);
    }
    let h = get(&s, "/api/health").json_body();
    assert_eq!((h["status"].as_str(), h["loaded"].as_bool()), (Some("ok"), Some(false)));
}

#[test]
fn diagram_coloring() {
    let sq = get(&loaded(&models::unit_square()), "/api/diagram").json_body();
    assert_eq!(sq["edges"].as_array().unwrap().len(), 4);
    assert_eq!(colors(&sq).len(), 1);
    assert_eq!(sq["independent_edges"], serde_json::json!([3]));

    let rect = get(&loaded(&models::rectangle(2.0, 1.0)), "/api/diagram").json_body();
    assert_eq!(colors(&rect).len(), 2);
    assert_eq!((rect["group"].as_str(), rect["order"].as_u64()), (Some("D2h"), Some(8)));
}

#[test]
fn analysis_documents() {
    let cube = get(&loaded(&models::cube(1.0)), "/api/analysis").json_body();
    assert_eq!((cube["group"]["order"].as_u64(), cube["gdof"]["m_sym"].as_u64()), (Some(48), Some(1)));
    let s = loaded(&models::unit_square());
    let a = get(&s, "/api/analysis").json_body();
    assert_eq!((a["gdof"]["m_raw"].as_u64(), a["gdof"]["m_sym"].as_u64()), (Some(2), Some(1)));
    // query strings, e.g. a stale revision, do not change the answer
    let b = get(&s, "/api/analysis?revision=7").json_body();
    assert_eq!(a["orbits"], b["orbits"]);
    assert_eq!(a["gdof"], b["gdof"]);
}

#[test]
fn cube_manipulation_doubles_every_edge() {
    let s = loaded(&models::cube(1.0));
    let before = get(&s, "/api/diagram").json_body();
    let edge = before["independent_edges"][0].as_u64().unwrap();
    let r = post(&s, "/api/manipulate", &format!("{{\"{edge}\": 2.0}}"));
    assert_eq!(r.status, 200);
    let body = r.json_body();
    assert_eq!(body["preserved"], true);
    assert_eq!((body["revision"].as_u64(), body["new_order"].as_u64()), (Some(1), Some(48)));
    let lengths = body["lengths"].as_object().unwrap();
    assert_eq!(lengths.len(), 12);
    assert!(lengths.values().all(|v| (v.as_f64().unwrap() - 2.0).abs() < 1e-12));
}

#[test]
fn invalid_manipulations_are_400() {
    let s = loaded(&models::unit_square());
    let r = post(&s, "/api/manipulate", r#"{"99": 1.5}"#);
    assert_eq!(r.status, 400);
    let body = r.json_body();
    assert!(body["error"].as_str().unwrap().contains("not an independent edge"));
    assert_eq!(body["valid"], serde_json::json!([3]));
    assert_eq!(post(&s, "/api/manipulate", r#"{"3": -1}"#).status, 400);
    assert_eq!(post(&s, "/api/manipulate", r#"{"3": 0}"#).status, 400);
    assert_eq!(post(&s, "/api/manipulate", r#"{"x": 1}"#).status, 400);
    assert_eq!(post(&s, "/api/manipulate", "[1, 2]").status, 400);
    assert_eq!(get(&s, "/api/diagram").json_body()["revision"], 0);
}

#[test]
fn empty_body_is_a_no_op() {
    let s = loaded(&models::unit_square());
    assert_eq!(post(&s, "/api/manipulate", r#"{"3": 2}"#).json_body()["revision"], 1);
    for body in ["", "{}", "  "] {
        let r = post(&s, "/api/manipulate", body).json_body();
        assert_eq!(r["revision"], 1);
        assert_eq!(r["preserved"], true);
    }
}

#[test]
fn scaling_factors_accumulate_relative_to_the_base() {
    let s = loaded(&models::rectangle(2.0, 1.0));
    post(&s, "/api/manipulate", r#"{"2": 3.0}"#);
    let r = post(&s, "/api/manipulate", r#"{"3": 0.5}"#).json_body();
    assert_eq!(r["revision"], 2);
    assert_eq!(r["lengths"]["0"], 6.0);
    assert_eq!(r["lengths"]["1"], 0.5);
    // rectangle grown into a square
    let r = post(&s, "/api/manipulate", r#"{"2": 0.5, "3": 1.0}"#).json_body();
    assert_eq!((r["original_order"].as_u64(), r["new_order"].as_u64()), (Some(8), Some(16)));
    assert_eq!(colors(&r).len(), 1);
}

#[test]
fn reset_restores_the_base() {
    let base = models::cube(1.0);
    let s = loaded(&base);
    let edge = get(&s, "/api/diagram").json_body()["independent_edges"][0].as_u64().unwrap();
    post(&s, "/api/manipulate", &format!("{{\"{edge}\": 3.0}}"));
    for _ in 0..2 {
        let r = post(&s, "/api/reset", "").json_body();
        assert_eq!(r["revision"], 0);
        for v in r["vertices"].as_array().unwrap() {
            let id = v["id"].as_u64().unwrap() as u32;
            let p: Vec<f64> = v["p"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            let expected = base.position(id);
            assert!((0..3).all(|i| (p[i] - expected[i]).abs() <= 1e-12));
        }
    }
}

#[test]
fn bad_loads() {
    let s = service();
    assert_eq!(post(&s, "/api/load", "not json").status, 400);
    assert_eq!(post(&s, "/api/load", &serialize_diagram(&models::two_disjoint_squares())).status, 422);
    assert_eq!(get(&s, "/api/nowhere").status, 404);
    assert_eq!(s.handle("DELETE", "/api/diagram", b"").status, 405);
    assert_eq!(get(&s, "/index.html").status, 404);
}

#[test]
fn static_files_stay_inside_the_root() {
    let dir = std::env::temp_dir().join(format!("polysym-static-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<html></html>").unwrap();
    let s = Service::new(FingerprintConfig::default(), ToleranceConfig::default(), Some(dir.clone()));
    let r = get(&s, "/");
    assert_eq!((r.status, r.content_type), (200, "text/html; charset=utf-8"));
    assert_eq!(get(&s, "/../Cargo.toml").status, 404);
    std::fs::remove_dir_all(dir).unwrap();
}

fn http(addr: std::net::SocketAddr, request: &str) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.write_all(request.as_bytes()).unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    let status = text[9..12].parse().unwrap();
    let body = text.split("\r\n\r\n").nth(1).unwrap();
    (status, serde_json::from_str(body).unwrap())
}

#[test]
fn serves_over_http() {
    let (addr, _workers) = start(Arc::new(service()), 0, 2).unwrap();
    let doc = serialize_diagram(&models::unit_square());
    let load = format!(
        "POST /api/load HTTP/1.1\r\nHost: x\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{doc}",
        doc.len()
    );
    let (status, body) = http(addr, &load);
    assert_eq!((status, body["group"].as_str()), (200, Some("D4h")));
    let (status, body) = http(addr, "GET /api/analysis HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    assert_eq!((status, body["gdof"]["rows_of_s"].as_u64()), (200, Some(3)));
}

#[test]
fn concurrent_writes_are_serialized() {
    let s = Arc::new(loaded(&models::unit_square()));
    let threads: Vec<_> = (0..8)
        .map(|i| {
            let s = Arc::clone(&s);
            std::thread::spawn(move || {
                let r = s.handle("POST", "/api/manipulate", format!("{{\"3\": {}}}", 1.0 + i as f64 / 10.0).as_bytes());
                assert_eq!(r.status, 200);
                r.json_body()["revision"].as_u64().unwrap()
            })
        })
        .collect();
    let mut revisions: Vec<u64> = threads.into_iter().map(|t| t.join().unwrap()).collect();
    revisions.sort_unstable();
    assert_eq!(revisions, (1..=8).collect::<Vec<_>>());
}

#[test]
fn inconsistent_baseline_is_409() {
    // a bowtie whose left triangle is scaled about the shared apex: directions
    // stay mirror-symmetric and every endpoint matches within tolerance, but
    // the long edges differ in length by more than it
    use polysym_core::Vec3;
    let k = 1.0 + 1.5e-4;
    let pts = [Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0), Vec3::new(1.0, -1.0, 0.0), Vec3::new(-k, k, 0.0), Vec3::new(-k, -k, 0.0)];
    let d = models::from_vertex_cycles(&pts, &[vec![0, 1, 2], vec![0, 4, 3]], None);
    let s = loaded(&d);
    assert_eq!(get(&s, "/api/analysis").json_body()["group"]["name"], "D2h");
    let r = post(&s, "/api/manipulate", r#"{"5": 2.0}"#);
    assert_eq!(r.status, 409, "{}", String::from_utf8_lossy(&r.body));
    assert!(r.json_body()["error"].as_str().unwrap().contains("not symmetric as claimed"));
    assert_eq!(get(&s, "/api/diagram").json_body()["revision"], 0);
}
