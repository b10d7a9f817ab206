//! Wavefront OBJ export: vertices plus edges as line elements, grouped by orbit.

use std::fmt::Write;

use crate::diagram::Diagram;
use crate::fingerprint::EdgeSymmetry;

/// OBJ text with one `g orbit_<k>` group per edge orbit. External edges,
/// which carry no orbit, follow in a trailing `g external` group.
pub fn to_obj(d: &Diagram, symmetry: &EdgeSymmetry) -> String {
    let mut out = String::new();
    let mut index = std::collections::HashMap::new();
    for (i, v) in d.vertices().iter().enumerate() {
        index.insert(v.id, i + 1);
        let p = v.position;
        writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
    }
    let line = |out: &mut String, e: u32| {
        let edge = d.edge(e).unwrap();
        writeln!(out, "l {} {}", index[&edge.tail], index[&edge.head]).unwrap();
    };
    for (k, orbit) in symmetry.orbits.iter().enumerate() {
        writeln!(out, "g orbit_{k}").unwrap();
        for &e in orbit {
            line(&mut out, e);
        }
    }
    let external: Vec<u32> =
        d.edges().iter().filter(|e| e.kind == crate::diagram::EdgeKind::External).map(|e| e.id).collect();
    if !external.is_empty() {
        out.push_str("g external\n");
        for e in external {
            line(&mut out, e);
        }
    }
    out
}
