//! Small reference diagrams used by tests, the CLI and the service.

use std::collections::HashMap;

use crate::diagram::{Cell, Diagram, Edge, EdgeKind, Face, FaceEntry, Vertex};
use crate::Vec3;

/// Builds a diagram from vertex positions and faces given as vertex cycles.
///
/// Edges are created on first traversal, oriented along that traversal and
/// numbered in discovery order; later traversals reuse the edge with the
/// matching sign. Vertex ids are the indices into `points`.
pub fn from_vertex_cycles(points: &[Vec3], cycles: &[Vec<usize>], cells: Option<Vec<Vec<usize>>>) -> Diagram {
    let vertices = points
        .iter()
        .enumerate()
        .map(|(i, p)| Vertex { id: i as u32, position: *p })
        .collect();
    let mut edges: Vec<Edge> = Vec::new();
    let mut lookup: HashMap<(usize, usize), u32> = HashMap::new();
    let mut faces = Vec::with_capacity(cycles.len());
    for (fid, cycle) in cycles.iter().enumerate() {
        let mut entries = Vec::with_capacity(cycle.len());
        for j in 0..cycle.len() {
            let (a, b) = (cycle[j], cycle[(j + 1) % cycle.len()]);
            let entry = if let Some(&id) = lookup.get(&(a, b)) {
                FaceEntry { edge: id, sign: 1 }
            } else if let Some(&id) = lookup.get(&(b, a)) {
                FaceEntry { edge: id, sign: -1 }
            } else {
                let id = edges.len() as u32;
                edges.push(Edge { id, tail: a as u32, head: b as u32, kind: EdgeKind::Internal });
                lookup.insert((a, b), id);
                FaceEntry { edge: id, sign: 1 }
            };
            entries.push(entry);
        }
        faces.push(Face { id: fid as u32, entries });
    }
    let cells = cells.map(|cs| {
        cs.into_iter()
            .enumerate()
            .map(|(i, fs)| Cell { id: i as u32, faces: fs.into_iter().map(|f| f as u32).collect() })
            .collect()
    });
    Diagram::new(vertices, edges, faces, cells).expect("reference model is structurally valid")
}

pub fn unit_square() -> Diagram {
    rectangle(1.0, 1.0)
}

/// Axis-aligned `width x height` rectangle with a corner at the origin.
/// Edge 0 runs along +x, edges are numbered counter-clockwise.
pub fn rectangle(width: f64, height: f64) -> Diagram {
    let pts = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(width, 0.0, 0.0),
        Vec3::new(width, height, 0.0),
        Vec3::new(0.0, height, 0.0),
    ];
    from_vertex_cycles(&pts, &[vec![0, 1, 2, 3]], None)
}

pub fn two_disjoint_squares() -> Diagram {
    let mut pts = Vec::new();
    for dx in [0.0, 3.0] {
        pts.extend([
            Vec3::new(dx, 0.0, 0.0),
            Vec3::new(dx + 1.0, 0.0, 0.0),
            Vec3::new(dx + 1.0, 1.0, 0.0),
            Vec3::new(dx, 1.0, 0.0),
        ]);
    }
    from_vertex_cycles(&pts, &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]], None)
}

/// One internal edge from the origin to (2,0,0), closed into a face by two
/// external edges through (1,1,0).
pub fn single_edge_with_loads() -> Diagram {
    let mut d = from_vertex_cycles(
        &[Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)],
        &[vec![0, 1, 2]],
        None,
    );
    let mut edges = d.edges().to_vec();
    for e in edges.iter_mut().skip(1) {
        e.kind = EdgeKind::External;
    }
    d = Diagram::new(d.vertices().to_vec(), edges, d.faces().to_vec(), None).unwrap();
    d
}

pub fn equilateral_triangle() -> Diagram {
    let h = 3f64.sqrt() / 2.0;
    from_vertex_cycles(
        &[Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.5, h, 0.0)],
        &[vec![0, 1, 2]],
        None,
    )
}

/// Axis-aligned cube of the given side, centered at the origin, as a single
/// cell with six quadrilateral faces.
pub fn cube(side: f64) -> Diagram {
    cuboid(side, side, side)
}

pub fn cuboid(a: f64, b: f64, c: f64) -> Diagram {
    let (x, y, z) = (a / 2.0, b / 2.0, c / 2.0);
    let pts = [
        Vec3::new(-x, -y, -z),
        Vec3::new(x, -y, -z),
        Vec3::new(x, y, -z),
        Vec3::new(-x, y, -z),
        Vec3::new(-x, -y, z),
        Vec3::new(x, -y, z),
        Vec3::new(x, y, z),
        Vec3::new(-x, y, z),
    ];
    let faces = vec![
        vec![0, 3, 2, 1],
        vec![4, 5, 6, 7],
        vec![0, 1, 5, 4],
        vec![1, 2, 6, 5],
        vec![2, 3, 7, 6],
        vec![3, 0, 4, 7],
    ];
    from_vertex_cycles(&pts, &faces, Some(vec![(0..6).collect()]))
}

fn tetrahedron_faces(a: usize, b: usize, c: usize, d: usize) -> Vec<Vec<usize>> {
    vec![vec![a, b, c], vec![a, c, d], vec![a, d, b], vec![b, d, c]]
}

/// Two congruent generic tetrahedra sharing an apex at the origin, each the
/// point reflection of the other. Vertex 0 is the shared apex.
pub fn double_tetrahedron() -> Diagram {
    let base = [Vec3::new(1.0, 0.2, 0.3), Vec3::new(0.35, 1.1, -0.15), Vec3::new(0.45, 0.25, 1.3)];
    let mut pts = vec![Vec3::zeros()];
    pts.extend(base);
    pts.extend(base.iter().map(|p| -p));
    let mut faces = tetrahedron_faces(0, 1, 2, 3);
    faces.extend(tetrahedron_faces(0, 4, 5, 6));
    from_vertex_cycles(&pts, &faces, Some(vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]))
}

/// All triangles of the graph whose edges have the minimum pairwise distance.
/// Faces of the tetrahedron, octahedron and icosahedron are exactly these.
fn unit_distance_triangles(pts: &[Vec3]) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min = min.min((pts[i] - pts[j]).norm());
        }
    }
    let adj = |i: usize, j: usize| ((pts[i] - pts[j]).norm() - min).abs() < 1e-9 * min;
    let mut tris = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !adj(i, j) {
                continue;
            }
            for k in j + 1..n {
                if adj(i, k) && adj(j, k) {
                    tris.push(vec![i, j, k]);
                }
            }
        }
    }
    tris
}

pub fn regular_tetrahedron() -> Diagram {
    let pts = [
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    from_vertex_cycles(&pts, &unit_distance_triangles(&pts), None)
}

pub fn octahedron() -> Diagram {
    let mut pts = Vec::new();
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = Vec3::zeros();
            p[axis] = s;
            pts.push(p);
        }
    }
    from_vertex_cycles(&pts, &unit_distance_triangles(&pts), None)
}

pub fn icosahedron() -> Diagram {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts = Vec::new();
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            pts.push(Vec3::new(0.0, s1, s2 * phi));
            pts.push(Vec3::new(s1, s2 * phi, 0.0));
            pts.push(Vec3::new(s2 * phi, 0.0, s1));
        }
    }
    from_vertex_cycles(&pts, &unit_distance_triangles(&pts), None)
}

/// Right prism over a regular `n`-gon (circumradius 1) with height `height`.
pub fn prism(n: usize, height: f64) -> Diagram {
    let mut pts = Vec::with_capacity(2 * n);
    for z in [-height / 2.0, height / 2.0] {
        for k in 0..n {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            pts.push(Vec3::new(a.cos(), a.sin(), z));
        }
    }
    let mut faces = vec![(0..n).rev().collect::<Vec<_>>(), (n..2 * n).collect()];
    for k in 0..n {
        let k1 = (k + 1) % n;
        faces.push(vec![k, k1, n + k1, n + k]);
    }
    let cell = vec![(0..faces.len()).collect()];
    from_vertex_cycles(&pts, &faces, Some(cell))
}
