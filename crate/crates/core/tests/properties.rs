use std::collections::BTreeMap;

use nalgebra::{Rotation3, Unit};
use polysym_core::closing::{reconstruct_geometry, LengthVector};
use polysym_core::diagram::{parse_diagram, serialize_diagram, vertex_degrees, Diagram, ToleranceConfig};
use polysym_core::fingerprint::{edge_symmetry, length_bin, tagged_midpoints, FingerprintConfig};
use polysym_core::generate::{generate, GenOptions};
use polysym_core::models;
use polysym_core::pipeline::{analyze, manipulate, ManipulationSpec};
use polysym_core::point_group::{apply_operation, operation_matches, Schoenflies, SymmetryOperation, TaggedPointSet};
use polysym_core::Vec3;
use proptest::prelude::*;

const GROUPS: [Schoenflies; 8] = [
    Schoenflies::Cn(2),
    Schoenflies::Cs,
    Schoenflies::Ci,
    Schoenflies::Cnv(3),
    Schoenflies::Dnh(4),
    Schoenflies::Dnd(2),
    Schoenflies::Cnh(3),
    Schoenflies::Td,
];

fn cfg() -> FingerprintConfig {
    FingerprintConfig::default()
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn axis() -> impl Strategy<Value = Vec3> {
    vec3().prop_filter("nonzero axis", |v| v.norm() > 0.1)
}

fn diagram() -> impl Strategy<Value = Diagram> {
    (0..GROUPS.len(), any::<u64>(), 0..3usize)
        .prop_map(|(g, seed, bridges)| generate(&GenOptions { bridges, ..GenOptions::new(GROUPS[g], seed) }).unwrap())
}

fn moved(d: &Diagram, f: impl Fn(Vec3) -> Vec3) -> Diagram {
    d.with_positions(&d.vertices().iter().map(|v| (v.id, f(v.position))).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operations_are_isometries(c in vec3(), a in axis(), angle in 0.0..6.3f64, p in vec3(), q in vec3()) {
        for op in [
            SymmetryOperation::rotation(c, a, angle),
            SymmetryOperation::improper_rotation(c, a, angle),
            SymmetryOperation::reflection(c, a),
            SymmetryOperation::inversion(c),
        ] {
            let (pi, qi) = (apply_operation(&op, p), apply_operation(&op, q));
            prop_assert!(((pi - qi).norm() - (p - q).norm()).abs() < 1e-12);
            prop_assert!((apply_operation(&op, c) - c).norm() < 1e-12);
            prop_assert!((op.determinant().abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_are_invariant_under_rigid_motion(d in diagram(), a in axis(), angle in 0.0..6.3f64, t in vec3()) {
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(a), angle);
        let before = edge_symmetry(&d, &cfg(), &tol()).unwrap();
        let after = edge_symmetry(&moved(&d, |p| r * p + 3.0 * t), &cfg(), &tol()).unwrap();
        prop_assert_eq!(before.group.schoenflies(), after.group.schoenflies());
        prop_assert_eq!(before.orbits, after.orbits);
    }

    #[test]
    fn translation_moves_only_the_center(d in diagram(), t in vec3()) {
        let before = edge_symmetry(&d, &cfg(), &tol()).unwrap();
        let after = edge_symmetry(&d.translated(5.0 * t), &cfg(), &tol()).unwrap();
        prop_assert_eq!(&before.orbits, &after.orbits);
        prop_assert_eq!(before.group.order(), after.group.order());
        prop_assert!((after.group.center() - before.group.center() - 5.0 * t).norm() < 1e-9);
    }

    #[test]
    fn degrees_sum_to_twice_the_edges(d in diagram()) {
        let total: usize = vertex_degrees(&d).values().sum();
        prop_assert_eq!(total, 2 * d.edges().len());
    }

    #[test]
    fn interchange_round_trips(d in diagram()) {
        let text = serialize_diagram(&d);
        let back = parse_diagram(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(serialize_diagram(&back), text);
    }

    #[test]
    fn reconstruction_is_root_independent(d in diagram(), pick in any::<prop::sample::Index>()) {
        let q = LengthVector::from_diagram(&d);
        let root = d.vertices()[pick.index(d.vertices().len())].id;
        let a = reconstruct_geometry(&d, &q, 0, d.position(0), 1e-4).unwrap();
        let b = reconstruct_geometry(&d, &q, root, d.position(root), 1e-4).unwrap();
        for v in d.vertices() {
            prop_assert!((a.position(v.id) - b.position(v.id)).norm() < 1e-9);
        }
    }

    #[test]
    fn length_bins_are_monotone(a in 1e-3..1e3f64, b in 1e-3..1e3f64, r in 1e-3..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(length_bin(lo, r) <= length_bin(hi, r));
    }

    #[test]
    fn tags_are_scale_invariant(d in diagram(), s in 0.01..100.0f64) {
        let a = tagged_midpoints(&d, &cfg()).unwrap();
        let b = tagged_midpoints(&moved(&d, |p| s * p), &cfg()).unwrap();
        let tags = |x: &TaggedPointSet| x.items().iter().map(|&(_, t)| t).collect::<Vec<_>>();
        prop_assert_eq!(tags(&a), tags(&b));
    }

    #[test]
    fn reduction_respects_the_group_order(d in diagram()) {
        let r = analyze(&d, &cfg(), &tol()).unwrap().report;
        prop_assert!(r.m_sym >= 1 && r.m_sym <= r.m_raw);
        prop_assert!(r.reduction >= 1.0 && r.reduction <= r.order as f64);
        prop_assert_eq!(r.rows_of_s, r.e_int - r.orbit_count);
    }

    /// Each step of the sufficiency argument, checked on a manipulated diagram:
    /// the vertex permutation of every operation survives, edge vectors
    /// transform along with it, and the operation maps the new vertices.
    #[test]
    fn equal_orbit_lengths_keep_every_operation(d in diagram(), logs in prop::collection::vec(-1.0..1.0f64, 1..8)) {
        let a = analyze(&d, &cfg(), &tol()).unwrap();
        let spec = a.independent_edges().iter().zip(logs.iter().cycle())
            .fold(ManipulationSpec::identity(), |s, (&e, &l)| s.with(e, 2f64.powf(l)));
        let new = manipulate(&a, &a.baseline_lengths(), &spec, &tol()).unwrap().diagram;

        let verts = |x: &Diagram| TaggedPointSet::uniform(x.vertices().iter().map(|v| v.position)).unwrap();
        let (old_v, new_v) = (verts(&d), verts(&new));
        let ids: Vec<u32> = d.vertices().iter().map(|v| v.id).collect();
        let edge_of: BTreeMap<(u32, u32), u32> = d.edges().iter().map(|e| ((e.tail.min(e.head), e.tail.max(e.head)), e.id)).collect();
        for op in a.symmetry.group.operations() {
            // G(E) <= G(V) on the original diagram
            let perm = operation_matches(&op.recentered(old_v.centroid()), &old_v, 1e-4).unwrap();
            // edge vectors follow the same permutation in the new diagram
            for e in d.edges() {
                let (t, h) = (ids[perm[e.tail as usize]], ids[perm[e.head as usize]]);
                let image = edge_of[&(t.min(h), t.max(h))];
                let sign = if d.edge(image).unwrap().tail == t { 1.0 } else { -1.0 };
                let lhs = op.matrix() * new.edge_vector(e.id);
                prop_assert!((lhs - sign * new.edge_vector(image)).norm() < 1e-7);
            }
            // and the operation, recentered, maps the new vertex set
            let op_new = op.recentered(new_v.centroid());
            let perm_new = operation_matches(&op_new, &new_v, 1e-4).unwrap();
            prop_assert_eq!(perm_new, perm);
        }
    }
}

#[test]
fn square_scales_uniformly() {
    let a = analyze(&models::unit_square(), &cfg(), &tol()).unwrap();
    let q = manipulate(&a, &a.baseline_lengths(), &ManipulationSpec::identity().with(3, 1.7), &tol()).unwrap().lengths;
    assert!(q.values().iter().all(|&v| (v - 1.7).abs() < 1e-12));
}
