//! Point-group detection over a tagged point set.
//!
//! An orthogonal map fixing the centroid is determined by the images of two
//! non-collinear reference points plus the sign of its determinant. The
//! references are drawn from the smallest shells (points sharing tag and
//! centroid distance), so every candidate pairs a shell-mate `a'` of `a` with
//! a shell-mate `b'` of `b` at the right distance from `a'`. Each candidate is
//! then checked against the whole set.

use super::classify::{classify_schoenflies, linear_tol};
use super::matching::{PointIndex, TaggedPointSet};
use super::operation::{OperationKind, SymmetryOperation};
use super::{PointGroup, SymmetryError};
use crate::diagram::ToleranceConfig;
use crate::{Mat3, Vec3};

/// Upper bound used when computing element orders for the rotation cap.
const ORDER_SEARCH_LIMIT: u32 = 240;

fn frame(a: Vec3, b: Vec3) -> Mat3 {
    let x = a.normalize();
    let z = a.cross(&b).normalize();
    let y = z.cross(&x);
    Mat3::from_columns(&[x, y, z])
}

pub fn detect_point_group(s: &TaggedPointSet, tol: &ToleranceConfig) -> Result<PointGroup, SymmetryError> {
    tol.validate().map_err(|e| SymmetryError::Tolerance(e.to_string()))?;
    let center = s.centroid();
    let eps = s.abs_tolerance(tol.geom_eps);
    let rel: Vec<Vec3> = s.items().iter().map(|(p, _)| p - center).collect();
    let radius: Vec<f64> = rel.iter().map(|r| r.norm()).collect();
    let n = s.len();

    // degenerate: one distinct point, or everything on a line through the centroid
    let far = (0..n).max_by(|&i, &j| radius[i].total_cmp(&radius[j])).unwrap();
    if radius[far] <= eps {
        return Err(SymmetryError::Degenerate("all points coincide".into()));
    }
    let dir = rel[far] / radius[far];
    if rel.iter().all(|r| r.cross(&dir).norm() <= eps) {
        return Err(SymmetryError::Degenerate("all points are collinear".into()));
    }

    let shell_mates = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| s.tag(j) == s.tag(i) && (radius[j] - radius[i]).abs() <= 2.0 * eps)
            .collect()
    };
    let off_center: Vec<usize> = (0..n).filter(|&i| radius[i] > eps).collect();
    let shell_size: Vec<usize> = (0..n).map(|i| shell_mates(i).len()).collect();

    let a = *off_center
        .iter()
        .min_by(|&&i, &&j| shell_size[i].cmp(&shell_size[j]).then(radius[j].total_cmp(&radius[i])).then(i.cmp(&j)))
        .unwrap();
    let a_hat = rel[a] / radius[a];
    let sine = |j: usize| a_hat.cross(&(rel[j] / radius[j])).norm();
    let best_sine = off_center.iter().map(|&j| sine(j)).fold(0.0, f64::max);
    let b = *off_center
        .iter()
        .filter(|&&j| sine(j) >= 0.5 * best_sine)
        .min_by(|&&i, &&j| shell_size[i].cmp(&shell_size[j]).then(sine(j).total_cmp(&sine(i))).then(i.cmp(&j)))
        .unwrap();

    let reference = frame(rel[a], rel[b]);
    let ab = (rel[b] - rel[a]).norm();
    let flip = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
    let index = PointIndex::new(s, eps);
    let same_tol = linear_tol(tol.angle_eps);

    let mut ops: Vec<SymmetryOperation> = Vec::new();
    for a_img in shell_mates(a) {
        for b_img in shell_mates(b) {
            if a_img == b_img || ((rel[b_img] - rel[a_img]).norm() - ab).abs() > 2.0 * eps {
                continue;
            }
            if rel[a_img].cross(&rel[b_img]).norm() <= f64::EPSILON * radius[a] * radius[b] {
                continue;
            }
            let image = frame(rel[a_img], rel[b_img]);
            for linear in [image * reference.transpose(), image * flip * reference.transpose()] {
                let op = SymmetryOperation::from_matrix(center, linear);
                if ops.iter().any(|o| o.same_linear_part(&op, same_tol)) {
                    continue;
                }
                if index.match_operation(&op, eps).is_some() {
                    ops.push(op);
                }
            }
        }
    }
    if !ops.iter().any(|o| o.kind == OperationKind::Identity) {
        ops.push(SymmetryOperation::identity(center));
    }

    let cap = tol.max_rotation_order;
    for op in ops.iter().filter(|o| o.kind == OperationKind::ProperRotation) {
        match op.element_order(ORDER_SEARCH_LIMIT, same_tol) {
            Some(k) if k <= cap => {}
            k => {
                return Err(SymmetryError::RotationOrderExceedsCap { order: k.unwrap_or(u32::MAX), cap });
            }
        }
    }

    ops.sort_by(SymmetryOperation::canonical_cmp);
    let name = classify_schoenflies(&ops, tol.angle_eps)?;
    Ok(PointGroup::new(ops, name))
}
