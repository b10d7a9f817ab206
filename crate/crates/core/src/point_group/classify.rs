use super::operation::{compose, OperationKind, SymmetryOperation};
use super::schoenflies::Schoenflies;
use super::SymmetryError;
use crate::Vec3;

/// Linear parts closer than this (max entry) are the same operation.
pub(crate) fn linear_tol(angle_eps: f64) -> f64 {
    2.0 * angle_eps
}

fn parallel(a: &Vec3, b: &Vec3, angle_eps: f64) -> bool {
    a.cross(b).norm() <= angle_eps.sin().max(angle_eps)
}

fn perpendicular(a: &Vec3, b: &Vec3, angle_eps: f64) -> bool {
    a.dot(b).abs() <= angle_eps.sin().max(angle_eps)
}

/// Checks that every product of two operations is again in the set.
pub fn check_closure(ops: &[SymmetryOperation], angle_eps: f64) -> Result<(), SymmetryError> {
    let tol = linear_tol(angle_eps);
    if !ops.iter().any(|o| o.kind == OperationKind::Identity) {
        return Err(SymmetryError::NotClosed("identity missing".into()));
    }
    for a in ops {
        for b in ops {
            let p = compose(a, b, f64::INFINITY)?;
            if !ops.iter().any(|o| o.same_linear_part(&p, tol)) {
                return Err(SymmetryError::NotClosed(format!("{a} ∘ {b} = {p} is not a member")));
            }
        }
    }
    Ok(())
}

struct RotationAxis {
    axis: Vec3,
    order: u32,
}

/// Proper rotation axes with the order of the cyclic group about each.
fn rotation_axes(ops: &[SymmetryOperation], angle_eps: f64) -> Vec<RotationAxis> {
    let mut axes: Vec<RotationAxis> = Vec::new();
    for op in ops.iter().filter(|o| o.kind == OperationKind::ProperRotation) {
        match axes.iter_mut().find(|a| parallel(&a.axis, &op.axis, angle_eps)) {
            Some(a) => a.order += 1,
            None => axes.push(RotationAxis { axis: op.axis, order: 2 }),
        }
    }
    axes
}

/// Names a closed operation set with the standard decision tree.
pub fn classify_schoenflies(ops: &[SymmetryOperation], angle_eps: f64) -> Result<Schoenflies, SymmetryError> {
    check_closure(ops, angle_eps)?;
    let axes = rotation_axes(ops, angle_eps);
    let has_inversion = ops.iter().any(|o| o.kind == OperationKind::Inversion);
    let mirrors: Vec<Vec3> = ops.iter().filter(|o| o.kind == OperationKind::Reflection).map(|o| o.axis).collect();

    let name = if axes.iter().filter(|a| a.order >= 3).count() >= 2 {
        match axes.iter().map(|a| a.order).max().unwrap() {
            5 => if has_inversion { Schoenflies::Ih } else { Schoenflies::I },
            4 => if has_inversion { Schoenflies::Oh } else { Schoenflies::O },
            3 if has_inversion => Schoenflies::Th,
            3 if !mirrors.is_empty() => Schoenflies::Td,
            3 => Schoenflies::T,
            n => return Err(SymmetryError::Unclassifiable(format!("several axes with maximal order {n}"))),
        }
    } else if axes.is_empty() {
        match (mirrors.len(), has_inversion, ops.len()) {
            (0, false, 1) => Schoenflies::C1,
            (1, false, 2) => Schoenflies::Cs,
            (0, true, 2) => Schoenflies::Ci,
            _ => return Err(SymmetryError::Unclassifiable("improper operations without rotations".into())),
        }
    } else {
        let perpendicular_count =
            |p: &Vec3| axes.iter().filter(|a| perpendicular(&a.axis, p, angle_eps)).count();
        let mirror_count = |p: &Vec3| {
            mirrors.iter().filter(|m| parallel(m, p, angle_eps) || perpendicular(m, p, angle_eps)).count()
        };
        // highest order first; among equals (D2 family) prefer more perpendicular
        // two-fold axes, then more mirrors containing or normal to the axis
        let principal = axes
            .iter()
            .max_by(|a, b| {
                a.order
                    .cmp(&b.order)
                    .then(perpendicular_count(&a.axis).cmp(&perpendicular_count(&b.axis)))
                    .then(mirror_count(&a.axis).cmp(&mirror_count(&b.axis)))
            })
            .unwrap();
        let n = principal.order;
        let p = principal.axis;
        let sigma_h = mirrors.iter().any(|m| parallel(m, &p, angle_eps));
        let sigma_v = mirrors.iter().filter(|m| perpendicular(m, &p, angle_eps)).count();
        if perpendicular_count(&p) == n as usize {
            if sigma_h {
                Schoenflies::Dnh(n)
            } else if sigma_v == n as usize {
                Schoenflies::Dnd(n)
            } else {
                Schoenflies::Dn(n)
            }
        } else if sigma_h {
            Schoenflies::Cnh(n)
        } else if sigma_v == n as usize {
            Schoenflies::Cnv(n)
        } else if ops
            .iter()
            .any(|o| matches!(o.kind, OperationKind::ImproperRotation | OperationKind::Inversion) && (o.kind == OperationKind::Inversion || parallel(&o.axis, &p, angle_eps)))
        {
            Schoenflies::S2n(n)
        } else {
            Schoenflies::Cn(n)
        }
    };

    if name.order() != ops.len() {
        return Err(SymmetryError::Unclassifiable(format!(
            "classified as {name} (order {}) but the set has {} operations",
            name.order(),
            ops.len()
        )));
    }
    Ok(name)
}
