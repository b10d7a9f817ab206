use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::SymmetryError;
use crate::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Identity,
    Reflection,
    Inversion,
    ProperRotation,
    ImproperRotation,
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Reflection => "reflection",
            Self::Inversion => "inversion",
            Self::ProperRotation => "proper_rotation",
            Self::ImproperRotation => "improper_rotation",
        })
    }
}

/// An isometry fixing `center`.
///
/// `axis` is the rotation axis for (im)proper rotations and the plane normal
/// for reflections; it is canonicalized so its first significant component
/// is positive. `angle` lies in `(0, 2π)` for rotations and is 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryOperation {
    pub kind: OperationKind,
    pub center: Vec3,
    pub axis: Vec3,
    pub angle: f64,
    matrix: Mat3,
}

const AXIS_SIGN_EPS: f64 = 1e-9;
/// Angles closer than this to 0 or π are snapped when deriving the kind;
/// noisy frames put the identity and inversion a few 1e-6 off.
const KIND_EPS: f64 = 1e-3;

fn canonical_axis(axis: Vec3, angle: f64) -> (Vec3, f64) {
    let first = axis.iter().copied().find(|c| c.abs() > AXIS_SIGN_EPS).unwrap_or(1.0);
    if first < 0.0 {
        (-axis, if angle == 0.0 { 0.0 } else { TAU - angle })
    } else {
        (axis, angle)
    }
}

impl SymmetryOperation {
    pub fn identity(center: Vec3) -> Self {
        Self { kind: OperationKind::Identity, center, axis: Vec3::z(), angle: 0.0, matrix: Mat3::identity() }
    }

    pub fn inversion(center: Vec3) -> Self {
        Self { kind: OperationKind::Inversion, center, axis: Vec3::z(), angle: 0.0, matrix: -Mat3::identity() }
    }

    pub fn reflection(center: Vec3, normal: Vec3) -> Self {
        let n = normal.normalize();
        Self::from_matrix(center, Mat3::identity() - 2.0 * n * n.transpose())
    }

    /// Proper rotation by `angle` (right-handed) about `axis`.
    pub fn rotation(center: Vec3, axis: Vec3, angle: f64) -> Self {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self::from_matrix(center, *r.matrix())
    }

    /// Rotation by `angle` about `axis` followed by reflection through the
    /// plane normal to `axis`.
    pub fn improper_rotation(center: Vec3, axis: Vec3, angle: f64) -> Self {
        let n = axis.normalize();
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self::from_matrix(center, (Mat3::identity() - 2.0 * n * n.transpose()) * r.matrix())
    }

    /// Derives kind, axis and angle from an orthogonal linear part.
    pub fn from_matrix(center: Vec3, matrix: Mat3) -> Self {
        let proper = matrix.determinant() > 0.0;
        let r = if proper { matrix } else { -matrix };
        let w = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
        let phi = (0.5 * w.norm()).atan2((r.trace() - 1.0) / 2.0);

        let axis = if phi < KIND_EPS {
            Vec3::z()
        } else if phi > PI - KIND_EPS {
            // R + I = 2 a a^T
            let s = r + Mat3::identity();
            let j = (0..3).max_by(|&i, &k| s[(i, i)].total_cmp(&s[(k, k)])).unwrap();
            s.column(j).normalize()
        } else {
            w.normalize()
        };

        let (kind, axis, angle) = match (proper, phi < KIND_EPS, phi > PI - KIND_EPS) {
            (true, true, _) => (OperationKind::Identity, Vec3::z(), 0.0),
            (true, false, _) => {
                let (a, t) = canonical_axis(axis, phi);
                (OperationKind::ProperRotation, a, t)
            }
            (false, true, _) => (OperationKind::Inversion, Vec3::z(), 0.0),
            (false, false, true) => (OperationKind::Reflection, canonical_axis(axis, 0.0).0, 0.0),
            (false, false, false) => {
                // -R_a(phi) = sigma_a R_a(phi + pi)
                let (a, t) = canonical_axis(axis, phi + PI);
                (OperationKind::ImproperRotation, a, t)
            }
        };
        Self { kind, center, axis, angle, matrix }
    }

    /// The orthogonal linear part acting about `center`.
    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Smallest `k <= limit` with `Q^k = I` within `tol` (max-entry), if any.
    pub fn element_order(&self, limit: u32, tol: f64) -> Option<u32> {
        let mut acc = self.matrix;
        for k in 1..=limit {
            if (acc - Mat3::identity()).abs().max() <= tol {
                return Some(k);
            }
            acc *= self.matrix;
        }
        None
    }

    /// Same linear part within `tol` (max-entry difference).
    pub fn same_linear_part(&self, other: &Self, tol: f64) -> bool {
        (self.matrix - other.matrix).abs().max() <= tol
    }

    /// Same operation re-centered at `center`.
    pub fn recentered(&self, center: Vec3) -> Self {
        Self { center, ..*self }
    }

    /// Canonical ordering: kind, then axis lexicographically, then angle.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then_with(|| {
                self.axis
                    .iter()
                    .zip(other.axis.iter())
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| self.angle.total_cmp(&other.angle))
    }
}

impl fmt::Display for SymmetryOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OperationKind::Identity | OperationKind::Inversion => write!(f, "{}", self.kind),
            OperationKind::Reflection => write!(
                f,
                "reflection n=({:.4}, {:.4}, {:.4})",
                self.axis.x, self.axis.y, self.axis.z
            ),
            _ => write!(
                f,
                "{} {:.2}° about ({:.4}, {:.4}, {:.4})",
                self.kind,
                self.angle.to_degrees(),
                self.axis.x,
                self.axis.y,
                self.axis.z
            ),
        }
    }
}

/// Image of `p`: `center + Q (p - center)`.
pub fn apply_operation(op: &SymmetryOperation, p: Vec3) -> Vec3 {
    op.center + op.matrix * (p - op.center)
}

/// `a ∘ b`: apply `b`, then `a`. Centers must agree within `center_eps`.
pub fn compose(a: &SymmetryOperation, b: &SymmetryOperation, center_eps: f64) -> Result<SymmetryOperation, SymmetryError> {
    let gap = (a.center - b.center).norm();
    if gap > center_eps {
        return Err(SymmetryError::CenterMismatch { distance: gap });
    }
    Ok(SymmetryOperation::from_matrix(a.center, a.matrix * b.matrix))
}
