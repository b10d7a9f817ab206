use std::collections::HashMap;

use super::operation::{apply_operation, OperationKind, SymmetryOperation};
use super::SymmetryError;
use crate::diagram::bbox_diagonal;
use crate::Vec3;

pub const MAX_TAG: u32 = 113;

/// Points carrying integer tags; only equally tagged points may be exchanged
/// by a symmetry operation.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPointSet {
    items: Vec<(Vec3, u32)>,
}

impl TaggedPointSet {
    pub fn new(items: Vec<(Vec3, u32)>) -> Result<Self, SymmetryError> {
        if items.is_empty() {
            return Err(SymmetryError::EmptySet);
        }
        if let Some(&(_, tag)) = items.iter().find(|(_, t)| !(1..=MAX_TAG).contains(t)) {
            return Err(SymmetryError::TagOutOfRange(tag));
        }
        if items.iter().any(|(p, _)| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
            return Err(SymmetryError::NonFinite);
        }
        Ok(Self { items })
    }

    /// All points with tag 1.
    pub fn uniform(points: impl IntoIterator<Item = Vec3>) -> Result<Self, SymmetryError> {
        Self::new(points.into_iter().map(|p| (p, 1)).collect())
    }

    pub fn items(&self) -> &[(Vec3, u32)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.items[i].0
    }

    pub fn tag(&self, i: usize) -> u32 {
        self.items[i].1
    }

    pub fn centroid(&self) -> Vec3 {
        self.items.iter().map(|(p, _)| p).sum::<Vec3>() / self.items.len() as f64
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(self.items.iter().map(|(p, _)| *p))
    }

    /// Absolute matching tolerance: `geom_eps` times the bounding-box diagonal.
    pub fn abs_tolerance(&self, geom_eps: f64) -> f64 {
        geom_eps * self.bbox_diagonal()
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self { items: self.items.iter().map(|(p, t)| (p + offset, *t)).collect() }
    }
}

/// Uniform grid over the points for radius queries at the matching tolerance.
pub(crate) struct PointIndex<'a> {
    set: &'a TaggedPointSet,
    cell: f64,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl<'a> PointIndex<'a> {
    pub(crate) fn new(set: &'a TaggedPointSet, eps: f64) -> Self {
        // cells wider than the query radius: most queries touch one or two
        let cell = (4.0 * eps).max(set.bbox_diagonal() * 1e-12).max(f64::MIN_POSITIVE);
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, (p, _)) in set.items.iter().enumerate() {
            buckets.entry(Self::key_of(*p, cell)).or_default().push(i);
        }
        Self { set, cell, buckets }
    }

    fn key_of(p: Vec3, cell: f64) -> (i64, i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
    }

    /// The single same-tag point within `eps` of `q`; `None` when there are
    /// zero or several.
    pub(crate) fn unique_match(&self, q: Vec3, tag: u32, eps: f64) -> Option<usize> {
        let lo = Self::key_of(q - Vec3::repeat(eps), self.cell);
        let hi = Self::key_of(q + Vec3::repeat(eps), self.cell);
        let mut found = None;
        for x in lo.0..=hi.0 {
            for y in lo.1..=hi.1 {
                for z in lo.2..=hi.2 {
                    let Some(bucket) = self.buckets.get(&(x, y, z)) else { continue };
                    for &j in bucket {
                        let (p, t) = self.set.items[j];
                        if t == tag && (p - q).norm() <= eps {
                            if found.is_some() {
                                return None;
                            }
                            found = Some(j);
                        }
                    }
                }
            }
        }
        found
    }

    /// Permutation induced by `op`, or `None` if some image has no unique
    /// same-tag partner or two images land on the same point.
    pub(crate) fn match_operation(&self, op: &SymmetryOperation, eps: f64) -> Option<Vec<usize>> {
        let n = self.set.len();
        if op.kind == OperationKind::Identity {
            return Some((0..n).collect());
        }
        let mut perm = Vec::with_capacity(n);
        let mut used = vec![false; n];
        for (p, tag) in &self.set.items {
            let j = self.unique_match(apply_operation(op, *p), *tag, eps)?;
            if std::mem::replace(&mut used[j], true) {
                return None;
            }
            perm.push(j);
        }
        Some(perm)
    }
}

/// Tagged bijection induced by `op` on `s`, with `eps_abs = geom_eps * diag(s)`.
pub fn operation_matches(op: &SymmetryOperation, s: &TaggedPointSet, geom_eps: f64) -> Option<Vec<usize>> {
    let eps = s.abs_tolerance(geom_eps);
    PointIndex::new(s, eps).match_operation(op, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn square_midpoints() -> Vec<Vec3> {
        vec![
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(1.0, 0.5, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.0, 0.5, 0.0),
        ]
    }

    #[test]
    fn c4_cycles_square_midpoints() {
        let s = TaggedPointSet::uniform(square_midpoints()).unwrap();
        let c4 = SymmetryOperation::rotation(s.centroid(), Vec3::z(), FRAC_PI_2);
        assert_eq!(operation_matches(&c4, &s, 1e-4), Some(vec![1, 2, 3, 0]));
    }

    #[test]
    fn alternating_tags_block_c4() {
        let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let s = TaggedPointSet::new(
            corners.iter().enumerate().map(|(i, &(x, y))| (Vec3::new(x, y, 0.0), 1 + (i as u32 % 2))).collect(),
        )
        .unwrap();
        let c4 = SymmetryOperation::rotation(s.centroid(), Vec3::z(), FRAC_PI_2);
        assert_eq!(operation_matches(&c4, &s, 1e-4), None);
        let c2 = SymmetryOperation::rotation(s.centroid(), Vec3::z(), std::f64::consts::PI);
        assert_eq!(operation_matches(&c2, &s, 1e-4), Some(vec![2, 3, 0, 1]));
    }

    #[test]
    fn identity_always_matches() {
        let s = TaggedPointSet::new(vec![(Vec3::zeros(), 3), (Vec3::x(), 5), (Vec3::new(0.2, 7.0, 1.0), 3)]).unwrap();
        let e = SymmetryOperation::identity(s.centroid());
        assert_eq!(operation_matches(&e, &s, 1e-4), Some(vec![0, 1, 2]));
    }

    #[test]
    fn ambiguous_images_fail() {
        // two coincident same-tag points make every non-identity image ambiguous
        let s = TaggedPointSet::uniform([Vec3::x(), Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y()]).unwrap();
        let c2 = SymmetryOperation::rotation(Vec3::zeros(), Vec3::z(), std::f64::consts::PI);
        assert_eq!(operation_matches(&c2, &s, 1e-4), None);
    }

    #[test]
    fn tag_domain_enforced() {
        assert_eq!(TaggedPointSet::new(vec![(Vec3::zeros(), 0)]), Err(SymmetryError::TagOutOfRange(0)));
        assert_eq!(TaggedPointSet::new(vec![(Vec3::zeros(), 114)]), Err(SymmetryError::TagOutOfRange(114)));
        assert_eq!(TaggedPointSet::new(vec![]), Err(SymmetryError::EmptySet));
    }
}
