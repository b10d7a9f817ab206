//! Synthetic symmetric diagrams: random tetrahedral cells with a shared apex,
//! replicated under the matrices of a named point group.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diagram::Diagram;
use crate::models::from_vertex_cycles;
use crate::point_group::Schoenflies;
use crate::{Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("at least one fundamental domain is required")]
    NoDomains,
    #[error("could not place well-separated points after {0} attempts")]
    Crowded(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub group: Schoenflies,
    pub seed: u64,
    /// Tetrahedra per fundamental domain; the diagram has `6 * domains * |G|`
    /// edges before bridging.
    pub domains: usize,
    /// Triangles `(O, h b, h g b)` joining cells across the group, one orbit each.
    pub bridges: usize,
}

impl GenOptions {
    pub fn new(group: Schoenflies, seed: u64) -> Self {
        Self { group, seed, domains: 1, bridges: 0 }
    }
}

const ATTEMPTS: usize = 64;
/// Minimum separation of vertices and edge midpoints, relative to the unit radius.
const MIN_SEPARATION: f64 = 5e-3;

fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if (0.3..=1.0).contains(&p.norm()) {
            return p;
        }
    }
}

fn well_separated(points: &[Vec3]) -> bool {
    let cell = MIN_SEPARATION;
    let mut grid: std::collections::HashMap<(i64, i64, i64), Vec<Vec3>> = Default::default();
    let key = |p: &Vec3| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64);
    for p in points {
        let (x, y, z) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(x + dx, y + dy, z + dz)) {
                        if bucket.iter().any(|q| (p - q).norm() < MIN_SEPARATION) {
                            return false;
                        }
                    }
                }
            }
        }
        grid.entry((x, y, z)).or_default().push(*p);
    }
    true
}

fn product_index(mats: &[Mat3], m: &Mat3) -> usize {
    (0..mats.len())
        .min_by(|&a, &b| (mats[a] - m).abs().max().total_cmp(&(mats[b] - m).abs().max()))
        .unwrap()
}

/// A connected diagram whose edge point group is `opts.group`, reproducible
/// from `opts.seed`. Bridges whose edges would crowd existing midpoints (an
/// inversion bridge puts its midpoint on the apex, for instance) are skipped,
/// so up to `opts.bridges` orbits of triangles are added.
pub fn generate(opts: &GenOptions) -> Result<Diagram, GenerateError> {
    if opts.domains == 0 {
        return Err(GenerateError::NoDomains);
    }
    let mats = opts.group.matrices();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..ATTEMPTS {
        let base: Vec<[Vec3; 3]> =
            (0..opts.domains).map(|_| [random_point(&mut rng), random_point(&mut rng), random_point(&mut rng)]).collect();
        let candidates: Vec<(usize, usize, usize)> = (0..opts.bridges)
            .map(|_| {
                let g = if mats.len() > 1 { rng.gen_range(1..mats.len()) } else { 0 };
                (rng.gen_range(0..opts.domains), rng.gen_range(0..3), g)
            })
            .collect();
        let Some(mut d) = assemble(&mats, &base, &[]) else { continue };
        let mut bridges = Vec::new();
        for c in candidates {
            bridges.push(c);
            match assemble(&mats, &base, &bridges) {
                Some(next) => d = next,
                None => {
                    bridges.pop();
                }
            }
        }
        return Ok(d);
    }
    Err(GenerateError::Crowded(ATTEMPTS))
}

fn assemble(mats: &[Mat3], base: &[[Vec3; 3]], bridges: &[(usize, usize, usize)]) -> Option<Diagram> {
    let per_element = base.len() * 3;
    let vid = |g: usize, j: usize, i: usize| 1 + g * per_element + j * 3 + i;
    let mut points = vec![Vec3::zeros()];
    for m in mats {
        for tet in base {
            points.extend(tet.iter().map(|p| m * p));
        }
    }
    if !well_separated(&points) {
        return None;
    }

    let mut cycles: Vec<Vec<usize>> = Vec::new();
    let mut cells = Vec::new();
    for g in 0..mats.len() {
        for j in 0..base.len() {
            let [a, b, c] = [vid(g, j, 0), vid(g, j, 1), vid(g, j, 2)];
            let first = cycles.len();
            cycles.extend([vec![0, a, b], vec![0, b, c], vec![0, c, a], vec![a, c, b]]);
            cells.push((first..first + 4).collect());
        }
    }
    let mut seen = BTreeSet::new();
    for &(j, i, g) in bridges {
        for h in 0..mats.len() {
            let hg = product_index(mats, &(mats[h] * mats[g]));
            let (p, q) = (vid(h, j, i), vid(hg, j, i));
            if p != q && seen.insert((p.min(q), p.max(q))) {
                cycles.push(vec![0, p, q]);
            }
        }
    }

    let d = from_vertex_cycles(&points, &cycles, Some(cells));
    let mids: Vec<Vec3> = d.edges().iter().map(|e| (d.position(e.tail) + d.position(e.head)) * 0.5).collect();
    well_separated(&mids).then_some(d)
}
