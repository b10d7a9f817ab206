use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::SymmetryError;
use crate::{Mat3, Vec3};

/// Schoenflies symbol of a three-dimensional point group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schoenflies {
    C1,
    Cs,
    Ci,
    Cn(u32),
    S2n(u32),
    Cnh(u32),
    Cnv(u32),
    Dn(u32),
    Dnd(u32),
    Dnh(u32),
    T,
    Td,
    Th,
    O,
    Oh,
    I,
    Ih,
}

impl Schoenflies {
    /// Number of operations in the group.
    pub fn order(&self) -> usize {
        match *self {
            Self::C1 => 1,
            Self::Cs | Self::Ci => 2,
            Self::Cn(n) => n as usize,
            Self::S2n(n) => 2 * n as usize,
            Self::Cnh(n) | Self::Cnv(n) | Self::Dn(n) => 2 * n as usize,
            Self::Dnd(n) | Self::Dnh(n) => 4 * n as usize,
            Self::T => 12,
            Self::Td | Self::Th | Self::O => 24,
            Self::Oh => 48,
            Self::I => 60,
            Self::Ih => 120,
        }
    }

    /// Orthogonal matrices of the group in its standard orientation: principal
    /// axis along z, the first two-fold axis or vertical mirror containing x,
    /// cubic groups aligned with the coordinate axes, icosahedral groups with
    /// five-fold axes through (0, ±1, ±φ).
    pub fn matrices(&self) -> Vec<Mat3> {
        let rot = |axis: Vec3, angle: f64| *Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix();
        let mirror = |n: Vec3| {
            let n = n.normalize();
            Mat3::identity() - 2.0 * n * n.transpose()
        };
        let cn = |n: u32| rot(Vec3::z(), TAU / n as f64);
        let c2x = rot(Vec3::x(), PI);
        let sigma_h = mirror(Vec3::z());
        let sigma_v = mirror(Vec3::y());
        let inv = -Mat3::identity();
        let c3_111 = rot(Vec3::new(1.0, 1.0, 1.0), TAU / 3.0);
        let gens: Vec<Mat3> = match *self {
            Self::C1 => vec![],
            Self::Cs => vec![sigma_h],
            Self::Ci => vec![inv],
            Self::Cn(n) => vec![cn(n)],
            Self::S2n(n) => vec![sigma_h * rot(Vec3::z(), PI / n as f64)],
            Self::Cnh(n) => vec![cn(n), sigma_h],
            Self::Cnv(n) => vec![cn(n), sigma_v],
            Self::Dn(n) => vec![cn(n), c2x],
            Self::Dnh(n) => vec![cn(n), c2x, sigma_h],
            Self::Dnd(n) => {
                let a = PI / (2.0 * n as f64) + PI / 2.0;
                vec![cn(n), c2x, mirror(Vec3::new(a.cos(), a.sin(), 0.0))]
            }
            Self::T => vec![rot(Vec3::z(), PI), c3_111],
            Self::Td => vec![rot(Vec3::z(), PI), c3_111, mirror(Vec3::new(1.0, -1.0, 0.0))],
            Self::Th => vec![rot(Vec3::z(), PI), c3_111, inv],
            Self::O => vec![cn(4), c3_111],
            Self::Oh => vec![cn(4), c3_111, inv],
            Self::I | Self::Ih => {
                let phi = (1.0 + 5f64.sqrt()) / 2.0;
                let mut g = vec![rot(Vec3::new(0.0, 1.0, phi), TAU / 5.0), c3_111];
                if *self == Self::Ih {
                    g.push(inv);
                }
                g
            }
        };
        close_under_products(&gens)
    }
}

/// The finite matrix group generated by `gens`.
pub fn close_under_products(gens: &[Mat3]) -> Vec<Mat3> {
    let same = |a: &Mat3, b: &Mat3| (a - b).abs().max() < 1e-8;
    let mut group = vec![Mat3::identity()];
    let mut frontier = vec![Mat3::identity()];
    while let Some(m) = frontier.pop() {
        for g in gens {
            let p = g * m;
            if !group.iter().any(|x| same(x, &p)) {
                group.push(p);
                frontier.push(p);
            }
        }
        assert!(group.len() <= 10_000, "generators do not produce a finite point group");
    }
    group
}

impl fmt::Display for Schoenflies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::C1 => write!(f, "C1"),
            Self::Cs => write!(f, "Cs"),
            Self::Ci => write!(f, "Ci"),
            Self::Cn(n) => write!(f, "C{n}"),
            Self::S2n(n) => write!(f, "S{}", 2 * n),
            Self::Cnh(n) => write!(f, "C{n}h"),
            Self::Cnv(n) => write!(f, "C{n}v"),
            Self::Dn(n) => write!(f, "D{n}"),
            Self::Dnd(n) => write!(f, "D{n}d"),
            Self::Dnh(n) => write!(f, "D{n}h"),
            Self::T => write!(f, "T"),
            Self::Td => write!(f, "Td"),
            Self::Th => write!(f, "Th"),
            Self::O => write!(f, "O"),
            Self::Oh => write!(f, "Oh"),
            Self::I => write!(f, "I"),
            Self::Ih => write!(f, "Ih"),
        }
    }
}

impl FromStr for Schoenflies {
    type Err = SymmetryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SymmetryError::UnknownGroupName(s.to_string());
        let fixed = match s {
            "C1" => Some(Self::C1),
            "Cs" => Some(Self::Cs),
            "Ci" => Some(Self::Ci),
            "T" => Some(Self::T),
            "Td" => Some(Self::Td),
            "Th" => Some(Self::Th),
            "O" => Some(Self::O),
            "Oh" => Some(Self::Oh),
            "I" => Some(Self::I),
            "Ih" => Some(Self::Ih),
            _ => None,
        };
        if let Some(g) = fixed {
            return Ok(g);
        }
        let mut chars = s.chars();
        let family = chars.next().ok_or_else(bad)?;
        let rest: String = chars.collect();
        let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
        let suffix = &rest[digits.len()..];
        let n: u32 = digits.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        match (family, suffix) {
            ('C', "") if n >= 2 => Ok(Self::Cn(n)),
            ('C', "") => Ok(Self::C1),
            ('C', "h") if n >= 2 => Ok(Self::Cnh(n)),
            ('C', "v") if n >= 2 => Ok(Self::Cnv(n)),
            ('D', "") if n >= 2 => Ok(Self::Dn(n)),
            ('D', "d") if n >= 2 => Ok(Self::Dnd(n)),
            ('D', "h") if n >= 2 => Ok(Self::Dnh(n)),
            ('S', "") if n >= 4 && n % 2 == 0 => Ok(Self::S2n(n / 2)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Schoenflies {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Schoenflies {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
