//! Finitely generated abelian groups `Z^d x Z_{n_1} x ... x Z_{n_k}` and their
//! Pontryagin duals `T^d x (finite dual)`.
//!
//! Characters are parametrized by an angle vector on the torus together with a
//! residue vector selecting a character of each cyclic factor. The character
//! with angles `theta` and indices `c` evaluates at `x = (m, r)` to
//! `exp(i <theta, m>) * prod_j exp(2 pi i c_j r_j / n_j)`.

use std::f64::consts::{PI, TAU};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Sentinel returned by [`GroupDescriptor::dual_distance`] when two characters
/// differ on the torsion subgroup.
pub const TORSION_SEPARATION: f64 = TAU;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub struct GroupDescriptor {
    free_rank: usize,
    torsion: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawDescriptor {
    free_rank: usize,
    #[serde(default)]
    torsion: Vec<u64>,
}

impl TryFrom<RawDescriptor> for GroupDescriptor {
    type Error = Error;

    fn try_from(raw: RawDescriptor) -> Result<Self> {
        GroupDescriptor::new(raw.free_rank, raw.torsion)
    }
}

impl From<GroupDescriptor> for RawDescriptor {
    fn from(g: GroupDescriptor) -> Self {
        RawDescriptor {
            free_rank: g.free_rank,
            torsion: g.torsion,
        }
    }
}

/// An element `(m, r)` with `m` in `Z^d` and residues `r_j` in `[0, n_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub free: Vec<i64>,
    pub torsion: Vec<u64>,
}

/// A character of the group: torus angles in `(-pi, pi]` plus torsion indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub angles: Vec<f64>,
    pub torsion: Vec<u64>,
}

/// Maps an angle into the canonical range `(-pi, pi]`.
pub fn canonical_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Arc-length distance between two angles on the circle, in `[0, pi]`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// `exp(i phase)` with the phase first reduced to `[-pi, pi]`. The reduction is
/// odd in `phase`, so `cis(-p)` is exactly the conjugate of `cis(p)`.
pub(crate) fn cis(phase: f64) -> Complex64 {
    let p = phase - TAU * (phase / TAU).round();
    Complex64::new(p.cos(), p.sin())
}

impl GroupDescriptor {
    pub fn new(free_rank: usize, torsion: Vec<u64>) -> Result<Self> {
        if let Some(&n) = torsion.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidArgument(format!(
                "torsion orders must be >= 2, got {n}"
            )));
        }
        Ok(Self { free_rank, torsion })
    }

    /// The free abelian group `Z^d`.
    pub fn integers(d: usize) -> Self {
        Self {
            free_rank: d,
            torsion: Vec::new(),
        }
    }

    /// The cyclic group `Z_n`.
    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(0, vec![n])
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn torsion_orders(&self) -> &[u64] {
        &self.torsion
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order of the torsion subgroup.
    pub fn torsion_order(&self) -> u64 {
        self.torsion.iter().product()
    }

    /// Dimension of `Hom(G, C)`. Torsion contributes nothing, so this is the
    /// free rank.
    pub fn hom_to_c_dimension(&self) -> usize {
        self.free_rank
    }

    /// Number of standard generators: one per free coordinate, one per cyclic factor.
    pub fn generator_count(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    /// Standard generators `e_1, .., e_d, t_1, .., t_k`.
    pub fn generators(&self) -> Vec<GroupElement> {
        (0..self.generator_count())
            .map(|i| {
                let mut g = self.zero();
                if i < self.free_rank {
                    g.free[i] = 1;
                } else {
                    g.torsion[i - self.free_rank] = 1;
                }
                g
            })
            .collect()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            free: vec![0; self.free_rank],
            torsion: vec![0; self.torsion.len()],
        }
    }

    /// Builds an element, reducing torsion coordinates into `[0, n_j)`.
    pub fn element(&self, free: Vec<i64>, torsion: Vec<i64>) -> Result<GroupElement> {
        self.check_lengths(free.len(), torsion.len())?;
        let torsion = torsion
            .iter()
            .zip(&self.torsion)
            .map(|(&r, &n)| r.rem_euclid(n as i64) as u64)
            .collect();
        Ok(GroupElement { free, torsion })
    }

    /// Shorthand for an element with no torsion coordinates.
    pub fn free_element(&self, free: Vec<i64>) -> Result<GroupElement> {
        let k = self.torsion.len();
        self.element(free, vec![0; k])
    }

    pub fn add(&self, x: &GroupElement, y: &GroupElement) -> GroupElement {
        GroupElement {
            free: x.free.iter().zip(&y.free).map(|(a, b)| a + b).collect(),
            torsion: x
                .torsion
                .iter()
                .zip(&y.torsion)
                .zip(&self.torsion)
                .map(|((a, b), n)| (a + b) % n)
                .collect(),
        }
    }

    pub fn neg(&self, x: &GroupElement) -> GroupElement {
        GroupElement {
            free: x.free.iter().map(|a| -a).collect(),
            torsion: x
                .torsion
                .iter()
                .zip(&self.torsion)
                .map(|(a, n)| (n - a) % n)
                .collect(),
        }
    }

    pub fn sub(&self, x: &GroupElement, y: &GroupElement) -> GroupElement {
        self.add(x, &self.neg(y))
    }

    /// Every element of the torsion subgroup, in lexicographic order.
    pub fn torsion_elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::with_capacity(self.torsion.len())];
        for &n in &self.torsion {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..n).map(move |r| {
                        let mut v = prefix.clone();
                        v.push(r);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// Builds a dual point, canonicalizing angles and reducing torsion indices.
    pub fn dual_point(&self, angles: Vec<f64>, torsion: Vec<i64>) -> Result<DualPoint> {
        self.check_lengths(angles.len(), torsion.len())?;
        if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite angle {a}")));
        }
        Ok(DualPoint {
            angles: angles.into_iter().map(canonical_angle).collect(),
            torsion: torsion
                .iter()
                .zip(&self.torsion)
                .map(|(&c, &n)| c.rem_euclid(n as i64) as u64)
                .collect(),
        })
    }

    pub fn trivial_character(&self) -> DualPoint {
        DualPoint {
            angles: vec![0.0; self.free_rank],
            torsion: vec![0; self.torsion.len()],
        }
    }

    /// The full dual of a finite group (torsion characters only).
    pub fn finite_dual(&self) -> Vec<DualPoint> {
        self.torsion_elements()
            .into_iter()
            .map(|c| DualPoint {
                angles: vec![0.0; self.free_rank],
                torsion: c,
            })
            .collect()
    }

    pub fn check_element(&self, x: &GroupElement) -> Result<()> {
        self.check_lengths(x.free.len(), x.torsion.len())
    }

    pub fn check_dual(&self, xi: &DualPoint) -> Result<()> {
        self.check_lengths(xi.angles.len(), xi.torsion.len())
    }

    fn check_lengths(&self, free: usize, torsion: usize) -> Result<()> {
        if free != self.free_rank || torsion != self.torsion.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("({}, {})", self.free_rank, self.torsion.len()),
                found: format!("({free}, {torsion})"),
            });
        }
        Ok(())
    }

    /// Phase of `xi(x)` in radians, before reduction.
    pub(crate) fn phase(&self, xi: &DualPoint, x: &GroupElement) -> f64 {
        let free: f64 = xi
            .angles
            .iter()
            .zip(&x.free)
            .map(|(t, &m)| t * m as f64)
            .sum();
        let turns: f64 = xi
            .torsion
            .iter()
            .zip(&x.torsion)
            .zip(&self.torsion)
            .map(|((&c, &r), &n)| ((c * r) % n) as f64 / n as f64)
            .sum();
        free + TAU * turns
    }

    /// `xi(x)`; a unit complex number.
    pub fn evaluate_character(&self, xi: &DualPoint, x: &GroupElement) -> Result<Complex64> {
        self.check_dual(xi)?;
        self.check_element(x)?;
        Ok(cis(self.phase(xi, x)))
    }

    /// Unchecked variant for hot loops over points already known to match.
    pub(crate) fn character(&self, xi: &DualPoint, x: &GroupElement) -> Complex64 {
        cis(self.phase(xi, x))
    }

    /// Max over torus coordinates of the arc distance; [`TORSION_SEPARATION`]
    /// when the torsion indices differ.
    pub fn dual_distance(&self, xi: &DualPoint, eta: &DualPoint) -> Result<f64> {
        self.check_dual(xi)?;
        self.check_dual(eta)?;
        Ok(dual_distance_unchecked(xi, eta))
    }
}

pub(crate) fn dual_distance_unchecked(xi: &DualPoint, eta: &DualPoint) -> f64 {
    if xi.torsion != eta.torsion {
        return TORSION_SEPARATION;
    }
    xi.angles
        .iter()
        .zip(&eta.angles)
        .map(|(&a, &b)| circle_distance(a, b))
        .fold(0.0, f64::max)
}

impl DualPoint {
    pub fn is_trivial(&self) -> bool {
        self.angles.iter().all(|&a| a == 0.0) && self.torsion.iter().all(|&c| c == 0)
    }
}
