//! Probability measures on the dual group, stored as a finite atom list plus a
//! density sampled on a uniform midpoint grid of the torus.
//!
//! Vectors in the discretized `L^2(dual, mu)` are indexed by the atoms first
//! (in order) and then by the grid cells.

mod spec;

pub use spec::{AtomSpec, DensitySpec, MeasureSpec, DEFAULT_GRID_SIZE};

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::group::{circle_distance, dual_distance_unchecked, Complex64, DualPoint, GroupDescriptor, GroupElement, TORSION_SEPARATION};

/// Density values at or below this count as outside the numerical support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Slack on the total mass after normalization.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A measure whose trivial atom is at least `1 - DIRAC_TOLERANCE` is treated as
/// the Dirac mass at the trivial character.
pub const DIRAC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: DualPoint,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// Cell midpoint.
    pub point: DualPoint,
    pub density: f64,
    pub quadrature_weight: f64,
}

/// Midpoints of the uniform grid with `m` cells on `(-pi, pi]`.
pub fn grid_midpoints(m: usize) -> Vec<f64> {
    let h = TAU / m as f64;
    let centre = m as f64 / 2.0;
    (0..m).map(|j| (j as f64 + 0.5 - centre) * h).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualMeasure {
    descriptor: GroupDescriptor,
    atoms: Vec<Atom>,
    cells: Vec<GridCell>,
    grid_size: usize,
    normalization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Mass of the atom at the trivial character.
    pub trivial_mass: f64,
    /// The remainder, renormalized; no atom at the trivial character.
    pub perp: DualMeasure,
}

impl DualMeasure {
    /// Validates and normalizes a measure. Cells must come from a uniform grid of
    /// `grid_size` cells per torus dimension (ignored when there are no cells).
    pub fn new(
        descriptor: GroupDescriptor,
        atoms: Vec<Atom>,
        cells: Vec<GridCell>,
        grid_size: usize,
    ) -> Result<Self> {
        for a in &atoms {
            descriptor.check_dual(&a.point)?;
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom weights must be positive, got {}",
                    a.weight
                )));
            }
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i]
                .iter()
                .any(|b| dual_distance_unchecked(&a.point, &b.point) == 0.0)
            {
                return Err(Error::InvalidArgument(
                    "atom locations must be pairwise distinct".into(),
                ));
            }
        }
        if !cells.is_empty() {
            if descriptor.free_rank() == 0 {
                return Err(Error::InvalidArgument(
                    "a finite group has a finite dual; use atoms only".into(),
                ));
            }
            if grid_size == 0 {
                return Err(Error::InvalidArgument("grid size must be positive".into()));
            }
        }
        for c in &cells {
            descriptor.check_dual(&c.point)?;
            if !(c.density >= 0.0) || !c.density.is_finite() || !(c.quadrature_weight > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "densities must be nonnegative and quadrature weights positive, got ({}, {})",
                    c.density, c.quadrature_weight
                )));
            }
        }
        let mut mu = Self {
            descriptor,
            atoms,
            cells,
            grid_size,
            normalization: 1.0,
        };
        let total = mu.total_mass();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("measure has zero total mass".into()));
        }
        let factor = 1.0 / total;
        if factor != 1.0 {
            for a in &mut mu.atoms {
                a.weight *= factor;
            }
            for c in &mut mu.cells {
                c.density *= factor;
            }
        }
        mu.normalization = factor;
        Ok(mu)
    }

    pub fn from_atoms(descriptor: GroupDescriptor, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(descriptor, atoms, Vec::new(), 0)
    }

    /// A single atom of unit mass.
    pub fn dirac(descriptor: GroupDescriptor, point: DualPoint) -> Result<Self> {
        Self::from_atoms(descriptor, vec![Atom { point, weight: 1.0 }])
    }

    /// Atoms plus a density `f(theta)` sampled at the midpoints of the
    /// `grid_size^d` grid, placed on the torsion character `torsion`.
    pub fn with_density<F>(
        descriptor: GroupDescriptor,
        atoms: Vec<Atom>,
        grid_size: usize,
        torsion: Vec<u64>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let cells = density_cells(&descriptor, grid_size, &torsion, f)?;
        Self::new(descriptor, atoms, cells, grid_size)
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Factor applied to the raw input masses to reach total mass one.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Half the side of a grid cell, `pi / M`.
    pub fn cell_half_width(&self) -> f64 {
        if self.grid_size == 0 {
            0.0
        } else {
            PI / self.grid_size as f64
        }
    }

    /// Dimension of the discretized `L^2` space.
    pub fn len(&self) -> usize {
        self.atoms.len() + self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &DualPoint {
        if i < self.atoms.len() {
            &self.atoms[i].point
        } else {
            &self.cells[i - self.atoms.len()].point
        }
    }

    pub fn points(&self) -> impl Iterator<Item = &DualPoint> + '_ {
        self.atoms
            .iter()
            .map(|a| &a.point)
            .chain(self.cells.iter().map(|c| &c.point))
    }

    /// Mass carried by each index: atom weight or density times quadrature weight.
    pub fn masses(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| a.weight)
            .chain(self.cells.iter().map(|c| c.density * c.quadrature_weight))
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses().iter().sum()
    }

    /// Whether index `i` belongs to the numerical support.
    pub fn in_support(&self, i: usize) -> bool {
        i < self.atoms.len() || self.cells[i - self.atoms.len()].density > SUPPORT_THRESHOLD
    }

    pub fn support_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.in_support(i)).collect()
    }

    /// Index of the atom sitting at the trivial character, if any.
    pub fn trivial_atom(&self) -> Option<usize> {
        self.atoms.iter().position(|a| a.point.is_trivial())
    }

    /// Splits off the atom at the trivial character.
    pub fn decompose(&self) -> Result<Decomposition> {
        let (trivial_mass, rest) = match self.trivial_atom() {
            Some(i) => {
                let mut rest = self.atoms.clone();
                let a = rest.remove(i);
                (a.weight, rest)
            }
            None => (0.0, self.atoms.clone()),
        };
        if trivial_mass >= 1.0 - DIRAC_TOLERANCE {
            return Err(Error::ConstantFunction);
        }
        let scale = 1.0 / (1.0 - trivial_mass);
        let atoms = rest
            .into_iter()
            .map(|a| Atom {
                weight: a.weight * scale,
                ..a
            })
            .collect();
        let cells = self
            .cells
            .iter()
            .map(|c| GridCell {
                density: c.density * scale,
                ..c.clone()
            })
            .collect();
        let perp = Self::new(self.descriptor.clone(), atoms, cells, self.grid_size)?;
        Ok(Decomposition { trivial_mass, perp })
    }

    /// Distance from `xi` to the numerical support. Grid cells count as closed
    /// boxes of half-width `pi / M` around their midpoints, so a point inside a
    /// supported cell is at distance zero.
    pub fn distance_to_support(&self, xi: &DualPoint) -> Result<f64> {
        self.descriptor.check_dual(xi)?;
        let hw = self.cell_half_width();
        let atoms = self
            .atoms
            .iter()
            .map(|a| dual_distance_unchecked(xi, &a.point));
        let cells = self
            .cells
            .iter()
            .filter(|c| c.density > SUPPORT_THRESHOLD)
            .map(|c| cell_distance(xi, &c.point, hw));
        Ok(atoms.chain(cells).fold(f64::INFINITY, f64::min))
    }

    fn check_vector(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.len()),
                found: format!("length {}", f.len()),
            });
        }
        Ok(())
    }

    /// `<f, g> = sum f conj(g) dmu`.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
        self.check_vector(f)?;
        self.check_vector(g)?;
        Ok(self
            .masses()
            .iter()
            .zip(f.iter().zip(g))
            .map(|(m, (a, b))| a * b.conj() * *m)
            .sum())
    }

    pub fn l2_norm(&self, f: &[Complex64]) -> Result<f64> {
        self.check_vector(f)?;
        Ok(self.masses().iter().zip(f).map(|(m, a)| a.norm_sqr() * m).sum::<f64>().sqrt())
    }

    /// The values `xi(x)` at every index.
    pub fn character_values(&self, x: &GroupElement) -> Result<Vec<Complex64>> {
        self.descriptor.check_element(x)?;
        Ok(self.points().map(|p| self.descriptor.character(p, x)).collect())
    }

    /// The multiplication representation: `(rho(x) f)(xi) = xi(x) f(xi)`.
    pub fn rho(&self, x: &GroupElement, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_vector(f)?;
        Ok(self
            .character_values(x)?
            .into_iter()
            .zip(f)
            .map(|(z, v)| z * v)
            .collect())
    }

    /// Total variation distance between two measures on the same grid.
    pub fn total_variation(&self, other: &DualMeasure) -> Result<f64> {
        if self.descriptor != other.descriptor || self.cells.len() != other.cells.len() {
            return Err(Error::InvalidArgument(
                "measures live on different grids".into(),
            ));
        }
        let mut tv = 0.0;
        for a in &self.atoms {
            let w = other
                .atoms
                .iter()
                .find(|b| dual_distance_unchecked(&a.point, &b.point) == 0.0)
                .map_or(0.0, |b| b.weight);
            tv += (a.weight - w).abs();
        }
        for b in &other.atoms {
            if !self
                .atoms
                .iter()
                .any(|a| dual_distance_unchecked(&a.point, &b.point) == 0.0)
            {
                tv += b.weight;
            }
        }
        for (c, d) in self.cells.iter().zip(&other.cells) {
            if c.point != d.point {
                return Err(Error::InvalidArgument("grid cells are not aligned".into()));
            }
            tv += (c.density * c.quadrature_weight - d.density * d.quadrature_weight).abs();
        }
        Ok(tv)
    }
}

impl Decomposition {
    /// `trivial_mass * delta_1 + (1 - trivial_mass) * perp`.
    pub fn reconstruct(&self) -> Result<DualMeasure> {
        let t = self.trivial_mass;
        let g = self.perp.descriptor.clone();
        let mut atoms: Vec<Atom> = Vec::new();
        if t > 0.0 {
            atoms.push(Atom {
                point: g.trivial_character(),
                weight: t,
            });
        }
        atoms.extend(self.perp.atoms.iter().map(|a| Atom {
            weight: a.weight * (1.0 - t),
            ..a.clone()
        }));
        let cells = self
            .perp
            .cells
            .iter()
            .map(|c| GridCell {
                density: c.density * (1.0 - t),
                ..c.clone()
            })
            .collect();
        DualMeasure::new(g, atoms, cells, self.perp.grid_size)
    }
}

/// Distance from `xi` to the closed cell box around `center`.
pub(crate) fn cell_distance(xi: &DualPoint, center: &DualPoint, half_width: f64) -> f64 {
    if xi.torsion != center.torsion {
        return TORSION_SEPARATION;
    }
    xi.angles
        .iter()
        .zip(&center.angles)
        .map(|(&a, &b)| (circle_distance(a, b) - half_width).max(0.0))
        .fold(0.0, f64::max)
}

/// Cells of the `m^d` grid on the torsion character `torsion`, with density `f`.
pub(crate) fn density_cells<F>(
    descriptor: &GroupDescriptor,
    m: usize,
    torsion: &[u64],
    f: F,
) -> Result<Vec<GridCell>>
where
    F: Fn(&[f64]) -> f64,
{
    let d = descriptor.free_rank();
    if d == 0 {
        return Err(Error::InvalidArgument(
            "a finite group has a finite dual; use atoms only".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    if torsion.len() != descriptor.torsion_orders().len()
        || torsion.iter().zip(descriptor.torsion_orders()).any(|(c, n)| c >= n)
    {
        return Err(Error::InvalidArgument(format!(
            "invalid torsion character {torsion:?}"
        )));
    }
    let total = m
        .checked_pow(d as u32)
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| Error::InvalidArgument(format!("grid {m}^{d} is too large")))?;
    let mids = grid_midpoints(m);
    let w = (TAU / m as f64).powi(d as i32);
    let mut cells = Vec::with_capacity(total);
    let mut angles = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for k in (0..d).rev() {
            angles[k] = mids[rem % m];
            rem /= m;
        }
        let density = f(&angles);
        cells.push(GridCell {
            point: DualPoint {
                angles: angles.clone(),
                torsion: torsion.to_vec(),
            },
            density,
            quadrature_weight: w,
        });
    }
    Ok(cells)
}

/// Poisson kernel `P_r(theta) = (1 - r^2) / (2 pi (1 - 2 r cos theta + r^2))`.
pub fn poisson_kernel(r: f64, theta: f64) -> f64 {
    (1.0 - r * r) / (TAU * (1.0 - 2.0 * r * theta.cos() + r * r))
}
