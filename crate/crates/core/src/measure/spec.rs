//! JSON description of a dual measure:
//!
//! ```json
//! {"atoms": [{"theta": [1.0], "torsion": [], "weight": 0.5}],
//!  "density": {"kind": "poisson", "r": 0.5, "weight": 0.5},
//!  "grid_size": 4096}
//! ```
//!
//! Density kinds are `poisson`, `uniform_arc`, `table` and `mixture`. Loading
//! normalizes the total mass to one; the applied factor is available from
//! [`DualMeasure::normalization`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{grid_midpoints, poisson_kernel, Atom, DualMeasure, GridCell};
use crate::error::{Error, Result};
use crate::group::GroupDescriptor;

pub const DEFAULT_GRID_SIZE: usize = 4096;

fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub torsion: Vec<i64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Product of Poisson kernels `P_r` over the torus coordinates.
    Poisson {
        r: f64,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default)]
        torsion: Vec<i64>,
    },
    /// Uniform density on the box `[a, b]^d`.
    UniformArc {
        arc: [f64; 2],
        #[serde(default = "one")]
        weight: f64,
        #[serde(default)]
        torsion: Vec<i64>,
    },
    /// Density values at the grid midpoints, row-major over the torus coordinates.
    Table {
        values: Vec<f64>,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default)]
        torsion: Vec<i64>,
    },
    Mixture { components: Vec<DensitySpec> },
}

fn torsion_or_zero(g: &GroupDescriptor, t: &[i64]) -> Result<Vec<u64>> {
    let k = g.torsion_orders().len();
    if t.is_empty() {
        return Ok(vec![0; k]);
    }
    if t.len() != k {
        return Err(Error::DimensionMismatch {
            expected: format!("{k} torsion indices"),
            found: format!("{}", t.len()),
        });
    }
    Ok(t.iter()
        .zip(g.torsion_orders())
        .map(|(&c, &n)| c.rem_euclid(n as i64) as u64)
        .collect())
}

impl DensitySpec {
    /// Adds this component's density values onto the per-character grids.
    fn accumulate(
        &self,
        g: &GroupDescriptor,
        m: usize,
        grids: &mut BTreeMap<Vec<u64>, Vec<f64>>,
    ) -> Result<()> {
        let d = g.free_rank();
        let n = m.pow(d as u32);
        let mut add = |torsion: &[i64], weight: f64, f: &dyn Fn(&[f64]) -> f64| -> Result<()> {
            if !(weight >= 0.0) || !weight.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid component weight {weight}")));
            }
            let key = torsion_or_zero(g, torsion)?;
            let grid = grids.entry(key).or_insert_with(|| vec![0.0; n]);
            let mids = grid_midpoints(m);
            let mut angles = vec![0.0; d];
            for (idx, slot) in grid.iter_mut().enumerate() {
                let mut rem = idx;
                for k in (0..d).rev() {
                    angles[k] = mids[rem % m];
                    rem /= m;
                }
                *slot += weight * f(&angles);
            }
            Ok(())
        };
        match self {
            DensitySpec::Poisson { r, weight, torsion } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::InvalidArgument(format!("poisson r must lie in (0,1), got {r}")));
                }
                let r = *r;
                add(torsion, *weight, &|t: &[f64]| {
                    t.iter().map(|&a| poisson_kernel(r, a)).product()
                })
            }
            DensitySpec::UniformArc { arc, weight, torsion } => {
                let [a, b] = *arc;
                if !(a < b) || b - a > std::f64::consts::TAU {
                    return Err(Error::InvalidArgument(format!("invalid arc [{a}, {b}]")));
                }
                let inside = move |t: f64| {
                    let tau = std::f64::consts::TAU;
                    (a..=b).contains(&t) || (a..=b).contains(&(t + tau)) || (a..=b).contains(&(t - tau))
                };
                let height = (b - a).powi(d as i32).recip();
                add(torsion, *weight, &|t: &[f64]| {
                    if t.iter().all(|&x| inside(x)) { height } else { 0.0 }
                })
            }
            DensitySpec::Table { values, weight, torsion } => {
                if values.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{n} table values (grid {m}^{d})"),
                        found: format!("{}", values.len()),
                    });
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidArgument("table densities must be nonnegative".into()));
                }
                let key = torsion_or_zero(g, torsion)?;
                let grid = grids.entry(key).or_insert_with(|| vec![0.0; n]);
                for (slot, v) in grid.iter_mut().zip(values) {
                    *slot += weight * v;
                }
                Ok(())
            }
            DensitySpec::Mixture { components } => {
                for c in components {
                    c.accumulate(g, m, grids)?;
                }
                Ok(())
            }
        }
    }
}

impl MeasureSpec {
    /// Sum of the declared component weights (atoms and densities).
    pub fn declared_weight(&self) -> f64 {
        fn density_weight(d: &DensitySpec) -> f64 {
            match d {
                DensitySpec::Poisson { weight, .. }
                | DensitySpec::UniformArc { weight, .. }
                | DensitySpec::Table { weight, .. } => *weight,
                DensitySpec::Mixture { components } => components.iter().map(density_weight).sum(),
            }
        }
        self.atoms.iter().map(|a| a.weight).sum::<f64>()
            + self.density.as_ref().map_or(0.0, density_weight)
    }

    pub fn build(&self, g: &GroupDescriptor) -> Result<DualMeasure> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let theta = if a.theta.is_empty() { vec![0.0; g.free_rank()] } else { a.theta.clone() };
            let torsion = torsion_or_zero(g, &a.torsion)?;
            let point = g.dual_point(theta, torsion.iter().map(|&c| c as i64).collect())?;
            atoms.push(Atom { point, weight: a.weight });
        }
        let mut cells = Vec::new();
        if let Some(density) = &self.density {
            if g.free_rank() == 0 {
                return Err(Error::InvalidArgument(
                    "densities need a torus; the dual of a finite group is atoms only".into(),
                ));
            }
            if self.grid_size == 0 {
                return Err(Error::InvalidArgument("grid_size must be positive".into()));
            }
            let mut grids = BTreeMap::new();
            density.accumulate(g, self.grid_size, &mut grids)?;
            for (torsion, values) in grids {
                let mut block = super::density_cells(g, self.grid_size, &torsion, |_| 0.0)?;
                for (cell, v) in block.iter_mut().zip(values) {
                    cell.density = v;
                }
                cells.extend(block);
            }
        }
        DualMeasure::new(g.clone(), atoms, cells, self.grid_size)
    }

    /// Explicit description of an existing measure (densities as tables).
    pub fn from_measure(mu: &DualMeasure) -> Self {
        let atoms = mu
            .atoms()
            .iter()
            .map(|a| AtomSpec {
                theta: a.point.angles.clone(),
                torsion: a.point.torsion.iter().map(|&c| c as i64).collect(),
                weight: a.weight,
            })
            .collect();
        let m = mu.grid_size();
        let mut tables: Vec<DensitySpec> = Vec::new();
        let per_char = if mu.descriptor().free_rank() == 0 { 0 } else { m.pow(mu.descriptor().free_rank() as u32) };
        if per_char > 0 {
            for chunk in mu.cells().chunks(per_char) {
                tables.push(DensitySpec::Table {
                    values: chunk.iter().map(|c: &GridCell| c.density).collect(),
                    weight: 1.0,
                    torsion: chunk[0].point.torsion.iter().map(|&c| c as i64).collect(),
                });
            }
        }
        let density = match tables.len() {
            0 => None,
            1 => tables.pop(),
            _ => Some(DensitySpec::Mixture { components: tables }),
        };
        MeasureSpec {
            atoms,
            density,
            grid_size: if m == 0 { DEFAULT_GRID_SIZE } else { m },
        }
    }
}
