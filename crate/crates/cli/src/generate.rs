//! Measure generators: atoms, Poisson kernels, uniform arcs and mixtures.

use abelian_coh::measure::{AtomSpec, DensitySpec, MeasureSpec};
use abelian_coh::{DualMeasure, GroupDescriptor};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MIXTURE_WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MeasureKind {
    Atoms,
    UniformArc,
    Poisson,
    Mixture,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomsParams {
    atoms: Vec<AtomSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoissonParams {
    r: f64,
    #[serde(default)]
    torsion: Vec<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcParams {
    arc: [f64; 2],
    #[serde(default)]
    torsion: Vec<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Component {
    Atoms {
        weight: f64,
        atoms: Vec<AtomSpec>,
    },
    Poisson {
        weight: f64,
        r: f64,
        #[serde(default)]
        torsion: Vec<i64>,
    },
    UniformArc {
        weight: f64,
        arc: [f64; 2],
        #[serde(default)]
        torsion: Vec<i64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureParams {
    components: Vec<Component>,
}

fn params<T: DeserializeOwned>(kind: MeasureKind, value: &serde_json::Value) -> CliResult<T> {
    serde_json::from_value(value.clone()).map_err(|e| bad(kind, e))
}

fn bad(kind: MeasureKind, msg: impl std::fmt::Display) -> CliError {
    CliError::parse(format!("{kind:?} parameters"), msg)
}

fn check_r(kind: MeasureKind, r: f64) -> CliResult<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(bad(kind, format!("r must lie in (0, 1), got {r}")))
    }
}

fn check_arc(kind: MeasureKind, [a, b]: [f64; 2]) -> CliResult<()> {
    if a < b && b - a <= std::f64::consts::TAU {
        Ok(())
    } else {
        Err(bad(kind, format!("arc [{a}, {b}] must satisfy a < b and b - a <= 2 pi")))
    }
}

fn check_atoms(kind: MeasureKind, atoms: &[AtomSpec]) -> CliResult<f64> {
    if atoms.is_empty() {
        return Err(bad(kind, "at least one atom is required"));
    }
    if let Some(a) = atoms.iter().find(|a| !(a.weight > 0.0) || !a.weight.is_finite()) {
        return Err(bad(kind, format!("atom weights must be positive, got {}", a.weight)));
    }
    Ok(atoms.iter().map(|a| a.weight).sum())
}

/// Measure description for `kind` with JSON parameters `value`.
pub fn measure_spec(kind: MeasureKind, value: &serde_json::Value, grid: usize) -> CliResult<MeasureSpec> {
    let mut spec = MeasureSpec {
        atoms: Vec::new(),
        density: None,
        grid_size: grid,
    };
    match kind {
        MeasureKind::Atoms => {
            let p: AtomsParams = params(kind, value)?;
            check_atoms(kind, &p.atoms)?;
            spec.atoms = p.atoms;
        }
        MeasureKind::Poisson => {
            let p: PoissonParams = params(kind, value)?;
            check_r(kind, p.r)?;
            spec.density = Some(DensitySpec::Poisson {
                r: p.r,
                weight: 1.0,
                torsion: p.torsion,
            });
        }
        MeasureKind::UniformArc => {
            let p: ArcParams = params(kind, value)?;
            check_arc(kind, p.arc)?;
            spec.density = Some(DensitySpec::UniformArc {
                arc: p.arc,
                weight: 1.0,
                torsion: p.torsion,
            });
        }
        MeasureKind::Mixture => {
            let p: MixtureParams = params(kind, value)?;
            if p.components.is_empty() {
                return Err(bad(kind, "at least one component is required"));
            }
            let mut total = 0.0;
            let mut densities = Vec::new();
            for c in p.components {
                let w = match &c {
                    Component::Atoms { weight, .. }
                    | Component::Poisson { weight, .. }
                    | Component::UniformArc { weight, .. } => *weight,
                };
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(bad(kind, format!("component weight {w} is not a nonnegative number")));
                }
                total += w;
                match c {
                    Component::Atoms { weight, atoms } => {
                        let sum = check_atoms(kind, &atoms)?;
                        spec.atoms.extend(atoms.into_iter().map(|a| AtomSpec {
                            weight: a.weight * weight / sum,
                            ..a
                        }));
                    }
                    Component::Poisson { weight, r, torsion } => {
                        check_r(kind, r)?;
                        densities.push(DensitySpec::Poisson { r, weight, torsion });
                    }
                    Component::UniformArc { weight, arc, torsion } => {
                        check_arc(kind, arc)?;
                        densities.push(DensitySpec::UniformArc { arc, weight, torsion });
                    }
                }
            }
            if (total - 1.0).abs() > MIXTURE_WEIGHT_TOLERANCE {
                return Err(bad(kind, format!("component weights sum to {total}, expected 1")));
            }
            spec.density = match densities.len() {
                0 => None,
                1 => densities.pop(),
                _ => Some(DensitySpec::Mixture { components: densities }),
            };
        }
    }
    Ok(spec)
}

/// Builds the measure and returns it with its explicit, normalized description.
pub fn generate_measure(
    g: &GroupDescriptor,
    kind: MeasureKind,
    value: &serde_json::Value,
    grid: usize,
) -> CliResult<(DualMeasure, MeasureSpec)> {
    let mu = measure_spec(kind, value, grid)?.build(g)?;
    let explicit = MeasureSpec::from_measure(&mu);
    Ok((mu, explicit))
}
