//! Vanishing of `H^1` and reduced `H^1` for the representation attached to a
//! spectral measure.
//!
//! Reduced `H^1` vanishes iff the trivial character carries no mass or
//! `Hom(G, C) = 0`. `H^1` vanishes iff in addition the trivial character stays
//! away from the support of the remaining measure.

use std::fmt;

use serde::Serialize;

use super::{build_nontrivial_cocycle, find_smoothing_measure, Cocycle, ShellCocycle, SmoothingMeasure};
use crate::error::{Error, Result};
use crate::group::Complex64;
use crate::measure::DualMeasure;

/// Trivial-atom threshold for measures given by an exact atom list.
pub const EXPLICIT_ATOM_TOLERANCE: f64 = 1e-6;
/// Trivial-atom threshold for atoms estimated by Cesaro averaging.
pub const INFERRED_ATOM_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Vanishes,
    Nonvanishing,
}

impl Verdict {
    fn from_vanishing(v: bool) -> Self {
        if v {
            Verdict::Vanishes
        } else {
            Verdict::Nonvanishing
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Vanishes => "vanishes",
            Verdict::Nonvanishing => "nonvanishing",
        })
    }
}

/// `(H^1, reduced H^1)` from the three scalar conditions.
pub fn decide(trivial_mass_positive: bool, hom_nonzero: bool, gap_positive: bool) -> (Verdict, Verdict) {
    let reduced = !trivial_mass_positive || !hom_nonzero;
    (
        Verdict::from_vanishing(reduced && gap_positive),
        Verdict::from_vanishing(reduced),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub atom_tolerance: f64,
    /// Attach a witness to the report.
    pub witness: bool,
    /// Shells requested for the non-coboundary witness; fewer are used when the
    /// grid cannot resolve them.
    pub shell_count: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            atom_tolerance: EXPLICIT_ATOM_TOLERANCE,
            witness: true,
            shell_count: 8,
        }
    }
}

impl ClassifyOptions {
    pub fn inferred() -> Self {
        Self {
            atom_tolerance: INFERRED_ATOM_TOLERANCE,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `b(x) = (free part of x) 1_{trivial atom}` on the full measure; never a coboundary.
    Homomorphism(Cocycle),
    /// Shell cocycle on the part of the measure off the trivial character.
    Shell(Box<ShellCocycle>),
    /// Box measure with `|1 - nu_hat| >= 1/2` on the support; every cocycle is a coboundary.
    Smoothing(SmoothingMeasure),
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Witness::Homomorphism(_) => "homomorphism_cocycle",
            Witness::Shell(_) => "shell_cocycle",
            Witness::Smoothing(_) => "smoothing_measure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    /// `mu({1})`.
    pub trivial_mass: f64,
    /// `dim Hom(G, C)`.
    pub hom_dim: usize,
    /// Distance from the trivial character to the support of the rest of the measure.
    pub support_distance: f64,
    pub h1: Verdict,
    pub reduced_h1: Verdict,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

pub fn classify(mu: &DualMeasure, options: &ClassifyOptions) -> Result<ClassificationReport> {
    let decomposition = mu.decompose()?;
    let perp = &decomposition.perp;
    let g = mu.descriptor();
    let trivial_mass = decomposition.trivial_mass;
    let hom_dim = g.hom_to_c_dimension();
    let support_distance = perp.distance_to_support(&g.trivial_character())?;
    let trivial_positive = trivial_mass > options.atom_tolerance;
    let (h1, reduced_h1) = decide(trivial_positive, hom_dim > 0, support_distance > 0.0);

    let mut notes = Vec::new();
    let witness = if !options.witness {
        None
    } else if trivial_positive && hom_dim > 0 {
        Some(Witness::Homomorphism(homomorphism_cocycle(mu)?))
    } else if support_distance > 0.0 {
        Some(Witness::Smoothing(find_smoothing_measure(perp)?))
    } else {
        match build_nontrivial_cocycle(perp, options.shell_count) {
            Ok(sc) => Some(Witness::Shell(Box::new(sc))),
            Err(Error::Resolution { usable, requested }) if usable > 0 => {
                notes.push(format!("grid resolves {usable} of {requested} requested shells"));
                Some(Witness::Shell(Box::new(build_nontrivial_cocycle(perp, usable)?)))
            }
            Err(Error::Resolution { .. }) => {
                notes.push("grid resolves no shells; no witness attached".into());
                None
            }
            Err(e) => return Err(e),
        }
    };

    Ok(ClassificationReport {
        trivial_mass,
        hom_dim,
        support_distance,
        h1,
        reduced_h1,
        witness,
        notes,
    })
}

/// Cocycle into the fixed vectors: `b(e_i) = 1_{trivial atom}`, `b(t_j) = 0`.
fn homomorphism_cocycle(mu: &DualMeasure) -> Result<Cocycle> {
    let g = mu.descriptor();
    let t = mu
        .trivial_atom()
        .ok_or_else(|| Error::InconsistentInput("no atom at the trivial character".into()))?;
    let mut indicator = vec![Complex64::new(0.0, 0.0); mu.len()];
    indicator[t] = Complex64::new(1.0, 0.0);
    let values = (0..g.generator_count())
        .map(|k| {
            if k < g.free_rank() {
                indicator.clone()
            } else {
                vec![Complex64::new(0.0, 0.0); mu.len()]
            }
        })
        .collect();
    Cocycle::new(mu.clone(), values)
}
