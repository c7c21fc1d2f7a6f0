//! 1-cocycles of the multiplication representation on `L^2(dual, mu)`.
//!
//! A cocycle is stored by its values on the standard generators. The value at
//! any other element follows from `b(x + y) = rho(x) b(y) + b(x)`; the
//! coboundary of `w` is `b(x) = (rho(x) - 1) w`.

mod approximation;
mod classify;
mod shells;
mod smoothing;

pub use approximation::{approximate_by_coboundaries, approximate_with_schedule, ApproximationStage, RadiusSchedule};
pub use classify::{
    classify, decide, ClassificationReport, ClassifyOptions, Verdict, Witness, EXPLICIT_ATOM_TOLERANCE,
    INFERRED_ATOM_TOLERANCE,
};
pub use shells::{build_nontrivial_cocycle, ObstructionStep, PartialSumBound, Shell, ShellCocycle};
pub use smoothing::{find_smoothing_measure, solve_coboundary, CoboundarySolution, SmoothingMeasure};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{cis, Complex64, GroupDescriptor, GroupElement};
use crate::measure::DualMeasure;

/// Pass threshold for the compatibility check, in weighted `L^2`.
pub const COCYCLE_TOLERANCE: f64 = 1e-9;

/// Number of random derived pairs checked by [`validate_cocycle`].
pub const RANDOM_PAIRS: usize = 10;

const RANDOM_PAIR_RADIUS: i64 = 3;
const VALIDATION_SEED: u64 = 7;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `sum_{j<k} e^{i j phase}`.
pub(crate) fn geometric_sum(phase: f64, k: u64) -> Complex64 {
    let z = cis(phase);
    let one = Complex64::new(1.0, 0.0);
    if (one - z).norm() > 1e-2 {
        (one - cis(phase * k as f64)) / (one - z)
    } else {
        (0..k).map(|j| cis(phase * j as f64)).sum()
    }
}

/// Coefficient `c` with `b(n g) = c * b(g)` for a generator of phase `phase`.
pub(crate) fn step_coefficient(phase: f64, n: i64) -> Complex64 {
    if n >= 0 {
        geometric_sum(phase, n as u64)
    } else {
        -cis(phase * n as f64) * geometric_sum(phase, n.unsigned_abs())
    }
}

fn coordinates(x: &GroupElement) -> Vec<i64> {
    x.free
        .iter()
        .copied()
        .chain(x.torsion.iter().map(|&r| r as i64))
        .collect()
}

fn weighted_norm(masses: &[f64], f: impl IndexedParallelIterator<Item = Complex64>) -> f64 {
    f.zip(masses.par_iter())
        .map(|(v, m)| v.norm_sqr() * m)
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    measure: DualMeasure,
    values: Vec<Vec<Complex64>>,
}

impl Cocycle {
    /// `generator_values[i]` is `b(g_i)` for the standard generators of the group.
    pub fn new(measure: DualMeasure, generator_values: Vec<Vec<Complex64>>) -> Result<Self> {
        let k = measure.descriptor().generator_count();
        if generator_values.len() != k {
            return Err(Error::DimensionMismatch {
                expected: format!("{k} generator values"),
                found: format!("{}", generator_values.len()),
            });
        }
        if let Some(v) = generator_values.iter().find(|v| v.len() != measure.len()) {
            return Err(Error::DimensionMismatch {
                expected: format!("vectors of length {}", measure.len()),
                found: format!("length {}", v.len()),
            });
        }
        if generator_values.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("cocycle values must be finite".into()));
        }
        Ok(Self {
            measure,
            values: generator_values,
        })
    }

    pub fn zero(measure: DualMeasure) -> Self {
        let k = measure.descriptor().generator_count();
        let values = vec![vec![zero(); measure.len()]; k];
        Self { measure, values }
    }

    /// The coboundary `b(x) = (rho(x) - 1) u`.
    pub fn coboundary(measure: DualMeasure, u: &[Complex64]) -> Result<Self> {
        if u.len() != measure.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", measure.len()),
                found: format!("length {}", u.len()),
            });
        }
        let values = measure
            .descriptor()
            .generators()
            .iter()
            .map(|g| {
                measure
                    .points()
                    .zip(u)
                    .map(|(p, v)| (measure.descriptor().character(p, g) - 1.0) * v)
                    .collect()
            })
            .collect();
        Self::new(measure, values)
    }

    pub fn measure(&self) -> &DualMeasure {
        &self.measure
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        self.measure.descriptor()
    }

    pub fn generator_values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    /// `max_i ||b(g_i)||`.
    pub fn norm(&self) -> f64 {
        let masses = self.measure.masses();
        self.values
            .iter()
            .map(|v| weighted_norm(&masses, v.par_iter().copied()))
            .fold(0.0, f64::max)
    }

    /// `b(x)`, expanded along the generators in order.
    pub fn value_at(&self, x: &GroupElement) -> Result<Vec<Complex64>> {
        let g = self.descriptor();
        g.check_element(x)?;
        let gens = g.generators();
        let coords = coordinates(x);
        let points: Vec<_> = self.measure.points().collect();
        Ok(points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut acc = zero();
                let mut prefix = 0.0;
                for (k, gk) in gens.iter().enumerate() {
                    if coords[k] == 0 {
                        continue;
                    }
                    let ph = g.phase(p, gk);
                    acc += cis(prefix) * step_coefficient(ph, coords[k]) * self.values[k][i];
                    prefix += ph * coords[k] as f64;
                }
                acc
            })
            .collect())
    }

    /// The cocycle with values zeroed outside `mask` (its projection onto the
    /// functions vanishing off `mask`).
    pub fn restricted(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.measure.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("mask of length {}", self.measure.len()),
                found: format!("length {}", mask.len()),
            });
        }
        let values = self
            .values
            .iter()
            .map(|v| v.iter().zip(mask).map(|(z, &keep)| if keep { *z } else { zero() }).collect())
            .collect();
        Ok(Self {
            measure: self.measure.clone(),
            values,
        })
    }

    /// `max_i ||(rho(g_i) - 1) w - b(g_i)||`.
    pub fn coboundary_residual(&self, w: &[Complex64]) -> Result<f64> {
        let gens = self.descriptor().generators();
        self.max_residual_over(&gens, w)
    }

    /// `max ||(rho(x) - 1) w - b(x)||` over the box `|x|_inf <= radius`.
    pub fn box_residual(&self, w: &[Complex64], radius: usize) -> Result<f64> {
        let elements: Vec<GroupElement> =
            crate::bochner::Window::new(self.descriptor().clone(), radius).elements().collect();
        self.max_residual_over(&elements, w)
    }

    fn max_residual_over(&self, elements: &[GroupElement], w: &[Complex64]) -> Result<f64> {
        if w.len() != self.measure.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.measure.len()),
                found: format!("length {}", w.len()),
            });
        }
        let g = self.descriptor();
        let masses = self.measure.masses();
        let points: Vec<_> = self.measure.points().collect();
        let mut worst = 0.0f64;
        for x in elements {
            let bx = self.value_at(x)?;
            let diff = points
                .par_iter()
                .zip(w.par_iter())
                .zip(bx.par_iter())
                .map(|((p, wv), bv)| (g.character(p, x) - 1.0) * wv - bv);
            worst = worst.max(weighted_norm(&masses, diff));
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleCheck {
    pub passed: bool,
    /// Largest violation of the compatibility relation on generator pairs.
    pub generator_pair_violation: f64,
    /// Largest violation of `(1 - xi(x)) b(y) = (1 - xi(y)) b(x)`.
    pub compatibility_violation: f64,
    /// Largest `||b(x + y) - rho(x) b(y) - b(x)||` over the random pairs.
    pub extension_violation: f64,
    /// Largest `||b(n_j t_j)||` over the cyclic generators.
    pub torsion_violation: f64,
    pub pairs_checked: usize,
}

impl CocycleCheck {
    pub fn max_violation(&self) -> f64 {
        self.compatibility_violation
            .max(self.extension_violation)
            .max(self.torsion_violation)
    }
}

/// Checks the compatibility relation on all generator pairs and on random
/// derived pairs, the extension rule on those pairs, and `b(n_j t_j) = 0`.
pub fn validate_cocycle(b: &Cocycle) -> CocycleCheck {
    let g = b.descriptor();
    let masses = b.measure.masses();
    let points: Vec<_> = b.measure.points().collect();
    let compat = |x: &GroupElement, bx: &[Complex64], y: &GroupElement, by: &[Complex64]| {
        let diff = points.par_iter().enumerate().map(|(i, p)| {
            (1.0 - g.character(p, x)) * by[i] - (1.0 - g.character(p, y)) * bx[i]
        });
        weighted_norm(&masses, diff)
    };

    let gens = g.generators();
    let mut compatibility = 0.0f64;
    let mut pairs = 0;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            compatibility = compatibility.max(compat(&gens[i], &b.values[i], &gens[j], &b.values[j]));
            pairs += 1;
        }
    }
    let generator_pair_violation = compatibility;

    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let mut random = || {
        let free = (0..g.free_rank())
            .map(|_| rng.random_range(-RANDOM_PAIR_RADIUS..=RANDOM_PAIR_RADIUS))
            .collect();
        let torsion = g.torsion_orders().iter().map(|&n| rng.random_range(0..n as i64)).collect();
        g.element(free, torsion).expect("sampled within the group")
    };
    let mut extension = 0.0f64;
    for _ in 0..RANDOM_PAIRS {
        let x = random();
        let y = random();
        let bx = b.value_at(&x).expect("checked element");
        let by = b.value_at(&y).expect("checked element");
        compatibility = compatibility.max(compat(&x, &bx, &y, &by));
        let bxy = b.value_at(&g.add(&x, &y)).expect("checked element");
        let diff = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| bxy[i] - g.character(p, &x) * by[i] - bx[i]);
        extension = extension.max(weighted_norm(&masses, diff));
        pairs += 1;
    }

    let mut torsion = 0.0f64;
    for (j, &n) in g.torsion_orders().iter().enumerate() {
        let k = g.free_rank() + j;
        let diff = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| geometric_sum(g.phase(p, &gens[k]), n) * b.values[k][i]);
        torsion = torsion.max(weighted_norm(&masses, diff));
    }

    let mut check = CocycleCheck {
        passed: false,
        generator_pair_violation,
        compatibility_violation: compatibility,
        extension_violation: extension,
        torsion_violation: torsion,
        pairs_checked: pairs,
    };
    check.passed = check.max_violation() <= COCYCLE_TOLERANCE;
    check
}
