//! Approximation of a cocycle by coboundaries: cut out a shrinking
//! neighborhood `V_n` of the trivial character and solve exactly on the rest.

use super::smoothing::solve_masked;
use super::Cocycle;
use crate::error::{Error, Result};
use crate::group::{dual_distance_unchecked, Complex64};

/// Radii `r_n = initial * ratio^(n-1)` of the neighborhoods `V_n = {dist < r_n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSchedule {
    pub initial: f64,
    pub ratio: f64,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            ratio: 0.5,
        }
    }
}

impl RadiusSchedule {
    pub fn radius(&self, stage: usize) -> f64 {
        self.initial * self.ratio.powi(stage as i32 - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationStage {
    /// One-based.
    pub stage: usize,
    pub radius: f64,
    /// Primitive of `b` restricted to the complement of `V_n`.
    pub w: Vec<Complex64>,
    /// `max_i ||(rho(g_i) - 1) w - b(g_i)||`.
    pub residual: f64,
    /// `sum_i int_{V_n} |b(g_i)|^2 dmu`.
    pub tail_bound: f64,
    /// `mu(V_n)`.
    pub neighborhood_mass: f64,
    /// Side of the smoothing box, `None` when nothing lies outside `V_n`.
    pub smoothing_side: Option<usize>,
}

/// [`approximate_with_schedule`] with radii `1, 1/2, 1/4, ..`.
pub fn approximate_by_coboundaries(b: &Cocycle, stage_count: usize) -> Result<Vec<ApproximationStage>> {
    approximate_with_schedule(b, stage_count, RadiusSchedule::default())
}

pub fn approximate_with_schedule(
    b: &Cocycle,
    stage_count: usize,
    schedule: RadiusSchedule,
) -> Result<Vec<ApproximationStage>> {
    if !(schedule.initial > 0.0) || !(schedule.ratio > 0.0 && schedule.ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("invalid radius schedule {schedule:?}")));
    }
    let mu = b.measure();
    if mu.trivial_atom().is_some() {
        return Err(Error::AtomAtTrivial);
    }
    let trivial = mu.descriptor().trivial_character();
    let masses = mu.masses();
    let dist: Vec<f64> = mu.points().map(|p| dual_distance_unchecked(p, &trivial)).collect();
    let support = mu.support_mask();
    let mut stages = Vec::with_capacity(stage_count);
    for stage in 1..=stage_count {
        let radius = schedule.radius(stage);
        let outside: Vec<bool> = (0..mu.len()).map(|i| support[i] && dist[i] >= radius).collect();
        let (w, nu) = solve_masked(b, &outside)?;
        let near = |i: usize| dist[i] < radius;
        let tail_bound = b
            .generator_values()
            .iter()
            .map(|v| (0..mu.len()).filter(|&i| near(i)).map(|i| v[i].norm_sqr() * masses[i]).sum::<f64>())
            .sum();
        stages.push(ApproximationStage {
            stage,
            radius,
            residual: b.coboundary_residual(&w)?,
            tail_bound,
            neighborhood_mass: (0..mu.len()).filter(|&i| near(i)).map(|i| masses[i]).sum(),
            smoothing_side: nu.map(|n| n.side()),
            w,
        });
    }
    Ok(stages)
}
