//! Smoothing measures on the group and the coboundary solver built on them.

use rayon::prelude::*;

use super::Cocycle;
use crate::error::{Error, Result};
use crate::group::{cis, dual_distance_unchecked, Complex64, DualPoint, GroupDescriptor, GroupElement};
use crate::measure::DualMeasure;

/// Required lower bound for `|1 - nu_hat|` on the support.
pub const SMOOTHING_MARGIN: f64 = 0.5;

/// Below this `|1 - z|` the per-generator averages are summed term by term.
const DIRECT_SUM_BELOW: f64 = 1e-2;

/// Uniform probability measure on `{0, .., m-1}^d x T`, with `T` the torsion subgroup.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingMeasure {
    descriptor: GroupDescriptor,
    side: usize,
    gap: f64,
    margin: f64,
}

/// Averages of `xi(y g)` and of the cocycle coefficient of `y g` over one factor
/// of the box, for the generator `g`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FactorAverages {
    pub transform: Complex64,
    pub coefficient: Complex64,
}

fn free_averages(phase: f64, m: usize) -> FactorAverages {
    let one = Complex64::new(1.0, 0.0);
    let z = cis(phase);
    let mf = m as f64;
    if (one - z).norm() >= DIRECT_SUM_BELOW {
        let a = (one - cis(phase * mf)) / ((one - z) * mf);
        FactorAverages {
            transform: a,
            coefficient: (one - a) / (one - z),
        }
    } else {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let zj = cis(phase * j as f64);
            a += zj;
            b += zj * (m - 1 - j) as f64;
        }
        FactorAverages {
            transform: a / mf,
            coefficient: b / mf,
        }
    }
}

fn torsion_averages(phase: f64, trivial: bool, n: u64) -> FactorAverages {
    let one = Complex64::new(1.0, 0.0);
    if trivial {
        FactorAverages {
            transform: one,
            coefficient: Complex64::new((n - 1) as f64 / 2.0, 0.0),
        }
    } else {
        FactorAverages {
            transform: Complex64::new(0.0, 0.0),
            coefficient: one / (one - cis(phase)),
        }
    }
}

impl SmoothingMeasure {
    pub(crate) fn with_side(descriptor: GroupDescriptor, side: usize) -> Self {
        Self {
            descriptor,
            side,
            gap: 0.0,
            margin: 0.0,
        }
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    /// `m`, the side of the box.
    pub fn side(&self) -> usize {
        self.side
    }

    /// The support gap the measure was chosen for.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `min |1 - nu_hat|` over the points it was verified on.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn support_size(&self) -> usize {
        self.side.pow(self.descriptor.free_rank() as u32) * self.descriptor.torsion_order() as usize
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.support_size() as f64
    }

    pub fn support_points(&self) -> Vec<GroupElement> {
        let d = self.descriptor.free_rank();
        let free_count = self.side.pow(d as u32);
        let torsion = self.descriptor.torsion_elements();
        let mut out = Vec::with_capacity(free_count * torsion.len());
        for idx in 0..free_count {
            let mut rem = idx;
            let mut free = vec![0i64; d];
            for k in (0..d).rev() {
                free[k] = (rem % self.side) as i64;
                rem /= self.side;
            }
            for t in &torsion {
                out.push(GroupElement {
                    free: free.clone(),
                    torsion: t.clone(),
                });
            }
        }
        out
    }

    /// `nu_hat(xi) = sum_y nu(y) xi(y)`, summed directly over the support.
    pub fn fourier_transform(&self, xi: &DualPoint) -> Result<Complex64> {
        self.descriptor.check_dual(xi)?;
        let w = self.weight();
        Ok(self
            .support_points()
            .iter()
            .map(|y| self.descriptor.character(xi, y) * w)
            .sum())
    }

    /// Per-generator averages; `nu_hat` is the product of the transforms.
    pub(crate) fn factors(&self, xi: &DualPoint) -> Vec<FactorAverages> {
        let mut out: Vec<FactorAverages> = xi.angles.iter().map(|&t| free_averages(t, self.side)).collect();
        for (&c, &n) in xi.torsion.iter().zip(self.descriptor.torsion_orders()) {
            let phase = std::f64::consts::TAU * c as f64 / n as f64;
            out.push(torsion_averages(phase, c == 0, n));
        }
        out
    }

    pub(crate) fn transform_product(&self, xi: &DualPoint) -> Complex64 {
        self.factors(xi).iter().map(|f| f.transform).product()
    }
}

/// Smallest box measure with `|1 - nu_hat| >= 1/2` on `points`, which must stay
/// at least `gap` away from the trivial character.
pub(crate) fn smoothing_for(descriptor: &GroupDescriptor, points: &[&DualPoint], gap: f64) -> Result<SmoothingMeasure> {
    if !(gap > 0.0) {
        return Err(Error::NoGap);
    }
    let trivial = descriptor.trivial_character();
    let mut sorted: Vec<(f64, &DualPoint)> = points
        .iter()
        .map(|p| (dual_distance_unchecked(p, &trivial), *p))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // |nu_hat| <= 1 / (m sin(gap / 2)) along the coordinate realizing the gap.
    let bound = (2.0 / (gap.min(std::f64::consts::PI) / 2.0).sin()).ceil() as usize;
    for side in 1..=4 * bound.max(1) {
        let mut nu = SmoothingMeasure::with_side(descriptor.clone(), side);
        let margin = sorted
            .iter()
            .map(|(_, p)| (1.0 - nu.transform_product(p)).norm())
            .try_fold(f64::INFINITY, |acc, v| if v >= SMOOTHING_MARGIN { Some(acc.min(v)) } else { None });
        if let Some(margin) = margin {
            nu.gap = gap;
            nu.margin = margin;
            return Ok(nu);
        }
    }
    Err(Error::InconsistentInput(format!(
        "no box measure up to side {} separates the support from the trivial character",
        4 * bound
    )))
}

/// Finds the smoothing measure for the numerical support of `mu_perp`.
pub fn find_smoothing_measure(mu_perp: &DualMeasure) -> Result<SmoothingMeasure> {
    let g = mu_perp.descriptor();
    let gap = mu_perp.distance_to_support(&g.trivial_character())?;
    let points: Vec<&DualPoint> = (0..mu_perp.len())
        .filter(|&i| mu_perp.in_support(i))
        .map(|i| mu_perp.point(i))
        .collect();
    smoothing_for(g, &points, gap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoboundarySolution {
    /// `w` with `(rho(g_i) - 1) w = b(g_i)`.
    pub w: Vec<Complex64>,
    pub smoothing: Option<SmoothingMeasure>,
    /// `max_i ||(rho(g_i) - 1) w - b(g_i)||`.
    pub residual: f64,
    /// `max_i ||b(g_i)||`.
    pub cocycle_norm: f64,
}

/// `v = sum_y nu(y) b(y)` and `w = v / (nu_hat - 1)` on the indices in `mask`;
/// zero elsewhere.
pub(crate) fn solve_masked(b: &Cocycle, mask: &[bool]) -> Result<(Vec<Complex64>, Option<SmoothingMeasure>)> {
    let mu = b.measure();
    let g = mu.descriptor();
    let trivial = g.trivial_character();
    let idx: Vec<usize> = (0..mu.len()).filter(|&i| mask[i]).collect();
    if idx.is_empty() {
        return Ok((vec![Complex64::new(0.0, 0.0); mu.len()], None));
    }
    let points: Vec<&DualPoint> = idx.iter().map(|&i| mu.point(i)).collect();
    let gap = points
        .iter()
        .map(|p| dual_distance_unchecked(p, &trivial))
        .fold(f64::INFINITY, f64::min);
    let nu = smoothing_for(g, &points, gap)?;
    let values = b.generator_values();
    let solved: Vec<(usize, Complex64)> = idx
        .par_iter()
        .map(|&i| {
            let factors = nu.factors(mu.point(i));
            let mut prefix = Complex64::new(1.0, 0.0);
            let mut v = Complex64::new(0.0, 0.0);
            for (k, f) in factors.iter().enumerate() {
                v += prefix * f.coefficient * values[k][i];
                prefix *= f.transform;
            }
            (i, v / (prefix - 1.0))
        })
        .collect();
    let mut w = vec![Complex64::new(0.0, 0.0); mu.len()];
    for (i, v) in solved {
        w[i] = v;
    }
    Ok((w, Some(nu)))
}

/// Solves `(rho(x) - 1) w = b(x)` when the support stays away from the trivial character.
pub fn solve_coboundary(b: &Cocycle) -> Result<CoboundarySolution> {
    let mu = b.measure();
    let gap = mu.distance_to_support(&mu.descriptor().trivial_character())?;
    if !(gap > 0.0) {
        return Err(Error::NoGap);
    }
    let (w, smoothing) = solve_masked(b, &mu.support_mask())?;
    Ok(CoboundarySolution {
        residual: b.coboundary_residual(&w)?,
        cocycle_norm: b.norm(),
        w,
        smoothing,
    })
}
