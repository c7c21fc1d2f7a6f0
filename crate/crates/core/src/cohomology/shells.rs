//! Cocycles that are not coboundaries, built from dyadic shells around the
//! trivial character.
//!
//! With `K_k = {|x|_inf <= k}` and
//! `U_k = {xi : max_{g in K_k} |xi(g) - 1| < 2^-k}`, the levels are `k_0 = 0`
//! and `k_n = min{k > k_(n-1) : mu(U_k) < mu(U_(k_(n-1)))}`. The shells are
//! `C_n = U_(k_n) \ U_(k_(n+1))` and `b(x) = sum_n (xi(x) - 1) 1_(C_n) / sqrt(mu(C_n))`.

use rayon::prelude::*;

use super::Cocycle;
use crate::bochner::Window;
use crate::error::{Error, Result};
use crate::group::{cis, dual_distance_unchecked, Complex64, GroupElement};
use crate::measure::DualMeasure;

/// Levels beyond this are not searched; `2^-k` is below the grid resolution long before.
const MAX_LEVEL: usize = 60;

/// Largest `l` for which the partial-sum bounds are certified.
const CERTIFIED_BOXES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    /// `k_n`.
    pub level: usize,
    /// `mu(U_(k_n))`.
    pub neighborhood_mass: f64,
    /// `mu(C_n)`.
    pub mass: f64,
    /// Indices into the measure, ascending.
    pub members: Vec<usize>,
    /// Smallest distance from the trivial character over the members.
    pub inner_distance: f64,
}

/// Partial sums `sum_n ||(rho(x) - 1) eta_n||^2` maximized over `x` in `K_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumBound {
    pub ell: usize,
    /// Max over `x` of the sum over `n >= l`.
    pub max_tail: f64,
    /// `sum_{n >= l} 4^-k_n`.
    pub level_bound: f64,
    /// Max over `x` of the sum over all shells.
    pub max_total: f64,
    /// `4 l + 4/3`.
    pub total_bound: f64,
}

impl PartialSumBound {
    pub const TAIL_BOUND: f64 = 4.0 / 3.0;

    pub fn holds(&self) -> bool {
        self.max_tail <= self.level_bound && self.max_tail <= Self::TAIL_BOUND && self.max_total <= self.total_bound
    }
}

/// `I_delta = int_{dist(xi, 1) > delta} |sum_n eta_n|^2 dmu` with `delta` just
/// below `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionStep {
    pub threshold: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellCocycle {
    pub cocycle: Cocycle,
    pub shells: Vec<Shell>,
    /// Number of shells the grid can resolve.
    pub usable_shells: usize,
    pub partial_sums: Vec<PartialSumBound>,
    /// One step per shell, thresholds descending.
    pub obstruction: Vec<ObstructionStep>,
}

impl ShellCocycle {
    /// Smallest increase of `I_delta` between consecutive thresholds (the first
    /// step counts from zero).
    pub fn min_obstruction_increment(&self) -> f64 {
        let mut prev = 0.0;
        let mut min = f64::INFINITY;
        for s in &self.obstruction {
            min = min.min(s.integral - prev);
            prev = s.integral;
        }
        min
    }
}

struct Level {
    k: usize,
    members: Vec<usize>,
    mass: f64,
}

/// Elements of `K_k`, outermost first so that most points are rejected early.
fn ball(mu: &DualMeasure, k: usize) -> Vec<GroupElement> {
    let mut elems: Vec<GroupElement> = Window::new(mu.descriptor().clone(), k).elements().collect();
    elems.sort_by_key(|x| std::cmp::Reverse(x.free.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0)));
    elems
}

/// `U_0, U_1, ..` restricted to the numerical support, until a level is empty.
fn neighborhoods(mu: &DualMeasure, masses: &[f64]) -> Vec<Level> {
    let g = mu.descriptor();
    let mut current: Vec<usize> = (0..mu.len()).filter(|&i| mu.in_support(i)).collect();
    let mut levels = vec![Level {
        k: 0,
        mass: current.iter().map(|&i| masses[i]).sum(),
        members: current.clone(),
    }];
    for k in 1..=MAX_LEVEL {
        let radius = 0.5f64.powi(k as i32);
        let elems = ball(mu, k);
        current = current
            .par_iter()
            .copied()
            .filter(|&i| {
                let p = mu.point(i);
                elems.iter().all(|x| (cis(g.phase(p, x)) - 1.0).norm() < radius)
            })
            .collect();
        levels.push(Level {
            k,
            mass: current.iter().map(|&i| masses[i]).sum(),
            members: current.clone(),
        });
        if current.is_empty() {
            break;
        }
    }
    levels
}

/// Builds the shell cocycle with `shell_count` shells on `mu_perp`.
pub fn build_nontrivial_cocycle(mu_perp: &DualMeasure, shell_count: usize) -> Result<ShellCocycle> {
    if shell_count == 0 {
        return Err(Error::InvalidArgument("shell_count must be positive".into()));
    }
    let g = mu_perp.descriptor();
    if mu_perp.trivial_atom().is_some() {
        return Err(Error::AtomAtTrivial);
    }
    let trivial = g.trivial_character();
    let gap = mu_perp.distance_to_support(&trivial)?;
    if gap > 0.0 {
        return Err(Error::WrongRegime(format!(
            "the support stays {gap:.6} away from the trivial character; solve the coboundary instead"
        )));
    }
    let masses = mu_perp.masses();
    let levels = neighborhoods(mu_perp, &masses);

    // k_0 = 0, then each strict drop in mass (nested sets, so fewer members).
    let mut chosen: Vec<&Level> = vec![&levels[0]];
    for lvl in &levels[1..] {
        if lvl.members.len() < chosen.last().unwrap().members.len() {
            chosen.push(lvl);
        }
    }
    // C_n needs U_(k_(n+1)) to be resolved as well.
    let resolved = chosen.iter().skip(1).filter(|l| !l.members.is_empty()).count();
    let usable = resolved.saturating_sub(1);
    if usable < shell_count {
        return Err(Error::Resolution {
            requested: shell_count,
            usable,
        });
    }

    let mut shells = Vec::with_capacity(shell_count);
    let mut shell_of = vec![usize::MAX; mu_perp.len()];
    for n in 1..=shell_count {
        let outer = chosen[n];
        let inner = chosen[n + 1];
        let mut inside = vec![false; mu_perp.len()];
        for &i in &inner.members {
            inside[i] = true;
        }
        let members: Vec<usize> = outer.members.iter().copied().filter(|&i| !inside[i]).collect();
        for &i in &members {
            shell_of[i] = n - 1;
        }
        let mass: f64 = members.iter().map(|&i| masses[i]).sum();
        let inner_distance = members
            .iter()
            .map(|&i| dual_distance_unchecked(mu_perp.point(i), &trivial))
            .fold(f64::INFINITY, f64::min);
        shells.push(Shell {
            level: outer.k,
            neighborhood_mass: outer.mass,
            mass,
            members,
            inner_distance,
        });
    }

    let gens = g.generators();
    let values: Vec<Vec<Complex64>> = gens
        .iter()
        .map(|x| {
            (0..mu_perp.len())
                .map(|i| match shell_of[i] {
                    usize::MAX => Complex64::new(0.0, 0.0),
                    n => (g.character(mu_perp.point(i), x) - 1.0) / shells[n].mass.sqrt(),
                })
                .collect()
        })
        .collect();
    let cocycle = Cocycle::new(mu_perp.clone(), values)?;

    let partial_sums = (1..=CERTIFIED_BOXES.min(shell_count))
        .map(|ell| partial_sum_bound(mu_perp, &masses, &shells, ell))
        .collect();
    let obstruction = obstruction_steps(mu_perp, &masses, &shells);

    Ok(ShellCocycle {
        cocycle,
        shells,
        usable_shells: usable,
        partial_sums,
        obstruction,
    })
}

fn partial_sum_bound(mu: &DualMeasure, masses: &[f64], shells: &[Shell], ell: usize) -> PartialSumBound {
    let g = mu.descriptor();
    let per_shell = |x: &GroupElement, s: &Shell| -> f64 {
        s.members
            .iter()
            .map(|&i| (g.character(mu.point(i), x) - 1.0).norm_sqr() * masses[i])
            .sum::<f64>()
            / s.mass
    };
    let mut max_tail = 0.0f64;
    let mut max_total = 0.0f64;
    for x in Window::new(g.clone(), ell).elements() {
        let terms: Vec<f64> = shells.iter().map(|s| per_shell(&x, s)).collect();
        max_tail = max_tail.max(terms[ell - 1..].iter().sum());
        max_total = max_total.max(terms.iter().sum());
    }
    PartialSumBound {
        ell,
        max_tail,
        level_bound: shells[ell - 1..].iter().map(|s| 0.25f64.powi(s.level as i32)).sum(),
        max_total,
        total_bound: 4.0 * ell as f64 + PartialSumBound::TAIL_BOUND,
    }
}

fn obstruction_steps(mu: &DualMeasure, masses: &[f64], shells: &[Shell]) -> Vec<ObstructionStep> {
    let trivial = mu.descriptor().trivial_character();
    let mut thresholds: Vec<f64> = shells.iter().map(|s| s.inner_distance).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    let dist: Vec<Vec<(f64, f64)>> = shells
        .iter()
        .map(|s| {
            s.members
                .iter()
                .map(|&i| (dual_distance_unchecked(mu.point(i), &trivial), masses[i] / s.mass))
                .collect()
        })
        .collect();
    thresholds
        .into_iter()
        .map(|t| ObstructionStep {
            threshold: t,
            integral: dist
                .iter()
                .map(|shell| shell.iter().filter(|(d, _)| *d >= t).map(|(_, w)| w).sum::<f64>())
                .sum(),
        })
        .collect()
}
