//! The Bochner correspondence between normalized positive definite functions on
//! the group and probability measures on its dual.
//!
//! Functions are stored on a finite window `{x : |free(x)|_inf <= N}` (all
//! torsion parts included). The forward map integrates characters against a
//! measure; the inverse map recovers declared atoms by Cesàro averaging and the
//! continuous part by a nonnegative summability kernel.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{cis, Complex64, DualPoint, GroupDescriptor, GroupElement};
use crate::measure::{density_cells, Atom, DualMeasure, MASS_TOLERANCE};

/// Relative eigenvalue tolerance of the positive semidefiniteness test.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Smallest window accepted for Cesàro averaging on groups with a free part.
pub const MIN_CESARO_WINDOW: usize = 64;

/// Convergence tolerance of Cesàro atom estimates.
pub const CESARO_TOLERANCE: f64 = 1e-2;

/// Full Gram matrices are included in the PSD check up to this many elements.
const FULL_GRAM_LIMIT: usize = 640;
const MAX_SAMPLE_SIZE: usize = 32;

/// The box of group elements with free coordinates in `[-radius, radius]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    descriptor: GroupDescriptor,
    radius: usize,
    torsion: Vec<Vec<u64>>,
}

impl Window {
    pub fn new(descriptor: GroupDescriptor, radius: usize) -> Self {
        let torsion = descriptor.torsion_elements();
        Self {
            descriptor,
            radius,
            torsion,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn free_len(&self) -> usize {
        self.side().pow(self.descriptor.free_rank() as u32)
    }

    pub fn len(&self) -> usize {
        self.free_len() * self.torsion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element(&self, i: usize) -> GroupElement {
        let t = self.torsion.len();
        let mut rem = i / t;
        let d = self.descriptor.free_rank();
        let mut free = vec![0i64; d];
        for k in (0..d).rev() {
            free[k] = (rem % self.side()) as i64 - self.radius as i64;
            rem /= self.side();
        }
        GroupElement {
            free,
            torsion: self.torsion[i % t].clone(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.len()).map(|i| self.element(i))
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        x.free.iter().all(|m| m.unsigned_abs() as usize <= self.radius)
    }

    pub fn index_of(&self, x: &GroupElement) -> Option<usize> {
        if x.free.len() != self.descriptor.free_rank() || !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for &m in &x.free {
            idx = idx * self.side() + (m + self.radius as i64) as usize;
        }
        let mut t = 0usize;
        for (&r, &n) in x.torsion.iter().zip(self.descriptor.torsion_orders()) {
            if r >= n {
                return None;
            }
            t = t * n as usize + r as usize;
        }
        Some(idx * self.torsion.len() + t)
    }
}

/// A normalized function on a window of the group, claimed positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct PdFunction {
    window: Window,
    values: Vec<Complex64>,
}

impl PdFunction {
    /// Values are listed in [`Window`] order. Checks `phi(0) = 1`, Hermitian
    /// symmetry and `|phi| <= 1`.
    pub fn new(descriptor: GroupDescriptor, window_radius: usize, values: Vec<Complex64>) -> Result<Self> {
        let window = Window::new(descriptor, window_radius);
        if values.len() != window.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", window.len()),
                found: format!("{}", values.len()),
            });
        }
        let phi = Self { window, values };
        let g = phi.descriptor();
        let at_zero = phi.values[phi.window.index_of(&g.zero()).unwrap()];
        if (at_zero - Complex64::new(1.0, 0.0)).norm() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "phi(0) must be 1, got {at_zero}"
            )));
        }
        for (i, x) in phi.window.elements().enumerate() {
            let v = phi.values[i];
            if !v.re.is_finite() || !v.im.is_finite() || v.norm() > 1.0 + 1e-9 {
                return Err(Error::InvalidArgument(format!("|phi({x:?})| = {} exceeds 1", v.norm())));
            }
            let j = phi.window.index_of(&g.neg(&x)).unwrap();
            if (phi.values[j] - v.conj()).norm() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "phi is not Hermitian at {x:?}"
                )));
            }
        }
        Ok(phi)
    }

    pub fn from_fn<F>(descriptor: GroupDescriptor, window_radius: usize, f: F) -> Result<Self>
    where
        F: Fn(&GroupElement) -> Complex64,
    {
        let window = Window::new(descriptor.clone(), window_radius);
        let values = window.elements().map(|x| f(&x)).collect();
        Self::new(descriptor, window_radius, values)
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.window.descriptor
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn window_radius(&self) -> usize {
        self.window.radius
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, x: &GroupElement) -> Option<Complex64> {
        self.window.index_of(x).map(|i| self.values[i])
    }

    /// Same function on a smaller window.
    pub fn truncate(&self, radius: usize) -> Result<Self> {
        if radius > self.window.radius {
            return Err(Error::WindowTooSmall(format!(
                "cannot extend a window of radius {} to {radius}",
                self.window.radius
            )));
        }
        let g = self.descriptor().clone();
        let w = Window::new(g.clone(), radius);
        let values = w.elements().map(|x| self.get(&x).unwrap()).collect();
        Ok(Self { window: w, values })
    }
}

#[derive(Serialize, Deserialize)]
struct RawValue {
    free: Vec<i64>,
    #[serde(default)]
    torsion: Vec<u64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct RawFunction {
    group: GroupDescriptor,
    window: usize,
    values: Vec<RawValue>,
}

impl Serialize for PdFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawFunction {
            group: self.descriptor().clone(),
            window: self.window.radius,
            values: self
                .window
                .elements()
                .zip(&self.values)
                .map(|(x, v)| RawValue {
                    free: x.free,
                    torsion: x.torsion,
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PdFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawFunction::deserialize(d)?;
        let window = Window::new(raw.group.clone(), raw.window);
        let mut values: Vec<Option<Complex64>> = vec![None; window.len()];
        for v in raw.values {
            let torsion = if v.torsion.is_empty() {
                vec![0; raw.group.torsion_orders().len()]
            } else {
                v.torsion
            };
            let x = GroupElement { free: v.free, torsion };
            let i = window
                .index_of(&x)
                .ok_or_else(|| D::Error::custom(format!("{x:?} lies outside the window")))?;
            values[i] = Some(Complex64::new(v.re, v.im));
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| D::Error::custom("window is not fully populated"))?;
        PdFunction::new(raw.group, raw.window, values).map_err(D::Error::custom)
    }
}

/// Outcome of the positive semidefiniteness test.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdReport {
    pub positive_definite: bool,
    pub subsets_checked: usize,
    /// Smallest of `lambda_min / ||K||` over all tested Gram matrices.
    pub worst_relative_eigenvalue: f64,
    pub witness: Option<PsdWitness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdWitness {
    pub subset: Vec<GroupElement>,
    pub min_eigenvalue: f64,
}

/// Extremal eigenvalues of a Hermitian matrix.
pub(crate) fn hermitian_eigenvalues(k: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = (k + k.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `lambda_min` and spectral norm of a Hermitian matrix.
pub(crate) fn psd_margin(k: &DMatrix<Complex64>) -> (f64, f64) {
    let ev = hermitian_eigenvalues(k);
    let min = ev.first().copied().unwrap_or(0.0);
    let norm = ev.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    (min, norm)
}

fn gram(phi: &PdFunction, subset: &[GroupElement]) -> Result<DMatrix<Complex64>> {
    let g = phi.descriptor();
    let n = subset.len();
    let mut k = DMatrix::zeros(n, n);
    for (i, x) in subset.iter().enumerate() {
        for (j, y) in subset.iter().enumerate() {
            k[(i, j)] = phi.get(&g.sub(x, y)).ok_or_else(|| {
                Error::WindowTooSmall(format!(
                    "difference of {x:?} and {y:?} escapes the window of radius {}",
                    phi.window_radius()
                ))
            })?;
        }
    }
    Ok(k)
}

/// Tests the Gram matrices `[phi(x - y)]` over the given subsets.
pub fn check_positive_definite_on(phi: &PdFunction, subsets: &[Vec<GroupElement>]) -> Result<PsdReport> {
    let mut report = PsdReport {
        positive_definite: true,
        subsets_checked: 0,
        worst_relative_eigenvalue: f64::INFINITY,
        witness: None,
    };
    for s in subsets {
        for x in s {
            phi.descriptor().check_element(x)?;
        }
        let k = gram(phi, s)?;
        let (min, norm) = psd_margin(&k);
        report.subsets_checked += 1;
        let rel = if norm > 0.0 { min / norm } else { 0.0 };
        report.worst_relative_eigenvalue = report.worst_relative_eigenvalue.min(rel);
        if min < -PSD_TOLERANCE * norm {
            let worse = report
                .witness
                .as_ref()
                .is_none_or(|w| min < w.min_eigenvalue);
            report.positive_definite = false;
            if worse {
                report.witness = Some(PsdWitness {
                    subset: s.clone(),
                    min_eigenvalue: min,
                });
            }
        }
    }
    Ok(report)
}

/// Gram-matrix test over the full "forward box" `{0..N}^d x torsion` (when it
/// is small enough) plus `sample_count` random subsets of it. Differences of
/// elements of that box stay inside the window, so the test is total.
pub fn check_positive_definite(phi: &PdFunction, sample_count: usize, seed: u64) -> Result<PsdReport> {
    let g = phi.descriptor();
    let n = phi.window_radius();
    let pool: Vec<GroupElement> = phi
        .window
        .elements()
        .filter(|x| x.free.iter().all(|&m| m >= 0 && m as usize <= n))
        .collect();
    let mut subsets = Vec::with_capacity(sample_count + 1);
    if pool.len() <= FULL_GRAM_LIMIT {
        subsets.push(pool.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if pool.len() >= 2 {
        for _ in 0..sample_count {
            let size = rng.random_range(2..=pool.len().min(MAX_SAMPLE_SIZE));
            let pick = sample(&mut rng, pool.len(), size);
            subsets.push(pick.iter().map(|i| pool[i].clone()).collect());
        }
    }
    debug_assert!(subsets.iter().flatten().all(|x| g.check_element(x).is_ok()));
    check_positive_definite_on(phi, &subsets)
}

/// `phi(x) = integral of xi(x) dmu(xi)` on the window of radius `window_radius`.
pub fn bochner_forward(mu: &DualMeasure, window_radius: usize) -> Result<PdFunction> {
    let g = mu.descriptor().clone();
    let window = Window::new(g.clone(), window_radius);
    let masses = mu.masses();
    let points: Vec<&DualPoint> = mu.points().collect();
    let elements: Vec<GroupElement> = window.elements().collect();
    let values: Vec<Complex64> = elements
        .par_iter()
        .map(|x| {
            points
                .iter()
                .zip(&masses)
                .filter(|(_, &m)| m != 0.0)
                .map(|(p, &m)| g.character(p, x) * m)
                .sum()
        })
        .collect();
    PdFunction::new(g, window_radius, values)
}

/// Cesàro estimate of the atom of the spectral measure at one character.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomEstimate {
    pub value: f64,
    /// `(radius, average)` at `N/4`, `N/2` and `N`; a single exact entry for
    /// finite groups.
    pub averages: Vec<(usize, f64)>,
    pub converged: bool,
    pub warning: Option<String>,
}

fn box_average(phi: &PdFunction, xi: &DualPoint, radius: usize) -> f64 {
    let g = phi.descriptor();
    let sum: Complex64 = phi
        .window
        .elements()
        .zip(&phi.values)
        .filter(|(x, _)| x.free.iter().all(|m| m.unsigned_abs() as usize <= radius))
        .map(|(x, v)| v * g.character(xi, &x).conj())
        .sum();
    let count = ((2 * radius + 1) as f64).powi(g.free_rank() as i32) * g.torsion_order() as f64;
    sum.re / count
}

/// Spectral mass at `xi`: exact for finite groups, Cesàro average over growing
/// boxes otherwise.
pub fn spectral_atom(phi: &PdFunction, xi: &DualPoint) -> Result<AtomEstimate> {
    let g = phi.descriptor();
    g.check_dual(xi)?;
    if g.is_finite() {
        let v = box_average(phi, xi, 0);
        return Ok(AtomEstimate {
            value: v.clamp(0.0, 1.0),
            averages: vec![(0, v)],
            converged: true,
            warning: None,
        });
    }
    let n = phi.window_radius();
    if n < MIN_CESARO_WINDOW {
        return Err(Error::WindowTooSmall(format!(
            "Cesàro averaging needs a window of at least {MIN_CESARO_WINDOW}, got {n}"
        )));
    }
    let radii = [n / 4, n / 2, n];
    let averages: Vec<(usize, f64)> = radii.iter().map(|&r| (r, box_average(phi, xi, r))).collect();
    let late = (averages[2].1 - averages[1].1).abs();
    let early = (averages[1].1 - averages[0].1).abs();
    let warning = if late > CESARO_TOLERANCE {
        Some(format!("Cesàro averages still moving by {late:.3e} between N/2 and N"))
    } else if late > early + CESARO_TOLERANCE {
        Some(format!("Cesàro averages non-monotone: steps {early:.3e} then {late:.3e}"))
    } else {
        None
    };
    Ok(AtomEstimate {
        value: averages[2].1.clamp(0.0, 1.0),
        averages,
        converged: warning.is_none(),
        warning,
    })
}

/// Estimate of the spectral mass at the trivial character.
pub fn atom_at_trivial(phi: &PdFunction) -> Result<AtomEstimate> {
    spectral_atom(phi, &phi.descriptor().trivial_character())
}

/// Nonnegative summability kernels for the density estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingKernel {
    /// Cesàro means of the partial Fourier sums: weights `1 - |n|/(N+1)`.
    Fejer,
    /// Normalized square of the Fejér kernel of order `N/2`; error `O(N^-2)`
    /// on smooth densities instead of `O(N^-1)`.
    #[default]
    Jackson,
}

impl SmoothingKernel {
    /// Coefficient weights for lags `-n..=n`.
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            SmoothingKernel::Fejer => (0..=2 * n)
                .map(|i| 1.0 - (i as f64 - n as f64).abs() / (n as f64 + 1.0))
                .collect(),
            SmoothingKernel::Jackson => {
                let l = n / 2;
                let tri: Vec<f64> = (0..=2 * l)
                    .map(|i| 1.0 - (i as f64 - l as f64).abs() / (l as f64 + 1.0))
                    .collect();
                let mut conv = vec![0.0; 4 * l + 1];
                for (i, a) in tri.iter().enumerate() {
                    for (j, b) in tri.iter().enumerate() {
                        conv[i + j] += a * b;
                    }
                }
                let c0 = conv[2 * l];
                let mut w = vec![0.0; 2 * n + 1];
                for (k, c) in conv.iter().enumerate() {
                    w[n + k - 2 * l] = c / c0;
                }
                w
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct InverseOptions {
    pub grid_size: usize,
    /// Declared atom locations besides the trivial character.
    pub candidates: Vec<DualPoint>,
    pub kernel: SmoothingKernel,
    /// Cesàro estimates at or below this are not treated as atoms.
    pub atom_tolerance: f64,
    pub psd_samples: usize,
    pub seed: u64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            grid_size: crate::measure::DEFAULT_GRID_SIZE,
            candidates: Vec::new(),
            kernel: SmoothingKernel::default(),
            atom_tolerance: CESARO_TOLERANCE,
            psd_samples: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InverseResult {
    pub measure: DualMeasure,
    pub atom_estimates: Vec<(DualPoint, AtomEstimate)>,
    /// Mass clipped away from the smoothed density.
    pub negative_mass: f64,
    /// `max |forward(measure) - phi|` on the inner half-window.
    pub roundtrip_error: f64,
}

/// Recovers the spectral measure of `phi`.
pub fn bochner_inverse(phi: &PdFunction, options: &InverseOptions) -> Result<InverseResult> {
    let report = check_positive_definite(phi, options.psd_samples, options.seed)?;
    if let Some(w) = report.witness {
        let subset = w.subset.iter().filter_map(|x| phi.window.index_of(x)).collect();
        return Err(Error::NotPositiveDefinite {
            subset,
            min_eigenvalue: w.min_eigenvalue,
        });
    }
    let g = phi.descriptor().clone();
    let result = if g.is_finite() {
        inverse_finite(phi)?
    } else {
        inverse_torus(phi, options)?
    };
    let half = phi.window_radius() / 2;
    let forward = bochner_forward(&result.0, half)?;
    let roundtrip_error = forward
        .values
        .iter()
        .zip(phi.truncate(half)?.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(InverseResult {
        measure: result.0,
        atom_estimates: result.1,
        negative_mass: result.2,
        roundtrip_error,
    })
}

type Inversion = (DualMeasure, Vec<(DualPoint, AtomEstimate)>, f64);

fn inverse_finite(phi: &PdFunction) -> Result<Inversion> {
    let g = phi.descriptor().clone();
    let mut atoms = Vec::new();
    let mut estimates = Vec::new();
    let mut negative = 0.0;
    for xi in g.finite_dual() {
        let est = AtomEstimate {
            value: box_average(phi, &xi, 0),
            averages: Vec::new(),
            converged: true,
            warning: None,
        };
        let w = est.value;
        if w < -1e-9 {
            return Err(Error::InconsistentInput(format!(
                "negative Fourier coefficient {w:e} at character {:?}",
                xi.torsion
            )));
        }
        negative += (-w).max(0.0);
        if w > 1e-14 {
            atoms.push(Atom { point: xi.clone(), weight: w });
        }
        estimates.push((xi, est));
    }
    Ok((DualMeasure::from_atoms(g, atoms)?, estimates, negative))
}

fn inverse_torus(phi: &PdFunction, options: &InverseOptions) -> Result<Inversion> {
    let g = phi.descriptor().clone();
    for c in &options.candidates {
        g.check_dual(c)?;
    }
    let mut candidates = vec![g.trivial_character()];
    for c in &options.candidates {
        if !candidates.contains(c) {
            candidates.push(c.clone());
        }
    }
    let mut atoms = Vec::new();
    let mut estimates = Vec::new();
    for c in candidates {
        let est = spectral_atom(phi, &c)?;
        if est.value > options.atom_tolerance {
            atoms.push(Atom {
                point: c.clone(),
                weight: est.value,
            });
        }
        estimates.push((c, est));
    }
    let atom_mass: f64 = atoms.iter().map(|a| a.weight).sum();
    if atom_mass > 1.0 + 1e-6 {
        return Err(Error::InconsistentInput(format!(
            "declared atoms carry mass {atom_mass} > 1"
        )));
    }

    // Continuous remainder phi_c = phi - sum w_a xi_a.
    let window = &phi.window;
    let elements: Vec<GroupElement> = window.elements().collect();
    let residual: Vec<Complex64> = elements
        .iter()
        .zip(&phi.values)
        .map(|(x, v)| v - atoms.iter().map(|a| g.character(&a.point, x) * a.weight).sum::<Complex64>())
        .collect();

    let n = phi.window_radius();
    let lag = options.kernel.weights(n);
    let weights: Vec<f64> = elements
        .iter()
        .map(|x| x.free.iter().map(|&m| lag[(m + n as i64) as usize]).product())
        .collect();
    let d = g.free_rank();
    let norm = TAU.powi(d as i32) * g.torsion_order() as f64;

    let m = options.grid_size;
    let mut cells = Vec::new();
    let mut negative = 0.0;
    let continuous_mass = (1.0 - atom_mass).max(0.0);
    if continuous_mass > 1e-12 {
        for chi in g.finite_dual() {
            let mut block = density_cells(&g, m, &chi.torsion, |_| 0.0)?;
            block.par_iter_mut().for_each(|cell| {
                let xi = &cell.point;
                let s: Complex64 = elements
                    .iter()
                    .zip(&residual)
                    .zip(&weights)
                    .filter(|(_, &w)| w != 0.0)
                    .map(|((x, v), &w)| v * cis(-g.phase(xi, x)) * w)
                    .sum();
                cell.density = s.re / norm;
            });
            for cell in &mut block {
                if cell.density < 0.0 {
                    negative += -cell.density * cell.quadrature_weight;
                    cell.density = 0.0;
                }
            }
            cells.extend(block);
        }
        if negative > 1e-3 {
            return Err(Error::InconsistentInput(format!(
                "smoothed density has negative mass {negative:.3e}"
            )));
        }
        let mass: f64 = cells.iter().map(|c| c.density * c.quadrature_weight).sum();
        if mass > 0.0 {
            let scale = continuous_mass / mass;
            for c in &mut cells {
                c.density *= scale;
            }
        } else {
            cells.clear();
        }
    }
    let measure = if cells.is_empty() {
        DualMeasure::from_atoms(g, atoms)?
    } else {
        DualMeasure::new(g, atoms, cells, m)?
    };
    Ok((measure, estimates, negative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::poisson_kernel;
    use approx::assert_abs_diff_eq;

    fn z() -> GroupDescriptor {
        GroupDescriptor::integers(1)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn geometric(r: f64, n: usize) -> PdFunction {
        PdFunction::from_fn(z(), n, |x| c(r.powi(x.free[0].abs() as i32))).unwrap()
    }

    #[test]
    fn window_indexing_roundtrips() {
        let w = Window::new(GroupDescriptor::new(2, vec![2, 3]).unwrap(), 2);
        assert_eq!(w.len(), 25 * 6);
        for i in 0..w.len() {
            assert_eq!(w.index_of(&w.element(i)), Some(i));
        }
        let outside = GroupElement { free: vec![3, 0], torsion: vec![0, 0] };
        assert_eq!(w.index_of(&outside), None);
    }

    #[test]
    fn geometric_sequence_is_pd() {
        let r = check_positive_definite(&geometric(0.5, 16), 20, 1).unwrap();
        assert!(r.positive_definite);
        assert_eq!(r.subsets_checked, 21);
    }

    #[test]
    fn cosine_is_pd() {
        let phi = PdFunction::from_fn(z(), 12, |x| c((x.free[0] as f64 * 1.1).cos())).unwrap();
        assert!(check_positive_definite(&phi, 10, 2).unwrap().positive_definite);
    }

    #[test]
    fn explicit_triple_is_not_pd() {
        let vals = [0.0, -0.9, 0.9, 1.0, 0.9, -0.9, 0.0];
        let phi = PdFunction::from_fn(z(), 3, |x| c(vals[(x.free[0] + 3) as usize])).unwrap();
        // The 3x3 Toeplitz matrix [[1,.9,-.9],[.9,1,.9],[-.9,.9,1]] has
        // determinant 0.19 - 2 * 1.539 < 0, and its eigenvalues are
        // 1.9, 1.9 and -0.8 (characteristic polynomial checked by hand).
        let sub: Vec<GroupElement> = (0..3).map(|k| z().free_element(vec![k]).unwrap()).collect();
        let r = check_positive_definite_on(&phi, &[sub]).unwrap();
        assert!(!r.positive_definite);
        let w = r.witness.unwrap();
        assert_abs_diff_eq!(w.min_eigenvalue, -0.8, epsilon = 1e-12);

        let r = check_positive_definite(&phi, 5, 0).unwrap();
        assert!(!r.positive_definite);
    }

    #[test]
    fn escaping_subset_is_an_error() {
        let phi = geometric(0.5, 2);
        let sub = vec![z().free_element(vec![-2]).unwrap(), z().free_element(vec![2]).unwrap()];
        assert!(matches!(check_positive_definite_on(&phi, &[sub]), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn invalid_functions_are_rejected() {
        assert!(PdFunction::from_fn(z(), 2, |_| c(0.5)).is_err());
        let skew = [0.0, 0.2, 1.0, 0.3, 0.0];
        assert!(PdFunction::from_fn(z(), 2, |x| c(skew[(x.free[0] + 2) as usize])).is_err());
        assert!(PdFunction::from_fn(z(), 2, |x| c(if x.free[0] == 0 { 1.0 } else { 1.5 })).is_err());
    }

    #[test]
    fn forward_of_trivial_dirac_is_one() {
        let mu = DualMeasure::dirac(z(), z().trivial_character()).unwrap();
        let phi = bochner_forward(&mu, 5).unwrap();
        assert!(phi.values().iter().all(|v| *v == c(1.0)));
    }

    #[test]
    fn forward_of_single_character() {
        let t0 = 0.7;
        let mu = DualMeasure::dirac(z(), z().dual_point(vec![t0], vec![]).unwrap()).unwrap();
        let phi = bochner_forward(&mu, 6).unwrap();
        for x in phi.window().elements() {
            let want = Complex64::from_polar(1.0, t0 * x.free[0] as f64);
            assert!((phi.get(&x).unwrap() - want).norm() < 1e-14);
        }
    }

    #[test]
    fn forward_of_poisson_matches_closed_form() {
        let mu = DualMeasure::with_density(z(), vec![], 4096, vec![], |t| poisson_kernel(0.5, t[0])).unwrap();
        let phi = bochner_forward(&mu, 16).unwrap();
        for x in phi.window().elements() {
            let want = 0.5f64.powi(x.free[0].abs() as i32);
            assert!((phi.get(&x).unwrap() - c(want)).norm() <= 1e-8);
        }
    }

    #[test]
    fn atom_at_trivial_examples() {
        let ones = PdFunction::from_fn(z(), 64, |_| c(1.0)).unwrap();
        assert_abs_diff_eq!(atom_at_trivial(&ones).unwrap().value, 1.0, epsilon = 1e-12);

        let est = atom_at_trivial(&geometric(0.5, 256)).unwrap();
        // Closed form: (1 + 2 sum_{n<=256} 2^-n) / 513.
        assert_abs_diff_eq!(est.value, 3.0 / 513.0, epsilon = 1e-12);
        assert!(est.value < 1e-2);
        assert!(est.converged);

        let mixed = PdFunction::from_fn(z(), 256, |x| {
            (c(1.0) + Complex64::from_polar(1.0, 2.0 * x.free[0] as f64)) * 0.5
        })
        .unwrap();
        assert_abs_diff_eq!(atom_at_trivial(&mixed).unwrap().value, 0.5, epsilon = 1e-2);

        assert!(matches!(atom_at_trivial(&geometric(0.5, 16)), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn finite_group_atom_is_exact() {
        let g = GroupDescriptor::cyclic(6).unwrap();
        let phi = PdFunction::from_fn(g, 0, |x| c(if x.torsion[0] == 0 { 1.0 } else { 0.0 })).unwrap();
        assert_abs_diff_eq!(atom_at_trivial(&phi).unwrap().value, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_recovers_declared_atom() {
        let t0 = 1.0;
        let phi = PdFunction::from_fn(z(), 512, |x| Complex64::from_polar(1.0, t0 * x.free[0] as f64)).unwrap();
        let opts = InverseOptions {
            candidates: vec![z().dual_point(vec![t0], vec![]).unwrap()],
            ..Default::default()
        };
        let inv = bochner_inverse(&phi, &opts).unwrap();
        assert_eq!(inv.measure.atoms().len(), 1);
        assert_eq!(inv.measure.cells().len(), 0);
        assert_abs_diff_eq!(inv.measure.atoms()[0].weight, 1.0, epsilon = 1e-9);
        assert_eq!(inv.measure.atoms()[0].point.angles, vec![t0]);
    }

    fn poisson_sup_error(kernel: SmoothingKernel) -> f64 {
        let phi = geometric(0.5, 512);
        let opts = InverseOptions { kernel, ..Default::default() };
        let inv = bochner_inverse(&phi, &opts).unwrap();
        assert!(inv.measure.atoms().is_empty());
        inv.measure
            .cells()
            .iter()
            .map(|cell| (cell.density - poisson_kernel(0.5, cell.point.angles[0])).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn inverse_recovers_poisson_density() {
        assert!(poisson_sup_error(SmoothingKernel::Jackson) <= 1e-3);
    }

    #[test]
    fn fejer_bias_matches_closed_form() {
        // At theta = 0 the Fejér mean of P_r falls short by
        // (1/pi) (1/(N+1)) sum n r^n (+ a negligible tail) = 1.2409742e-3.
        let err = poisson_sup_error(SmoothingKernel::Fejer);
        assert_abs_diff_eq!(err, 1.2409742e-3, epsilon = 2e-8);
    }

    #[test]
    fn inverse_on_finite_group_is_exact() {
        let g = GroupDescriptor::cyclic(6).unwrap();
        let phi = PdFunction::from_fn(g, 0, |x| c(if x.torsion[0] == 0 { 1.0 } else { 0.0 })).unwrap();
        let inv = bochner_inverse(&phi, &InverseOptions::default()).unwrap();
        assert_eq!(inv.measure.atoms().len(), 6);
        for a in inv.measure.atoms() {
            assert_abs_diff_eq!(a.weight, 1.0 / 6.0, epsilon = 1e-15);
        }
        assert!(inv.roundtrip_error < 1e-14);
    }

    #[test]
    fn inverse_rejects_non_pd_input() {
        let vals = [0.0, -0.9, 0.9, 1.0, 0.9, -0.9, 0.0];
        let phi = PdFunction::from_fn(z(), 3, |x| c(vals[(x.free[0] + 3) as usize])).unwrap();
        assert!(matches!(
            bochner_inverse(&phi, &InverseOptions::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn jackson_weights_are_a_normalized_kernel() {
        let w = SmoothingKernel::Jackson.weights(8);
        assert_eq!(w.len(), 17);
        assert_eq!(w[8], 1.0);
        assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for k in 0..8 {
            assert_eq!(w[k], w[16 - k]);
        }
        // Outermost lag of the squared order-4 Fejér kernel: (1/5)^2 / c0.
        let c0: f64 = (0..=8).map(|i| (1.0 - (i as f64 - 4.0).abs() / 5.0).powi(2)).sum();
        assert_abs_diff_eq!(w[0], 0.04 / c0, epsilon = 1e-15);
    }

    #[test]
    fn function_json_roundtrip() {
        let g = GroupDescriptor::new(1, vec![2]).unwrap();
        let phi = PdFunction::from_fn(g, 2, |x| {
            c(0.5f64.powi(x.free[0].abs() as i32) * if x.torsion[0] == 0 { 1.0 } else { 0.5 })
        })
        .unwrap();
        let s = serde_json::to_string(&phi).unwrap();
        let back: PdFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, phi);
    }
}
