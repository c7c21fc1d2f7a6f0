//! Finite-window GNS construction.
//!
//! The pre-Hilbert space is spanned by point masses `delta_x` on the window
//! `|x|_inf <= N`, with inner product `<delta_x, delta_y> = phi(x - y)`. The
//! cyclic vector is `delta_0` and translation by `t` sends `delta_x` to
//! `delta_{x+t}` whenever that stays inside the window.

use nalgebra::DMatrix;

use crate::bochner::{hermitian_eigenvalues, PdFunction, Window, PSD_TOLERANCE};
use crate::error::{Error, Result};
use crate::group::{Complex64, GroupDescriptor, GroupElement};
use crate::measure::DualMeasure;

const MAX_GNS_DIMENSION: usize = 4096;

#[derive(Debug, Clone)]
pub struct GnsModel {
    window: Window,
    kernel: DMatrix<Complex64>,
    min_eigenvalue: f64,
    spectral_norm: f64,
}

/// Builds the kernel model on the largest window whose differences stay inside
/// the window of `phi` (radius `N/2`).
pub fn build_gns(phi: &PdFunction) -> Result<GnsModel> {
    let g = phi.descriptor().clone();
    let window = Window::new(g.clone(), phi.window_radius() / 2);
    if window.len() > MAX_GNS_DIMENSION {
        return Err(Error::InvalidArgument(format!(
            "GNS window has {} elements (limit {MAX_GNS_DIMENSION})",
            window.len()
        )));
    }
    let elements: Vec<GroupElement> = window.elements().collect();
    let n = elements.len();
    let mut kernel = DMatrix::zeros(n, n);
    for (i, x) in elements.iter().enumerate() {
        for (j, y) in elements.iter().enumerate() {
            kernel[(i, j)] = phi
                .get(&g.sub(x, y))
                .expect("differences of the half window lie in the window");
        }
    }
    let ev = hermitian_eigenvalues(&kernel);
    let min_eigenvalue = ev.first().copied().unwrap_or(0.0);
    let spectral_norm = ev.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    if min_eigenvalue < -PSD_TOLERANCE * spectral_norm {
        return Err(Error::NotPositiveDefinite {
            subset: (0..n).collect(),
            min_eigenvalue,
        });
    }
    let model = GnsModel {
        window,
        kernel,
        min_eigenvalue,
        spectral_norm,
    };

    // <pi(t) xi, xi> = phi(t) on the whole window.
    let cyclic = model.cyclic_vector();
    for t in model.window.elements() {
        let v = model.inner(&model.translate(&t, &cyclic)?, &cyclic)?;
        let want = phi.get(&t).unwrap();
        if (v - want).norm() > 1e-12 {
            return Err(Error::InconsistentInput(format!(
                "cyclic coefficient at {t:?} is {v}, expected {want}"
            )));
        }
    }
    Ok(model)
}

impl GnsModel {
    pub fn descriptor(&self) -> &GroupDescriptor {
        self.window.descriptor()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn window_radius(&self) -> usize {
        self.window.radius()
    }

    pub fn kernel_matrix(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    pub fn dimension(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    /// Number of eigenvalues above `rel_tol * ||K||`; the dimension of the
    /// cyclic subspace seen by the window.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        hermitian_eigenvalues(&self.kernel)
            .into_iter()
            .filter(|&e| e > rel_tol * self.spectral_norm)
            .count()
    }

    /// The coefficient vector of `delta_0`.
    pub fn cyclic_vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dimension()];
        let zero = self.descriptor().zero();
        v[self.window.index_of(&zero).unwrap()] = Complex64::new(1.0, 0.0);
        v
    }

    /// `<u, v> = sum_{x,y} u_x conj(v_y) phi(x - y)`.
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
        let n = self.dimension();
        if u.len() != n || v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("vectors of length {n}"),
                found: format!("{} and {}", u.len(), v.len()),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            if *ui == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row: Complex64 = v
                .iter()
                .enumerate()
                .map(|(j, vj)| self.kernel[(i, j)] * vj.conj())
                .sum();
            acc += ui * row;
        }
        Ok(acc)
    }

    /// `pi(t) u`: shifts coefficients by `t`. Fails when mass would leave the window.
    pub fn translate(&self, t: &GroupElement, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let g = self.descriptor();
        g.check_element(t)?;
        let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
        for (i, c) in u.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let x = self.window.element(i);
            let y = g.add(&x, t);
            let j = self.window.index_of(&y).ok_or_else(|| {
                Error::WindowTooSmall(format!(
                    "translating {x:?} by {t:?} leaves the window of radius {}",
                    self.window.radius()
                ))
            })?;
            out[j] = *c;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// `max |A - B|` over the two cyclic-orbit Gram matrices.
    pub discrepancy: f64,
    /// `A_st = <pi(s) xi, pi(t) xi>` in the GNS model.
    pub gns_gram: DMatrix<Complex64>,
    /// `B_st = <rho(s) 1, rho(t) 1>` in `L^2(mu)`.
    pub l2_gram: DMatrix<Complex64>,
}

/// Compares the Gram matrices of the orbits of the two cyclic vectors.
pub fn verify_equivalence(
    model: &GnsModel,
    mu: &DualMeasure,
    shifts: &[GroupElement],
) -> Result<EquivalenceReport> {
    let g = model.descriptor();
    if g != mu.descriptor() {
        return Err(Error::InvalidArgument("model and measure live on different groups".into()));
    }
    for s in shifts {
        g.check_element(s)?;
        if !model.window.contains(s) {
            return Err(Error::WindowTooSmall(format!(
                "shift {s:?} lies outside the GNS window of radius {}",
                model.window_radius()
            )));
        }
    }
    let cyclic = model.cyclic_vector();
    let orbit: Vec<Vec<Complex64>> = shifts
        .iter()
        .map(|s| model.translate(s, &cyclic))
        .collect::<Result<_>>()?;
    let ones = vec![Complex64::new(1.0, 0.0); mu.len()];
    let l2_orbit: Vec<Vec<Complex64>> = shifts
        .iter()
        .map(|s| mu.rho(s, &ones))
        .collect::<Result<_>>()?;
    let k = shifts.len();
    let mut a = DMatrix::zeros(k, k);
    let mut b = DMatrix::zeros(k, k);
    let mut discrepancy = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = model.inner(&orbit[i], &orbit[j])?;
            b[(i, j)] = mu.inner(&l2_orbit[i], &l2_orbit[j])?;
            discrepancy = discrepancy.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    Ok(EquivalenceReport {
        discrepancy,
        gns_gram: a,
        l2_gram: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bochner::bochner_forward;
    use crate::measure::{poisson_kernel, Atom};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn z() -> GroupDescriptor {
        GroupDescriptor::integers(1)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn shifts(range: std::ops::RangeInclusive<i64>) -> Vec<GroupElement> {
        range.map(|k| z().free_element(vec![k]).unwrap()).collect()
    }

    #[test]
    fn delta_on_z2_gives_identity() {
        let g = GroupDescriptor::cyclic(2).unwrap();
        let phi = PdFunction::from_fn(g, 0, |x| c(if x.torsion[0] == 0 { 1.0 } else { 0.0 })).unwrap();
        let m = build_gns(&phi).unwrap();
        assert_eq!(m.kernel_matrix(), &DMatrix::<Complex64>::identity(2, 2));
    }

    #[test]
    fn single_character_has_rank_one() {
        let phi = PdFunction::from_fn(z(), 16, |x| Complex64::from_polar(1.0, 0.9 * x.free[0] as f64)).unwrap();
        let m = build_gns(&phi).unwrap();
        assert_eq!(m.dimension(), 17);
        assert_eq!(m.numerical_rank(1e-10), 1);
    }

    #[test]
    fn kac_murdock_szego_matrix() {
        let phi = PdFunction::from_fn(z(), 16, |x| c(0.5f64.powi(x.free[0].abs() as i32))).unwrap();
        let m = build_gns(&phi).unwrap();
        assert_eq!(m.dimension(), 17);
        assert_eq!(m.kernel_matrix()[(0, 3)], c(0.125));
        // Toeplitz eigenvalues lie inside the range of the symbol
        // (1 - r^2) / (1 - 2 r cos t + r^2), i.e. in [1/3, 3].
        assert!(m.min_eigenvalue() > 1.0 / 3.0 - 1e-12);
        assert!(m.spectral_norm() < 3.0 + 1e-12);
    }

    #[test]
    fn non_pd_function_is_rejected() {
        let vals = [0.0, 0.0, -0.9, 0.9, 1.0, 0.9, -0.9, 0.0, 0.0];
        let phi = PdFunction::from_fn(z(), 4, |x| c(vals[(x.free[0] + 4) as usize])).unwrap();
        assert!(matches!(build_gns(&phi), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn translation_is_partial() {
        let phi = PdFunction::from_fn(z(), 4, |x| c(0.5f64.powi(x.free[0].abs() as i32))).unwrap();
        let m = build_gns(&phi).unwrap();
        let e0 = m.cyclic_vector();
        let t = z().free_element(vec![2]).unwrap();
        let moved = m.translate(&t, &e0).unwrap();
        assert!(matches!(m.translate(&t, &moved), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn equivalence_for_atom() {
        let mu = DualMeasure::dirac(z(), z().dual_point(vec![1.3], vec![]).unwrap()).unwrap();
        let m = build_gns(&bochner_forward(&mu, 4).unwrap()).unwrap();
        let r = verify_equivalence(&m, &mu, &shifts(0..=2)).unwrap();
        assert!(r.discrepancy <= 1e-12);
    }

    #[test]
    fn equivalence_for_poisson_against_closed_form() {
        let mu = DualMeasure::with_density(z(), vec![], 4096, vec![], |t| poisson_kernel(0.5, t[0])).unwrap();
        let phi = PdFunction::from_fn(z(), 16, |x| c(0.5f64.powi(x.free[0].abs() as i32))).unwrap();
        let m = build_gns(&phi).unwrap();
        let r = verify_equivalence(&m, &mu, &shifts(0..=8)).unwrap();
        assert!(r.discrepancy <= 1e-8, "{}", r.discrepancy);
    }

    #[test]
    fn equivalence_on_finite_group_is_exact() {
        let g = GroupDescriptor::cyclic(6).unwrap();
        let atoms = (0..6)
            .map(|c| Atom { point: g.dual_point(vec![], vec![c]).unwrap(), weight: (c + 1) as f64 })
            .collect();
        let mu = DualMeasure::from_atoms(g.clone(), atoms).unwrap();
        let m = build_gns(&bochner_forward(&mu, 0).unwrap()).unwrap();
        let all: Vec<GroupElement> = (0..6).map(|r| g.element(vec![], vec![r]).unwrap()).collect();
        let r = verify_equivalence(&m, &mu, &all).unwrap();
        assert!(r.discrepancy <= 1e-12);
        assert_abs_diff_eq!(r.gns_gram[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn shifts_outside_window_are_rejected() {
        let mu = DualMeasure::dirac(z(), z().dual_point(vec![1.3], vec![]).unwrap()).unwrap();
        let m = build_gns(&bochner_forward(&mu, 4).unwrap()).unwrap();
        assert!(matches!(
            verify_equivalence(&m, &mu, &shifts(0..=3)),
            Err(Error::WindowTooSmall(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn forward_kernels_are_psd(
            atoms in prop::collection::vec((-3.1f64..3.1, 0.01f64..1.0), 1..5),
            r in 0.05f64..0.95,
            density_weight in 0.0f64..1.0,
        ) {
            let g = z();
            let mut list: Vec<Atom> = Vec::new();
            for (t, w) in atoms {
                let p = g.dual_point(vec![t], vec![]).unwrap();
                if list.iter().all(|a| a.point != p) {
                    list.push(Atom { point: p, weight: w });
                }
            }
            let mu = DualMeasure::with_density(g, list, 512, vec![], |t| density_weight * poisson_kernel(r, t[0])).unwrap();
            let m = build_gns(&bochner_forward(&mu, 12).unwrap()).unwrap();
            prop_assert!(m.min_eigenvalue() >= -PSD_TOLERANCE * m.spectral_norm());
        }
    }
}
