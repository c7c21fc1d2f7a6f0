//! Seeded randomized checks of the library invariants.

use std::f64::consts::PI;

use abelian_coh::bochner::{bochner_forward, check_positive_definite};
use abelian_coh::cohomology::{classify, decide, solve_coboundary, ClassifyOptions};
use abelian_coh::measure::Atom;
use abelian_coh::{Cocycle, Complex64, DualMeasure, GroupDescriptor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;
use crate::ops;

pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_atoms(rng: &mut ChaCha8Rng, g: &GroupDescriptor, count: usize, min_gap: f64) -> CliResult<Vec<Atom>> {
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let angles = (0..g.free_rank())
            .map(|_| {
                let t = rng.random_range(min_gap..PI);
                if rng.random_bool(0.5) { t } else { -t }
            })
            .collect();
        let torsion = g.torsion_orders().iter().map(|&n| rng.random_range(0..n) as i64).collect();
        atoms.push(Atom {
            point: g.dual_point(angles, torsion)?,
            weight: rng.random_range(0.1..1.0),
        });
    }
    Ok(atoms)
}

fn forward_psd(rng: &mut ChaCha8Rng, cases: usize) -> CliResult<CheckLine> {
    let g = GroupDescriptor::integers(1);
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..cases {
        let n = rng.random_range(1..=4);
        let mu = DualMeasure::from_atoms(g.clone(), random_atoms(rng, &g, n, 0.0)?)?;
        let phi = bochner_forward(&mu, 8)?;
        let report = check_positive_definite(&phi, 8, rng.random())?;
        worst = worst.min(report.worst_relative_eigenvalue);
        if !report.positive_definite {
            failures += 1;
        }
    }
    Ok(CheckLine {
        name: "forward transforms are positive definite",
        passed: failures == 0,
        detail: format!("{failures}/{cases} failed, worst relative eigenvalue {worst:.3e}"),
    })
}

fn coboundary_roundtrip(rng: &mut ChaCha8Rng, cases: usize) -> CliResult<CheckLine> {
    let groups = [
        GroupDescriptor::integers(1),
        GroupDescriptor::integers(2),
        GroupDescriptor::new(1, vec![3])?,
        GroupDescriptor::cyclic(6)?,
    ];
    let mut worst = 0.0f64;
    for k in 0..cases {
        let g = &groups[k % groups.len()];
        let n = rng.random_range(1..=5);
        let mut atoms = random_atoms(rng, g, n, 0.3)?;
        if g.is_finite() {
            atoms.retain(|a| !a.point.torsion.iter().all(|&c| c == 0));
            atoms.sort_by_key(|a| a.point.torsion.clone());
            atoms.dedup_by_key(|a| a.point.torsion.clone());
            if atoms.is_empty() {
                atoms.push(Atom {
                    point: g.dual_point(vec![], vec![1])?,
                    weight: 1.0,
                });
            }
        }
        let mu = DualMeasure::from_atoms(g.clone(), atoms)?;
        let u: Vec<Complex64> = (0..mu.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let b = Cocycle::coboundary(mu, &u)?;
        let s = solve_coboundary(&b)?;
        let err = s.w.iter().zip(&u).map(|(w, u)| (w - u).norm()).fold(0.0, f64::max);
        worst = worst.max(err).max(s.residual);
    }
    Ok(CheckLine {
        name: "coboundaries are recovered",
        passed: worst <= 1e-9,
        detail: format!("{cases} cases, worst error {worst:.3e}"),
    })
}

fn decision_table(rng: &mut ChaCha8Rng, cases: usize) -> CliResult<CheckLine> {
    let mut mismatches = 0;
    for k in 0..cases {
        let finite = k % 4 == 3;
        let g = if finite { GroupDescriptor::cyclic(6)? } else { GroupDescriptor::integers(1) };
        let trivial = rng.random_bool(0.5);
        let gap = finite || rng.random_bool(0.5);
        let mut atoms = Vec::new();
        if trivial {
            atoms.push(Atom {
                point: g.trivial_character(),
                weight: rng.random_range(0.1..0.9),
            });
        }
        let mu = if finite {
            atoms.push(Atom {
                point: g.dual_point(vec![], vec![rng.random_range(1..6)])?,
                weight: 0.5,
            });
            DualMeasure::from_atoms(g.clone(), atoms)?
        } else if gap {
            atoms.extend(random_atoms(rng, &g, 2, 0.5)?);
            DualMeasure::from_atoms(g.clone(), atoms)?
        } else {
            let r = rng.random_range(0.1..0.9);
            DualMeasure::with_density(g.clone(), atoms, 1024, vec![], move |t| {
                abelian_coh::measure::poisson_kernel(r, t[0])
            })?
        };
        let options = ClassifyOptions {
            witness: false,
            ..ClassifyOptions::default()
        };
        let report = classify(&mu, &options)?;
        let expected = decide(trivial, g.hom_to_c_dimension() > 0, gap);
        if (report.h1, report.reduced_h1) != expected {
            mismatches += 1;
        }
    }
    Ok(CheckLine {
        name: "classification matches the decision table",
        passed: mismatches == 0,
        detail: format!("{mismatches}/{cases} mismatches"),
    })
}

fn gns_equivalence(rng: &mut ChaCha8Rng, cases: usize) -> CliResult<CheckLine> {
    let g = GroupDescriptor::integers(1);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=4);
        let mu = DualMeasure::from_atoms(g.clone(), random_atoms(rng, &g, n, 0.0)?)?;
        let shifts: Vec<i64> = (0..=8).collect();
        let v = ops::gns_verify(&mu, None, ops::DEFAULT_WINDOW, &shifts, 1e-12)?;
        worst = worst.max(v.discrepancy);
    }
    Ok(CheckLine {
        name: "GNS and L2 cyclic Gram matrices agree",
        passed: worst <= 1e-12,
        detail: format!("{cases} cases, worst discrepancy {worst:.3e}"),
    })
}

pub fn run(seed: u64, cases: usize) -> CliResult<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        forward_psd(&mut rng, cases)?,
        coboundary_roundtrip(&mut rng, cases)?,
        decision_table(&mut rng, cases)?,
        gns_equivalence(&mut rng, cases)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_and_is_seeded() {
        let a = run(11, 8).unwrap();
        for line in &a {
            assert!(line.passed, "{}: {}", line.name, line.detail);
        }
        let b = run(11, 8).unwrap();
        let details = |v: &[CheckLine]| v.iter().map(|l| l.detail.clone()).collect::<Vec<_>>();
        assert_eq!(details(&a), details(&b));
    }
}
