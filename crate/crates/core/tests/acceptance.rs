//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Run with `cargo test -p abelian-coh --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use abelian_coh::bochner::{
    atom_at_trivial, bochner_forward, bochner_inverse, check_positive_definite, check_positive_definite_on,
    InverseOptions, PdFunction,
};
use abelian_coh::cohomology::{
    approximate_by_coboundaries, build_nontrivial_cocycle, classify, solve_coboundary, ClassifyOptions, Cocycle,
    ShellCocycle, Verdict,
};
use abelian_coh::gns::{build_gns, verify_equivalence};
use abelian_coh::measure::poisson_kernel;
use abelian_coh::{Atom, Complex64, DualMeasure, GroupDescriptor, GroupElement, MeasureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TIME_LIMIT: Duration = Duration::from_secs(10);
const THETA0: f64 = 1.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn z() -> GroupDescriptor {
    GroupDescriptor::integers(1)
}

fn z6() -> GroupDescriptor {
    GroupDescriptor::cyclic(6).unwrap()
}

fn atom_measure() -> DualMeasure {
    DualMeasure::dirac(z(), z().dual_point(vec![THETA0], vec![]).unwrap()).unwrap()
}

fn poisson_measure(m: usize) -> DualMeasure {
    DualMeasure::with_density(z(), vec![], m, vec![], |t| poisson_kernel(0.5, t[0])).unwrap()
}

fn two_atoms() -> DualMeasure {
    let g = z();
    DualMeasure::from_atoms(
        g.clone(),
        vec![
            Atom { point: g.trivial_character(), weight: 0.5 },
            Atom { point: g.dual_point(vec![THETA0], vec![]).unwrap(), weight: 0.5 },
        ],
    )
    .unwrap()
}

fn z6_measure() -> DualMeasure {
    let g = z6();
    let atoms = (0..6)
        .map(|c| Atom { point: g.dual_point(vec![], vec![c]).unwrap(), weight: (c + 1) as f64 })
        .collect();
    DualMeasure::from_atoms(g, atoms).unwrap()
}

fn geometric(n: usize) -> PdFunction {
    PdFunction::from_fn(z(), n, |x| Complex64::new(0.5f64.powi(x.free[0].abs() as i32), 0.0)).unwrap()
}

fn shell_cocycle() -> ShellCocycle {
    build_nontrivial_cocycle(&poisson_measure(1 << 16), 8).unwrap()
}

fn decision_table() -> Outcome {
    use Verdict::{Nonvanishing as N, Vanishes as V};
    let cases: Vec<(&str, Box<dyn Fn() -> DualMeasure>, (Verdict, Verdict))> = vec![
        ("atom", Box::new(atom_measure), (V, V)),
        ("poisson", Box::new(|| poisson_measure(4096)), (N, V)),
        ("half-trivial", Box::new(two_atoms), (N, N)),
        ("z6", Box::new(z6_measure), (V, V)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, build, want) in cases {
        let start = Instant::now();
        let r = classify(&build(), &ClassifyOptions::default()).unwrap();
        let elapsed = start.elapsed();
        ok &= (r.h1, r.reduced_h1) == want && elapsed < TIME_LIMIT;
        parts.push(format!("{name}: H1 {} / reduced {} ({:.2}s)", r.h1, r.reduced_h1, elapsed.as_secs_f64()));
    }
    outcome(ok, parts.join("; "))
}

fn gram_equivalence() -> Outcome {
    let start = Instant::now();
    let shifts = |g: &GroupDescriptor| -> Vec<GroupElement> {
        (0..=8)
            .map(|k| if g.is_finite() { g.element(vec![], vec![k]).unwrap() } else { g.free_element(vec![k]).unwrap() })
            .collect()
    };
    let atom = atom_measure();
    let a = verify_equivalence(&build_gns(&bochner_forward(&atom, 16).unwrap()).unwrap(), &atom, &shifts(&z()))
        .unwrap()
        .discrepancy;
    let poisson = poisson_measure(4096);
    let b = verify_equivalence(&build_gns(&geometric(16)).unwrap(), &poisson, &shifts(&z()))
        .unwrap()
        .discrepancy;
    let fin = z6_measure();
    let d = verify_equivalence(&build_gns(&bochner_forward(&fin, 0).unwrap()).unwrap(), &fin, &shifts(&z6()))
        .unwrap()
        .discrepancy;
    let elapsed = start.elapsed();
    outcome(
        a <= 1e-12 && b <= 1e-8 && d <= 1e-12 && elapsed < TIME_LIMIT,
        format!("atom {a:.2e} (<=1e-12), poisson {b:.2e} (<=1e-8), z6 {d:.2e} (<=1e-12), {:.2}s", elapsed.as_secs_f64()),
    )
}

fn random_coefficients(rng: &mut ChaCha8Rng, k: i64) -> Vec<(i64, Complex64)> {
    (-k..=k)
        .map(|n| {
            let s = 1.0 / (1.0 + (n * n) as f64);
            (n, Complex64::new(rng.random_range(-1.0..1.0) * s, rng.random_range(-1.0..1.0) * s))
        })
        .collect()
}

fn coboundary_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec: MeasureSpec =
        serde_json::from_str(r#"{"density":{"kind":"uniform_arc","arc":[1.0,2.0]},"grid_size":4096}"#).unwrap();
    let arc = spec.build(&z()).unwrap();

    let coeffs = random_coefficients(&mut rng, 3);
    let values: Vec<Complex64> = arc
        .points()
        .map(|p| coeffs.iter().map(|(n, c)| c * Complex64::from_polar(1.0, *n as f64 * p.angles[0])).sum())
        .collect();
    let sol = solve_coboundary(&Cocycle::new(arc.clone(), vec![values]).unwrap()).unwrap();
    let smooth_ok = sol.residual <= 1e-8 * (1.0 + sol.cocycle_norm);

    let mut worst_roundtrip = 0.0f64;
    let groups = [z(), GroupDescriptor::integers(2), GroupDescriptor::new(1, vec![4]).unwrap()];
    for trial in 0..20 {
        let mu = if trial == 0 {
            arc.clone()
        } else {
            let g = &groups[trial % groups.len()];
            let count = rng.random_range(1..6);
            let mut atoms: Vec<Atom> = Vec::new();
            for _ in 0..count {
                let angles = (0..g.free_rank())
                    .map(|_| {
                        let t: f64 = rng.random_range(0.3..3.1);
                        if rng.random_bool(0.5) { t } else { -t }
                    })
                    .collect();
                let torsion = g.torsion_orders().iter().map(|&n| rng.random_range(0..n as i64)).collect();
                let p = g.dual_point(angles, torsion).unwrap();
                if atoms.iter().all(|a| a.point != p) {
                    atoms.push(Atom { point: p, weight: rng.random_range(0.1..1.0) });
                }
            }
            DualMeasure::from_atoms(g.clone(), atoms).unwrap()
        };
        let u: Vec<Complex64> = (0..mu.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let b = Cocycle::coboundary(mu, &u).unwrap();
        worst_roundtrip = worst_roundtrip.max(solve_coboundary(&b).unwrap().residual);
    }
    outcome(
        smooth_ok && worst_roundtrip <= 1e-10,
        format!(
            "arc residual {:.2e} (<= {:.2e}), round-trip max residual {worst_roundtrip:.2e} (<=1e-10) over 20 trials",
            sol.residual,
            1e-8 * (1.0 + sol.cocycle_norm)
        ),
    )
}

fn partial_sum_bounds(sc: &ShellCocycle) -> Outcome {
    let ok = sc.partial_sums.len() == 3
        && sc.partial_sums.iter().all(|b| b.max_tail <= 4.0 / 3.0 && b.max_total <= b.total_bound);
    let detail = sc
        .partial_sums
        .iter()
        .map(|b| format!("l={}: tail {:.4} <= 1.3333, total {:.4} <= {:.4}", b.ell, b.max_tail, b.max_total, b.total_bound))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok, detail)
}

fn obstruction(sc: &ShellCocycle) -> Outcome {
    let inc = sc.min_obstruction_increment();
    let integrals: Vec<String> = sc.obstruction.iter().map(|s| format!("{:.6}", s.integral)).collect();
    outcome(
        sc.obstruction.len() == 8 && inc >= 1.0 - 1e-9,
        format!("min increment {inc:.12} over {} shells; I = [{}]", sc.obstruction.len(), integrals.join(", ")),
    )
}

fn approximation(sc: &ShellCocycle) -> Outcome {
    let stages = approximate_by_coboundaries(&sc.cocycle, 5).unwrap();
    let decreasing = stages.windows(2).all(|w| w[1].residual < w[0].residual);
    let halved = stages[4].residual <= 0.5 * stages[0].residual;
    let bounded = stages.iter().all(|s| s.residual * s.residual <= s.tail_bound * (1.0 + 1e-9));
    let unsquared = stages.iter().filter(|s| s.residual <= s.tail_bound).count();
    let detail = stages
        .iter()
        .map(|s| format!("r={}: res {:.4}, res^2 {:.4} <= {:.4}", s.radius, s.residual, s.residual * s.residual, s.tail_bound))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(
        decreasing && halved && bounded,
        format!("{detail}; unsquared bound holds at {unsquared}/5 stages"),
    )
}

fn bochner_roundtrips() -> Outcome {
    let phi = bochner_forward(&poisson_measure(4096), 16).unwrap();
    let forward = phi
        .window()
        .elements()
        .map(|x| (phi.get(&x).unwrap() - Complex64::new(0.5f64.powi(x.free[0].abs() as i32), 0.0)).norm())
        .fold(0.0, f64::max);
    let inv = bochner_inverse(&geometric(512), &InverseOptions::default()).unwrap();
    let inverse = inv
        .measure
        .cells()
        .iter()
        .map(|c| (c.density - poisson_kernel(0.5, c.point.angles[0])).abs())
        .fold(0.0, f64::max);
    let mixed = PdFunction::from_fn(z(), 256, |x| {
        (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * x.free[0] as f64)) * 0.5
    })
    .unwrap();
    let atom = atom_at_trivial(&mixed).unwrap().value;
    outcome(
        forward <= 1e-8 && inverse <= 1e-3 && (atom - 0.5).abs() <= 1e-2 && inv.measure.atoms().is_empty(),
        format!("forward {forward:.2e} (<=1e-8), inverse sup {inverse:.2e} (<=1e-3), trivial atom {atom:.5} (0.5 +- 1e-2)"),
    )
}

fn psd_gate() -> Outcome {
    let vals = [-0.9, 0.9, 1.0, 0.9, -0.9];
    let bad = PdFunction::from_fn(z(), 2, |x| Complex64::new(vals[(x.free[0] + 2) as usize], 0.0)).unwrap();
    let triple: Vec<GroupElement> = (0..3).map(|k| z().free_element(vec![k]).unwrap()).collect();
    let report = check_positive_definite_on(&bad, &[triple]).unwrap();
    let witness = report.witness.as_ref().map(|w| w.min_eigenvalue);
    let rejected = !report.positive_definite && witness.is_some_and(|e| e < 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let groups = [z(), GroupDescriptor::new(1, vec![3]).unwrap(), GroupDescriptor::cyclic(5).unwrap()];
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for trial in 0..100 {
        let g = &groups[trial % groups.len()];
        let mut atoms: Vec<Atom> = Vec::new();
        for _ in 0..rng.random_range(1..5) {
            let angles = (0..g.free_rank()).map(|_| rng.random_range(-3.1..3.1)).collect();
            let torsion = g.torsion_orders().iter().map(|&n| rng.random_range(0..n as i64)).collect();
            let p = g.dual_point(angles, torsion).unwrap();
            if atoms.iter().all(|a| a.point != p) {
                atoms.push(Atom { point: p, weight: rng.random_range(0.05..1.0) });
            }
        }
        let mu = if g.is_finite() {
            DualMeasure::from_atoms(g.clone(), atoms).unwrap()
        } else {
            let r: f64 = rng.random_range(0.05..0.95);
            let w: f64 = rng.random_range(0.0..2.0);
            let torsion = vec![0; g.torsion_orders().len()];
            DualMeasure::with_density(g.clone(), atoms, 512, torsion, move |t| w * poisson_kernel(r, t[0])).unwrap()
        };
        let phi = bochner_forward(&mu, 12).unwrap();
        let r = check_positive_definite(&phi, 8, trial as u64).unwrap();
        worst = worst.min(r.worst_relative_eigenvalue);
        if !r.positive_definite {
            failures += 1;
        }
    }
    outcome(
        rejected && failures == 0,
        format!(
            "triple rejected with eigenvalue {:.4}; {failures}/100 random forward transforms failed (worst relative eigenvalue {worst:.2e})",
            witness.unwrap_or(f64::NAN)
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let sc = shell_cocycle();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 decision table", Box::new(decision_table)),
        ("2 gram equivalence", Box::new(gram_equivalence)),
        ("3 coboundary solver", Box::new(coboundary_solver)),
        ("4 partial-sum bound", Box::new(|| partial_sum_bounds(&sc))),
        ("5 obstruction growth", Box::new(|| obstruction(&sc))),
        ("6 coboundary approximation", Box::new(|| approximation(&sc))),
        ("7 bochner roundtrips", Box::new(bochner_roundtrips)),
        ("8 psd gate", Box::new(psd_gate)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("{} of 8 criteria passed in {:.2}s", 8 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
