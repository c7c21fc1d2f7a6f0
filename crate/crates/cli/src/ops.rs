//! Operations shared by the subcommands and the scenario runner.

use abelian_coh::bochner::{bochner_forward, PdFunction};
use abelian_coh::cohomology::{
    approximate_with_schedule, build_nontrivial_cocycle, classify, solve_coboundary, ApproximationStage,
    ClassifyOptions, RadiusSchedule, ShellCocycle, Witness,
};
use abelian_coh::gns::{build_gns, verify_equivalence};
use abelian_coh::{Cocycle, Complex64, DualMeasure, GroupDescriptor, GroupElement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{
    report_view, stage_view, ApproximationView, EquivalenceView, ReportView, ShellView, SolveView,
};

pub const DEFAULT_WINDOW: usize = 16;
pub const DEFAULT_SHELLS: usize = 8;
pub const DEFAULT_STAGES: usize = 5;
pub const EQUIVALENCE_THRESHOLD: f64 = 1e-8;
const SYNTHETIC_DEGREE: i32 = 3;

pub struct Classified {
    pub view: ReportView,
    /// Cocycle carried by the witness, if any.
    pub cocycle: Option<Cocycle>,
}

pub fn classify_measure(mu: &DualMeasure, options: &ClassifyOptions) -> CliResult<Classified> {
    let report = classify(mu, options)?;
    let view = report_view(mu, &report);
    let cocycle = match report.witness {
        Some(Witness::Homomorphism(b)) => Some(b),
        Some(Witness::Shell(sc)) => Some(sc.cocycle),
        _ => None,
    };
    Ok(Classified { view, cocycle })
}

pub fn build_shells(mu: &DualMeasure, shells: usize) -> CliResult<(ShellCocycle, ShellView)> {
    let perp = mu.decompose()?.perp;
    let sc = build_nontrivial_cocycle(&perp, shells)?;
    let view = ShellView::from(&sc);
    Ok((sc, view))
}

pub struct Solved {
    pub view: SolveView,
    pub csv: String,
}

pub fn solve(b: &Cocycle, check_box: Option<usize>) -> CliResult<Solved> {
    let s = solve_coboundary(b)?;
    let mut view = SolveView::new(&s);
    if let Some(l) = check_box {
        view.box_radius = Some(l);
        view.box_residual = Some(b.box_residual(&s.w, l)?);
    }
    let csv = io::point_table_csv(b.measure(), &[("w".to_string(), s.w.as_slice())]);
    Ok(Solved { view, csv })
}

pub struct Approximated {
    pub view: ApproximationView,
    pub stages: Vec<ApproximationStage>,
}

pub fn approximate(
    b: &Cocycle,
    stages: usize,
    schedule: RadiusSchedule,
    check_box: Option<usize>,
) -> CliResult<Approximated> {
    let result = approximate_with_schedule(b, stages, schedule)?;
    let mut views = Vec::with_capacity(result.len());
    for s in &result {
        let boxed = match check_box {
            Some(l) => Some(b.box_residual(&s.w, l)?),
            None => None,
        };
        views.push(stage_view(s, boxed));
    }
    Ok(Approximated {
        view: ApproximationView {
            cocycle_norm: b.norm(),
            box_radius: check_box,
            stages: views,
        },
        stages: result,
    })
}

/// Shifts along the first generator: `a..b` (inclusive) or a comma list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shifts {
    Range(String),
    List(Vec<i64>),
}

impl Default for Shifts {
    fn default() -> Self {
        Shifts::Range("0..8".into())
    }
}

impl Shifts {
    pub fn steps(&self) -> CliResult<Vec<i64>> {
        match self {
            Shifts::List(v) => Ok(v.clone()),
            Shifts::Range(s) => parse_shifts(s),
        }
    }
}

pub fn parse_shifts(s: &str) -> CliResult<Vec<i64>> {
    let bad = |m: String| CliError::parse("--shifts", m);
    let num = |t: &str| t.trim().parse::<i64>().map_err(|e| bad(format!("{t:?}: {e}")));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad(format!("empty range {s}")));
        }
        Ok((a..=b).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

pub fn shift_elements(g: &GroupDescriptor, steps: &[i64]) -> CliResult<Vec<GroupElement>> {
    if g.generator_count() == 0 {
        return Err(CliError::Config("the trivial group has no shifts".into()));
    }
    let gen = &g.generators()[0];
    steps
        .iter()
        .map(|&k| {
            let free = gen.free.iter().map(|&m| m * k).collect();
            let torsion = gen.torsion.iter().map(|&r| r as i64 * k).collect();
            Ok(g.element(free, torsion)?)
        })
        .collect()
}

pub fn gns_verify(
    mu: &DualMeasure,
    phi: Option<&PdFunction>,
    window: usize,
    steps: &[i64],
    threshold: f64,
) -> CliResult<EquivalenceView> {
    let owned;
    let phi = match phi {
        Some(p) => p,
        None => {
            owned = bochner_forward(mu, window)?;
            &owned
        }
    };
    let model = build_gns(phi)?;
    let shifts = shift_elements(mu.descriptor(), steps)?;
    let report = verify_equivalence(&model, mu, &shifts)?;
    Ok(EquivalenceView::new(&report, shifts.len(), threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `b(x) = (rho(x) - 1) u` for a random bounded `u`.
    #[default]
    Coboundary,
    /// Random trigonometric polynomial of degree 3 at the single generator.
    Trigonometric,
}

pub fn synthetic_cocycle(mu: &DualMeasure, kind: SyntheticKind, seed: u64) -> CliResult<Cocycle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = move || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    match kind {
        SyntheticKind::Coboundary => {
            let u: Vec<Complex64> = (0..mu.len()).map(|_| draw()).collect();
            Ok(Cocycle::coboundary(mu.clone(), &u)?)
        }
        SyntheticKind::Trigonometric => {
            let g = mu.descriptor();
            if g.generator_count() != 1 || g.free_rank() != 1 {
                return Err(CliError::Config(
                    "trigonometric cocycles need the group Z (one free generator)".into(),
                ));
            }
            let coefficients: Vec<(i32, Complex64)> =
                (-SYNTHETIC_DEGREE..=SYNTHETIC_DEGREE).map(|k| (k, draw())).collect();
            let values = mu
                .points()
                .map(|p| {
                    coefficients
                        .iter()
                        .map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * p.angles[0]))
                        .sum()
                })
                .collect();
            Ok(Cocycle::new(mu.clone(), vec![values])?)
        }
    }
}
