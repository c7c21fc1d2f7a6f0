//! Scenario files: a group, a measure and a pipeline of steps.
//!
//! ```json
//! {"group": {"free_rank": 1},
//!  "measure": {"density": {"kind": "poisson", "r": 0.5}, "grid_size": 65536},
//!  "output": "out/poisson",
//!  "pipeline": [{"command": "classify"},
//!               {"command": "build_cocycle", "shells": 8},
//!               {"command": "approximate", "stages": 5}]}
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use abelian_coh::bochner::{bochner_forward, bochner_inverse, InverseOptions, PdFunction, SmoothingKernel};
use abelian_coh::cohomology::{ClassifyOptions, RadiusSchedule};
use abelian_coh::{Cocycle, DualMeasure, GroupDescriptor, MeasureSpec};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::io;
use crate::ops::{self, Shifts, SyntheticKind, DEFAULT_SHELLS, DEFAULT_STAGES, DEFAULT_WINDOW, EQUIVALENCE_THRESHOLD};
use crate::report::InverseView;

fn default_shells() -> usize {
    DEFAULT_SHELLS
}
fn default_stages() -> usize {
    DEFAULT_STAGES
}
fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_threshold() -> f64 {
    EQUIVALENCE_THRESHOLD
}
fn default_r1() -> f64 {
    RadiusSchedule::default().initial
}
fn default_ratio() -> f64 {
    RadiusSchedule::default().ratio
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub group: GroupDescriptor,
    pub measure: MeasureSpec,
    /// Defaults to `out/<scenario name>`; `ABELIAN_COH_OUT` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub pipeline: Vec<Step>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub torsion: Vec<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Classify {
        #[serde(default = "default_shells")]
        shells: usize,
        #[serde(default)]
        inferred: bool,
        #[serde(default = "yes")]
        witness: bool,
    },
    BuildCocycle {
        #[serde(default = "default_shells")]
        shells: usize,
    },
    SyntheticCocycle {
        #[serde(default)]
        kind: SyntheticKind,
        #[serde(default)]
        seed: u64,
    },
    Solve {
        #[serde(default)]
        check_box: Option<usize>,
    },
    Approximate {
        #[serde(default = "default_stages")]
        stages: usize,
        #[serde(default = "default_r1")]
        r1: f64,
        #[serde(default = "default_ratio")]
        ratio: f64,
        #[serde(default)]
        check_box: Option<usize>,
    },
    Forward {
        #[serde(default = "default_window")]
        window: usize,
    },
    Inverse {
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        kernel: SmoothingKernel,
        #[serde(default)]
        candidates: Vec<Candidate>,
    },
    GnsVerify {
        #[serde(default)]
        shifts: Shifts,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Classify { .. } => "classify",
            Step::BuildCocycle { .. } => "build_cocycle",
            Step::SyntheticCocycle { .. } => "synthetic_cocycle",
            Step::Solve { .. } => "solve",
            Step::Approximate { .. } => "approximate",
            Step::Forward { .. } => "forward",
            Step::Inverse { .. } => "inverse",
            Step::GnsVerify { .. } => "gns_verify",
        }
    }

    fn needs(&self) -> Option<Artifact> {
        match self {
            Step::Solve { .. } | Step::Approximate { .. } => Some(Artifact::Cocycle),
            Step::Inverse { .. } => Some(Artifact::Phi),
            _ => None,
        }
    }

    fn produces(&self) -> Option<Artifact> {
        match self {
            Step::BuildCocycle { .. } | Step::SyntheticCocycle { .. } => Some(Artifact::Cocycle),
            Step::Forward { .. } => Some(Artifact::Phi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Artifact {
    Cocycle,
    Phi,
}

impl Artifact {
    fn describe(self) -> &'static str {
        match self {
            Artifact::Cocycle => "a cocycle (add build_cocycle or synthetic_cocycle before it)",
            Artifact::Phi => "a positive definite function (add forward before it)",
        }
    }
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    io::load(path)
}

impl Scenario {
    /// Checks that every step only uses artifacts produced by earlier steps.
    pub fn validate(&self) -> CliResult<()> {
        let mut have = Vec::new();
        for (i, step) in self.pipeline.iter().enumerate() {
            if let Some(need) = step.needs() {
                if !have.contains(&need) {
                    return Err(CliError::Config(format!(
                        "step {} ({}) needs {}",
                        i + 1,
                        step.name(),
                        need.describe()
                    )));
                }
            }
            if let Step::SyntheticCocycle {
                kind: SyntheticKind::Trigonometric,
                ..
            } = step
            {
                if self.group.generator_count() != 1 || self.group.free_rank() != 1 {
                    return Err(CliError::Config(format!(
                        "step {} (synthetic_cocycle): trigonometric cocycles need the group Z",
                        i + 1
                    )));
                }
            }
            if let Some(p) = step.produces() {
                have.push(p);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

struct Runner<'a> {
    dir: &'a Path,
    counts: BTreeMap<&'static str, usize>,
    outcome: RunOutcome,
    cocycle: Option<Cocycle>,
    phi: Option<PdFunction>,
}

impl Runner<'_> {
    /// `stem.ext` for the first step of a kind, `stem_2.ext` and so on after.
    fn file(&self, step: &'static str, stem: &str, ext: &str) -> PathBuf {
        let n = self.counts.get(step).copied().unwrap_or(1);
        if n == 1 {
            self.dir.join(format!("{stem}.{ext}"))
        } else {
            self.dir.join(format!("{stem}_{n}.{ext}"))
        }
    }

    fn write(&mut self, path: PathBuf, text: &str) -> CliResult<()> {
        io::write_text(&path, text)?;
        self.outcome.artifacts.push(path);
        Ok(())
    }

    fn line(&mut self, text: String) {
        self.outcome.summary.push_str(&text);
        self.outcome.summary.push('\n');
    }

    fn run_step(&mut self, mu: &DualMeasure, step: &Step) -> CliResult<String> {
        let name = step.name();
        *self.counts.entry(name).or_insert(0) += 1;
        Ok(match step {
            Step::Classify {
                shells,
                inferred,
                witness,
            } => {
                let mut options = if *inferred {
                    ClassifyOptions::inferred()
                } else {
                    ClassifyOptions::default()
                };
                options.shell_count = *shells;
                options.witness = *witness;
                let c = ops::classify_measure(mu, &options)?;
                self.write(self.file(name, "report", "json"), &io::to_json(&c.view))?;
                if let Some(b) = &c.cocycle {
                    self.write(self.file(name, "witness_cocycle", "csv"), &io::cocycle_csv(b))?;
                }
                let witness = match &c.view.witness {
                    Some(w) => serde_json::to_value(w).expect("serializable")["kind"]
                        .as_str()
                        .unwrap_or("none")
                        .to_string(),
                    None => "none".into(),
                };
                format!(
                    "H1 {}, reduced H1 {}, trivial mass {:.6e}, support distance {:.6e}, witness {witness}",
                    c.view.h1, c.view.reduced_h1, c.view.trivial_mass, c.view.support_distance
                )
            }
            Step::BuildCocycle { shells } => {
                let (sc, view) = ops::build_shells(mu, *shells)?;
                self.write(self.file(name, "cocycle", "csv"), &io::cocycle_csv(&sc.cocycle))?;
                self.write(self.file(name, "shells", "json"), &io::to_json(&view))?;
                let text = format!(
                    "{} shells ({} usable), min obstruction increment {:.6e}, validation {}",
                    view.shell_count,
                    view.usable_shells,
                    view.min_obstruction_increment,
                    if view.validation.passed { "passed" } else { "failed" }
                );
                self.cocycle = Some(sc.cocycle);
                text
            }
            Step::SyntheticCocycle { kind, seed } => {
                let b = ops::synthetic_cocycle(mu, *kind, *seed)?;
                self.write(self.file(name, "cocycle", "csv"), &io::cocycle_csv(&b))?;
                let text = format!("{kind:?} cocycle with seed {seed}, norm {:.6e}", b.norm());
                self.cocycle = Some(b);
                text
            }
            Step::Solve { check_box } => {
                let b = self.cocycle.as_ref().expect("validated");
                let s = ops::solve(b, *check_box)?;
                self.write(self.file(name, "solution", "csv"), &s.csv)?;
                self.write(self.file(name, "solve", "json"), &io::to_json(&s.view))?;
                format!(
                    "residual {:.6e}, cocycle norm {:.6e}, smoothing side {}",
                    s.view.residual,
                    s.view.cocycle_norm,
                    s.view.smoothing.as_ref().map_or("none".into(), |n| n.side.to_string())
                )
            }
            Step::Approximate {
                stages,
                r1,
                ratio,
                check_box,
            } => {
                let b = self.cocycle.as_ref().expect("validated");
                let schedule = RadiusSchedule {
                    initial: *r1,
                    ratio: *ratio,
                };
                let a = ops::approximate(b, *stages, schedule, *check_box)?;
                let residuals = crate::report::residuals_csv(&a.stages);
                self.write(self.file(name, "residuals", "csv"), &residuals)?;
                self.write(self.file(name, "approximation", "json"), &io::to_json(&a.view))?;
                let list: Vec<String> = a.stages.iter().map(|s| format!("{:.6e}", s.residual)).collect();
                format!("{} stages, residuals {}", a.stages.len(), list.join(" "))
            }
            Step::Forward { window } => {
                let phi = bochner_forward(mu, *window)?;
                self.write(self.file(name, "phi", "json"), &io::to_json(&phi))?;
                self.phi = Some(phi);
                format!("window {window}")
            }
            Step::Inverse {
                grid,
                kernel,
                candidates,
            } => {
                let phi = self.phi.as_ref().expect("validated");
                let g = phi.descriptor();
                let mut points = Vec::with_capacity(candidates.len());
                for c in candidates {
                    let theta = if c.theta.is_empty() { vec![0.0; g.free_rank()] } else { c.theta.clone() };
                    let torsion = if c.torsion.is_empty() {
                        vec![0; g.torsion_orders().len()]
                    } else {
                        c.torsion.clone()
                    };
                    points.push(g.dual_point(theta, torsion)?);
                }
                let options = InverseOptions {
                    grid_size: grid.unwrap_or(mu.grid_size().max(1)),
                    candidates: points,
                    kernel: *kernel,
                    ..InverseOptions::default()
                };
                let r = bochner_inverse(phi, &options)?;
                let view = InverseView::from(&r);
                self.write(
                    self.file(name, "inverse_measure", "json"),
                    &io::to_json(&MeasureSpec::from_measure(&r.measure)),
                )?;
                self.write(self.file(name, "inverse", "json"), &io::to_json(&view))?;
                let tv = r.measure.total_variation(mu).ok();
                format!(
                    "roundtrip error {:.6e}, total variation to the input {}",
                    view.roundtrip_error,
                    tv.map_or("n/a".into(), |t| format!("{t:.6e}"))
                )
            }
            Step::GnsVerify {
                shifts,
                window,
                threshold,
            } => {
                let steps = shifts.steps()?;
                let v = ops::gns_verify(mu, None, *window, &steps, *threshold)?;
                self.write(self.file(name, "gns", "json"), &io::to_json(&v))?;
                format!(
                    "discrepancy {:.6e} over {} shifts, {}",
                    v.discrepancy,
                    v.shifts,
                    if v.passed { "pass" } else { "fail" }
                )
            }
        })
    }
}

/// Output directory for a scenario at `path`.
pub fn scenario_output(path: &Path, scenario: &Scenario) -> PathBuf {
    let default = match &scenario.output {
        Some(p) => p.clone(),
        None => Path::new("out").join(path.file_stem().unwrap_or_default()),
    };
    io::output_dir(&default)
}

/// Runs the pipeline; an empty pipeline does nothing and writes nothing.
pub fn run_scenario(path: &Path, grid: Option<usize>) -> CliResult<RunOutcome> {
    let mut scenario = load_scenario(path)?;
    scenario.validate()?;
    if scenario.pipeline.is_empty() {
        return Ok(RunOutcome::default());
    }
    if let Some(m) = grid {
        scenario.measure.grid_size = m;
    }
    let dir = scenario_output(path, &scenario);
    io::ensure_dir(&dir)?;
    let mu = scenario.measure.build(&scenario.group)?;
    let mut runner = Runner {
        dir: &dir,
        counts: BTreeMap::new(),
        outcome: RunOutcome::default(),
        cocycle: None,
        phi: None,
    };
    let mut header = String::new();
    let _ = writeln!(
        header,
        "group free_rank {} torsion {:?}, {} atoms, {} cells, grid {}",
        scenario.group.free_rank(),
        scenario.group.torsion_orders(),
        mu.atoms().len(),
        mu.cells().len(),
        mu.grid_size()
    );
    runner.outcome.summary = header;
    let mut failure = None;
    for (i, step) in scenario.pipeline.iter().enumerate() {
        match runner.run_step(&mu, step) {
            Ok(text) => runner.line(format!("step {} {}: {text}", i + 1, step.name())),
            Err(e) => {
                runner.line(format!("step {} {}: error {e}", i + 1, step.name()));
                failure = Some(e);
                break;
            }
        }
    }
    let summary = runner.outcome.summary.clone();
    runner.write(dir.join("summary.txt"), &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(runner.outcome),
    }
}
