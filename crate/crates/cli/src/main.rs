mod error;
mod generate;
mod io;
mod ops;
mod report;
mod scenario;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abelian_coh::bochner::{bochner_forward, bochner_inverse, InverseOptions, SmoothingKernel};
use abelian_coh::cohomology::{ClassifyOptions, RadiusSchedule};
use abelian_coh::gns::build_gns;
use abelian_coh::measure::DEFAULT_GRID_SIZE;
use abelian_coh::{Cocycle, DualMeasure, DualPoint, GroupDescriptor, MeasureSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::generate::MeasureKind;
use crate::ops::SyntheticKind;
use crate::report::{GnsView, InverseView};

/// Positive definite functions on abelian groups, their spectral measures,
/// and the 1-cohomology of the associated representations.
#[derive(Parser)]
#[command(name = "abelian-coh", version)]
struct Cli {
    /// Grid cells per torus coordinate; overrides `grid_size` in measure files.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Window radius for positive definite functions.
    #[arg(long, global = true, default_value_t = ops::DEFAULT_WINDOW)]
    window: usize,

    /// Seed for `selftest`; no other command is randomized by it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory for written artifacts (`ABELIAN_COH_OUT` takes precedence).
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide vanishing of H1 and reduced H1 and print the report as JSON.
    Classify(ClassifyArgs),
    /// Fourier transforms between measures and positive definite functions.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// GNS model of a positive definite function.
    #[command(subcommand)]
    Gns(GnsCommand),
    /// Cocycle construction, coboundary solving and approximation.
    #[command(subcommand)]
    Cocycle(CocycleCommand),
    /// Measure generators.
    #[command(subcommand)]
    Measure(MeasureCommand),
    /// Run a JSON or TOML scenario file.
    Run {
        scenario: PathBuf,
    },
    /// Seeded randomized checks of the library invariants.
    Selftest {
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

#[derive(Args)]
struct Input {
    /// Group descriptor JSON; defaults to Z.
    #[arg(long)]
    group: Option<PathBuf>,
    /// Measure JSON.
    #[arg(long)]
    measure: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    group: Option<PathBuf>,
    #[arg(long, required_unless_present = "phi", conflicts_with = "phi")]
    measure: Option<PathBuf>,
    /// Classify the spectral measure recovered from a positive definite function.
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Use the looser atom tolerance meant for recovered measures.
    #[arg(long)]
    inferred: bool,
    #[arg(long, default_value_t = ops::DEFAULT_SHELLS)]
    shells: usize,
    #[arg(long)]
    no_witness: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Jackson,
    Fejer,
}

#[derive(Subcommand)]
enum TransformCommand {
    /// phi(x) = int xi(x) dmu on the window.
    Forward {
        #[command(flatten)]
        input: Input,
        /// File name inside the output directory.
        #[arg(long, default_value = "phi.json")]
        name: String,
    },
    /// Spectral measure of a positive definite function.
    Inverse {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelArg::Jackson)]
        kernel: KernelArg,
        /// Candidate atom, `theta1,theta2,..` optionally followed by `:c1,c2,..`.
        #[arg(long = "candidate")]
        candidates: Vec<String>,
        #[arg(long, default_value = "measure.json")]
        name: String,
    },
}

#[derive(Subcommand)]
enum GnsCommand {
    /// Kernel matrix statistics of the GNS model.
    Build {
        #[arg(long, conflicts_with = "measure", required_unless_present = "measure")]
        phi: Option<PathBuf>,
        #[arg(long)]
        group: Option<PathBuf>,
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Compare cyclic-orbit Gram matrices of the GNS model and of L2(mu).
    Verify {
        #[command(flatten)]
        input: Input,
        /// Positive definite function; defaults to the transform of the measure.
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Shifts along the first generator: `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "0..8")]
        shifts: String,
        #[arg(long, default_value_t = ops::EQUIVALENCE_THRESHOLD)]
        threshold: f64,
    },
}

#[derive(Subcommand)]
enum CocycleCommand {
    /// Shell cocycle that is not a coboundary; writes the cocycle CSV.
    Build {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = ops::DEFAULT_SHELLS)]
        shells: usize,
        #[arg(long, default_value = "cocycle.csv")]
        name: String,
    },
    /// Random cocycle for testing the solvers; writes the cocycle CSV.
    Synthetic {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = SyntheticKind::Coboundary)]
        kind: SyntheticKind,
        #[arg(long, default_value_t = 0)]
        sample_seed: u64,
        #[arg(long, default_value = "cocycle.csv")]
        name: String,
    },
    /// Solve (rho(x) - 1) w = b(x); writes the solution CSV.
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        cocycle: PathBuf,
        /// Also report the residual over the box |x| <= L.
        #[arg(long, value_name = "L")]
        check_box: Option<usize>,
        #[arg(long, default_value = "solution.csv")]
        name: String,
    },
    /// Coboundary approximations on shrinking neighborhoods; writes residual tables.
    Approx {
        #[command(flatten)]
        input: Input,
        /// Cocycle CSV; without it a shell cocycle is built.
        #[arg(long)]
        cocycle: Option<PathBuf>,
        #[arg(long, default_value_t = ops::DEFAULT_SHELLS)]
        shells: usize,
        #[arg(long, default_value_t = ops::DEFAULT_STAGES)]
        stages: usize,
        #[arg(long, default_value_t = RadiusSchedule::default().initial)]
        r1: f64,
        #[arg(long, default_value_t = RadiusSchedule::default().ratio)]
        ratio: f64,
        #[arg(long, value_name = "L")]
        check_box: Option<usize>,
        #[arg(long, default_value = "residuals.csv")]
        name: String,
    },
}

#[derive(Subcommand)]
enum MeasureCommand {
    /// Write a normalized measure JSON.
    Generate {
        #[arg(long, value_enum)]
        kind: MeasureKind,
        /// Parameters as JSON, e.g. '{"r": 0.5}'.
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        group: Option<PathBuf>,
        #[arg(long, default_value = "measure.json")]
        name: String,
    },
}

#[derive(Serialize)]
struct Written<'a, T: Serialize> {
    path: &'a Path,
    #[serde(flatten)]
    info: T,
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", io::to_json(value));
}

struct Context {
    grid: Option<usize>,
    window: usize,
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn measure(&self, input: &Input) -> CliResult<DualMeasure> {
        let g = io::load_group(input.group.as_deref())?;
        io::load_measure(&input.measure, &g, self.grid)
    }

    fn grid_or_default(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_GRID_SIZE)
    }
}

fn split_list(t: &str) -> Vec<&str> {
    t.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn parse_candidate(g: &GroupDescriptor, s: &str) -> CliResult<DualPoint> {
    let bad = |m: String| CliError::parse("--candidate", format!("{s:?}: {m}"));
    let (angles, torsion) = s.split_once(':').unwrap_or((s, ""));
    let theta = split_list(angles)
        .into_iter()
        .map(|a| a.parse::<f64>().map_err(|e| bad(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let mut torsion = split_list(torsion)
        .into_iter()
        .map(|c| c.parse::<i64>().map_err(|e| bad(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    if torsion.is_empty() {
        torsion = vec![0; g.torsion_orders().len()];
    }
    Ok(g.dual_point(theta, torsion)?)
}

fn classify_cmd(ctx: &Context, a: ClassifyArgs) -> CliResult<()> {
    let g = io::load_group(a.group.as_deref())?;
    let (mu, inferred) = match (&a.measure, &a.phi) {
        (Some(m), _) => (io::load_measure(m, &g, ctx.grid)?, a.inferred),
        (None, Some(p)) => {
            let phi = io::load_phi(p)?;
            let options = InverseOptions {
                grid_size: ctx.grid_or_default(),
                ..InverseOptions::default()
            };
            (bochner_inverse(&phi, &options)?.measure, true)
        }
        (None, None) => unreachable!("clap requires one of --measure, --phi"),
    };
    let mut options = if inferred { ClassifyOptions::inferred() } else { ClassifyOptions::default() };
    options.shell_count = a.shells;
    options.witness = !a.no_witness;
    print_json(&ops::classify_measure(&mu, &options)?.view);
    Ok(())
}

fn transform_cmd(ctx: &Context, c: TransformCommand) -> CliResult<()> {
    match c {
        TransformCommand::Forward { input, name } => {
            let mu = ctx.measure(&input)?;
            let phi = bochner_forward(&mu, ctx.window)?;
            let path = ctx.path(&name);
            io::write_json(&path, &phi)?;
            #[derive(Serialize)]
            struct Info {
                window: usize,
                values: usize,
            }
            print_json(&Written {
                path: &path,
                info: Info {
                    window: phi.window_radius(),
                    values: phi.values().len(),
                },
            });
        }
        TransformCommand::Inverse {
            phi,
            kernel,
            candidates,
            name,
        } => {
            let phi = io::load_phi(&phi)?;
            let points = candidates
                .iter()
                .map(|s| parse_candidate(phi.descriptor(), s))
                .collect::<CliResult<Vec<_>>>()?;
            let options = InverseOptions {
                grid_size: ctx.grid_or_default(),
                candidates: points,
                kernel: match kernel {
                    KernelArg::Jackson => SmoothingKernel::Jackson,
                    KernelArg::Fejer => SmoothingKernel::Fejer,
                },
                ..InverseOptions::default()
            };
            let r = bochner_inverse(&phi, &options)?;
            let path = ctx.path(&name);
            io::write_json(&path, &MeasureSpec::from_measure(&r.measure))?;
            print_json(&Written {
                path: &path,
                info: InverseView::from(&r),
            });
        }
    }
    Ok(())
}

fn gns_cmd(ctx: &Context, c: GnsCommand) -> CliResult<()> {
    match c {
        GnsCommand::Build { phi, group, measure } => {
            let phi = match (phi, measure) {
                (Some(p), _) => io::load_phi(&p)?,
                (None, Some(m)) => {
                    let g = io::load_group(group.as_deref())?;
                    bochner_forward(&io::load_measure(&m, &g, ctx.grid)?, ctx.window)?
                }
                (None, None) => unreachable!("clap requires one of --phi, --measure"),
            };
            let model = build_gns(&phi)?;
            print_json(&GnsView {
                window_radius: model.window_radius(),
                dimension: model.dimension(),
                min_eigenvalue: model.min_eigenvalue(),
                spectral_norm: model.spectral_norm(),
                numerical_rank: model.numerical_rank(1e-10),
            });
        }
        GnsCommand::Verify {
            input,
            phi,
            shifts,
            threshold,
        } => {
            let mu = ctx.measure(&input)?;
            let phi = phi.map(|p| io::load_phi(&p)).transpose()?;
            let steps = ops::parse_shifts(&shifts)?;
            let v = ops::gns_verify(&mu, phi.as_ref(), ctx.window, &steps, threshold)?;
            print_json(&v);
            if !v.passed {
                return Err(CliError::Check(format!(
                    "discrepancy {:.3e} exceeds {threshold:e}",
                    v.discrepancy
                )));
            }
        }
    }
    Ok(())
}

fn cocycle_cmd(ctx: &Context, c: CocycleCommand) -> CliResult<()> {
    match c {
        CocycleCommand::Build { input, shells, name } => {
            let mu = ctx.measure(&input)?;
            let (sc, view) = ops::build_shells(&mu, shells)?;
            let path = ctx.path(&name);
            io::write_text(&path, &io::cocycle_csv(&sc.cocycle))?;
            print_json(&Written { path: &path, info: view });
        }
        CocycleCommand::Synthetic {
            input,
            kind,
            sample_seed,
            name,
        } => {
            let mu = ctx.measure(&input)?;
            let b = ops::synthetic_cocycle(&mu, kind, sample_seed)?;
            let path = ctx.path(&name);
            io::write_text(&path, &io::cocycle_csv(&b))?;
            #[derive(Serialize)]
            struct Info {
                norm: f64,
            }
            print_json(&Written {
                path: &path,
                info: Info { norm: b.norm() },
            });
        }
        CocycleCommand::Solve {
            input,
            cocycle,
            check_box,
            name,
        } => {
            let mu = ctx.measure(&input)?;
            let b = io::read_cocycle_csv(&cocycle, &mu)?;
            let s = ops::solve(&b, check_box)?;
            let path = ctx.path(&name);
            io::write_text(&path, &s.csv)?;
            print_json(&Written { path: &path, info: s.view });
        }
        CocycleCommand::Approx {
            input,
            cocycle,
            shells,
            stages,
            r1,
            ratio,
            check_box,
            name,
        } => {
            let mu = ctx.measure(&input)?;
            let b: Cocycle = match cocycle {
                Some(p) => io::read_cocycle_csv(&p, &mu)?,
                None => ops::build_shells(&mu, shells)?.0.cocycle,
            };
            let schedule = RadiusSchedule { initial: r1, ratio };
            let a = ops::approximate(&b, stages, schedule, check_box)?;
            let path = ctx.path(&name);
            io::write_text(&path, &report::residuals_csv(&a.stages))?;
            print_json(&Written { path: &path, info: a.view });
        }
    }
    Ok(())
}

fn measure_cmd(ctx: &Context, c: MeasureCommand) -> CliResult<()> {
    let MeasureCommand::Generate {
        kind,
        params,
        group,
        name,
    } = c;
    let g = io::load_group(group.as_deref())?;
    let value: serde_json::Value = serde_json::from_str(&params).map_err(|e| CliError::parse("--params", e))?;
    let (mu, spec) = generate::generate_measure(&g, kind, &value, ctx.grid_or_default())?;
    let path = ctx.path(&name);
    io::write_json(&path, &spec)?;
    #[derive(Serialize)]
    struct Info {
        kind: MeasureKind,
        total_mass: f64,
        support_distance: f64,
        atoms: usize,
        cells: usize,
    }
    print_json(&Written {
        path: &path,
        info: Info {
            kind,
            total_mass: mu.total_mass(),
            support_distance: mu.distance_to_support(&g.trivial_character())?,
            atoms: mu.atoms().len(),
            cells: mu.cells().len(),
        },
    });
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Context {
        grid: cli.grid,
        window: cli.window,
        seed: cli.seed,
        out: io::output_dir(&cli.out_dir),
    };
    match cli.command {
        Command::Classify(a) => classify_cmd(&ctx, a),
        Command::Transform(c) => transform_cmd(&ctx, c),
        Command::Gns(c) => gns_cmd(&ctx, c),
        Command::Cocycle(c) => cocycle_cmd(&ctx, c),
        Command::Measure(c) => measure_cmd(&ctx, c),
        Command::Run { scenario: path } => {
            let outcome = scenario::run_scenario(&path, ctx.grid)?;
            if outcome.artifacts.is_empty() {
                println!("empty pipeline, nothing written");
            } else {
                print!("{}", outcome.summary);
                for a in &outcome.artifacts {
                    println!("wrote {}", a.display());
                }
            }
            Ok(())
        }
        Command::Selftest { cases } => {
            let lines = selftest::run(ctx.seed, cases)?;
            let failed = lines.iter().filter(|l| !l.passed).count();
            for l in &lines {
                println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            if failed > 0 {
                return Err(CliError::Check(format!("{failed} of {} selftest checks failed", lines.len())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
