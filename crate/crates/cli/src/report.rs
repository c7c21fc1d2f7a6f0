//! JSON views of the library results.

use abelian_coh::bochner::{AtomEstimate, InverseResult};
use abelian_coh::cohomology::{
    validate_cocycle, ApproximationStage, ClassificationReport, CoboundarySolution, ShellCocycle, SmoothingMeasure,
    Witness,
};
use abelian_coh::gns::EquivalenceReport;
use abelian_coh::{DualMeasure, GroupDescriptor, Verdict};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ReportView {
    pub group: GroupDescriptor,
    pub trivial_mass: f64,
    pub hom_dim: usize,
    pub support_distance: f64,
    pub h1: Verdict,
    pub reduced_h1: Verdict,
    pub witness: Option<WitnessView>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessView {
    HomomorphismCocycle { trivial_atom: Option<usize>, generators: usize },
    ShellCocycle(ShellView),
    SmoothingMeasure(SmoothingView),
}

#[derive(Debug, Serialize)]
pub struct SmoothingView {
    pub side: usize,
    pub support_size: usize,
    pub gap: f64,
    pub margin: f64,
}

impl From<&SmoothingMeasure> for SmoothingView {
    fn from(nu: &SmoothingMeasure) -> Self {
        Self {
            side: nu.side(),
            support_size: nu.support_size(),
            gap: nu.gap(),
            margin: nu.margin(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ShellRow {
    pub level: usize,
    pub mass: f64,
    pub neighborhood_mass: f64,
    pub points: usize,
    pub inner_distance: f64,
}

#[derive(Debug, Serialize)]
pub struct PartialSumRow {
    pub ell: usize,
    pub max_tail: f64,
    pub level_bound: f64,
    pub max_total: f64,
    pub total_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Serialize)]
pub struct ObstructionRow {
    pub threshold: f64,
    pub integral: f64,
}

#[derive(Debug, Serialize)]
pub struct ValidationView {
    pub passed: bool,
    pub max_violation: f64,
    pub pairs_checked: usize,
}

#[derive(Debug, Serialize)]
pub struct ShellView {
    pub shell_count: usize,
    pub usable_shells: usize,
    pub shells: Vec<ShellRow>,
    pub partial_sums: Vec<PartialSumRow>,
    pub obstruction: Vec<ObstructionRow>,
    pub min_obstruction_increment: f64,
    pub validation: ValidationView,
}

impl From<&ShellCocycle> for ShellView {
    fn from(sc: &ShellCocycle) -> Self {
        let check = validate_cocycle(&sc.cocycle);
        Self {
            shell_count: sc.shells.len(),
            usable_shells: sc.usable_shells,
            shells: sc
                .shells
                .iter()
                .map(|s| ShellRow {
                    level: s.level,
                    mass: s.mass,
                    neighborhood_mass: s.neighborhood_mass,
                    points: s.members.len(),
                    inner_distance: s.inner_distance,
                })
                .collect(),
            partial_sums: sc
                .partial_sums
                .iter()
                .map(|p| PartialSumRow {
                    ell: p.ell,
                    max_tail: p.max_tail,
                    level_bound: p.level_bound,
                    max_total: p.max_total,
                    total_bound: p.total_bound,
                    holds: p.holds(),
                })
                .collect(),
            obstruction: sc
                .obstruction
                .iter()
                .map(|o| ObstructionRow {
                    threshold: o.threshold,
                    integral: o.integral,
                })
                .collect(),
            min_obstruction_increment: sc.min_obstruction_increment(),
            validation: ValidationView {
                passed: check.passed,
                max_violation: check.max_violation(),
                pairs_checked: check.pairs_checked,
            },
        }
    }
}

pub fn report_view(mu: &DualMeasure, r: &ClassificationReport) -> ReportView {
    let witness = r.witness.as_ref().map(|w| match w {
        Witness::Homomorphism(b) => WitnessView::HomomorphismCocycle {
            trivial_atom: mu.trivial_atom(),
            generators: b.generator_values().len(),
        },
        Witness::Shell(sc) => WitnessView::ShellCocycle(ShellView::from(sc.as_ref())),
        Witness::Smoothing(nu) => WitnessView::SmoothingMeasure(SmoothingView::from(nu)),
    });
    ReportView {
        group: mu.descriptor().clone(),
        trivial_mass: r.trivial_mass,
        hom_dim: r.hom_dim,
        support_distance: r.support_distance,
        h1: r.h1,
        reduced_h1: r.reduced_h1,
        witness,
        notes: r.notes.clone(),
    }
}

#[derive(Debug, Serialize)]
pub struct SolveView {
    pub residual: f64,
    pub cocycle_norm: f64,
    pub smoothing: Option<SmoothingView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_residual: Option<f64>,
}

impl SolveView {
    pub fn new(s: &CoboundarySolution) -> Self {
        Self {
            residual: s.residual,
            cocycle_norm: s.cocycle_norm,
            smoothing: s.smoothing.as_ref().map(SmoothingView::from),
            box_radius: None,
            box_residual: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StageView {
    pub stage: usize,
    pub radius: f64,
    pub residual: f64,
    pub tail_bound: f64,
    pub neighborhood_mass: f64,
    pub smoothing_side: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_residual: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ApproximationView {
    pub cocycle_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_radius: Option<usize>,
    pub stages: Vec<StageView>,
}

pub fn stage_view(s: &ApproximationStage, box_residual: Option<f64>) -> StageView {
    StageView {
        stage: s.stage,
        radius: s.radius,
        residual: s.residual,
        tail_bound: s.tail_bound,
        neighborhood_mass: s.neighborhood_mass,
        smoothing_side: s.smoothing_side,
        box_residual,
    }
}

pub fn residuals_csv(stages: &[ApproximationStage]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "radius", "residual"]).expect("in-memory write");
    for s in stages {
        w.write_record([s.stage.to_string(), s.radius.to_string(), s.residual.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[derive(Debug, Serialize)]
pub struct AtomView {
    pub theta: Vec<f64>,
    pub torsion: Vec<u64>,
    pub value: f64,
    pub averages: Vec<(usize, f64)>,
    pub converged: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct InverseView {
    pub total_mass: f64,
    pub negative_mass: f64,
    pub roundtrip_error: f64,
    pub atoms: Vec<AtomView>,
}

impl From<&InverseResult> for InverseView {
    fn from(r: &InverseResult) -> Self {
        Self {
            total_mass: r.measure.total_mass(),
            negative_mass: r.negative_mass,
            roundtrip_error: r.roundtrip_error,
            atoms: r
                .atom_estimates
                .iter()
                .map(|(p, e): &(_, AtomEstimate)| AtomView {
                    theta: p.angles.clone(),
                    torsion: p.torsion.clone(),
                    value: e.value,
                    averages: e.averages.clone(),
                    converged: e.converged,
                    warning: e.warning.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GnsView {
    pub window_radius: usize,
    pub dimension: usize,
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    pub numerical_rank: usize,
}

#[derive(Debug, Serialize)]
pub struct EquivalenceView {
    pub shifts: usize,
    pub discrepancy: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl EquivalenceView {
    pub fn new(r: &EquivalenceReport, shifts: usize, threshold: f64) -> Self {
        Self {
            shifts,
            discrepancy: r.discrepancy,
            threshold,
            passed: r.discrepancy <= threshold,
        }
    }
}
