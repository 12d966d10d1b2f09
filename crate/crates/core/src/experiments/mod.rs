//! Randomized verifiers for the maximum principles, the 1-ring embedding
//! lemma and the growth estimates, plus the mesh generators they use.
//!
//! Every trial draws from `ChaCha8Rng::seed_from_u64(seed)` with the stream
//! set to the trial index, so any trial can be replayed on its own.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{
    newton_prescribed_curvature, CurvatureTarget, NewtonOptions, SolveError, SolveReport,
};
use crate::euclid::{
    apply_conformal, corner_angles, develop_flat_metric, is_geodesic_embedding, ConformalFactor,
    PLMetric, PlanarCoords,
};
use crate::mesh::{Triangulation, VertexId};
use crate::tol;

mod crosscheck;
pub mod generators;
mod gradient;
mod hyp_min;
mod key_estimate;
mod lemma21;
mod max_principle;
mod rigidity;

pub use crosscheck::{delaunay_forms_agree, PredicateAgreement};
pub use generators::{delaunay_triangles, gen_hex_disk, gen_random_delaunay_disk, GenError};
pub use gradient::{gradient_bound, random_triangle_angles, run_gradient_estimate, triangle_pair};
pub use hyp_min::run_hyp_min_principle;
pub use key_estimate::{evaluate_key_estimate, key_constant, run_key_estimate, KeyEstimateOutcome};
pub use lemma21::run_lemma21;
pub use max_principle::run_max_principle;
pub use rigidity::run_rigidity_decay;

/// Deterministic generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Mesh-scale parameter; its meaning depends on the experiment.
    pub size: usize,
    /// Magnitude of sampled boundary factors.
    pub amplitude: f64,
    pub tolerance: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::InvalidConfig(
                "trials must be at least 1".into(),
            ));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(ExperimentError::InvalidConfig(
                "amplitude must be finite and nonnegative".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(ExperimentError::InvalidConfig(
                "tolerance must be positive".into(),
            ));
        }
        if self.size == 0 {
            return Err(ExperimentError::InvalidConfig(
                "size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MaxPrinciple,
    HypMinPrinciple,
    Lemma21,
    KeyEstimate,
    Gradient,
    RigidityDecay,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::MaxPrinciple,
        Experiment::HypMinPrinciple,
        Experiment::Lemma21,
        Experiment::KeyEstimate,
        Experiment::Gradient,
        Experiment::RigidityDecay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MaxPrinciple => "max-principle",
            Experiment::HypMinPrinciple => "hyp-min-principle",
            Experiment::Lemma21 => "lemma21",
            Experiment::KeyEstimate => "key-estimate",
            Experiment::Gradient => "gradient",
            Experiment::RigidityDecay => "rigidity-decay",
        }
    }

    pub fn default_config(self) -> ExperimentConfig {
        let (trials, size, amplitude) = match self {
            Experiment::MaxPrinciple => (200, 5, 0.2),
            Experiment::HypMinPrinciple => (200, 24, 0.2),
            Experiment::Lemma21 => (10_000, 9, 0.0),
            Experiment::KeyEstimate => (100, 5, 0.3),
            Experiment::Gradient => (10_000, 1, 0.0),
            Experiment::RigidityDecay => (20, 8, 0.1),
        };
        ExperimentConfig {
            seed: 0,
            trials,
            size,
            amplitude,
            tolerance: 1e-9,
        }
    }

    /// Whether more than half the trials being skipped is an error.
    pub fn gated(self) -> bool {
        matches!(
            self,
            Experiment::MaxPrinciple | Experiment::HypMinPrinciple | Experiment::KeyEstimate
        )
    }

    pub fn run(self, config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
        match self {
            Experiment::MaxPrinciple => run_max_principle(config),
            Experiment::HypMinPrinciple => run_hyp_min_principle(config),
            Experiment::Lemma21 => run_lemma21(config),
            Experiment::KeyEstimate => run_key_estimate(config),
            Experiment::Gradient => run_gradient_estimate(config),
            Experiment::RigidityDecay => run_rigidity_decay(config),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Pass,
    Fail,
    Skipped,
}

/// Enough to replay a trial: the run seed, the trial index and the vertices
/// where the check failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub seed: u64,
    pub trial: usize,
    pub vertices: Vec<VertexId>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub status: TrialStatus,
    /// Signed slack of the checked inequality; negative beyond the tolerance
    /// means a violation.
    pub margin: Option<f64>,
    pub values: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub worst_margin: Option<f64>,
    pub worst_trial: Option<usize>,
}

impl Summary {
    pub fn valid(&self) -> usize {
        self.passed + self.failed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub trials: Vec<TrialRecord>,
    pub table: Option<Table>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    /// One row per trial: index, status, margin, every recorded value, note.
    pub fn to_csv(&self) -> String {
        let keys: BTreeSet<&String> = self.trials.iter().flat_map(|t| t.values.keys()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index".to_string(), "status".into(), "margin".into()];
        header.extend(keys.iter().map(|k| k.to_string()));
        header.push("note".into());
        w.write_record(&header).expect("in-memory csv");
        for t in &self.trials {
            let status = match t.status {
                TrialStatus::Pass => "pass",
                TrialStatus::Fail => "fail",
                TrialStatus::Skipped => "skipped",
            };
            let mut row = vec![t.index.to_string(), status.to_string(), opt(t.margin)];
            row.extend(keys.iter().map(|k| opt(t.values.get(*k).copied())));
            row.push(t.note.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn table_csv(&self) -> Option<String> {
        let table = self.table.as_ref()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.columns).expect("in-memory csv");
        for row in &table.rows {
            w.write_record(row.iter().map(|x| x.to_string()))
                .expect("in-memory csv");
        }
        Some(String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8"))
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(|t| t.status == TrialStatus::Fail)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("only {valid} of {total} trials met the hypotheses")]
    InsufficientValidTrials {
        valid: usize,
        total: usize,
        report: Box<ExperimentReport>,
    },
    #[error(transparent)]
    Generator(#[from] GenError),
}

pub(crate) type Values = BTreeMap<String, f64>;

pub(crate) enum Outcome {
    Pass {
        margin: f64,
        values: Values,
    },
    Fail {
        margin: f64,
        values: Values,
        vertices: Vec<VertexId>,
        detail: String,
    },
    Skip {
        reason: String,
        values: Values,
    },
}

impl Outcome {
    pub(crate) fn skip(reason: impl Into<String>) -> Self {
        Outcome::Skip {
            reason: reason.into(),
            values: Values::new(),
        }
    }

    /// Passes when `margin >= -tolerance`.
    pub(crate) fn check(
        margin: f64,
        tolerance: f64,
        values: Values,
        vertices: Vec<VertexId>,
        detail: impl FnOnce() -> String,
    ) -> Self {
        if margin >= -tolerance {
            Outcome::Pass { margin, values }
        } else {
            Outcome::Fail {
                margin,
                values,
                vertices,
                detail: detail(),
            }
        }
    }
}

pub(crate) fn values<const N: usize>(pairs: [(&str, f64); N]) -> Values {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Runs `count` trials in parallel; records come back in index order.
pub(crate) fn run_trials<F>(seed: u64, count: usize, trial: F) -> Vec<TrialRecord>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Outcome + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = trial_rng(seed, index as u64);
            record(seed, index, trial(&mut rng, index))
        })
        .collect()
}

fn record(seed: u64, index: usize, outcome: Outcome) -> TrialRecord {
    match outcome {
        Outcome::Pass { margin, values } => TrialRecord {
            index,
            status: TrialStatus::Pass,
            margin: Some(margin).filter(|m| m.is_finite()),
            values: finite(values),
            witness: None,
            note: None,
        },
        Outcome::Fail {
            margin,
            values,
            vertices,
            detail,
        } => TrialRecord {
            index,
            status: TrialStatus::Fail,
            margin: Some(margin).filter(|m| m.is_finite()),
            values: finite(values),
            witness: Some(Witness {
                seed,
                trial: index,
                vertices,
                detail,
            }),
            note: None,
        },
        Outcome::Skip { reason, values } => TrialRecord {
            index,
            status: TrialStatus::Skipped,
            margin: None,
            values: finite(values),
            witness: None,
            note: Some(reason),
        },
    }
}

fn finite(values: Values) -> Values {
    values.into_iter().filter(|(_, v)| v.is_finite()).collect()
}

pub(crate) fn finish(
    experiment: Experiment,
    config: &ExperimentConfig,
    trials: Vec<TrialRecord>,
    table: Option<Table>,
) -> Result<ExperimentReport, ExperimentError> {
    let count = |s: TrialStatus| trials.iter().filter(|t| t.status == s).count();
    let worst = trials
        .iter()
        .filter_map(|t| t.margin.map(|m| (t.index, m)))
        .fold(None, |acc: Option<(usize, f64)>, (i, m)| match acc {
            Some((_, best)) if best <= m => acc,
            _ => Some((i, m)),
        });
    let summary = Summary {
        total: trials.len(),
        passed: count(TrialStatus::Pass),
        failed: count(TrialStatus::Fail),
        skipped: count(TrialStatus::Skipped),
        worst_margin: worst.map(|w| w.1),
        worst_trial: worst.map(|w| w.0),
    };
    let report = ExperimentReport {
        experiment: experiment.name().to_string(),
        config: *config,
        summary,
        trials,
        table,
    };
    if experiment.gated() && report.summary.skipped * 2 > report.summary.total {
        return Err(ExperimentError::InsufficientValidTrials {
            valid: report.summary.valid(),
            total: report.summary.total,
            report: Box::new(report),
        });
    }
    Ok(report)
}

/// Independent uniform values in `[-amplitude, amplitude]` on the boundary.
pub(crate) fn random_boundary(
    tri: &Triangulation,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
) -> BTreeMap<VertexId, f64> {
    use rand::Rng;
    tri.boundary_vertices()
        .into_iter()
        .map(|v| {
            (
                v,
                if amplitude > 0.0 {
                    rng.random_range(-amplitude..=amplitude)
                } else {
                    0.0
                },
            )
        })
        .collect()
}

/// Flat interior, Dirichlet boundary.
pub fn solve_flat(
    tri: &Triangulation,
    l: &PLMetric,
    boundary: BTreeMap<VertexId, f64>,
) -> Result<(ConformalFactor, SolveReport), SolveError> {
    newton_prescribed_curvature(
        tri,
        l,
        &CurvatureTarget::flat(tri, boundary),
        &NewtonOptions::default(),
    )
}

/// Scales `l` by `u`, requires the result to be Delaunay, develops it and
/// requires the drawing to be a geodesic embedding.
pub fn delaunay_development(
    tri: &Triangulation,
    l: &PLMetric,
    u: &ConformalFactor,
) -> Result<(PLMetric, PlanarCoords), String> {
    let scaled = apply_conformal(tri, l, u).map_err(|e| e.to_string())?;
    let angles = corner_angles(tri, &scaled).map_err(|e| e.to_string())?;
    let margin = angles
        .edge_delaunay_margins(tri)
        .values()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if margin < -tol::DELAUNAY {
        return Err(format!("scaled metric is not Delaunay (margin {margin:e})"));
    }
    let root = (0..tri.num_faces())
        .find(|&f| tri.face(f).iter().any(|v| tri.is_interior(*v)))
        .unwrap_or(0);
    let coords = develop_flat_metric(tri, &scaled, root).map_err(|e| e.to_string())?;
    let report = is_geodesic_embedding(tri, &coords, false);
    if !report.embedded {
        return Err(format!(
            "development is not embedded ({:?})",
            report.failure
        ));
    }
    Ok((scaled, coords))
}
