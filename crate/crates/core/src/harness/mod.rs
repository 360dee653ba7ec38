//! Batch experiment driver: configuration, loss streams, game runners,
//! bound auditing and CSV/JSON output.

pub mod audit;
pub mod generators;
pub mod rng;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{
    aggregate_subset, bound_grid, bound_theorem1, bound_theorem2, bound_theorem3,
};
use crate::combinatorial::{make_game, CombGameState};
use crate::error::{Error, Result};
use crate::experts::{
    hedge_weights, potential, squint_weights, DiscreteGrid, ExpertGameState, IProdAccumulator,
    LearningRatePrior,
};
use crate::numerics::QuadratureOptions;
use crate::polytopes::{enumerate_vertices, project, ClassSpec, ConceptClass, DEFAULT_VERTEX_CAP};

pub use audit::{audit_csv, AuditReport};
use generators::{gen_adversarial_shift, gen_signed_uniform, gen_stochastic, gen_uniform, LossStream};

pub const SCHEMA_VERSION: u32 = 1;
/// Slack on `R ≤ bound` before a violation is reported.
pub const BOUND_SLACK: f64 = 1e-9;
/// Slack on `Φ ≤ 0` and on its round-to-round decrease.
pub const POTENTIAL_SLACK: f64 = 1e-9;

fn default_potential_every() -> u64 {
    10
}
fn yes() -> bool {
    true
}
fn default_cap() -> usize {
    DEFAULT_VERTEX_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub horizon: u64,
    pub seed: u64,
    pub game: GameConfig,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub report: ReportConfig,
    /// Potential is recorded every this many rounds, and at the last round.
    #[serde(default = "default_potential_every")]
    pub potential_every: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameConfig {
    Experts {
        k: usize,
        #[serde(default)]
        prior: Option<Vec<f64>>,
        algorithm: ExpertAlgorithm,
    },
    /// Component iProd with the default grid for `horizon`.
    Combinatorial {
        class: ClassSpec,
        /// Defaults to the projection of the all-1/2 vector.
        #[serde(default)]
        prior: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertAlgorithm {
    SquintConjugate {
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: f64,
    },
    SquintCv {},
    SquintImproper {},
    SquintGrid { grid: GridConfig },
    Iprod { grid: GridConfig },
    Hedge { eta: f64 },
}

impl ExpertAlgorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Self::SquintConjugate { .. } => "squint_conjugate",
            Self::SquintCv {} => "squint_cv",
            Self::SquintImproper {} => "squint_improper",
            Self::SquintGrid { .. } => "squint_grid",
            Self::Iprod { .. } => "iprod",
            Self::Hedge { .. } => "hedge",
        }
    }
}

/// Either `points` (geometric grid `2^{-1-i/2}`) or explicit `etas` with
/// optional `masses` (uniform by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn build(&self) -> Result<DiscreteGrid> {
        match (&self.points, &self.etas, &self.masses) {
            (Some(n), None, None) => DiscreteGrid::geometric(*n),
            (None, Some(etas), None) => DiscreteGrid::uniform(etas.clone()),
            (None, Some(etas), Some(m)) => DiscreteGrid::new(etas.clone(), m.clone()),
            _ => Err(Error::Config(
                "grid needs either `points` or `etas` (with optional `masses`)".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Stochastic {
        means: Vec<f64>,
    },
    AdversarialShift {
        segment_length: u64,
        #[serde(default)]
        noise: f64,
    },
    Uniform {},
    /// Losses in `[−1, 1]`; combinatorial games only.
    SignedUniform {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Experts: audit every single expert.
    #[serde(default = "yes")]
    pub singletons: bool,
    /// Experts: audit the experts within `0.1·T` of the best final cumulative loss.
    #[serde(default = "yes")]
    pub near_best: bool,
    /// Experts: further subsets (0-based indices).
    #[serde(default)]
    pub subsets: Vec<Vec<usize>>,
    /// Combinatorial: audit every concept.
    #[serde(default = "yes")]
    pub vertices: bool,
    #[serde(default = "default_cap")]
    pub vertex_cap: usize,
    /// Combinatorial: further comparators in `U`.
    #[serde(default)]
    pub comparators: Vec<Vec<f64>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            singletons: true,
            near_best: true,
            subsets: Vec::new(),
            vertices: true,
            vertex_cap: DEFAULT_VERTEX_CAP,
            comparators: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.potential_every == 0 {
            return Err(Error::Config("potential_every must be positive".into()));
        }
        match (&self.game, &self.environment) {
            (GameConfig::Experts { .. }, EnvironmentConfig::SignedUniform {}) => {
                return Err(Error::Config(
                    "signed_uniform losses are only valid for combinatorial games".into(),
                ))
            }
            (GameConfig::Experts { k: 0, .. }, _) => {
                return Err(Error::Config("need at least one expert".into()))
            }
            _ => {}
        }
        if let GameConfig::Experts { algorithm, .. } = &self.game {
            match algorithm {
                ExpertAlgorithm::SquintGrid { grid } | ExpertAlgorithm::Iprod { grid } => {
                    grid.build()?;
                }
                ExpertAlgorithm::Hedge { eta } if !(*eta > 0.0 && eta.is_finite()) => {
                    return Err(Error::Config("Hedge eta must be positive".into()))
                }
                _ => {}
            }
        }
        let k = self.dim()?;
        match &self.environment {
            EnvironmentConfig::Stochastic { means } => {
                gen_stochastic(k, means, self.seed, 0)?;
            }
            EnvironmentConfig::AdversarialShift { segment_length, noise } => {
                gen_adversarial_shift(k, *segment_length, *noise, self.seed, 0)?;
            }
            _ => {}
        }
        let prior = match &self.game {
            GameConfig::Experts { prior, .. } | GameConfig::Combinatorial { prior, .. } => prior,
        };
        if let Some(p) = prior {
            if p.len() != k {
                return Err(Error::Config(format!("prior has {} entries, expected {k}", p.len())));
            }
        }
        Ok(())
    }

    fn dim(&self) -> Result<usize> {
        Ok(match &self.game {
            GameConfig::Experts { k, .. } => *k,
            GameConfig::Combinatorial { class, .. } => ConceptClass::from_spec(class)?.dim(),
        })
    }

    /// The configured loss stream.
    pub fn losses(&self) -> Result<LossStream> {
        let k = self.dim()?;
        let (seed, t) = (self.seed, self.horizon);
        match &self.environment {
            EnvironmentConfig::Stochastic { means } => gen_stochastic(k, means, seed, t),
            EnvironmentConfig::AdversarialShift {
                segment_length,
                noise,
            } => gen_adversarial_shift(k, *segment_length, *noise, seed, t),
            EnvironmentConfig::Uniform {} => Ok(gen_uniform(k, seed, t)),
            EnvironmentConfig::SignedUniform {} => Ok(gen_signed_uniform(k, seed, t)),
        }
    }
}

/// Running statistics of one audited subset or comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditValue {
    pub r: f64,
    pub v: f64,
    /// `None` when the algorithm carries no bound (Hedge).
    pub bound: Option<f64>,
}

/// One round of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub t: u64,
    pub losses: Vec<f64>,
    /// Weights (experts) or usage (combinatorial) played this round.
    pub action: Vec<f64>,
    pub audits: Vec<AuditValue>,
    pub potential: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub label: String,
    /// Expert indices (experts mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<usize>>,
    /// Comparator point (combinatorial mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparator: Option<Vec<f64>>,
    pub r: f64,
    pub v: f64,
    pub bound: Option<f64>,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub mode: String,
    pub algorithm: String,
    pub rounds: u64,
    pub learner_loss: f64,
    pub audits: Vec<AuditSummary>,
    pub max_potential: Option<f64>,
    pub bound_violation: bool,
    pub invariant_failures: Vec<String>,
}

impl ExperimentSummary {
    /// Whether anything went wrong: a bound violation or a failed invariant.
    pub fn failed(&self) -> bool {
        self.bound_violation || !self.invariant_failures.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Column prefix: `w` or `u`.
    pub action_prefix: &'static str,
    pub labels: Vec<String>,
    pub records: Vec<ExperimentRecord>,
    pub summary: ExperimentSummary,
}

fn violates(r: f64, bound: Option<f64>) -> bool {
    bound.is_some_and(|b| !(r <= b + BOUND_SLACK * b.abs().max(1.0)))
}

/// Tracks potential samples and reports sign or monotonicity failures.
#[derive(Default)]
struct PotentialMonitor {
    last: Option<f64>,
    max: Option<f64>,
}

impl PotentialMonitor {
    fn record(&mut self, t: u64, phi: f64, failures: &mut Vec<String>) {
        if !(phi <= POTENTIAL_SLACK) {
            failures.push(format!("round {t}: potential {phi} is positive"));
        }
        if let Some(prev) = self.last {
            if !(phi <= prev + POTENTIAL_SLACK) {
                failures.push(format!("round {t}: potential increased from {prev} to {phi}"));
            }
        }
        self.last = Some(phi);
        self.max = Some(self.max.map_or(phi, |m| m.max(phi)));
    }
}

fn sample_potential(config: &ExperimentConfig, t: u64) -> bool {
    t % config.potential_every == 0 || t == config.horizon
}

/// Run the configured experiment in memory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let losses = config.losses()?;
    match &config.game {
        GameConfig::Experts {
            k,
            prior,
            algorithm,
        } => run_experts(config, *k, prior.as_deref(), algorithm, &losses),
        GameConfig::Combinatorial { class, prior } => {
            run_combinatorial(config, &ConceptClass::from_spec(class)?, prior.as_deref(), &losses)
        }
    }
}

/// Experts within `0.1·T` of the best final cumulative loss.
pub fn near_best_subset(losses: &LossStream, k: usize) -> Vec<usize> {
    let mut totals = vec![0.0; k];
    for row in losses {
        for (s, l) in totals.iter_mut().zip(row) {
            *s += l;
        }
    }
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 0.1 * losses.len() as f64;
    (0..k).filter(|&i| totals[i] <= best + slack).collect()
}

enum ExpertRunner {
    Squint(LearningRatePrior),
    IProd(IProdAccumulator),
    Hedge(f64),
}

fn run_experts(
    config: &ExperimentConfig,
    k: usize,
    prior: Option<&[f64]>,
    algorithm: &ExpertAlgorithm,
    losses: &LossStream,
) -> Result<ExperimentOutput> {
    let mut state = match prior {
        Some(p) => ExpertGameState::with_prior(p.to_vec())?,
        None => ExpertGameState::new(k)?,
    };
    if state.k() != k {
        return Err(Error::Config(format!("prior has {} entries, K = {k}", state.k())));
    }
    let opts = QuadratureOptions::default();
    let mut runner = match algorithm {
        ExpertAlgorithm::SquintConjugate { a, b } => {
            ExpertRunner::Squint(LearningRatePrior::Conjugate { a: *a, b: *b })
        }
        ExpertAlgorithm::SquintCv {} => ExpertRunner::Squint(LearningRatePrior::Cv),
        ExpertAlgorithm::SquintImproper {} => ExpertRunner::Squint(LearningRatePrior::ImproperLogUniform),
        ExpertAlgorithm::SquintGrid { grid } => {
            ExpertRunner::Squint(LearningRatePrior::DiscreteGrid(grid.build()?))
        }
        ExpertAlgorithm::Iprod { grid } => ExpertRunner::IProd(IProdAccumulator::new(k, grid.build()?)),
        ExpertAlgorithm::Hedge { eta } => ExpertRunner::Hedge(*eta),
    };

    let mut subsets: Vec<(String, Vec<usize>)> = Vec::new();
    if config.report.singletons {
        subsets.extend((0..k).map(|i| (format!("e{}", i + 1), vec![i])));
    }
    if config.report.near_best && !losses.is_empty() {
        subsets.push(("best".into(), near_best_subset(losses, k)));
    }
    for (j, s) in config.report.subsets.iter().enumerate() {
        subsets.push((format!("s{}", j + 1), s.clone()));
    }
    // Validate every subset before the first round.
    for (_, s) in &subsets {
        aggregate_subset(&state, s)?;
    }

    let grid = match algorithm {
        ExpertAlgorithm::SquintGrid { grid } | ExpertAlgorithm::Iprod { grid } => Some(grid.build()?),
        _ => None,
    };
    let bound = |v: f64, pi: f64, t: u64| -> Result<Option<f64>> {
        Ok(match (algorithm, &grid) {
            (ExpertAlgorithm::SquintConjugate { a, b }, _) => Some(bound_theorem1(v, pi, *a, *b)?),
            (ExpertAlgorithm::SquintCv {}, _) => Some(bound_theorem2(v, pi)?),
            (ExpertAlgorithm::SquintImproper {}, _) => Some(bound_theorem3(v, pi, t)?),
            (ExpertAlgorithm::Hedge { .. }, _) => None,
            (_, Some(g)) => Some(bound_grid(v, pi, g)?),
            (_, None) => unreachable!("grid algorithms always build a grid"),
        })
    };

    let mut records = Vec::with_capacity(losses.len());
    let mut failures = Vec::new();
    let mut monitor = PotentialMonitor::default();
    for (i, row) in losses.iter().enumerate() {
        let t = i as u64 + 1;
        let w = match &runner {
            ExpertRunner::Squint(p) => squint_weights(&state, p, &opts)?,
            ExpertRunner::IProd(acc) => acc.weights(state.prior())?,
            ExpertRunner::Hedge(eta) => hedge_weights(&state, *eta)?,
        };
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-12 || w.iter().any(|&x| x < 0.0) {
            failures.push(format!("round {t}: weights off the simplex (sum {total})"));
        }
        let r = state.update(&w, row)?;
        if let ExpertRunner::IProd(acc) = &mut runner {
            acc.push(&r)?;
        }
        let mut audits = Vec::with_capacity(subsets.len());
        for (_, s) in &subsets {
            let agg = aggregate_subset(&state, s)?;
            audits.push(AuditValue {
                r: agg.r_agg,
                v: agg.v_agg,
                bound: bound(agg.v_agg, agg.pi_mass, t)?,
            });
        }
        let phi = if sample_potential(config, t) {
            let phi = match &runner {
                ExpertRunner::Squint(p) => Some(potential(&state, p, &opts)?),
                ExpertRunner::IProd(acc) => Some(acc.potential(state.prior())),
                ExpertRunner::Hedge(_) => None,
            };
            if let Some(phi) = phi {
                monitor.record(t, phi, &mut failures);
            }
            phi
        } else {
            None
        };
        records.push(ExperimentRecord {
            t,
            losses: row.clone(),
            action: w,
            audits,
            potential: phi,
        });
    }

    let t_final = state.rounds();
    let mut audits = Vec::new();
    for (j, (label, s)) in subsets.iter().enumerate() {
        let agg = aggregate_subset(&state, s)?;
        let (r, v, b) = match records.last() {
            Some(rec) => (rec.audits[j].r, rec.audits[j].v, rec.audits[j].bound),
            None => (agg.r_agg, agg.v_agg, bound(agg.v_agg, agg.pi_mass, t_final)?),
        };
        let violated = records.iter().any(|rec| violates(rec.audits[j].r, rec.audits[j].bound));
        audits.push(AuditSummary {
            label: label.clone(),
            members: Some(s.clone()),
            comparator: None,
            r,
            v,
            bound: b,
            violated,
        });
    }
    let bound_violation = audits.iter().any(|a| a.violated);
    Ok(ExperimentOutput {
        action_prefix: "w",
        labels: subsets.into_iter().map(|(l, _)| l).collect(),
        records,
        summary: ExperimentSummary {
            schema_version: SCHEMA_VERSION,
            mode: "experts".into(),
            algorithm: algorithm.label().into(),
            rounds: t_final,
            learner_loss: state.learner_loss(),
            audits,
            max_potential: monitor.max,
            bound_violation,
            invariant_failures: failures,
        },
    })
}

/// Default Component iProd prior: the projection of the all-1/2 vector.
pub fn default_prior(class: &ConceptClass) -> Result<Vec<f64>> {
    project(class, &vec![0.5; class.dim()])
}

fn run_combinatorial(
    config: &ExperimentConfig,
    class: &ConceptClass,
    prior: Option<&[f64]>,
    losses: &LossStream,
) -> Result<ExperimentOutput> {
    let prior = match prior {
        Some(p) => p.to_vec(),
        None => default_prior(class)?,
    };
    let mut game: CombGameState = make_game(class.clone(), &prior, config.horizon.max(1))?;
    let mut labels = Vec::new();
    if config.report.vertices {
        for (i, v) in enumerate_vertices(class, config.report.vertex_cap)?.into_iter().enumerate() {
            game.register_comparator(&v.iter().map(|&b| f64::from(b)).collect::<Vec<_>>())?;
            labels.push(format!("v{}", i + 1));
        }
    }
    for (j, c) in config.report.comparators.iter().enumerate() {
        game.register_comparator(c)?;
        labels.push(format!("c{}", j + 1));
    }
    let etas: Vec<f64> = game.slices().iter().map(|s| s.eta).collect();

    let mut records = Vec::with_capacity(losses.len());
    let mut failures = Vec::new();
    let mut monitor = PotentialMonitor::default();
    let mut learner_loss = 0.0;
    for (i, row) in losses.iter().enumerate() {
        let t = i as u64 + 1;
        let u = game.play()?;
        let residual = class.hull_residual(&u)?;
        if residual > 1e-8 {
            failures.push(format!("round {t}: usage leaves the hull (residual {residual:e})"));
        }
        learner_loss += u.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        game.observe(row)?;
        let mut audits = Vec::with_capacity(labels.len());
        for j in 0..labels.len() {
            let c = &game.comparators()[j];
            audits.push(AuditValue {
                r: c.r_v,
                v: c.v_v,
                bound: Some(game.comparator_bound(j)?),
            });
            for &eta in &etas {
                let (lhs, rhs) = game.lemma4_check(eta, j)?;
                if !(lhs <= rhs + 1e-8) {
                    failures.push(format!(
                        "round {t}: grid inequality fails for {} at eta {eta} ({lhs} > {rhs})",
                        labels[j]
                    ));
                }
            }
        }
        let phi = if sample_potential(config, t) {
            let phi = game.potential();
            monitor.record(t, phi, &mut failures);
            Some(phi)
        } else {
            None
        };
        records.push(ExperimentRecord {
            t,
            losses: row.clone(),
            action: u,
            audits,
            potential: phi,
        });
    }

    let mut audits = Vec::new();
    for (j, label) in labels.iter().enumerate() {
        let c = &game.comparators()[j];
        audits.push(AuditSummary {
            label: label.clone(),
            members: None,
            comparator: Some(c.v.clone()),
            r: c.r_v,
            v: c.v_v,
            bound: Some(game.comparator_bound(j)?),
            violated: records.iter().any(|rec| violates(rec.audits[j].r, rec.audits[j].bound)),
        });
    }
    let bound_violation = audits.iter().any(|a| a.violated);
    Ok(ExperimentOutput {
        action_prefix: "u",
        labels,
        records,
        summary: ExperimentSummary {
            schema_version: SCHEMA_VERSION,
            mode: "combinatorial".into(),
            algorithm: "component_iprod".into(),
            rounds: game.rounds(),
            learner_loss,
            audits,
            max_potential: monitor.max,
            bound_violation,
            invariant_failures: failures,
        },
    })
}

impl ExperimentOutput {
    pub fn dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.losses.len())
    }

    pub fn csv_header(&self, k: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=k).map(|i| format!("loss_{i}")));
        cols.extend((1..=k).map(|i| format!("{}_{i}", self.action_prefix)));
        for l in &self.labels {
            cols.push(format!("R_{l}"));
            cols.push(format!("V_{l}"));
            cols.push(format!("bound_{l}"));
        }
        cols.push("potential".into());
        cols.join(",")
    }

    /// CSV text. Floats use the shortest representation that round-trips.
    pub fn to_csv(&self, k: usize) -> String {
        let mut out = self.csv_header(k);
        out.push('\n');
        for rec in &self.records {
            let _ = write!(out, "{}", rec.t);
            for x in rec.losses.iter().chain(&rec.action) {
                let _ = write!(out, ",{x}");
            }
            for a in &rec.audits {
                let _ = write!(out, ",{},{},", a.r, a.v);
                if let Some(b) = a.bound {
                    let _ = write!(out, "{b}");
                }
            }
            out.push(',');
            if let Some(p) = rec.potential {
                let _ = write!(out, "{p}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    /// Write the CSV and summary to the configured paths, if any.
    pub fn write(&self, config: &ExperimentConfig) -> Result<()> {
        let k = config.dim()?;
        if let Some(p) = &config.output.csv {
            std::fs::write(p, self.to_csv(k))?;
        }
        if let Some(p) = &config.output.summary {
            std::fs::write(p, self.summary_json()?)?;
        }
        Ok(())
    }
}
