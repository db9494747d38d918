//! Experiment sweeps for the five figure protocols.
//!
//! Every sweep cell (figure, size, coupling scale, dataset size, rank,
//! method, repetition) derives its random streams from the master seed via
//! [`seed_schedule`], so any single cell can be rerun in isolation. Cells run
//! on the rayon pool and are merged back in grid order.

mod output;
mod seeds;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fm::{FmParams, FmSign};
use crate::init::{
    coupling_random_init_with, energy_random_init_with, low_rank_init, CouplingStats,
};
use crate::ising::{build_dataset, generate_sk, IsingModel, SkParams};
use crate::linalg::eigh;
use crate::rmt::{
    approx_cdf, cdf_sup_distance, empirical_cdf, normalize_spectrum, predicted_rank,
    sample_ensemble, EnsembleParams, RankPrediction,
};
use crate::train::{train, TrainConfig};

pub use output::write_report;
pub use seeds::{seed_schedule, SeedPlan, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn id(self) -> u64 {
        match self {
            Figure::Fig1 => 1,
            Figure::Fig2 => 2,
            Figure::Fig3 => 3,
            Figure::Fig4 => 4,
            Figure::Fig5 => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    pub fn methods(self) -> &'static [Method] {
        match self {
            Figure::Fig1 => &[Method::EnergyPos, Method::EnergyNeg, Method::CouplingNeg],
            Figure::Fig2 | Figure::Fig3 => {
                &[Method::LowRankPos, Method::LowRankNeg, Method::CouplingNeg]
            }
            Figure::Fig4 => &[],
            Figure::Fig5 => &[Method::LowRankNeg],
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            other => Err(Error::Config(format!("unknown figure {other:?}"))),
        }
    }
}

/// Initializer identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LowRankPos,
    LowRankNeg,
    EnergyPos,
    EnergyNeg,
    CouplingNeg,
    CouplingPos,
}

impl Method {
    pub fn id(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::LowRankPos => "low_rank_pos",
            Method::LowRankNeg => "low_rank_neg",
            Method::EnergyPos => "energy_pos",
            Method::EnergyNeg => "energy_neg",
            Method::CouplingNeg => "coupling_neg",
            Method::CouplingPos => "coupling_pos",
        }
    }

    /// Builds the initial FM. Coupling-based methods follow the sign of the
    /// mean coupling, so `coupling_pos` is the same draw applied to `−J`.
    pub fn initialize(
        self,
        model: &IsingModel,
        stats: &CouplingStats,
        k: usize,
        seed: u64,
    ) -> Result<FmParams> {
        match self {
            Method::LowRankPos => low_rank_init(model, k, FmSign::Positive),
            Method::LowRankNeg => low_rank_init(model, k, FmSign::Negative),
            Method::EnergyPos => energy_random_init_with(model, stats, k, FmSign::Positive, seed),
            Method::EnergyNeg => energy_random_init_with(model, stats, k, FmSign::Negative, seed),
            Method::CouplingNeg => {
                let pinned = CouplingStats {
                    mu: stats.mu.abs(),
                    ..*stats
                };
                coupling_random_init_with(model, &pinned, k, seed)
            }
            Method::CouplingPos => {
                let pinned = CouplingStats {
                    mu: -stats.mu.abs(),
                    ..*stats
                };
                coupling_random_init_with(model, &pinned, k, seed)
            }
        }
    }

    fn is_random(self) -> bool {
        !matches!(self, Method::LowRankPos | Method::LowRankNeg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Reduced repetitions and epochs for a laptop run.
    Desk,
    /// Full protocol: 50 repetitions, 10,000 epochs.
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub figure: Figure,
    /// Model sizes; each sweep runs once per entry.
    pub n_values: Vec<usize>,
    pub j0: f64,
    pub j1_values: Vec<f64>,
    pub dataset_sizes: Vec<usize>,
    /// Ranks above a given `n` are skipped for that size.
    pub ranks: Vec<usize>,
    pub repetitions: usize,
    pub alpha: f64,
    pub train: TrainConfig,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
    /// Target model loaded from disk instead of generated; random
    /// initializers then use its sample moments.
    pub instance_path: Option<PathBuf>,
    /// Directory for per-run `epoch,loss,coupling_error` dumps.
    pub trace_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn preset(figure: Figure, preset: Preset) -> Self {
        let (repetitions, epochs) = match preset {
            Preset::Desk => (10, 2_000),
            Preset::Paper => (50, 10_000),
        };
        let train = TrainConfig {
            epochs,
            ..TrainConfig::default()
        };
        let base = Self {
            figure,
            n_values: vec![10],
            j0: 1.0,
            j1_values: vec![0.1],
            dataset_sizes: vec![10, 100, 1000],
            ranks: (1..=9).collect(),
            repetitions,
            alpha: 0.15,
            train,
            master_seed: 20_250_101,
            output_path: None,
            instance_path: None,
            trace_dir: None,
        };
        match figure {
            Figure::Fig1 | Figure::Fig2 => base,
            Figure::Fig3 => Self {
                j1_values: vec![0.1, 0.3, 1.0, 3.0, 10.0],
                dataset_sizes: match preset {
                    Preset::Desk => vec![10],
                    Preset::Paper => vec![10, 100, 1000],
                },
                ranks: vec![4],
                ..base
            },
            Figure::Fig4 => Self {
                n_values: vec![10, 50, 100],
                j1_values: vec![0.03, 0.1, 0.3, 1.0],
                dataset_sizes: vec![],
                ranks: vec![],
                repetitions: 20,
                ..base
            },
            Figure::Fig5 => Self {
                n_values: match preset {
                    Preset::Desk => vec![10],
                    Preset::Paper => vec![10, 50],
                },
                j1_values: vec![0.1, 10.0],
                dataset_sizes: vec![10],
                ranks: match preset {
                    Preset::Desk => (1..=9).collect(),
                    Preset::Paper => (1..=49).collect(),
                },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_values.is_empty() {
            return bad("n list is empty");
        }
        if self.j1_values.is_empty() {
            return bad("J1 list is empty");
        }
        if self.j1_values.iter().any(|&j| !(j > 0.0) || !j.is_finite()) {
            return bad("J1 values must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.n_values.iter().any(|&n| n < 2) {
            return bad("every n must be at least 2");
        }
        if self.figure != Figure::Fig4 {
            if self.ranks.is_empty() {
                return bad("rank list is empty");
            }
            if self.ranks.contains(&0) {
                return bad("ranks must be positive");
            }
            if self.dataset_sizes.is_empty() {
                return bad("dataset size list is empty");
            }
            for &n in &self.n_values {
                if self.ranks_for(n).is_empty() {
                    return Err(Error::Config(format!("no rank in the list fits n = {n}")));
                }
            }
            self.train.validate()?;
        }
        if self.instance_path.is_some() && (self.n_values.len() != 1 || self.j1_values.len() != 1) {
            return bad("a loaded instance needs exactly one n and one J1 value");
        }
        Ok(())
    }

    pub fn ranks_for(&self, n: usize) -> Vec<usize> {
        self.ranks.iter().copied().filter(|&k| k <= n).collect()
    }
}

/// One init → train → min-ΔJ run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub n: usize,
    pub rank: usize,
    pub dataset_size: usize,
    pub j1: f64,
    pub rep: usize,
    /// Smallest coupling error over the evaluation checkpoints.
    pub delta_j: f64,
    pub initial_delta_j: f64,
    pub best_epoch: usize,
}

impl RunRecord {
    pub fn normalized(&self) -> f64 {
        self.delta_j / self.j1
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        Self {
            mean,
            std: var.sqrt(),
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub n: usize,
    pub rank: usize,
    pub dataset_size: usize,
    pub j1: f64,
    pub stats: Stats,
    /// Statistics of `ΔJ/J₁`.
    pub normalized: Stats,
}

/// One point of an empirical-vs-approximate CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub n: usize,
    pub j1: f64,
    pub instance: usize,
    pub x: f64,
    pub p_approx: f64,
    pub p_empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSummary {
    pub n: usize,
    pub j1: f64,
    pub sup_distances: Vec<f64>,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub n: usize,
    pub j1: f64,
    pub prediction: RankPrediction,
}

/// Outcome of a directional claim encoded as an assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SweepRecord>,
    pub cdf: Vec<CdfRow>,
    pub cdf_summary: Vec<CdfSummary>,
    pub predictions: Vec<PredictionRecord>,
    pub checks: Vec<Check>,
    /// Instances used by the sweep, keyed by `(n, J₁)`.
    #[serde(skip)]
    pub instances: Vec<(usize, f64, IsingModel)>,
}

impl FigureReport {
    fn empty(config: ExperimentConfig) -> Self {
        Self {
            config,
            runs: vec![],
            summary: vec![],
            cdf: vec![],
            cdf_summary: vec![],
            predictions: vec![],
            checks: vec![],
            instances: vec![],
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn record(
        &self,
        method: Method,
        n: usize,
        rank: usize,
        dataset_size: usize,
        j1: f64,
    ) -> Option<&SweepRecord> {
        self.summary.iter().find(|r| {
            r.method == method
                && r.n == n
                && r.rank == rank
                && r.dataset_size == dataset_size
                && r.j1 == j1
        })
    }

    pub fn runs_for(
        &self,
        method: Method,
        n: usize,
        rank: usize,
        dataset_size: usize,
        j1: f64,
    ) -> Vec<&RunRecord> {
        self.runs
            .iter()
            .filter(|r| {
                r.method == method
                    && r.n == n
                    && r.rank == rank
                    && r.dataset_size == dataset_size
                    && r.j1 == j1
            })
            .collect()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<FigureReport> {
    match cfg.figure {
        Figure::Fig1 => run_fig1(cfg),
        Figure::Fig2 => run_fig2(cfg),
        Figure::Fig3 => run_fig3(cfg),
        Figure::Fig4 => run_fig4(cfg),
        Figure::Fig5 => run_fig5(cfg),
    }
}

fn expect_figure(cfg: &ExperimentConfig, figure: Figure) -> Result<()> {
    if cfg.figure != figure {
        return Err(Error::Config(format!(
            "expected a {figure} config, got {}",
            cfg.figure
        )));
    }
    cfg.validate()
}

/// Random initializers versus rank and dataset size.
pub fn run_fig1(cfg: &ExperimentConfig) -> Result<FigureReport> {
    expect_figure(cfg, Figure::Fig1)?;
    let mut report = sweep(cfg, false)?;
    report.checks = fig1_checks(&report);
    Ok(report)
}

/// Low-rank initializers against the coupling-based random initializer.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<FigureReport> {
    expect_figure(cfg, Figure::Fig2)?;
    let mut report = sweep(cfg, false)?;
    report.checks = fig2_checks(&report);
    Ok(report)
}

/// Same comparison as fig2 across coupling scales `J₁`.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<FigureReport> {
    expect_figure(cfg, Figure::Fig3)?;
    let mut report = sweep(cfg, false)?;
    report.checks = fig3_checks(&report);
    Ok(report)
}

/// Empirical eigenvalue CDFs of sampled ensembles against the approximation.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<FigureReport> {
    expect_figure(cfg, Figure::Fig4)?;
    let mut plan = SeedPlan::new(cfg.master_seed);
    let mut jobs = Vec::new();
    for (ni, &n) in cfg.n_values.iter().enumerate() {
        for (ji, &j1) in cfg.j1_values.iter().enumerate() {
            for rep in 0..cfg.repetitions {
                let seed = plan.seed(&[
                    Figure::Fig4.id(),
                    Stream::Instance.id(),
                    ni as u64,
                    ji as u64,
                    rep as u64,
                ])?;
                jobs.push((n, j1, rep, seed));
            }
        }
    }

    let results: Vec<(usize, f64, usize, f64, Vec<CdfRow>)> = jobs
        .par_iter()
        .map(|&(n, j1, rep, seed)| {
            let e = EnsembleParams::from_sk(n, cfg.j0, j1)?;
            let eig = eigh(&sample_ensemble(&e, seed))?;
            let normalized = normalize_spectrum(eig.eigenvalues())?;
            let ecdf = empirical_cdf(&normalized)?;
            let sup = cdf_sup_distance(&e, &normalized)?;
            let rows = ecdf
                .points()
                .into_iter()
                .map(|(x, p_emp)| {
                    Ok(CdfRow {
                        n,
                        j1,
                        instance: rep,
                        x,
                        p_approx: approx_cdf(&e, x)?,
                        p_empirical: p_emp,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((n, j1, rep, sup, rows))
        })
        .collect::<Result<_>>()?;

    let mut report = FigureReport::empty(cfg.clone());
    let mut grouped: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (n, j1, _, sup, rows) in results {
        let ji = cfg
            .j1_values
            .iter()
            .position(|&v| v == j1)
            .expect("configured J1");
        grouped.entry((n, ji)).or_default().push(sup);
        report.cdf.extend(rows);
    }
    for &n in &cfg.n_values {
        for (ji, &j1) in cfg.j1_values.iter().enumerate() {
            let sups = grouped.remove(&(n, ji)).unwrap_or_default();
            report.cdf_summary.push(CdfSummary {
                n,
                j1,
                stats: Stats::from_values(&sups),
                sup_distances: sups,
            });
        }
    }
    report.checks = fig4_checks(&report);
    Ok(report)
}

/// Low-rank coupling error normalized by `J₁` against the predicted rank.
pub fn run_fig5(cfg: &ExperimentConfig) -> Result<FigureReport> {
    expect_figure(cfg, Figure::Fig5)?;
    let mut report = sweep(cfg, true)?;
    for &n in &cfg.n_values {
        for &j1 in &cfg.j1_values {
            let e = EnsembleParams::from_sk(n, cfg.j0, j1)?;
            report.predictions.push(PredictionRecord {
                n,
                j1,
                prediction: predicted_rank(&e, cfg.alpha)?,
            });
        }
    }
    report.checks = fig5_checks(&report);
    Ok(report)
}

struct Job {
    ni: usize,
    ji: usize,
    si: usize,
    ki: usize,
    method: Method,
    rep: usize,
    n: usize,
    j1: f64,
    size: usize,
    rank: usize,
    instance_seed: u64,
    data_seed: u64,
    init_seed: u64,
}

/// Runs the `(n, J₁, D, K, method, rep)` grid. With `instance_per_rep` each
/// repetition draws a fresh SK instance; otherwise one instance per
/// `(n, J₁)` is shared and only the training data changes.
fn sweep(cfg: &ExperimentConfig, instance_per_rep: bool) -> Result<FigureReport> {
    let fig = cfg.figure.id();
    let loaded = match &cfg.instance_path {
        Some(path) => Some(IsingModel::from_json(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    if let Some(m) = &loaded {
        if m.n() != cfg.n_values[0] {
            return Err(Error::Config(format!(
                "loaded instance has n = {}, config says {}",
                m.n(),
                cfg.n_values[0]
            )));
        }
    }

    let mut plan = SeedPlan::new(cfg.master_seed);
    let mut jobs = Vec::new();
    for (ni, &n) in cfg.n_values.iter().enumerate() {
        let ranks = cfg.ranks_for(n);
        for (ji, &j1) in cfg.j1_values.iter().enumerate() {
            let shared_instance = plan.seed(&[fig, Stream::Instance.id(), ni as u64, ji as u64])?;
            for (si, &size) in cfg.dataset_sizes.iter().enumerate() {
                for rep in 0..cfg.repetitions {
                    let data_seed = plan.seed(&[
                        fig,
                        Stream::Data.id(),
                        ni as u64,
                        ji as u64,
                        si as u64,
                        rep as u64,
                    ])?;
                    let instance_seed = if instance_per_rep {
                        plan.seed(&[
                            fig,
                            Stream::Instance.id(),
                            ni as u64,
                            ji as u64,
                            si as u64,
                            rep as u64,
                        ])?
                    } else {
                        shared_instance
                    };
                    for (ki, &rank) in ranks.iter().enumerate() {
                        for &method in cfg.figure.methods() {
                            let init_seed = if method.is_random() {
                                plan.seed(&[
                                    fig,
                                    Stream::Init.id(),
                                    ni as u64,
                                    ji as u64,
                                    si as u64,
                                    ki as u64,
                                    method.id(),
                                    rep as u64,
                                ])?
                            } else {
                                0
                            };
                            jobs.push(Job {
                                ni,
                                ji,
                                si,
                                ki,
                                method,
                                rep,
                                n,
                                j1,
                                size,
                                rank,
                                instance_seed,
                                data_seed,
                                init_seed,
                            });
                        }
                    }
                }
            }
        }
    }

    let instance_for = |n: usize, j1: f64, seed: u64| -> Result<IsingModel> {
        match &loaded {
            Some(m) => Ok(m.clone()),
            None => generate_sk(&SkParams {
                n,
                j0: cfg.j0,
                j1,
                seed,
            }),
        }
    };

    let mut report = FigureReport::empty(cfg.clone());
    if !instance_per_rep {
        for &n in &cfg.n_values {
            for (ji, &j1) in cfg.j1_values.iter().enumerate() {
                let ni = cfg
                    .n_values
                    .iter()
                    .position(|&v| v == n)
                    .expect("configured n");
                let seed = seed_schedule(
                    cfg.master_seed,
                    &[fig, Stream::Instance.id(), ni as u64, ji as u64],
                );
                report.instances.push((n, j1, instance_for(n, j1, seed)?));
            }
        }
    }

    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|job| {
            let model = if instance_per_rep {
                instance_for(job.n, job.j1, job.instance_seed)?
            } else {
                report
                    .instances
                    .iter()
                    .find(|(n, j1, _)| *n == job.n && *j1 == job.j1)
                    .map(|(_, _, m)| m.clone())
                    .expect("instance generated above")
            };
            let stats = if loaded.is_some() {
                CouplingStats::from_model(&model)
            } else {
                CouplingStats::population(cfg.j0 / job.n as f64, job.j1 * job.j1 / job.n as f64)
            };
            let data = build_dataset(&model, job.size, job.data_seed)?;
            let p0 = job
                .method
                .initialize(&model, &stats, job.rank, job.init_seed)?;
            let result = train(&p0, &data, &model, &cfg.train)?;
            if let Some(dir) = &cfg.trace_dir {
                let name = format!(
                    "{}_{}_n{}_j{}_d{}_k{}_rep{}.csv",
                    cfg.figure, job.method, job.ni, job.ji, job.si, job.ki, job.rep
                );
                result.write_trace_csv(std::fs::File::create(dir.join(name))?)?;
            }
            Ok(RunRecord {
                method: job.method,
                n: job.n,
                rank: job.rank,
                dataset_size: job.size,
                j1: job.j1,
                rep: job.rep,
                delta_j: result.best_coupling_error,
                initial_delta_j: result.initial_coupling_error(),
                best_epoch: result.best_epoch,
            })
        })
        .collect::<Result<_>>()?;

    report.summary = summarize(cfg, &runs);
    report.runs = runs;
    Ok(report)
}

fn summarize(cfg: &ExperimentConfig, runs: &[RunRecord]) -> Vec<SweepRecord> {
    let mut groups: BTreeMap<(usize, usize, usize, usize, Method), Vec<&RunRecord>> =
        BTreeMap::new();
    for r in runs {
        let ni = cfg.n_values.iter().position(|&v| v == r.n).unwrap_or(0);
        let ji = cfg.j1_values.iter().position(|&v| v == r.j1).unwrap_or(0);
        let si = cfg
            .dataset_sizes
            .iter()
            .position(|&v| v == r.dataset_size)
            .unwrap_or(0);
        groups
            .entry((ni, ji, si, r.rank, r.method))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let raw: Vec<f64> = rs.iter().map(|r| r.delta_j).collect();
            let norm: Vec<f64> = rs.iter().map(|r| r.normalized()).collect();
            SweepRecord {
                method: first.method,
                n: first.n,
                rank: first.rank,
                dataset_size: first.dataset_size,
                j1: first.j1,
                stats: Stats::from_values(&raw),
                normalized: Stats::from_values(&norm),
            }
        })
        .collect()
}

/// Fraction of repetitions in which `a` ends with a strictly smaller `ΔJ`
/// than `b` on the same training data.
pub fn win_rate(
    report: &FigureReport,
    a: Method,
    b: Method,
    n: usize,
    rank: usize,
    size: usize,
    j1: f64,
) -> f64 {
    let ra = report.runs_for(a, n, rank, size, j1);
    let rb = report.runs_for(b, n, rank, size, j1);
    let wins = ra
        .iter()
        .filter(|x| rb.iter().any(|y| y.rep == x.rep && x.delta_j < y.delta_j))
        .count();
    wins as f64 / ra.len().max(1) as f64
}

/// Win rate required for a directional claim.
pub const DIRECTIONAL_WIN_RATE: f64 = 0.8;

fn fig1_checks(report: &FigureReport) -> Vec<Check> {
    let cfg = &report.config;
    let mut checks = Vec::new();
    let min_d = *cfg.dataset_sizes.iter().min().expect("validated");
    let max_d = *cfg.dataset_sizes.iter().max().expect("validated");
    for &n in &cfg.n_values {
        for &j1 in &cfg.j1_values {
            let full = n - 1;
            if max_d > min_d && cfg.ranks_for(n).contains(&full) {
                for &m in cfg.figure.methods() {
                    let lo = report.record(m, n, full, min_d, j1).map(|r| r.stats.mean);
                    let hi = report.record(m, n, full, max_d, j1).map(|r| r.stats.mean);
                    if let (Some(lo), Some(hi)) = (lo, hi) {
                        checks.push(Check::new(
                            format!("{m}: more data lowers error at K=N-1 (n={n}, J1={j1})"),
                            hi < lo,
                            format!("mean dJ {hi:.5} at D={max_d} vs {lo:.5} at D={min_d}"),
                        ));
                    }
                }
            }
            let ranks = cfg.ranks_for(n);
            let better = ranks
                .iter()
                .filter(|&&k| {
                    let c = report
                        .record(Method::CouplingNeg, n, k, min_d, j1)
                        .map(|r| r.stats.mean);
                    let ep = report
                        .record(Method::EnergyPos, n, k, min_d, j1)
                        .map(|r| r.stats.mean);
                    let en = report
                        .record(Method::EnergyNeg, n, k, min_d, j1)
                        .map(|r| r.stats.mean);
                    matches!((c, ep, en), (Some(c), Some(ep), Some(en)) if c <= ep && c <= en)
                })
                .count();
            checks.push(Check::new(
                format!("coupling_neg best random init at D={min_d} (n={n}, J1={j1})"),
                2 * better > ranks.len(),
                format!("lowest mean at {better} of {} ranks", ranks.len()),
            ));
        }
    }
    checks
}

fn fig2_checks(report: &FigureReport) -> Vec<Check> {
    let cfg = &report.config;
    let mut checks = Vec::new();
    let min_d = *cfg.dataset_sizes.iter().min().expect("validated");
    for &n in &cfg.n_values {
        for &j1 in &cfg.j1_values {
            let full = n - 1;
            if cfg.ranks_for(n).contains(&full) {
                let worst = report
                    .runs
                    .iter()
                    .filter(|r| r.n == n && r.j1 == j1 && r.rank == full)
                    .filter(|r| matches!(r.method, Method::LowRankNeg | Method::LowRankPos))
                    .map(|r| r.initial_delta_j)
                    .fold(0.0, f64::max);
                checks.push(Check::new(
                    format!("low-rank exact at K=N-1 before training (n={n}, J1={j1})"),
                    worst <= 1e-8,
                    format!("max initial dJ {worst:.3e}"),
                ));
            }
            for k in cfg.ranks_for(n) {
                let rate = win_rate(
                    report,
                    Method::LowRankNeg,
                    Method::CouplingNeg,
                    n,
                    k,
                    min_d,
                    j1,
                );
                checks.push(Check::new(
                    format!("low_rank_neg beats coupling_neg at K={k}, D={min_d} (n={n}, J1={j1})"),
                    rate >= DIRECTIONAL_WIN_RATE,
                    format!("win rate {rate:.2}"),
                ));
            }
        }
    }
    checks
}

fn fig3_checks(report: &FigureReport) -> Vec<Check> {
    let cfg = &report.config;
    let mut checks = Vec::new();
    let min_d = *cfg.dataset_sizes.iter().min().expect("validated");
    let mut j1s = cfg.j1_values.clone();
    j1s.sort_by(f64::total_cmp);
    if j1s.len() < 2 {
        return checks;
    }
    let (lo, hi) = (j1s[0], *j1s.last().expect("nonempty"));
    for &n in &cfg.n_values {
        for k in cfg.ranks_for(n) {
            for &m in cfg.figure.methods() {
                let means: Vec<f64> = j1s
                    .iter()
                    .filter_map(|&j| report.record(m, n, k, min_d, j).map(|r| r.stats.mean))
                    .collect();
                checks.push(Check::new(
                    format!("{m}: error grows with J1 (n={n}, K={k}, D={min_d})"),
                    means.windows(2).all(|w| w[1] > w[0]),
                    format!("means {means:.4?}"),
                ));
            }
            let gap = |j: f64| {
                let c = report
                    .record(Method::CouplingNeg, n, k, min_d, j)?
                    .stats
                    .mean;
                let l = report
                    .record(Method::LowRankNeg, n, k, min_d, j)?
                    .stats
                    .mean;
                Some(c - l)
            };
            if let (Some(g_lo), Some(g_hi)) = (gap(lo), gap(hi)) {
                checks.push(Check::new(
                    format!("low-rank advantage widens with J1 (n={n}, K={k}, D={min_d})"),
                    g_hi >= g_lo,
                    format!("gap {g_hi:.4} at J1={hi} vs {g_lo:.4} at J1={lo}"),
                ));
            }
        }
    }
    checks
}

fn fig4_checks(report: &FigureReport) -> Vec<Check> {
    let cfg = &report.config;
    let mut checks = Vec::new();
    let n_min = *cfg.n_values.iter().min().expect("validated");
    let n_max = *cfg.n_values.iter().max().expect("validated");
    if n_max == n_min {
        return checks;
    }
    let mean_sup = |n: usize, j1: f64| {
        report
            .cdf_summary
            .iter()
            .find(|s| s.n == n && s.j1 == j1)
            .map(|s| s.stats.mean)
    };
    for &j1 in &cfg.j1_values {
        if let (Some(small), Some(large)) = (mean_sup(n_min, j1), mean_sup(n_max, j1)) {
            checks.push(Check::new(
                format!("CDF agreement improves with N (J1={j1})"),
                large <= small,
                format!("mean sup distance {large:.4} at N={n_max} vs {small:.4} at N={n_min}"),
            ));
        }
    }
    checks
}

fn fig5_checks(report: &FigureReport) -> Vec<Check> {
    let cfg = &report.config;
    let mut checks = Vec::new();
    let m = Method::LowRankNeg;
    for &n in &cfg.n_values {
        // K* from the first J₁ is reused for every J₁.
        let Some(reference) = report.predictions.iter().find(|p| p.n == n) else {
            continue;
        };
        let k_ceil = reference.prediction.ceil_rank();
        let ranks = cfg.ranks_for(n);
        for &size in &cfg.dataset_sizes {
            for &j1 in &cfg.j1_values {
                if k_ceil >= 3 && ranks.contains(&k_ceil) && ranks.contains(&(k_ceil - 2)) {
                    let at = report
                        .record(m, n, k_ceil, size, j1)
                        .map(|r| r.normalized.mean);
                    let below = report
                        .record(m, n, k_ceil - 2, size, j1)
                        .map(|r| r.normalized.mean);
                    if let (Some(at), Some(below)) = (at, below) {
                        checks.push(Check::new(
                            format!(
                                "error suppressed at ceil(K*)={k_ceil} (n={n}, J1={j1}, D={size})"
                            ),
                            at < below,
                            format!(
                                "dJ/J1 {at:.4} at K={k_ceil} vs {below:.4} at K={}",
                                k_ceil - 2
                            ),
                        ));
                    }
                }
            }
            let base = cfg.j1_values[0];
            for &other in &cfg.j1_values[1..] {
                let mut worst = String::new();
                let agree = ranks.iter().all(|&k| {
                    let (Some(a), Some(b)) = (
                        report.record(m, n, k, size, base),
                        report.record(m, n, k, size, other),
                    ) else {
                        return true;
                    };
                    let ok = (a.normalized.mean - b.normalized.mean).abs()
                        <= a.normalized.std + b.normalized.std;
                    if !ok && worst.is_empty() {
                        worst = format!(
                            "K={k}: {:.4}±{:.4} vs {:.4}±{:.4}",
                            a.normalized.mean,
                            a.normalized.std,
                            b.normalized.mean,
                            b.normalized.std
                        );
                    }
                    ok
                });
                checks.push(Check::new(
                    format!("dJ/J1 curves agree for J1={base} and J1={other} (n={n}, D={size})"),
                    agree,
                    if agree {
                        "within combined std at every rank".into()
                    } else {
                        worst
                    },
                ));
            }
        }
    }
    checks
}
