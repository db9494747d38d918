use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Figure, FigureReport};
use crate::error::Result;
use crate::rmt::Branch;

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a super::ExperimentConfig,
    checks: &'a [super::Check],
    predictions: &'a [super::PredictionRecord],
}

/// Writes every table of `report` under `dir` and returns the paths.
///
/// Sweep figures get `<fig>_n<N>_runs.csv` and `<fig>_n<N>_summary.csv` per
/// model size plus the target instances; fig4 gets `fig4_cdf.csv` and
/// `fig4_summary.csv`; fig5 adds `fig5_prediction.csv`. A
/// `<fig>_config.json` sidecar records the configuration and checks.
pub fn write_report(report: &FigureReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let cfg = &report.config;
    let fig = cfg.figure;
    let mut written = Vec::new();

    if fig == Figure::Fig4 {
        let path = dir.join("fig4_cdf.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["n", "j1", "instance", "x", "p_approx", "p_empirical"])?;
        for r in &report.cdf {
            w.write_record(&[
                r.n.to_string(),
                r.j1.to_string(),
                r.instance.to_string(),
                r.x.to_string(),
                r.p_approx.to_string(),
                r.p_empirical.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);

        let path = dir.join("fig4_summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "n",
            "j1",
            "instances",
            "mean_sup_distance",
            "std_sup_distance",
        ])?;
        for s in &report.cdf_summary {
            w.write_record(&[
                s.n.to_string(),
                s.j1.to_string(),
                s.stats.count.to_string(),
                s.stats.mean.to_string(),
                s.stats.std.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    } else {
        let normalized = fig == Figure::Fig5;
        for &n in &cfg.n_values {
            let path = dir.join(format!("{fig}_n{n}_runs.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            let mut header = vec!["method", "rank", "dataset_size", "j1", "rep", "delta_j"];
            if normalized {
                header.push("normalized_delta_j");
            }
            w.write_record(&header)?;
            for r in report.runs.iter().filter(|r| r.n == n) {
                let mut row = vec![
                    r.method.to_string(),
                    r.rank.to_string(),
                    r.dataset_size.to_string(),
                    r.j1.to_string(),
                    r.rep.to_string(),
                    r.delta_j.to_string(),
                ];
                if normalized {
                    row.push(r.normalized().to_string());
                }
                w.write_record(&row)?;
            }
            w.flush()?;
            written.push(path);

            let path = dir.join(format!("{fig}_n{n}_summary.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            let mut header = vec![
                "method",
                "rank",
                "dataset_size",
                "j1",
                "mean_delta_j",
                "std_delta_j",
                "count",
            ];
            if normalized {
                header.extend(["mean_normalized_delta_j", "std_normalized_delta_j"]);
            }
            w.write_record(&header)?;
            for s in report.summary.iter().filter(|s| s.n == n) {
                let mut row = vec![
                    s.method.to_string(),
                    s.rank.to_string(),
                    s.dataset_size.to_string(),
                    s.j1.to_string(),
                    s.stats.mean.to_string(),
                    s.stats.std.to_string(),
                    s.stats.count.to_string(),
                ];
                if normalized {
                    row.push(s.normalized.mean.to_string());
                    row.push(s.normalized.std.to_string());
                }
                w.write_record(&row)?;
            }
            w.flush()?;
            written.push(path);
        }
        for (n, j1, model) in &report.instances {
            let path = dir.join(format!("{fig}_n{n}_j1_{j1}_instance.json"));
            fs::write(&path, model.to_json()?)?;
            written.push(path);
        }
    }

    if !report.predictions.is_empty() {
        let path = dir.join(format!("{fig}_prediction.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["n", "j1", "alpha", "r", "k_star", "ceil_k_star", "branch"])?;
        for p in &report.predictions {
            let branch = match p.prediction.branch {
                Branch::SmallJ => "small_j",
                Branch::LargeJ => "large_j",
            };
            w.write_record(&[
                p.n.to_string(),
                p.j1.to_string(),
                p.prediction.alpha.to_string(),
                p.prediction.r.to_string(),
                p.prediction.k_star.to_string(),
                p.prediction.ceil_rank().to_string(),
                branch.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }

    let path = dir.join(format!("{fig}_config.json"));
    let sidecar = Sidecar {
        config: cfg,
        checks: &report.checks,
        predictions: &report.predictions,
    };
    fs::write(&path, serde_json::to_string_pretty(&sidecar)?)?;
    written.push(path);
    Ok(written)
}
