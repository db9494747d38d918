use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmwarm::rmt::Branch;
use fmwarm::{
    predicted_rank, run, write_report, EnsembleParams, ExperimentConfig, Figure, FigureReport,
    Preset,
};

#[derive(Parser)]
#[command(
    name = "fmwarm",
    version,
    about = "FM initialization experiments on SK Ising models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random initializers versus rank and dataset size.
    Fig1(SweepArgs),
    /// Low-rank initializers against coupling-based random init.
    Fig2(SweepArgs),
    /// Low-rank advantage across coupling scales.
    Fig3(SweepArgs),
    /// Eigenvalue CDFs against the random-matrix approximation.
    Fig4(SweepArgs),
    /// Normalized low-rank error against the predicted rank.
    Fig5(SweepArgs),
    /// Print the predicted rank for an SK ensemble.
    Rank(RankArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    /// Model sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    j0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    j1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    dataset_sizes: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV tables and the config sidecar.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Target instance JSON used instead of a generated SK model.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Directory for per-run training traces.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    #[arg(long)]
    j1: f64,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
}

impl SweepArgs {
    fn into_config(self, figure: Figure) -> ExperimentConfig {
        let preset = match self.preset {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        };
        let mut cfg = ExperimentConfig::preset(figure, preset);
        if let Some(v) = self.n {
            if figure == Figure::Fig5 && self.ranks.is_none() {
                let max = v.iter().copied().max().unwrap_or(2);
                cfg.ranks = (1..max).collect();
            }
            cfg.n_values = v;
        }
        if let Some(v) = self.j0 {
            cfg.j0 = v;
        }
        if let Some(v) = self.j1 {
            cfg.j1_values = v;
        }
        if let Some(v) = self.ranks {
            cfg.ranks = v;
        }
        if let Some(v) = self.dataset_sizes {
            cfg.dataset_sizes = v;
        }
        if let Some(v) = self.reps {
            cfg.repetitions = v;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
            cfg.train.eval_interval = cfg.train.eval_interval.min(v);
        }
        if let Some(v) = self.lr {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.eval_interval {
            cfg.train.eval_interval = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.train.weight_decay = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        cfg.output_path = self.out;
        cfg.instance_path = self.instance;
        cfg.trace_dir = self.traces;
        cfg
    }
}

fn print_report(report: &FigureReport) {
    for s in &report.summary {
        println!(
            "{:<13} n={:<4} K={:<3} D={:<5} J1={:<6} dJ={:.6} ± {:.6}  dJ/J1={:.6}",
            s.method.as_str(),
            s.n,
            s.rank,
            s.dataset_size,
            s.j1,
            s.stats.mean,
            s.stats.std,
            s.normalized.mean
        );
    }
    for s in &report.cdf_summary {
        println!(
            "n={:<4} J1={:<6} sup distance {:.4} ± {:.4} over {} instances",
            s.n, s.j1, s.stats.mean, s.stats.std, s.stats.count
        );
    }
    for p in &report.predictions {
        println!(
            "n={:<4} J1={:<6} K*={:.2} (r={:.4}, ceil {})",
            p.n,
            p.j1,
            p.prediction.k_star,
            p.prediction.r,
            p.prediction.ceil_rank()
        );
    }
    for c in &report.checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

fn run_sweep(figure: Figure, args: SweepArgs) -> fmwarm::Result<bool> {
    let cfg = args.into_config(figure);
    if let Some(dir) = &cfg.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let report = run(&cfg)?;
    print_report(&report);
    if let Some(dir) = &cfg.output_path {
        for path in write_report(&report, dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(report.all_passed())
}

fn run_rank(args: RankArgs) -> fmwarm::Result<bool> {
    let e = EnsembleParams::from_sk(args.n, args.j0, args.j1)?;
    let p = predicted_rank(&e, args.alpha)?;
    let branch = match p.branch {
        Branch::SmallJ => "small_j",
        Branch::LargeJ => "large_j",
    };
    println!(
        "K*={:.4} ceil={} r={:.6} branch={branch}",
        p.k_star,
        p.ceil_rank(),
        p.r
    );
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fig1(a) => run_sweep(Figure::Fig1, a),
        Command::Fig2(a) => run_sweep(Figure::Fig2, a),
        Command::Fig3(a) => run_sweep(Figure::Fig3, a),
        Command::Fig4(a) => run_sweep(Figure::Fig4, a),
        Command::Fig5(a) => run_sweep(Figure::Fig5, a),
        Command::Rank(a) => run_rank(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
