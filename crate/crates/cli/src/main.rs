use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use geobo::bench::{run_suite, summarize, SuiteConfig, SummaryRow};
use geobo::gp::{fit, log_marginal_likelihood, FitConfig};
use geobo::kernel::{gram, KernelSpec};
use geobo::{Manifold, ManifoldPoint};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "geobo", version, about = "Geometry-aware Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark suites.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Kernel evaluation.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Gaussian-process regression.
    Gp {
        #[command(subcommand)]
        action: GpAction,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    /// Runs a suite and writes traces and summaries to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Recomputes summary.csv and plot_data.csv from a suite directory.
    Summarize {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum KernelAction {
    /// Writes the Gram matrix of a point list as CSV.
    Eval {
        /// JSON file with `kernel`, `manifold` and `points`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GpAction {
    /// Fits hyperparameters and optionally predicts at new points.
    Fit {
        /// JSON file with `manifold`, `points`, `targets` and optional `fit`
        /// and `predict`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
struct KernelInput {
    kernel: KernelSpec,
    manifold: Manifold,
    points: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct GpInput {
    manifold: Manifold,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
    #[serde(default)]
    fit: FitConfig,
    #[serde(default)]
    predict: Vec<Vec<f64>>,
}

fn parse_points(m: &Manifold, raw: &[Vec<f64>]) -> Result<Vec<ManifoldPoint>> {
    raw.iter()
        .enumerate()
        .map(|(i, c)| ManifoldPoint::from_coords(m, c).with_context(|| format!("point {i}")))
        .collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn print_summary(rows: &[SummaryRow]) {
    let mut groups: Vec<(&str, &str, Vec<f64>, f64)> = Vec::new();
    for r in rows {
        match groups.last_mut() {
            Some(g) if g.0 == r.manifold && g.1 == r.kernel => g.2.push(r.final_log_regret),
            _ => groups.push((&r.manifold, &r.kernel, vec![r.final_log_regret], r.median_iter_to_threshold)),
        }
    }
    println!("{:<16} {:<24} {:>6} {:>18} {:>12}", "benchmark", "kernel", "seeds", "median log10 regret", "iter@thresh");
    for (b, k, mut v, it) in groups {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let med = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        println!("{b:<16} {k:<24} {n:>6} {med:>18.3} {it:>12}");
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bench { action: BenchAction::Run { config, seeds, iters, out, jobs } } => {
            let mut cfg = SuiteConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seeds {
                cfg.seeds = s;
                cfg.full_scale = false;
            }
            if let Some(i) = iters {
                cfg.iters = i;
                cfg.full_scale = false;
            }
            let report = run_suite(&cfg, &out, jobs)?;
            print_summary(&report.summary);
            if !report.failures.is_empty() {
                for (cell, err) in &report.failures {
                    eprintln!("failed: {cell}: {err}");
                }
                eprintln!("{} of {} cells failed; see {}", report.failures.len(), report.cells, out.join("failures.log").display());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bench { action: BenchAction::Summarize { dir } } => print_summary(&summarize(&dir)?),
        Command::Kernel { action: KernelAction::Eval { input, out } } => {
            let req: KernelInput = read_json(&input)?;
            let pts = parse_points(&req.manifold, &req.points)?;
            if pts.is_empty() {
                bail!("no points given");
            }
            let k = gram(&req.kernel, &pts)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record((0..pts.len()).map(|i| i.to_string()))?;
            for i in 0..pts.len() {
                w.write_record((0..pts.len()).map(|j| k[(i, j)].to_string()))?;
            }
            emit(out.as_deref(), &String::from_utf8(w.into_inner()?)?)?;
        }
        Command::Gp { action: GpAction::Fit { input, out } } => {
            let req: GpInput = read_json(&input)?;
            let pts = parse_points(&req.manifold, &req.points)?;
            let model = fit(&pts, &req.targets, &req.fit)?;
            let predictions = parse_points(&req.manifold, &req.predict)?
                .iter()
                .map(|x| model.posterior(x).map(|(mean, var)| serde_json::json!({ "mean": mean, "var": var })))
                .collect::<geobo::Result<Vec<_>>>()?;
            let result = serde_json::json!({
                "hyperparameters": model.hyperparameters(),
                "kernel": model.spec(),
                "mean": model.mean(),
                "jitter": model.jitter(),
                "log_marginal_likelihood": log_marginal_likelihood(&model),
                "predictions": predictions,
            });
            emit(out.as_deref(), &(serde_json::to_string_pretty(&result)? + "\n"))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
