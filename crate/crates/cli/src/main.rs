//! `transco` — mean-shift robust regression and transfer learning at the
//! command line.
//!
//! Subcommands: `fit` (fit one of ipod/transco/ptl/ols to CSV data and write
//! a JSON report), `tune` (dump the full BIC tuning path as CSV), `simulate`
//! (seeded Monte-Carlo benchmark over the synthetic designs).
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid input.

#[macro_use]
mod log;
mod report;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use transco_core::baselines::{ols_fit, ptl_fit, LassoOptions};
use transco_core::dataio::{load_dataset_csv, load_dataset_csv_like, LoadedCsv, Method};
use transco_core::ipod::{ipod_auto_path, Dataset, IpodOptions, TuningPath};
use transco_core::metrics::{huber_loss, r_squared};
use transco_core::transfer::{fit_sources, transco_bic_path, SourceEnsemble, TranscoOptions};
use transco_core::Error;

use report::{DetectedPoint, FitReport, PathSummary, SourceSummary, TuneReport};

#[derive(Parser)]
#[command(
    name = "transco",
    about = "Robust regression with influential-point detection and multi-source transfer learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV dataset and write a JSON report.
    Fit(FitArgs),
    /// Write the full penalty-tuning path (lambda, DF, RSS, BIC) as CSV.
    Tune(TuneArgs),
    /// Run a seeded Monte-Carlo benchmark from a config file.
    Simulate(simulate::SimulateArgs),
}

#[derive(Args)]
struct CommonFitArgs {
    /// Target dataset (CSV with a header row).
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Source datasets (CSV, same columns as the target); required by
    /// transco and ptl.
    #[arg(long, num_args = 1..)]
    sources: Vec<PathBuf>,
    /// Standardize every numeric column to mean 0, unit variance.
    #[arg(long)]
    standardize: bool,
    /// Convergence tolerance on the sup-norm change of gamma.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration cap per fit (default: 500 for ipod, 2000 for transco).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Number of penalty grid points (0 is always appended).
    #[arg(long, default_value_t = 40)]
    grid_size: usize,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonFitArgs,
    /// One of: ipod, transco, ptl, ols.
    #[arg(long)]
    method: Method,
    /// Held-out CSV (same columns as --data) scored with Huber loss
    /// (alpha = 0.05) and R-squared; standardized with the training
    /// statistics when --standardize is on.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Seed recorded in the report (the fitters are deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: CommonFitArgs,
    /// One of: ipod, transco.
    #[arg(long)]
    method: Method,
    /// Output CSV path for the tuning path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Simulate(args) => simulate::cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

impl CommonFitArgs {
    fn load_target(&self) -> Result<LoadedCsv, Error> {
        let loaded = load_dataset_csv(&self.data, &self.response, self.standardize)?;
        info!(
            "loaded {}: n = {}, p = {}, dropped {} rows{}",
            self.data.display(),
            loaded.dataset.n(),
            loaded.dataset.p(),
            loaded.dropped_rows,
            if loaded.skipped_columns.is_empty() {
                String::new()
            } else {
                format!(", skipped non-numeric columns {:?}", loaded.skipped_columns)
            }
        );
        Ok(loaded)
    }

    fn load_sources(&self) -> Result<Vec<Dataset>, Error> {
        if self.sources.is_empty() {
            return Err(Error::InvalidParameter(
                "--sources is required for this method".into(),
            ));
        }
        self.sources
            .iter()
            .map(|path| {
                Ok(load_dataset_csv(path, &self.response, self.standardize)?.dataset)
            })
            .collect()
    }

    fn ipod_options(&self) -> IpodOptions {
        IpodOptions {
            grid_size: self.grid_size,
            tol: self.tol,
            max_iter: self.max_iter.unwrap_or(500),
        }
    }

    fn transco_options(&self) -> TranscoOptions {
        TranscoOptions {
            grid_size: self.grid_size,
            tol: self.tol,
            max_iter: self.max_iter.unwrap_or(2000),
            ..TranscoOptions::default()
        }
    }
}

fn detected_points(gamma: &nalgebra::DVector<f64>) -> Vec<DetectedPoint> {
    gamma
        .iter()
        .enumerate()
        .filter(|(_, &g)| g != 0.0)
        .map(|(index, &gamma)| DetectedPoint { index, gamma })
        .collect()
}

fn source_summaries(sources: &[Dataset], ensemble: &SourceEnsemble) -> Vec<SourceSummary> {
    ensemble
        .diagnostics()
        .iter()
        .zip(ensemble.gamma_hats())
        .enumerate()
        .map(|(index, (diag, gamma))| SourceSummary {
            index,
            n: sources[index].n(),
            lambda_adj: diag.lambda_adj,
            detected: gamma.iter().filter(|&&g| g != 0.0).count(),
            iterations: diag.iterations,
            converged: diag.converged,
        })
        .collect()
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let start = Instant::now();
    let loaded = args.common.load_target()?;
    let target = loaded.dataset.clone();
    let (n, p) = (target.n(), target.p());
    let mut report = FitReport {
        method: args.method.to_string(),
        n,
        p,
        beta_hat: Vec::new(),
        detected: Vec::new(),
        lambda: None,
        bic: None,
        iterations: None,
        converged: None,
        path: None,
        w_hat: None,
        delta_hat: None,
        identification_gap: None,
        sources: None,
        test_n: None,
        test_huber: None,
        test_r2: None,
        runtime_ms: 0,
        seed: args.seed,
    };
    match args.method {
        Method::Ols => {
            report.beta_hat = ols_fit(&target.x, &target.y)?.iter().copied().collect();
        }
        Method::Ipod => {
            let (path, fit) = ipod_auto_path(&target, &args.common.ipod_options())?;
            report.beta_hat = fit.beta_hat.iter().copied().collect();
            report.detected = detected_points(&fit.gamma_hat);
            report.lambda = Some(fit.lambda_adj);
            report.bic = Some(fit.bic);
            report.iterations = Some(fit.iterations);
            report.converged = Some(fit.converged);
            report.path = Some(PathSummary::from(&path));
        }
        Method::TransCo => {
            let sources = args.common.load_sources()?;
            let ensemble = fit_sources(&sources, &args.common.ipod_options())?;
            let (path, fit) =
                transco_bic_path(&target, &ensemble, &args.common.transco_options())?;
            report.beta_hat = fit.beta_hat.iter().copied().collect();
            report.detected = detected_points(&fit.gamma_hat);
            report.lambda = Some(fit.lambda);
            report.bic = Some(fit.bic);
            report.iterations = Some(fit.iterations);
            report.converged = Some(fit.converged);
            report.path = Some(PathSummary::from(&path));
            report.w_hat = Some(fit.w_hat.iter().copied().collect());
            report.delta_hat = Some(fit.delta_hat.iter().copied().collect());
            report.identification_gap = Some(fit.identification_gap(&target.x, ensemble.b_hat()));
            report.sources = Some(source_summaries(&sources, &ensemble));
        }
        Method::Ptl => {
            let sources = args.common.load_sources()?;
            let ensemble = fit_sources(&sources, &args.common.ipod_options())?;
            let beta = ptl_fit(&target, &ensemble, &LassoOptions::default())?;
            report.beta_hat = beta.iter().copied().collect();
            report.sources = Some(source_summaries(&sources, &ensemble));
        }
    }
    if let Some(test_path) = &args.test {
        let test = load_dataset_csv_like(test_path, &loaded)?;
        let beta = DVector::from_vec(report.beta_hat.clone());
        let predicted = &test.x * beta;
        report.test_n = Some(test.n());
        report.test_huber = Some(huber_loss(&test.y, &predicted, 0.05)?);
        report.test_r2 = Some(r_squared(&test.y, &predicted)?);
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Parse(format!("serializing report: {e}")))?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            info!("wrote report to {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn write_path_csv(path: &PathBuf, tuning: &TuningPath) -> Result<(), Error> {
    let mut out = String::from("lambda,df,rss,bic\n");
    for i in 0..tuning.lambdas.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            tuning.lambdas[i], tuning.df[i], tuning.rss[i], tuning.bic[i]
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn cmd_tune(args: TuneArgs) -> Result<(), Error> {
    let target = args.common.load_target()?.dataset;
    let (tuning, method, lambda, bic) = match args.method {
        Method::Ipod => {
            let (path, fit) = ipod_auto_path(&target, &args.common.ipod_options())?;
            (path, "ipod", fit.lambda_adj, fit.bic)
        }
        Method::TransCo => {
            let sources = args.common.load_sources()?;
            let ensemble = fit_sources(&sources, &args.common.ipod_options())?;
            let (path, fit) =
                transco_bic_path(&target, &ensemble, &args.common.transco_options())?;
            (path, "transco", fit.lambda, fit.bic)
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "--method {other} has no tuning path; use ipod or transco"
            )))
        }
    };
    write_path_csv(&args.out, &tuning)?;
    let report = TuneReport {
        method: method.to_string(),
        best_index: tuning.best_index,
        best_lambda: lambda,
        best_bic: bic,
        path_len: tuning.lambdas.len(),
        out: args.out.display().to_string(),
    };
    println!(
        "{}",
        serde_json::to_string(&report).map_err(|e| Error::Parse(e.to_string()))?
    );
    Ok(())
}
