//! Seeded Monte-Carlo benchmark harness.
//!
//! Each trial generates one problem instance from the configured design,
//! fits the requested methods, and scores them against the recorded truth.
//! Trial randomness comes from labeled streams derived from (seed, trial),
//! so results are identical across parallelism levels and re-runs; records
//! are written sorted by (trial, method). Wall-clock `runtime_ms` is the one
//! field that legitimately varies between runs.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use clap::Args;
use transco_core::baselines::{ptl_fit, LassoOptions};
use transco_core::dataio::{
    load_experiment_config, write_results, ExperimentConfig, Method, ResultFormat, ResultRecord,
};
use transco_core::ipod::ipod_auto_path;
use transco_core::metrics::{f1_detection, mse_beta};
use transco_core::simgen::gen_problem;
use transco_core::transfer::{fit_sources, transco_bic_path};
use transco_core::Error;

#[derive(Args)]
pub struct SimulateArgs {
    /// Experiment config file (flat key = value).
    #[arg(long)]
    config: PathBuf,
    /// Number of trials (overrides the config).
    #[arg(long)]
    trials: Option<u64>,
    /// Root seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for records.csv/.json, summaries and plot data.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Comma-separated methods to benchmark.
    #[arg(long, default_value = "ipod,transco,ptl", value_delimiter = ',')]
    methods: Vec<Method>,
}

fn run_trial(cfg: &ExperimentConfig, methods: &[Method], trial: u64) -> Result<Vec<ResultRecord>, Error> {
    let digest = cfg.sim.digest();
    let seed = cfg.sim.seed;
    let (target, sources, truth) = gen_problem(&cfg.sim, trial)?;
    let truth_set = &truth.outliers_target;
    let mut records = Vec::with_capacity(methods.len());

    // The source ensemble is shared by transco and ptl; both pay for it.
    let needs_ensemble = methods
        .iter()
        .any(|m| matches!(m, Method::TransCo | Method::Ptl));
    let ensemble_start = Instant::now();
    let ensemble = if needs_ensemble {
        Some(fit_sources(&sources, &cfg.ipod_options())?)
    } else {
        None
    };
    let ensemble_ms = ensemble_start.elapsed().as_millis() as u64;

    for &method in methods {
        let start = Instant::now();
        let (beta_hat, f1) = match method {
            Method::Ipod => {
                let (_, fit) = ipod_auto_path(&target, &cfg.ipod_options())?;
                let f1 = f1_detection(&fit.detected(), truth_set).f1;
                (fit.beta_hat, Some(f1))
            }
            Method::TransCo => {
                let ensemble = ensemble.as_ref().expect("ensemble built above");
                let (_, fit) = transco_bic_path(&target, ensemble, &cfg.transco_options())?;
                let f1 = f1_detection(&fit.detected(), truth_set).f1;
                (fit.beta_hat, Some(f1))
            }
            Method::Ptl => {
                let ensemble = ensemble.as_ref().expect("ensemble built above");
                (ptl_fit(&target, ensemble, &LassoOptions::default())?, None)
            }
            Method::Ols => {
                if target.n() <= target.p() {
                    return Err(Error::InvalidParameter(
                        "OLS baseline needs n > p; drop it from --methods".into(),
                    ));
                }
                (
                    transco_core::baselines::ols_fit(&target.x, &target.y)?,
                    None,
                )
            }
        };
        let mut runtime_ms = start.elapsed().as_millis() as u64;
        if matches!(method, Method::TransCo | Method::Ptl) {
            runtime_ms += ensemble_ms;
        }
        let mse = mse_beta(&beta_hat, &truth.beta)?;
        records.push(ResultRecord::new(
            method, trial, digest.clone(), mse, f1, None, None, runtime_ms, seed,
        ));
    }
    Ok(records)
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut cfg = load_experiment_config(&args.config)?;
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Error::InvalidParameter("--trials must be >= 1".into()));
        }
        cfg.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    if args.parallel == 0 {
        return Err(Error::InvalidParameter("--parallel must be >= 1".into()));
    }
    if args.methods.is_empty() {
        return Err(Error::InvalidParameter("--methods must not be empty".into()));
    }
    cfg.sim.validate()?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;

    info!(
        "simulate: {} trials of {} (n={}, p={}, K={}, N={}, rho={}), methods {:?}, {} thread(s)",
        cfg.trials,
        cfg.sim.example_id.as_str(),
        cfg.sim.n,
        cfg.sim.p,
        cfg.sim.k_sources,
        cfg.sim.n_per_source,
        cfg.sim.rho,
        args.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        args.parallel
    );

    let started = Instant::now();
    let next_trial = Mutex::new(0u64);
    let results: Mutex<Vec<Vec<ResultRecord>>> = Mutex::new(Vec::new());
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..args.parallel.min(cfg.trials as usize) {
            scope.spawn(|| loop {
                let trial = {
                    let mut guard = next_trial.lock().unwrap();
                    if *guard >= cfg.trials || first_error.lock().unwrap().is_some() {
                        return;
                    }
                    let t = *guard;
                    *guard += 1;
                    t
                };
                match run_trial(&cfg, &args.methods, trial) {
                    Ok(records) => {
                        debug!("trial {trial} done");
                        results.lock().unwrap().push(records);
                    }
                    Err(e) => {
                        *first_error.lock().unwrap() = Some(e);
                        return;
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let mut records: Vec<ResultRecord> = results.into_inner().unwrap().into_iter().flatten().collect();
    let method_order = |m: Method| args.methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (r.trial, method_order(r.method)));

    let csv_path = args.out.join("records.csv");
    write_results(&csv_path, &records, ResultFormat::Csv)?;
    write_results(&args.out.join("records.json"), &records, ResultFormat::Json)?;

    // Plot data: per-method log(MSE) samples keyed by the target sample size.
    let mut plot = String::from("n,method,trial,log_mse\n");
    for r in &records {
        plot.push_str(&format!("{},{},{},{}\n", cfg.sim.n, r.method, r.trial, r.log_mse));
    }
    let plot_path = args.out.join("plotdata.csv");
    std::fs::write(&plot_path, plot).map_err(|e| Error::Io {
        path: plot_path.display().to_string(),
        source: e,
    })?;

    info!(
        "simulate: finished {} trials in {:.1?}; records at {}",
        cfg.trials,
        started.elapsed(),
        csv_path.display()
    );
    Ok(())
}
