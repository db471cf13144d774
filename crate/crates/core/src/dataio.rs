//! Dataset and configuration ingestion, and result persistence.
//!
//! CSV ingestion is deliberately minimal: comma-separated, header row, UTF-8,
//! `.` decimal separator, no quoting. Columns whose non-missing cells all
//! parse as numbers are numeric; other columns are ignored. Rows with a
//! missing or unparseable cell in any numeric column are dropped, never
//! imputed. Config files are flat `key = value` text with `#` comments.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipod::{Dataset, IpodOptions};
use crate::simgen::{CovarianceKind, ExampleId, NoiseKind, SimulationConfig, WeightSpec};
use crate::transfer::TranscoOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ipod")]
    Ipod,
    #[serde(rename = "transco")]
    TransCo,
    #[serde(rename = "ptl")]
    Ptl,
    #[serde(rename = "ols")]
    Ols,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ipod => "ipod",
            Method::TransCo => "transco",
            Method::Ptl => "ptl",
            Method::Ols => "ols",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipod" => Ok(Method::Ipod),
            "transco" => Ok(Method::TransCo),
            "ptl" => Ok(Method::Ptl),
            "ols" => Ok(Method::Ols),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected ipod|transco|ptl|ols)"
            ))),
        }
    }
}

/// One method's scores on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: Method,
    pub trial: u64,
    pub config_digest: String,
    pub mse: f64,
    pub log_mse: f64,
    pub f1: Option<f64>,
    pub huber: Option<f64>,
    pub r2: Option<f64>,
    pub runtime_ms: u64,
    pub seed: u64,
}

impl ResultRecord {
    /// Builds a record with `log_mse` kept finite (an exact-zero MSE is
    /// floored at the smallest positive double before taking the log).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        method: Method,
        trial: u64,
        config_digest: String,
        mse: f64,
        f1: Option<f64>,
        huber: Option<f64>,
        r2: Option<f64>,
        runtime_ms: u64,
        seed: u64,
    ) -> Self {
        Self {
            method,
            trial,
            config_digest,
            mse,
            log_mse: mse.max(f64::MIN_POSITIVE).ln(),
            f1,
            huber,
            r2,
            runtime_ms,
            seed,
        }
    }
}

/// Center/scale pair of one standardized column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    pub sd: f64,
}

/// Ingested CSV dataset plus what the parser decided along the way.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    pub response_name: String,
    pub dropped_rows: usize,
    /// Columns ignored because they are not numeric.
    pub skipped_columns: Vec<String>,
    /// Standardization applied to each feature column (same order as
    /// `feature_names`) and to the response; `None` when not standardized.
    pub feature_stats: Option<Vec<ColumnStats>>,
    pub response_stats: Option<ColumnStats>,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

fn parse_cell(cell: &str) -> Option<f64> {
    if is_missing(cell) {
        None
    } else {
        cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load a CSV dataset, extracting `response_column` as Y.
///
/// `standardize` centers and scales every retained numeric column (response
/// included) to mean 0 and unit population standard deviation.
pub fn load_dataset_csv(
    path: &Path,
    response_column: &str,
    standardize: bool,
) -> Result<LoadedCsv> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let n_cols = header.len();
    let response_idx = header
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| {
            Error::Parse(format!(
                "{}: response column '{response_column}' not found in header",
                path.display()
            ))
        })?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if cells.len() != n_cols {
            return Err(Error::Parse(format!(
                "{}: row {} has {} cells, expected {n_cols}",
                path.display(),
                lineno + 2,
                cells.len()
            )));
        }
        rows.push(cells);
    }

    // A column is numeric when every non-missing cell parses and at least one
    // cell is present.
    let numeric: Vec<bool> = (0..n_cols)
        .map(|j| {
            let mut any = false;
            for row in &rows {
                if !is_missing(&row[j]) {
                    if parse_cell(&row[j]).is_none() {
                        return false;
                    }
                    any = true;
                }
            }
            any
        })
        .collect();
    if !numeric[response_idx] {
        return Err(Error::Parse(format!(
            "{}: response column '{response_column}' is not numeric",
            path.display()
        )));
    }
    let feature_cols: Vec<usize> = (0..n_cols)
        .filter(|&j| j != response_idx && numeric[j])
        .collect();
    let skipped_columns: Vec<String> = (0..n_cols)
        .filter(|&j| j != response_idx && !numeric[j])
        .map(|j| header[j].clone())
        .collect();

    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut dropped_rows = 0usize;
    for row in &rows {
        let y = parse_cell(&row[response_idx]);
        let xs: Option<Vec<f64>> = feature_cols
            .iter()
            .map(|&j| parse_cell(&row[j]))
            .collect();
        match (xs, y) {
            (Some(xs), Some(y)) => kept.push((xs, y)),
            _ => dropped_rows += 1,
        }
    }
    if kept.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no usable rows after dropping incomplete ones",
            path.display()
        )));
    }

    let n = kept.len();
    let p = feature_cols.len();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (i, (xs, yi)) in kept.iter().enumerate() {
        for (j, &v) in xs.iter().enumerate() {
            x[(i, j)] = v;
        }
        y[i] = *yi;
    }
    let mut feature_stats = None;
    let mut response_stats = None;
    if standardize {
        let mut stats = Vec::with_capacity(p);
        for j in 0..p {
            let name = &header[feature_cols[j]];
            let col = x.column(j).into_owned();
            let (scaled, st) = standardize_column(&col, name)?;
            x.set_column(j, &scaled);
            stats.push(st);
        }
        let (scaled, st) = standardize_column(&y, response_column)?;
        y = scaled;
        feature_stats = Some(stats);
        response_stats = Some(st);
    }
    Ok(LoadedCsv {
        dataset: Dataset::new(x, y)?,
        feature_names: feature_cols.iter().map(|&j| header[j].clone()).collect(),
        response_name: response_column.to_string(),
        dropped_rows,
        skipped_columns,
        feature_stats,
        response_stats,
    })
}

fn standardize_column(col: &DVector<f64>, name: &str) -> Result<(DVector<f64>, ColumnStats)> {
    let mean = col.mean();
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
    if var <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "column '{name}' is constant and cannot be standardized"
        )));
    }
    let sd = var.sqrt();
    Ok((col.map(|v| (v - mean) / sd), ColumnStats { mean, sd }))
}

/// Load another CSV through the column schema of an already-loaded one: same
/// response, same feature columns (matched by name), and the template's own
/// standardization transform (so held-out data is scaled with training
/// statistics).
pub fn load_dataset_csv_like(path: &Path, template: &LoadedCsv) -> Result<Dataset> {
    let raw = load_dataset_csv(path, &template.response_name, false)?;
    let column_of = |name: &String| {
        raw.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "{}: column '{name}' from the training data is missing or non-numeric",
                    path.display()
                ))
            })
    };
    let n = raw.dataset.n();
    let mut x = DMatrix::zeros(n, template.feature_names.len());
    for (j, name) in template.feature_names.iter().enumerate() {
        let src = column_of(name)?;
        let mut col = raw.dataset.x.column(src).into_owned();
        if let Some(stats) = template.feature_stats.as_ref().map(|s| s[j]) {
            col = col.map(|v| (v - stats.mean) / stats.sd);
        }
        x.set_column(j, &col);
    }
    let mut y = raw.dataset.y;
    if let Some(stats) = template.response_stats {
        y = y.map(|v| (v - stats.mean) / stats.sd);
    }
    Dataset::new(x, y)
}

/// A parsed experiment configuration: simulation design plus solver knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sim: SimulationConfig,
    pub trials: u64,
    pub grid_size: usize,
    pub tol: f64,
    pub max_iter_ipod: usize,
    pub max_iter_transco: usize,
}

impl ExperimentConfig {
    pub fn ipod_options(&self) -> IpodOptions {
        IpodOptions {
            grid_size: self.grid_size,
            tol: self.tol,
            max_iter: self.max_iter_ipod,
        }
    }

    pub fn transco_options(&self) -> TranscoOptions {
        TranscoOptions {
            grid_size: self.grid_size,
            tol: self.tol,
            max_iter: self.max_iter_transco,
            ..TranscoOptions::default()
        }
    }
}

const CONFIG_KEYS: [&str; 17] = [
    "example_id",
    "n",
    "p",
    "K",
    "N",
    "s",
    "rho",
    "h",
    "covariance",
    "noise",
    "seed",
    "trials",
    "grid_size",
    "tol",
    "max_iter",
    "w",
    "shared_contamination",
];

/// Parse and validate a flat `key = value` experiment config. Unknown keys
/// are errors so typos cannot silently fall back to defaults.
pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    parse_experiment_config(&content)
}

/// [`load_experiment_config`] on in-memory text.
pub fn parse_experiment_config(content: &str) -> Result<ExperimentConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(Error::InvalidConfig(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
        pairs.push((key, value.trim().to_string()));
    }
    let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let require = |key: &str| {
        get(key).ok_or_else(|| Error::InvalidConfig(format!("missing required key '{key}'")))
    };
    fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        v.parse::<T>()
            .map_err(|e| Error::InvalidConfig(format!("key '{key}': {e}")))
    }

    let example_id: ExampleId = require("example_id")?.parse()?;
    let defaults = SimulationConfig::example_desk(example_id);
    let covariance = match get("covariance") {
        Some(v) => v.parse::<CovarianceKind>()?,
        None => defaults.covariance,
    };
    let noise = match get("noise") {
        Some(v) => v.parse::<NoiseKind>()?,
        None => defaults.noise,
    };
    let k_sources: usize = parse("K", require("K")?)?;
    let w_spec = match get("w") {
        None => defaults.w_spec.clone(),
        Some("uniform") => WeightSpec::Uniform,
        Some(list) => WeightSpec::Fixed(
            list.split(',')
                .map(|v| parse::<f64>("w", v.trim()))
                .collect::<Result<Vec<f64>>>()?,
        ),
    };
    // The desk weight vector only fits K = 5; other K require an explicit w.
    let w_spec = match (&w_spec, k_sources) {
        (WeightSpec::Fixed(v), k) if v.len() != k => {
            if get("w").is_some() {
                return Err(Error::InvalidConfig(format!(
                    "w has {} entries but K = {k}",
                    v.len()
                )));
            }
            return Err(Error::InvalidConfig(format!(
                "K = {k} needs an explicit 'w' (the default weight vector has {} entries)",
                v.len()
            )));
        }
        _ => w_spec,
    };

    let sim = SimulationConfig {
        example_id,
        n: parse("n", require("n")?)?,
        p: parse("p", require("p")?)?,
        k_sources,
        n_per_source: parse("N", require("N")?)?,
        s: parse("s", require("s")?)?,
        rho: parse("rho", require("rho")?)?,
        h: parse("h", require("h")?)?,
        w_spec,
        covariance,
        noise,
        seed: parse("seed", require("seed")?)?,
        shared_contamination: match get("shared_contamination") {
            Some(v) => parse("shared_contamination", v)?,
            None => false,
        },
    };
    sim.validate()?;

    let max_iter: Option<usize> = match get("max_iter") {
        Some(v) => Some(parse("max_iter", v)?),
        None => None,
    };
    let cfg = ExperimentConfig {
        sim,
        trials: match get("trials") {
            Some(v) => parse("trials", v)?,
            None => 50,
        },
        grid_size: match get("grid_size") {
            Some(v) => parse("grid_size", v)?,
            None => 40,
        },
        tol: match get("tol") {
            Some(v) => parse("tol", v)?,
            None => 1e-6,
        },
        max_iter_ipod: max_iter.unwrap_or(500),
        max_iter_transco: max_iter.unwrap_or(2000),
    };
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if cfg.grid_size < 2 {
        return Err(Error::InvalidConfig("grid_size must be >= 2".into()));
    }
    if cfg.tol <= 0.0 {
        return Err(Error::InvalidConfig("tol must be > 0".into()));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Csv,
    Json,
}

const RECORD_HEADER: &str = "method,trial,config_digest,mse,log_mse,f1,huber,r2,runtime_ms,seed";

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write records in a fixed field order plus a sibling `<stem>.summary.csv`
/// with per-method mean and sample (n-1) standard deviation of each metric.
pub fn write_results(path: &Path, records: &[ResultRecord], format: ResultFormat) -> Result<()> {
    let body = match format {
        ResultFormat::Csv => {
            let mut out = String::from(RECORD_HEADER);
            out.push('\n');
            for r in records {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.method,
                    r.trial,
                    r.config_digest,
                    r.mse,
                    r.log_mse,
                    opt_str(r.f1),
                    opt_str(r.huber),
                    opt_str(r.r2),
                    r.runtime_ms,
                    r.seed
                ));
            }
            out
        }
        ResultFormat::Json => {
            let mut out = serde_json::to_string_pretty(records)
                .map_err(|e| Error::Parse(format!("serializing records: {e}")))?;
            out.push('\n');
            out
        }
    };
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(body.as_bytes()).map_err(io_err(path))?;

    let summary_path = summary_sibling(path);
    let mut out = String::from("method,metric,count,mean,sd_sample\n");
    for method in [Method::Ipod, Method::TransCo, Method::Ptl, Method::Ols] {
        let of_method: Vec<&ResultRecord> =
            records.iter().filter(|r| r.method == method).collect();
        if of_method.is_empty() {
            continue;
        }
        let metrics: [(&str, Vec<f64>); 6] = [
            ("mse", of_method.iter().map(|r| r.mse).collect()),
            ("log_mse", of_method.iter().map(|r| r.log_mse).collect()),
            ("f1", of_method.iter().filter_map(|r| r.f1).collect()),
            ("huber", of_method.iter().filter_map(|r| r.huber).collect()),
            ("r2", of_method.iter().filter_map(|r| r.r2).collect()),
            (
                "runtime_ms",
                of_method.iter().map(|r| r.runtime_ms as f64).collect(),
            ),
        ];
        for (name, values) in metrics {
            if values.is_empty() {
                continue;
            }
            let (mean, sd) = mean_sd(&values);
            out.push_str(&format!(
                "{method},{name},{},{mean},{sd}\n",
                values.len()
            ));
        }
    }
    let mut file = fs::File::create(&summary_path).map_err(io_err(&summary_path))?;
    file.write_all(out.as_bytes()).map_err(io_err(&summary_path))?;
    Ok(())
}

/// `records.csv -> records.summary.csv`.
pub fn summary_sibling(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}.summary.csv"))
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Read back a record CSV produced by [`write_results`].
pub fn read_records_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = content.lines();
    match lines.next() {
        Some(h) if h == RECORD_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: unexpected header {other:?}",
                path.display()
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(Error::Parse(format!(
                "{}: row {} has {} cells, expected 10",
                path.display(),
                lineno + 2,
                cells.len()
            )));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{}: {e}", path.display()))
                })?))
            }
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        };
        let int = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        };
        records.push(ResultRecord {
            method: cells[0].parse()?,
            trial: int(cells[1])?,
            config_digest: cells[2].to_string(),
            mse: num(cells[3])?,
            log_mse: num(cells[4])?,
            f1: opt(cells[5])?,
            huber: opt(cells[6])?,
            r2: opt(cells[7])?,
            runtime_ms: int(cells[8])?,
            seed: int(cells[9])?,
        });
    }
    Ok(records)
}
