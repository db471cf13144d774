//! Theta-IPOD: robust regression with influential-point detection on a single
//! dataset.
//!
//! The mean-shift model `Y = X beta + gamma + eps` is fitted by iterating
//! `gamma <- Theta_hard(H gamma + r; lambda)` with `H` the hat matrix and
//! `r = (I - H) Y`, then refitting `beta` by OLS on the shift-corrected
//! response. Per-observation penalty levels are `lambda_adj * sqrt(1 - h_i)`,
//! and `lambda_adj` is tuned by a modified BIC along a descending grid.
//!
//! For `n <= p` the hat-matrix route is unavailable; a high-dimensional
//! variant alternates hard thresholding of the residual with a lasso refit of
//! the coefficients.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::baselines::{lasso_cv_fit, log_grid, LassoOptions};
use crate::error::{Error, Result};
use crate::linalg::LstsqFactor;
use crate::thresholding::{hard_penalty_unchecked, hard_threshold_unchecked};

/// A design matrix with its response; the unit of ingestion and fitting.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "dataset contains non-finite entries".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Result of one Theta-IPOD fit at a fixed `lambda_adj`.
#[derive(Debug, Clone)]
pub struct IpodFit {
    pub beta_hat: DVector<f64>,
    pub gamma_hat: DVector<f64>,
    pub lambda_adj: f64,
    pub iterations: usize,
    pub converged: bool,
    /// BIC* value at this penalty level.
    pub bic: f64,
}

impl IpodFit {
    /// Indices flagged as influential (nonzero mean shift).
    pub fn detected(&self) -> Vec<usize> {
        self.gamma_hat
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct IpodOptions {
    pub grid_size: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IpodOptions {
    fn default() -> Self {
        Self {
            grid_size: 40,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

/// Penalty-tuning path: one row per grid value, plus the BIC-minimizing index
/// among admissible fits (ties resolve to the smallest index, i.e. the
/// largest penalty).
///
/// Admissible means `DF <= floor(m/2)`: a fit spending more than half the
/// residual degrees of freedom on shifts is past the detection breakdown, and
/// its RSS collapses to (exactly) zero near the grid bottom, which would
/// otherwise win every comparison through the `m log(RSS/m)` term.
#[derive(Debug, Clone, Serialize)]
pub struct TuningPath {
    pub lambdas: Vec<f64>,
    pub df: Vec<usize>,
    pub rss: Vec<f64>,
    pub bic: Vec<f64>,
    pub best_index: usize,
}

impl TuningPath {
    /// Index the BIC argmin would pick given the residual dof budget `m`.
    pub fn admissible_argmin(&self, m: usize) -> usize {
        pick_best_admissible(&self.bic, &self.df, m)
    }
}

/// BIC argmin over fits with `DF <= floor(m/2)`; falls back to the grid top
/// (always admissible, DF = 0 there) if nothing else qualifies.
pub(crate) fn pick_best_admissible(bic: &[f64], df: &[usize], m: usize) -> usize {
    let cap = m / 2;
    let mut best: Option<usize> = None;
    for i in 0..bic.len() {
        if df[i] <= cap && best.map_or(true, |b| bic[i] < bic[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Hat matrix `H = X (X'X)^-1 X'` and its diagonal, computed through an
/// orthogonal factorization.
pub fn hat_matrix(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if x.nrows() < x.ncols() {
        return Err(Error::InvalidParameter(format!(
            "hat matrix needs n >= p, got n = {} < p = {}",
            x.nrows(),
            x.ncols()
        )));
    }
    let f = LstsqFactor::new(x)?;
    f.require_full_rank()?;
    Ok((f.hat(), f.leverage()))
}

/// Modified BIC: `m log(rss/m) + q (log m + 1)`. A perfect fit (`rss = 0`)
/// maps to negative infinity, which orders below every finite value.
pub fn bic_star(rss: f64, m: usize, q: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("BIC* needs m >= 1".into()));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("BIC* needs q >= 1".into()));
    }
    if rss < 0.0 || !rss.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "BIC* needs a finite nonnegative RSS, got {rss}"
        )));
    }
    if rss == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let m_f = m as f64;
    Ok(m_f * (rss / m_f).ln() + q as f64 * (m_f.ln() + 1.0))
}

/// Shared per-dataset state for repeated fits along a penalty grid.
struct IpodWorkspace {
    factor: LstsqFactor,
    /// sqrt(1 - h_i), floored at 0.
    scale: DVector<f64>,
    /// (I - H) Y.
    base_residual: DVector<f64>,
}

impl IpodWorkspace {
    fn new(data: &Dataset) -> Result<Self> {
        if data.n() <= data.p() {
            return Err(Error::InvalidParameter(format!(
                "Theta-IPOD needs n > p, got n = {} and p = {}; use the high-dimensional path",
                data.n(),
                data.p()
            )));
        }
        let factor = LstsqFactor::new(&data.x)?;
        factor.require_full_rank()?;
        let scale = factor.leverage().map(|h| (1.0 - h).max(0.0).sqrt());
        let base_residual = factor.residual(&data.y);
        Ok(Self {
            factor,
            scale,
            base_residual,
        })
    }

    fn lambda_levels(&self, lambda_adj: f64) -> DVector<f64> {
        self.scale.map(|s| lambda_adj * s)
    }

    /// Top of the tuning grid: the smallest lambda_adj for which every scaled
    /// residual falls inside its threshold, so that gamma = 0 is a fixed
    /// point. Inflated by a few ulps so the round trip through the per-index
    /// rescaling cannot drop the boundary residual back outside.
    fn lambda_max(&self) -> f64 {
        self.base_residual
            .iter()
            .zip(self.scale.iter())
            .map(|(&r, &s)| if s > 1e-12 { r.abs() / s } else { 0.0 })
            .fold(0.0f64, f64::max)
            * (1.0 + 1e-12)
    }

    fn iterate(
        &self,
        lambda_adj: f64,
        tol: f64,
        max_iter: usize,
        gamma0: &DVector<f64>,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<(DVector<f64>, usize, bool)> {
        let levels = self.lambda_levels(lambda_adj);
        let mut gamma = gamma0.clone();
        if let Some(t) = trace.as_deref_mut() {
            t.push(self.objective(&gamma, &levels));
        }
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            let target = self.factor.project(&gamma) + &self.base_residual;
            let next = DVector::from_iterator(
                gamma.len(),
                target
                    .iter()
                    .zip(levels.iter())
                    .map(|(&t, &l)| hard_threshold_unchecked(t, l)),
            );
            let delta = (&next - &gamma).amax();
            gamma = next;
            iterations += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(&gamma, &levels));
            }
            if !delta.is_finite() {
                return Err(Error::NumericalFailure(
                    "Theta-IPOD iteration produced non-finite values".into(),
                ));
            }
            if delta < tol {
                converged = true;
                break;
            }
        }
        Ok((gamma, iterations, converged))
    }

    /// Profiled objective: 1/2 ||(I-H)(Y - gamma)||^2 + sum P(gamma_i; lambda_i),
    /// equal to the mean-shift objective at the OLS beta for this gamma.
    fn objective(&self, gamma: &DVector<f64>, levels: &DVector<f64>) -> f64 {
        let prof = &self.base_residual - self.factor.residual(gamma);
        // base_residual - (I-H) gamma = (I-H)(Y - gamma)
        0.5 * prof.norm_squared()
            + gamma
                .iter()
                .zip(levels.iter())
                .map(|(&g, &l)| hard_penalty_unchecked(g, l))
                .sum::<f64>()
    }

    fn finish(&self, data: &Dataset, gamma: DVector<f64>, lambda_adj: f64, iterations: usize, converged: bool) -> Result<IpodFit> {
        let beta = self.factor.solve(&(&data.y - &gamma));
        let rss = (&self.base_residual - self.factor.residual(&gamma)).norm_squared();
        let df = gamma.iter().filter(|&&g| g != 0.0).count();
        let bic = bic_star(rss, data.n() - data.p(), df + 1)?;
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(
                "Theta-IPOD produced non-finite coefficients".into(),
            ));
        }
        Ok(IpodFit {
            beta_hat: beta,
            gamma_hat: gamma,
            lambda_adj,
            iterations,
            converged,
            bic,
        })
    }
}

fn check_iteration_params(tol: f64, max_iter: usize, lambda_adj: f64) -> Result<()> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    if lambda_adj < 0.0 || !lambda_adj.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda_adj must be a finite nonnegative scalar, got {lambda_adj}"
        )));
    }
    Ok(())
}

/// One Theta-IPOD fit at a fixed penalty level.
pub fn ipod_fit(
    data: &Dataset,
    lambda_adj: f64,
    tol: f64,
    max_iter: usize,
    gamma_init: Option<&DVector<f64>>,
) -> Result<IpodFit> {
    Ok(ipod_fit_traced(data, lambda_adj, tol, max_iter, gamma_init)?.0)
}

/// Like [`ipod_fit`], additionally returning the per-iteration values of the
/// penalized objective (initial state included).
pub fn ipod_fit_traced(
    data: &Dataset,
    lambda_adj: f64,
    tol: f64,
    max_iter: usize,
    gamma_init: Option<&DVector<f64>>,
) -> Result<(IpodFit, Vec<f64>)> {
    check_iteration_params(tol, max_iter, lambda_adj)?;
    let ws = IpodWorkspace::new(data)?;
    let gamma0 = match gamma_init {
        Some(g) if g.len() == data.n() => g.clone(),
        Some(g) => {
            return Err(Error::DimensionMismatch(format!(
                "gamma_init has {} entries but n = {}",
                g.len(),
                data.n()
            )))
        }
        None => DVector::zeros(data.n()),
    };
    let mut trace = Vec::new();
    let (gamma, iterations, converged) =
        ws.iterate(lambda_adj, tol, max_iter, &gamma0, Some(&mut trace))?;
    let fit = ws.finish(data, gamma, lambda_adj, iterations, converged)?;
    Ok((fit, trace))
}

/// Descending penalty grid with 0 appended: `grid_size + 1` points unless the
/// top degenerates to 0.
pub(crate) fn path_grid(lambda_max: f64, grid_size: usize) -> Vec<f64> {
    let mut grid = log_grid(lambda_max, grid_size);
    if grid.last() != Some(&0.0) {
        grid.push(0.0);
    }
    grid
}

/// Tune `lambda_adj` by BIC* along a descending log grid with warm starts;
/// returns the whole path and the fit at the minimizing penalty.
pub fn ipod_bic_path(data: &Dataset, opts: &IpodOptions) -> Result<(TuningPath, IpodFit)> {
    if opts.grid_size < 2 {
        return Err(Error::InvalidParameter("grid_size must be >= 2".into()));
    }
    check_iteration_params(opts.tol, opts.max_iter, 0.0)?;
    let ws = IpodWorkspace::new(data)?;
    let grid = path_grid(ws.lambda_max(), opts.grid_size);
    let m = data.n() - data.p();

    let mut lambdas = Vec::with_capacity(grid.len());
    let mut dfs = Vec::with_capacity(grid.len());
    let mut rsses = Vec::with_capacity(grid.len());
    let mut bics = Vec::with_capacity(grid.len());
    let mut states: Vec<(DVector<f64>, usize, bool)> = Vec::with_capacity(grid.len());

    let mut warm = DVector::zeros(data.n());
    for &lambda_adj in &grid {
        let (gamma, iterations, converged) =
            ws.iterate(lambda_adj, opts.tol, opts.max_iter, &warm, None)?;
        let rss = (&ws.base_residual - ws.factor.residual(&gamma)).norm_squared();
        let df = gamma.iter().filter(|&&g| g != 0.0).count();
        lambdas.push(lambda_adj);
        dfs.push(df);
        rsses.push(rss);
        bics.push(bic_star(rss, m, df + 1)?);
        warm = gamma.clone();
        states.push((gamma, iterations, converged));
    }
    let best = pick_best_admissible(&bics, &dfs, m);
    let (gamma, iterations, converged) = states.swap_remove(best);
    let fit = ws.finish(data, gamma, lambdas[best], iterations, converged)?;
    let path = TuningPath {
        lambdas,
        df: dfs,
        rss: rsses,
        bic: bics,
        best_index: best,
    };
    Ok((path, fit))
}

/// High-dimensional Theta-IPOD (`n <= p`): joint hard-thresholded gradient
/// steps on the stacked `(beta, gamma)` over the augmented design `[X | I]`,
/// with step size `1/k0^2`, `k0 = sigma_max([X I]) + 1`, both blocks
/// thresholded at `lambda/k0^2`. Initialized from a cross-validated lasso
/// fit; per-lambda fits all restart from that shared initialization. BIC*
/// uses `m = n`, the full residual `Y - X beta_hat - gamma_hat`, and
/// `q = DF(beta) + DF(gamma) + 1`; the argmin keeps `DF(gamma) <= n/2`.
pub fn ipod_hd_bic_path(
    data: &Dataset,
    opts: &IpodOptions,
    lasso: &LassoOptions,
) -> Result<(TuningPath, IpodFit)> {
    if opts.grid_size < 2 {
        return Err(Error::InvalidParameter("grid_size must be >= 2".into()));
    }
    check_iteration_params(opts.tol, opts.max_iter, 0.0)?;
    let n = data.n();
    let cv = lasso_cv_fit(&data.x, &data.y, lasso)?;
    let beta0 = cv.beta;
    let gamma0 = &data.y - &data.x * &beta0;
    let factor = LstsqFactor::new(&data.x)?;
    let k0 = (factor.sigma_max().powi(2) + 1.0).sqrt() + 1.0;
    let k0_sq = k0 * k0;

    // Smallest lambda that zeroes (beta, gamma) from the init in one step and
    // keeps it zero (the residual at the init vanishes by construction, so
    // the first term is just the init magnitudes).
    let lambda_max = (k0_sq * beta0.amax().max(gamma0.amax()))
        .max(data.x.tr_mul(&data.y).amax())
        .max(data.y.amax())
        * (1.0 + 1e-12);
    let grid = path_grid(lambda_max, opts.grid_size);

    let mut lambdas = Vec::with_capacity(grid.len());
    let mut dfs = Vec::with_capacity(grid.len());
    let mut rsses = Vec::with_capacity(grid.len());
    let mut bics = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, IpodFit)> = None;
    for &lambda in &grid {
        let thr = lambda / k0_sq;
        let mut beta = beta0.clone();
        let mut gamma = gamma0.clone();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            let res = &data.y - &data.x * &beta - &gamma;
            let next_beta =
                (&beta + data.x.tr_mul(&res) / k0_sq).map(|t| hard_threshold_unchecked(t, thr));
            let next_gamma = (&gamma + &res / k0_sq).map(|t| hard_threshold_unchecked(t, thr));
            let delta = (&next_gamma - &gamma).amax();
            beta = next_beta;
            gamma = next_gamma;
            iterations += 1;
            if !delta.is_finite() {
                return Err(Error::NumericalFailure(
                    "high-dimensional Theta-IPOD produced non-finite values".into(),
                ));
            }
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
        let rss = (&data.y - &data.x * &beta - &gamma).norm_squared();
        let df_gamma = gamma.iter().filter(|&&g| g != 0.0).count();
        let df_beta = beta.iter().filter(|&&b| b != 0.0).count();
        let bic = bic_star(rss, n, df_beta + df_gamma + 1)?;
        lambdas.push(lambda);
        dfs.push(df_gamma);
        rsses.push(rss);
        bics.push(bic);
        if df_gamma <= n / 2 && best.as_ref().map_or(true, |(i, _)| bic < bics[*i]) {
            best = Some((
                lambdas.len() - 1,
                IpodFit {
                    beta_hat: beta,
                    gamma_hat: gamma,
                    lambda_adj: lambda,
                    iterations,
                    converged,
                    bic,
                },
            ));
        }
    }
    let (best_index, fit) = best.expect("grid is non-empty");
    Ok((
        TuningPath {
            lambdas,
            df: dfs,
            rss: rsses,
            bic: bics,
            best_index,
        },
        fit,
    ))
}

/// BIC-tuned Theta-IPOD, dispatching on the regime: the hat-matrix path for
/// `n > p`, the lasso-backed high-dimensional path otherwise.
pub fn ipod_auto_path(data: &Dataset, opts: &IpodOptions) -> Result<(TuningPath, IpodFit)> {
    if data.n() > data.p() {
        ipod_bic_path(data, opts)
    } else {
        ipod_hd_bic_path(data, opts, &LassoOptions::default())
    }
}
