//! Comparison estimators: OLS, coordinate-descent lasso, cross-validated
//! lasso, and the two-step PTL transfer estimator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ipod::Dataset;
use crate::linalg::LstsqFactor;
use crate::transfer::SourceEnsemble;

/// Penalty selection for the lasso solvers.
#[derive(Debug, Clone)]
pub enum LambdaChoice {
    /// One fixed level (required by [`lasso_cd`]).
    Fixed(f64),
    /// Explicit grid for cross-validation.
    Grid(Vec<f64>),
    /// Log grid of `size` points from `||X'Y||_inf / n` down by a factor 1e-3.
    AutoGrid { size: usize },
}

#[derive(Debug, Clone)]
pub struct LassoOptions {
    pub lambda: LambdaChoice,
    pub tol: f64,
    pub max_iter: usize,
    /// Folds for cross-validation; rows are assigned round-robin so folds are
    /// deterministic.
    pub folds: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            lambda: LambdaChoice::AutoGrid { size: 50 },
            tol: 1e-7,
            max_iter: 1000,
            folds: 5,
        }
    }
}

impl LassoOptions {
    fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 {
            return Err(Error::InvalidParameter("lasso tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("lasso max_iter must be >= 1".into()));
        }
        match &self.lambda {
            LambdaChoice::Fixed(l) if *l < 0.0 => {
                Err(Error::InvalidParameter("lasso lambda must be >= 0".into()))
            }
            LambdaChoice::Grid(g) if g.is_empty() || g.iter().any(|l| *l < 0.0) => Err(
                Error::InvalidParameter("lasso grid must be non-empty and nonnegative".into()),
            ),
            LambdaChoice::AutoGrid { size } if *size < 1 => {
                Err(Error::InvalidParameter("lasso grid size must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Least-squares coefficients via a rank-revealing orthogonal factorization.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but Y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::InvalidParameter(format!(
            "OLS needs n >= p, got n = {} < p = {}",
            x.nrows(),
            x.ncols()
        )));
    }
    let f = LstsqFactor::new(x)?;
    f.require_full_rank()?;
    Ok(f.solve(y))
}

#[inline]
fn soft(t: f64, lambda: f64) -> f64 {
    if t > lambda {
        t - lambda
    } else if t < -lambda {
        t + lambda
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `min 1/2 ||Y - X beta||^2 + lambda ||beta||_1`,
/// warm-started from `beta0`. Converges when the largest coefficient change in
/// a sweep is below `tol`.
pub(crate) fn lasso_cd_warm(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    beta0: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let (n, p) = (x.nrows(), x.ncols());
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows but Y has {} entries",
            y.len()
        )));
    }
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut beta = match beta0 {
        Some(b) if b.len() == p => b.clone(),
        Some(b) => {
            return Err(Error::DimensionMismatch(format!(
                "warm start has {} entries but p = {p}",
                b.len()
            )))
        }
        None => DVector::zeros(p),
    };
    let mut r = y - x * &beta;
    for _ in 0..max_iter {
        let mut max_change = 0.0f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let bj = beta[j];
            let rho = x.column(j).dot(&r) + col_sq[j] * bj;
            let bj_new = soft(rho, lambda) / col_sq[j];
            let change = bj_new - bj;
            if change != 0.0 {
                r.axpy(-change, &x.column(j).into_owned(), 1.0);
                beta[j] = bj_new;
                max_change = max_change.max(change.abs());
            }
        }
        if max_change < tol {
            break;
        }
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "lasso produced non-finite coefficients".into(),
        ));
    }
    Ok(beta)
}

/// Lasso at a fixed penalty (`opts.lambda` must be [`LambdaChoice::Fixed`]).
pub fn lasso_cd(x: &DMatrix<f64>, y: &DVector<f64>, opts: &LassoOptions) -> Result<DVector<f64>> {
    opts.validate()?;
    let LambdaChoice::Fixed(lambda) = opts.lambda else {
        return Err(Error::InvalidParameter(
            "lasso_cd needs a fixed lambda; use lasso_cv for grids".into(),
        ));
    };
    lasso_cd_warm(x, y, lambda, opts.tol, opts.max_iter, None)
}

// Grid top is the smallest penalty that zeroes every coefficient under this
// module's unscaled objective.
fn auto_grid(x: &DMatrix<f64>, y: &DVector<f64>, size: usize) -> Vec<f64> {
    log_grid(x.tr_mul(y).amax(), size)
}

/// `size` points log-spaced from `top` down to `top * 1e-3`, descending.
/// The first point is exactly `top`. Degenerates to `[0.0]` when `top`
/// vanishes.
pub(crate) fn log_grid(top: f64, size: usize) -> Vec<f64> {
    if top <= 0.0 || !top.is_finite() {
        return vec![0.0];
    }
    if size == 1 {
        return vec![top];
    }
    let ratio = 1e-3f64.powf(1.0 / (size - 1) as f64);
    (0..size).map(|i| top * ratio.powi(i as i32)).collect()
}

/// A cross-validated lasso fit together with the penalty it selected.
#[derive(Debug, Clone)]
pub struct LassoCvFit {
    pub beta: DVector<f64>,
    pub lambda: f64,
}

/// K-fold cross-validated lasso: picks the grid value with the smallest
/// held-out squared error (ties go to the larger penalty) and refits on the
/// full data at that value.
pub fn lasso_cv(x: &DMatrix<f64>, y: &DVector<f64>, opts: &LassoOptions) -> Result<DVector<f64>> {
    Ok(lasso_cv_fit(x, y, opts)?.beta)
}

/// [`lasso_cv`] exposing the selected penalty as well.
pub fn lasso_cv_fit(x: &DMatrix<f64>, y: &DVector<f64>, opts: &LassoOptions) -> Result<LassoCvFit> {
    opts.validate()?;
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows but Y has {} entries",
            y.len()
        )));
    }
    if opts.folds < 2 {
        return Err(Error::InvalidParameter(
            "cross-validation needs folds >= 2".into(),
        ));
    }
    if n < opts.folds {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs n >= folds, got n = {n}, folds = {}",
            opts.folds
        )));
    }
    let grid: Vec<f64> = match &opts.lambda {
        LambdaChoice::Fixed(l) => vec![*l],
        LambdaChoice::Grid(g) => {
            let mut g = g.clone();
            g.sort_by(|a, b| b.total_cmp(a));
            g
        }
        LambdaChoice::AutoGrid { size } => auto_grid(x, y, *size),
    };
    let mut cv_err = vec![0.0f64; grid.len()];
    for fold in 0..opts.folds {
        let train_rows: Vec<usize> = (0..n).filter(|i| i % opts.folds != fold).collect();
        let valid_rows: Vec<usize> = (0..n).filter(|i| i % opts.folds == fold).collect();
        let xt = select_rows(x, &train_rows);
        let yt = DVector::from_iterator(train_rows.len(), train_rows.iter().map(|&i| y[i]));
        let xv = select_rows(x, &valid_rows);
        let yv = DVector::from_iterator(valid_rows.len(), valid_rows.iter().map(|&i| y[i]));
        let mut warm: Option<DVector<f64>> = None;
        for (gi, &lambda) in grid.iter().enumerate() {
            let beta = lasso_cd_warm(&xt, &yt, lambda, opts.tol, opts.max_iter, warm.as_ref())?;
            cv_err[gi] += (&yv - &xv * &beta).norm_squared();
            warm = Some(beta);
        }
    }
    let best = cv_err
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let beta = lasso_cd_warm(x, y, grid[best], opts.tol, opts.max_iter, None)?;
    Ok(LassoCvFit {
        beta,
        lambda: grid[best],
    })
}

pub(crate) fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Profiled transfer learning: OLS of Y on `X * B_hat` for the weights, then
/// cross-validated lasso of the profiled residual on X for the sparse
/// correction. No mean-shift term; PTL does not detect influential points.
pub fn ptl_fit(
    target: &Dataset,
    ensemble: &SourceEnsemble,
    opts: &LassoOptions,
) -> Result<DVector<f64>> {
    let k = ensemble.n_sources();
    if target.n() <= k {
        return Err(Error::InvalidParameter(format!(
            "PTL needs n > K, got n = {} with K = {k}",
            target.n()
        )));
    }
    let z = &target.x * ensemble.b_hat();
    let zf = LstsqFactor::new(&z)?;
    zf.require_full_rank()
        .map_err(|_| Error::TransferDegeneracy("X * B_hat is rank deficient".into()))?;
    let w = zf.solve(&target.y);
    let e = &target.y - &z * &w;
    let delta = lasso_cv(&target.x, &e, opts)?;
    Ok(ensemble.b_hat() * w + delta)
}
