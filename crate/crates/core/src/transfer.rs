//! Trans-CO: transfer-learning collaborative optimization under the
//! mean-shift model.
//!
//! Source datasets are fitted robustly (Theta-IPOD + OLS refit) to form a
//! coefficient bank `B_hat`. The target coefficients decompose as
//! `beta = B_hat w + delta` with `delta` sparse, and the target model becomes
//! `Y = Z w + X delta + gamma + eps` with `Z = X B_hat`. The solver
//! alternates:
//!
//! 1. an exact OLS update of `w` at the current `(delta, gamma)`;
//! 2. a joint hard-thresholded gradient step on `xi = [delta; gamma]` with
//!    step size `1/k0^2`, `k0 = sigma_max([X I]) + 1`, thresholding at
//!    `lambda / k0^2`.
//!
//! Both half-steps decrease a penalized objective (see
//! [`transco_objective`]), which gives the iteration its convergence
//! guarantee. The penalty level `lambda` is tuned by BIC* in an
//! orthogonalized model: projecting onto the orthocomplement of col(Z) and
//! rescaling by `C^{-1/2}` yields a design `A` with `A A' = I`, in which the
//! residual sum of squares no longer depends on `w`.

use nalgebra::{DMatrix, DVector};

use crate::baselines::{lasso_cv, LassoOptions};
use crate::error::{Error, Result};
use crate::ipod::{bic_star, ipod_bic_path, path_grid, Dataset, IpodOptions, TuningPath};
use crate::linalg::{sym_eigen_sorted, LstsqFactor, RANK_RTOL};
use crate::thresholding::{hard_penalty_unchecked, hard_threshold_unchecked};

/// Per-source fit diagnostics kept alongside the coefficient bank.
#[derive(Debug, Clone)]
pub struct SourceDiagnostics {
    pub lambda_adj: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Robust per-source fits: coefficient bank `B_hat` (p x K) and the detected
/// mean shifts of each source.
#[derive(Debug, Clone)]
pub struct SourceEnsemble {
    b_hat: DMatrix<f64>,
    gamma_hats: Vec<DVector<f64>>,
    diagnostics: Vec<SourceDiagnostics>,
}

impl SourceEnsemble {
    pub fn new(
        b_hat: DMatrix<f64>,
        gamma_hats: Vec<DVector<f64>>,
        diagnostics: Vec<SourceDiagnostics>,
    ) -> Result<Self> {
        if b_hat.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "source ensemble needs K >= 1".into(),
            ));
        }
        if b_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(
                "coefficient bank contains non-finite entries".into(),
            ));
        }
        let sv = b_hat.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if b_hat.ncols() > b_hat.nrows() || smin <= RANK_RTOL * smax {
            return Err(Error::EnsembleDegeneracy(format!(
                "coefficient bank columns are collinear (sigma_min/sigma_max = {:.3e})",
                if smax > 0.0 { smin / smax } else { 0.0 }
            )));
        }
        Ok(Self {
            b_hat,
            gamma_hats,
            diagnostics,
        })
    }

    /// Ensemble from bare coefficients, without per-source detection output.
    pub fn from_coefficients(b_hat: DMatrix<f64>) -> Result<Self> {
        Self::new(b_hat, Vec::new(), Vec::new())
    }

    pub fn b_hat(&self) -> &DMatrix<f64> {
        &self.b_hat
    }

    pub fn gamma_hats(&self) -> &[DVector<f64>] {
        &self.gamma_hats
    }

    pub fn diagnostics(&self) -> &[SourceDiagnostics] {
        &self.diagnostics
    }

    pub fn n_sources(&self) -> usize {
        self.b_hat.ncols()
    }

    pub fn p(&self) -> usize {
        self.b_hat.nrows()
    }
}

/// Fit every source with BIC-tuned Theta-IPOD and collect the OLS refits of
/// the shift-corrected responses into a coefficient bank.
pub fn fit_sources(sources: &[Dataset], opts: &IpodOptions) -> Result<SourceEnsemble> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter(
            "transfer needs at least one source dataset".into(),
        ));
    }
    let p = sources[0].p();
    let mut columns = Vec::with_capacity(sources.len());
    let mut gamma_hats = Vec::with_capacity(sources.len());
    let mut diagnostics = Vec::with_capacity(sources.len());
    for (k, source) in sources.iter().enumerate() {
        if source.p() != p {
            return Err(Error::DimensionMismatch(format!(
                "source {k} has {} predictors, expected {p}",
                source.p()
            )));
        }
        let (_, fit) = ipod_bic_path(source, opts)
            .map_err(|e| Error::InvalidParameter(format!("source {k}: {e}")))?;
        columns.push(fit.beta_hat.clone());
        gamma_hats.push(fit.gamma_hat);
        diagnostics.push(SourceDiagnostics {
            lambda_adj: fit.lambda_adj,
            iterations: fit.iterations,
            converged: fit.converged,
        });
    }
    SourceEnsemble::new(DMatrix::from_columns(&columns), gamma_hats, diagnostics)
}

/// Precomputed quantities for the orthogonalized target model.
#[derive(Debug, Clone)]
pub struct TransformCache {
    /// `Z = X B_hat`, n x K.
    pub z: DMatrix<f64>,
    /// Augmented design `M = [X | I]`, n x (p+n).
    pub m: DMatrix<f64>,
    /// `sigma_max(M) + 1`; the xi step size is `1/k0^2`.
    pub k0: f64,
    /// `P = C^{-1/2} U_c'`, (n-K) x n.
    pub p_mat: DMatrix<f64>,
    /// `A = P M`, (n-K) x (p+n); satisfies `A A' = I`.
    pub a: DMatrix<f64>,
    /// `P Y`.
    pub y_tilde: DVector<f64>,
    z_factor: LstsqFactor,
}

impl TransformCache {
    pub fn k0_sq(&self) -> f64 {
        self.k0 * self.k0
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_sources(&self) -> usize {
        self.z.ncols()
    }

    /// Exact OLS weight update `(Z'Z)^-1 Z' v`.
    pub fn solve_w(&self, v: &DVector<f64>) -> DVector<f64> {
        self.z_factor.solve(v)
    }

    /// `||Y_tilde - A xi||^2` for `xi = [delta; gamma]`, via `P(X delta + gamma)`.
    pub fn transformed_rss(&self, x: &DMatrix<f64>, delta: &DVector<f64>, gamma: &DVector<f64>) -> f64 {
        let fitted = x * delta + gamma;
        (&self.y_tilde - &self.p_mat * fitted).norm_squared()
    }
}

/// Build the Zw-eliminated orthogonal transform for a target design.
pub fn build_transform(
    x: &DMatrix<f64>,
    b_hat: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<TransformCache> {
    let (n, p) = (x.nrows(), x.ncols());
    let k = b_hat.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows but Y has {} entries",
            y.len()
        )));
    }
    if b_hat.nrows() != p {
        return Err(Error::DimensionMismatch(format!(
            "coefficient bank has {} rows but X has {p} columns",
            b_hat.nrows()
        )));
    }
    if n <= k {
        return Err(Error::InvalidParameter(format!(
            "transfer needs n > K, got n = {n} with K = {k}"
        )));
    }
    let z = x * b_hat;
    let z_factor = LstsqFactor::new(&z)?;
    z_factor.require_full_rank().map_err(|_| {
        Error::TransferDegeneracy(format!(
            "Z = X * B_hat has rank {} < K = {k}",
            z_factor.rank()
        ))
    })?;

    // Eigenvectors of the projector H_z with eigenvalue below 1/2 span the
    // orthocomplement of col(Z); the projector spectrum is {0, 1} up to
    // rounding, so 1/2 is the robust cut.
    let h_z = z_factor.hat();
    let (h_vals, h_vecs) = sym_eigen_sorted(&h_z);
    let null_count = h_vals.iter().filter(|&&v| v < 0.5).count();
    if null_count != n - k {
        return Err(Error::NumericalFailure(format!(
            "projector eigenvalue split found {null_count} null directions, expected {}",
            n - k
        )));
    }
    let u_c = h_vecs.columns(k, n - k).into_owned();

    // C = U_c' (X X' + I) U_c is positive definite with eigenvalues >= 1;
    // anything below the guard flags upstream corruption.
    let mut mmt = x * x.transpose();
    for i in 0..n {
        mmt[(i, i)] += 1.0;
    }
    let c = u_c.tr_mul(&mmt) * &u_c;
    let (c_vals, c_vecs) = sym_eigen_sorted(&c);
    if c_vals.iter().any(|&v| v < 1e-12) {
        return Err(Error::NumericalFailure(format!(
            "C is not positive definite (min eigenvalue {:.3e})",
            c_vals.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let scaled = DMatrix::from_fn(n - k, n - k, |i, j| c_vecs[(i, j)] / c_vals[j].sqrt());
    let c_inv_sqrt = scaled * c_vecs.transpose();
    let p_mat = c_inv_sqrt * u_c.transpose();

    let mut m = DMatrix::zeros(n, p + n);
    m.view_mut((0, 0), (n, p)).copy_from(x);
    m.view_mut((0, p), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    let a = &p_mat * &m;
    let y_tilde = &p_mat * y;
    let k0 = (LstsqFactor::new(x)?.sigma_max().powi(2) + 1.0).sqrt() + 1.0;
    Ok(TransformCache {
        z,
        m,
        k0,
        p_mat,
        a,
        y_tilde,
        z_factor,
    })
}

/// One iterate of the alternating solver.
#[derive(Debug, Clone)]
pub struct TransferState {
    pub w: DVector<f64>,
    pub delta: DVector<f64>,
    pub gamma: DVector<f64>,
    /// Monitor objective at this state.
    pub objective: f64,
}

impl TransferState {
    /// The stacked sparse vector `[delta; gamma]`.
    pub fn xi(&self) -> DVector<f64> {
        let mut xi = DVector::zeros(self.delta.len() + self.gamma.len());
        xi.rows_mut(0, self.delta.len()).copy_from(&self.delta);
        xi.rows_mut(self.delta.len(), self.gamma.len())
            .copy_from(&self.gamma);
        xi
    }

    pub fn df(&self) -> usize {
        self.delta.iter().filter(|&&v| v != 0.0).count()
            + self.gamma.iter().filter(|&&v| v != 0.0).count()
    }
}

fn monitor_penalty(t: f64, lambda: f64, k0_sq: f64) -> f64 {
    k0_sq * hard_penalty_unchecked(t, lambda / k0_sq)
}

fn objective_value(
    residual_sq: f64,
    delta: &DVector<f64>,
    gamma: &DVector<f64>,
    lambda: f64,
    k0_sq: f64,
) -> f64 {
    let penalty: f64 = delta
        .iter()
        .chain(gamma.iter())
        .map(|&v| monitor_penalty(v, lambda, k0_sq))
        .sum();
    0.5 * residual_sq + penalty
}

/// Penalized objective monitored by the solver:
/// `1/2 ||Y - Z w - X delta - gamma||^2 + sum_j P(xi_j)`.
///
/// The penalty is the hard-rule penalty evaluated at the iteration's own
/// threshold scale, `P(t) = k0^2 * P_hard(t; lambda/k0^2)`; with this scaling
/// (and only with it) both half-steps of [`transco_step`] are guaranteed not
/// to increase the objective. It degenerates to the plain hard penalty at
/// level `lambda` as `k0 -> 1`, and every zero/nonzero pattern it induces is
/// the same as thresholding at `lambda/k0^2`.
pub fn transco_objective(
    state: &TransferState,
    cache: &TransformCache,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let res = y - &cache.z * &state.w - x * &state.delta - &state.gamma;
    Ok(objective_value(
        res.norm_squared(),
        &state.delta,
        &state.gamma,
        lambda,
        cache.k0_sq(),
    ))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be a finite nonnegative scalar, got {lambda}"
        )));
    }
    Ok(())
}

/// One full iteration: exact `w` update, then the joint thresholded gradient
/// step on `(delta, gamma)` evaluated at the old `(delta, gamma)` and the new
/// `w`.
pub fn transco_step(
    state: &TransferState,
    cache: &TransformCache,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<TransferState> {
    check_lambda(lambda)?;
    let k0_sq = cache.k0_sq();
    let partial = y - x * &state.delta - &state.gamma;
    let w = cache.solve_w(&partial);
    let res = &partial - &cache.z * &w;
    let thr = lambda / k0_sq;
    let u_delta = &state.delta + x.tr_mul(&res) / k0_sq;
    let u_gamma = &state.gamma + &res / k0_sq;
    let delta = u_delta.map(|t| hard_threshold_unchecked(t, thr));
    let gamma = u_gamma.map(|t| hard_threshold_unchecked(t, thr));
    let new_res = y - &cache.z * &w - x * &delta - &gamma;
    let objective = objective_value(new_res.norm_squared(), &delta, &gamma, lambda, k0_sq);
    if !objective.is_finite() {
        return Err(Error::NumericalFailure(
            "Trans-CO step produced a non-finite objective".into(),
        ));
    }
    Ok(TransferState {
        w,
        delta,
        gamma,
        objective,
    })
}

/// Converged Trans-CO fit.
#[derive(Debug, Clone)]
pub struct TransferFit {
    pub w_hat: DVector<f64>,
    pub delta_hat: DVector<f64>,
    pub gamma_hat: DVector<f64>,
    /// `B_hat * w_hat + delta_hat`, exactly as composed.
    pub beta_hat: DVector<f64>,
    pub lambda: f64,
    /// Monitor objective after each half-step, starting with the value at the
    /// initial `(delta, gamma)` under the first `w`; alternates w-step and
    /// xi-step values, so the whole sequence is non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// BIC* in the orthogonalized model at this lambda.
    pub bic: f64,
}

impl TransferFit {
    /// Indices flagged as influential on the target.
    pub fn detected(&self) -> Vec<usize> {
        self.gamma_hat
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn df(&self) -> usize {
        self.delta_hat.iter().filter(|&&v| v != 0.0).count()
            + self.gamma_hat.iter().filter(|&&v| v != 0.0).count()
    }

    /// Gap `||B_hat' (X'X/n) delta_hat||_inf` from the identification
    /// condition; purely diagnostic, never enforced.
    pub fn identification_gap(&self, x: &DMatrix<f64>, b_hat: &DMatrix<f64>) -> f64 {
        let sigma_delta = x.tr_mul(&(x * &self.delta_hat)) / x.nrows() as f64;
        b_hat.tr_mul(&sigma_delta).amax()
    }
}

#[derive(Debug, Clone)]
pub struct TranscoOptions {
    pub grid_size: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Settings for the lasso initializer used when n <= p.
    pub lasso: LassoOptions,
}

impl Default for TranscoOptions {
    fn default() -> Self {
        Self {
            grid_size: 40,
            tol: 1e-6,
            max_iter: 2000,
            lasso: LassoOptions::default(),
        }
    }
}

/// Default initialization: coefficient fit of the raw data, residuals as the
/// starting `gamma`, `delta = 0`.
///
/// The coefficient fit is OLS in the amply-determined regime and
/// cross-validated lasso once `p > n/2` (including `n <= p`). Mean shifts
/// only survive the thresholded iteration if their *initial* residual clears
/// the threshold, and the OLS residual attenuates every shift by `1 - h_i`;
/// past leverage 1/2 that attenuation buries moderate shifts below any
/// threshold that still rejects noise, so the shrunken initializer is used
/// there.
fn default_init(target: &Dataset, lasso: &LassoOptions) -> Result<(DVector<f64>, DVector<f64>)> {
    let beta0 = if 2 * target.p() <= target.n() {
        LstsqFactor::new(&target.x)?.solve(&target.y)
    } else {
        lasso_cv(&target.x, &target.y, lasso)?
    };
    let gamma0 = &target.y - &target.x * &beta0;
    Ok((DVector::zeros(target.p()), gamma0))
}

fn run_iterations(
    target: &Dataset,
    cache: &TransformCache,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    delta0: DVector<f64>,
    gamma0: DVector<f64>,
) -> Result<(TransferState, Vec<f64>, usize, bool)> {
    let k0_sq = cache.k0_sq();
    let thr = lambda / k0_sq;
    let mut delta = delta0;
    let mut gamma = gamma0;
    let mut w = DVector::zeros(cache.n_sources());
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let partial = &target.y - &target.x * &delta - &gamma;
        w = cache.solve_w(&partial);
        let res = &partial - &cache.z * &w;
        trace.push(objective_value(
            res.norm_squared(),
            &delta,
            &gamma,
            lambda,
            k0_sq,
        ));
        let u_delta = &delta + target.x.tr_mul(&res) / k0_sq;
        let u_gamma = &gamma + &res / k0_sq;
        let new_delta = u_delta.map(|t| hard_threshold_unchecked(t, thr));
        let new_gamma = u_gamma.map(|t| hard_threshold_unchecked(t, thr));
        let step = (&new_gamma - &gamma).amax();
        delta = new_delta;
        gamma = new_gamma;
        let res_new = &target.y - &cache.z * &w - &target.x * &delta - &gamma;
        let f_end = objective_value(res_new.norm_squared(), &delta, &gamma, lambda, k0_sq);
        trace.push(f_end);
        iterations += 1;
        if !f_end.is_finite() || !step.is_finite() {
            return Err(Error::NumericalFailure(
                "Trans-CO iteration produced non-finite values".into(),
            ));
        }
        if step < tol {
            converged = true;
            break;
        }
    }
    let objective = trace.last().copied().unwrap_or(f64::NAN);
    Ok((
        TransferState {
            w,
            delta,
            gamma,
            objective,
        },
        trace,
        iterations,
        converged,
    ))
}

fn make_fit(
    target: &Dataset,
    b_hat: &DMatrix<f64>,
    cache: &TransformCache,
    state: TransferState,
    lambda: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> Result<TransferFit> {
    let rss = cache.transformed_rss(&target.x, &state.delta, &state.gamma);
    let m = cache.n() - cache.n_sources();
    let bic = bic_star(rss, m, state.df() + 1)?;
    let beta_hat = b_hat * &state.w + &state.delta;
    Ok(TransferFit {
        w_hat: state.w,
        delta_hat: state.delta,
        gamma_hat: state.gamma,
        beta_hat,
        lambda,
        objective_trace: trace,
        iterations,
        converged,
        bic,
    })
}

/// Trans-CO at a fixed penalty, reusing a prebuilt transform.
pub fn transco_fit_cached(
    target: &Dataset,
    b_hat: &DMatrix<f64>,
    cache: &TransformCache,
    lambda: f64,
    opts: &TranscoOptions,
    init: Option<&TransferState>,
) -> Result<TransferFit> {
    check_lambda(lambda)?;
    if opts.tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    let (delta0, gamma0) = match init {
        Some(s) => (s.delta.clone(), s.gamma.clone()),
        None => default_init(target, &opts.lasso)?,
    };
    let (state, trace, iterations, converged) = run_iterations(
        target, cache, lambda, opts.tol, opts.max_iter, delta0, gamma0,
    )?;
    make_fit(target, b_hat, cache, state, lambda, trace, iterations, converged)
}

/// Trans-CO at a fixed penalty.
pub fn transco_fit(
    target: &Dataset,
    ensemble: &SourceEnsemble,
    lambda: f64,
    opts: &TranscoOptions,
    init: Option<&TransferState>,
) -> Result<TransferFit> {
    let cache = build_transform(&target.x, ensemble.b_hat(), &target.y)?;
    transco_fit_cached(target, ensemble.b_hat(), &cache, lambda, opts, init)
}

/// Smallest lambda that zeroes `xi` from the given starting point in one step
/// and keeps it zero afterwards.
fn lambda_ceiling(
    target: &Dataset,
    cache: &TransformCache,
    delta0: &DVector<f64>,
    gamma0: &DVector<f64>,
) -> f64 {
    let k0_sq = cache.k0_sq();
    let partial = &target.y - &target.x * delta0 - gamma0;
    let w = cache.solve_w(&partial);
    let res = &partial - &cache.z * &w;
    let u_delta = delta0 + target.x.tr_mul(&res) / k0_sq;
    let u_gamma = gamma0 + &res / k0_sq;
    let zero_in_one_step = k0_sq * u_delta.amax().max(u_gamma.amax());

    // Once xi = 0 the weights become the plain OLS of Y on Z; ensure the zero
    // state is a fixed point there as well. The small inflation keeps the
    // boundary coordinate inside the threshold after the k0^2 round trip.
    let w_ols = cache.solve_w(&target.y);
    let res_z = &target.y - &cache.z * &w_ols;
    let stay_zero = target.x.tr_mul(&res_z).amax().max(res_z.amax());

    zero_in_one_step.max(stay_zero) * (1.0 + 1e-12)
}

/// Top of the tuning range for a target/ensemble pair: the smallest lambda
/// that empties `xi` from the default initialization and keeps it empty.
pub fn transco_lambda_ceiling(
    target: &Dataset,
    ensemble: &SourceEnsemble,
    opts: &TranscoOptions,
) -> Result<f64> {
    let cache = build_transform(&target.x, ensemble.b_hat(), &target.y)?;
    let (delta0, gamma0) = default_init(target, &opts.lasso)?;
    Ok(lambda_ceiling(target, &cache, &delta0, &gamma0))
}

/// Tune lambda by BIC* in the orthogonalized model along a descending log
/// grid; returns the path and the minimizing fit.
///
/// Every fit on the grid starts from the shared default initialization
/// (computed once, like the transform cache). Chaining the previous fit's
/// solution instead would break detection outright: the thresholded gradient
/// step admits a zero coordinate only when its raw gradient exceeds `lambda`
/// itself, while an already-active coordinate survives at `lambda/k0^2`, so
/// once the grid top empties `xi` no shift can re-enter until `lambda` is far
/// below the useful range.
pub fn transco_bic_path(
    target: &Dataset,
    ensemble: &SourceEnsemble,
    opts: &TranscoOptions,
) -> Result<(TuningPath, TransferFit)> {
    if opts.grid_size < 2 {
        return Err(Error::InvalidParameter("grid_size must be >= 2".into()));
    }
    let cache = build_transform(&target.x, ensemble.b_hat(), &target.y)?;
    let (delta0, gamma0) = default_init(target, &opts.lasso)?;
    let grid = path_grid(lambda_ceiling(target, &cache, &delta0, &gamma0), opts.grid_size);
    let m = cache.n() - cache.n_sources();

    let mut lambdas = Vec::with_capacity(grid.len());
    let mut dfs = Vec::with_capacity(grid.len());
    let mut rsses = Vec::with_capacity(grid.len());
    let mut bics = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, TransferFit)> = None;
    for &lambda in &grid {
        let (state, trace, iterations, converged) = run_iterations(
            target,
            &cache,
            lambda,
            opts.tol,
            opts.max_iter,
            delta0.clone(),
            gamma0.clone(),
        )?;
        let rss = cache.transformed_rss(&target.x, &state.delta, &state.gamma);
        let df = state.df();
        let bic = bic_star(rss, m, df + 1)?;
        lambdas.push(lambda);
        dfs.push(df);
        rsses.push(rss);
        bics.push(bic);
        if df <= m / 2 && best.as_ref().map_or(true, |(i, _)| bic < bics[*i]) {
            let fit = make_fit(
                target,
                ensemble.b_hat(),
                &cache,
                state,
                lambda,
                trace,
                iterations,
                converged,
            )?;
            best = Some((lambdas.len() - 1, fit));
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

/// End-to-end Trans-CO: robust source fits, then the BIC-tuned target fit.
pub fn transco_full(
    target: &Dataset,
    sources: &[Dataset],
    ipod_opts: &IpodOptions,
    opts: &TranscoOptions,
) -> Result<(TuningPath, TransferFit, SourceEnsemble)> {
    let ensemble = fit_sources(sources, ipod_opts)?;
    let (path, fit) = transco_bic_path(target, &ensemble, opts)?;
    Ok((path, fit, ensemble))
}
