//! Synthetic benchmark generators for the five simulation designs.
//!
//! Each design produces a contaminated target dataset plus K contaminated
//! source datasets from the mean-shift models, with full ground truth
//! recorded. Randomness is drawn from labeled streams derived from
//! `(seed, trial)`, so regenerating any trial is bit-exact and independent of
//! how many other trials run, in whatever order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ipod::Dataset;
use crate::rng::trial_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
}

impl ExampleId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3 => "ex3",
            ExampleId::Ex4 => "ex4",
            ExampleId::Ex5 => "ex5",
        }
    }
}

impl std::str::FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ex1" | "1" => Ok(ExampleId::Ex1),
            "ex2" | "2" => Ok(ExampleId::Ex2),
            "ex3" | "3" => Ok(ExampleId::Ex3),
            "ex4" | "4" => Ok(ExampleId::Ex4),
            "ex5" | "5" => Ok(ExampleId::Ex5),
            other => Err(Error::InvalidConfig(format!(
                "unknown example id '{other}' (expected ex1..ex5)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// Identity for target and all sources.
    Identity,
    /// Identity target; source k uses the banded symmetric Toeplitz matrix
    /// with first row `(1, 1_{2k-1}/(k+1), 0_{p-2k})`.
    ToeplitzPerSource,
    /// `sigma_ij = 0.5^|i-j|` for target and sources.
    Ar05,
}

impl CovarianceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CovarianceKind::Identity => "identity",
            CovarianceKind::ToeplitzPerSource => "toeplitz",
            CovarianceKind::Ar05 => "ar05",
        }
    }
}

impl std::str::FromStr for CovarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(CovarianceKind::Identity),
            "toeplitz" => Ok(CovarianceKind::ToeplitzPerSource),
            "ar05" => Ok(CovarianceKind::Ar05),
            other => Err(Error::InvalidConfig(format!(
                "unknown covariance kind '{other}' (expected identity|toeplitz|ar05)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Unit error variance everywhere.
    Unit,
    /// Unit target variance, `(k+1)/10` for source k.
    PerSourceScaled,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Unit => "unit",
            NoiseKind::PerSourceScaled => "scaled",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unit" => Ok(NoiseKind::Unit),
            "scaled" => Ok(NoiseKind::PerSourceScaled),
            other => Err(Error::InvalidConfig(format!(
                "unknown noise kind '{other}' (expected unit|scaled)"
            ))),
        }
    }
}

/// How to choose the mixing weights of the source coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Fixed(Vec<f64>),
    /// Independent U(-2, 2) per coordinate.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub example_id: ExampleId,
    /// Target sample size.
    pub n: usize,
    /// Number of predictors.
    pub p: usize,
    /// Number of sources.
    pub k_sources: usize,
    /// Per-source sample size (equal across sources).
    pub n_per_source: usize,
    /// Nonzero rows of the coefficient bank.
    pub s: usize,
    /// Contamination fraction; outlier counts are floored.
    pub rho: f64,
    /// Drift magnitude: nonzero coordinates of `delta` have variance
    /// `h / floor(s/5)`.
    pub h: f64,
    pub w_spec: WeightSpec,
    pub covariance: CovarianceKind,
    pub noise: NoiseKind,
    pub seed: u64,
    /// Draw one `(a, b)` pair per dataset instead of one per contaminated
    /// point; off by default (sensitivity runs only).
    pub shared_contamination: bool,
}

/// The fixed weight vector of the K = 5 designs.
pub const FIVE_SOURCE_WEIGHTS: [f64; 5] = [1.5, 0.75, 0.0, 0.0, -1.25];

impl SimulationConfig {
    /// Reference configuration of each design at its smallest published
    /// sample sizes.
    pub fn example_desk(example_id: ExampleId) -> Self {
        let base = Self {
            example_id,
            n: 150,
            p: 100,
            k_sources: 5,
            n_per_source: 1000,
            s: 25,
            rho: 0.1,
            h: 6.0,
            w_spec: WeightSpec::Fixed(FIVE_SOURCE_WEIGHTS.to_vec()),
            covariance: CovarianceKind::Identity,
            noise: NoiseKind::Unit,
            seed: 0,
            shared_contamination: false,
        };
        match example_id {
            ExampleId::Ex1 => base,
            ExampleId::Ex2 => Self {
                n: 200,
                k_sources: 4,
                s: 30,
                rho: 0.05,
                w_spec: WeightSpec::Uniform,
                ..base
            },
            ExampleId::Ex3 => Self {
                covariance: CovarianceKind::ToeplitzPerSource,
                noise: NoiseKind::PerSourceScaled,
                ..base
            },
            ExampleId::Ex4 => Self {
                covariance: CovarianceKind::Ar05,
                ..base
            },
            ExampleId::Ex5 => Self { n: 50, ..base },
        }
    }

    fn r0(&self) -> usize {
        self.s / 3
    }

    fn s_delta(&self) -> usize {
        self.s / 5
    }

    /// Whether `delta`'s support avoids the nonzero rows of the bank; the
    /// unidentified design samples it from all coordinates instead.
    pub fn identified(&self) -> bool {
        self.example_id != ExampleId::Ex4
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.k_sources == 0 || self.n_per_source == 0 {
            return Err(Error::InvalidConfig(
                "n, p, K and N must all be positive".into(),
            ));
        }
        if self.s > self.p {
            return Err(Error::InvalidConfig(format!(
                "s = {} exceeds p = {}",
                self.s, self.p
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if self.h <= 0.0 || !self.h.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if self.r0() < self.k_sources {
            return Err(Error::InvalidConfig(format!(
                "coefficient bank needs floor(s/3) >= K, got floor({}/3) = {} < {}",
                self.s,
                self.r0(),
                self.k_sources
            )));
        }
        if self.s_delta() == 0 {
            return Err(Error::InvalidConfig(format!(
                "drift support needs floor(s/5) >= 1, got s = {}",
                self.s
            )));
        }
        if self.identified() && self.s_delta() > self.p - self.s {
            return Err(Error::InvalidConfig(format!(
                "identified drift needs floor(s/5) <= p - s, got {} > {}",
                self.s_delta(),
                self.p - self.s
            )));
        }
        if self.n_per_source <= self.p {
            return Err(Error::InvalidConfig(format!(
                "sources need N > p for the robust source fits, got N = {} with p = {}",
                self.n_per_source, self.p
            )));
        }
        if let WeightSpec::Fixed(w) = &self.w_spec {
            if w.len() != self.k_sources {
                return Err(Error::InvalidConfig(format!(
                    "weight vector has {} entries but K = {}",
                    w.len(),
                    self.k_sources
                )));
            }
        }
        let expected = match self.example_id {
            ExampleId::Ex1 | ExampleId::Ex2 | ExampleId::Ex5 => {
                (CovarianceKind::Identity, NoiseKind::Unit)
            }
            ExampleId::Ex3 => (CovarianceKind::ToeplitzPerSource, NoiseKind::PerSourceScaled),
            ExampleId::Ex4 => (CovarianceKind::Ar05, NoiseKind::Unit),
        };
        if (self.covariance, self.noise) != expected {
            return Err(Error::InvalidConfig(format!(
                "{} uses covariance = {} and noise = {}, got {} and {}",
                self.example_id.as_str(),
                expected.0.as_str(),
                expected.1.as_str(),
                self.covariance.as_str(),
                self.noise.as_str()
            )));
        }
        if self.covariance == CovarianceKind::ToeplitzPerSource && 2 * self.k_sources > self.p {
            return Err(Error::InvalidConfig(format!(
                "Toeplitz covariance needs 2K <= p, got K = {} with p = {}",
                self.k_sources, self.p
            )));
        }
        Ok(())
    }

    /// Stable digest of every generating parameter; identifies a run in
    /// result records.
    pub fn digest(&self) -> String {
        let w = match &self.w_spec {
            WeightSpec::Uniform => "uniform".to_string(),
            WeightSpec::Fixed(v) => v
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(","),
        };
        let canon = format!(
            "{};n={};p={};K={};N={};s={};rho={};h={};w={};cov={};noise={};seed={};shared={}",
            self.example_id.as_str(),
            self.n,
            self.p,
            self.k_sources,
            self.n_per_source,
            self.s,
            self.rho,
            self.h,
            w,
            self.covariance.as_str(),
            self.noise.as_str(),
            self.seed,
            self.shared_contamination
        );
        let mut hash: u64 = 0xCBF29CE484222325;
        for b in canon.bytes() {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x100000001B3);
        }
        format!("{hash:016x}")
    }
}

/// Everything the generator knows that the estimators must recover.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub beta: DVector<f64>,
    pub b: DMatrix<f64>,
    pub w: DVector<f64>,
    pub delta: DVector<f64>,
    pub gamma_target: DVector<f64>,
    pub gamma_sources: Vec<DVector<f64>>,
    pub outliers_target: Vec<usize>,
    pub outliers_sources: Vec<Vec<usize>>,
}

/// Coefficient bank `B`: `2 U_K` over a 0.3-scaled rectangular identity over
/// zeros, where `U_K` holds the first K left singular vectors of a standard
/// normal `floor(s/3) x K` draw.
pub fn gen_coefficient_bank(
    p: usize,
    s: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    let r0 = s / 3;
    if r0 < k {
        return Err(Error::InvalidConfig(format!(
            "coefficient bank needs floor(s/3) >= K, got {r0} < {k}"
        )));
    }
    if s > p {
        return Err(Error::InvalidConfig(format!("s = {s} exceeds p = {p}")));
    }
    let omega = DMatrix::from_fn(r0, k, |_, _| StandardNormal.sample(rng));
    let svd = omega.svd(true, false);
    let u_k = svd
        .u
        .ok_or_else(|| Error::NumericalFailure("SVD did not produce U".into()))?;
    let mut b = DMatrix::zeros(p, k);
    b.view_mut((0, 0), (r0, k)).copy_from(&(u_k.columns(0, k) * 2.0));
    for j in 0..k.min(s - r0) {
        b[(r0 + j, j)] = 0.3;
    }
    Ok(b)
}

/// Sample `count` distinct values from `pool` by partial Fisher-Yates;
/// returned sorted ascending.
fn sample_without_replacement(pool: &mut Vec<usize>, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    for i in 0..count {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut picked: Vec<usize> = pool[..count].to_vec();
    picked.sort_unstable();
    picked
}

/// Sparse drift vector: `floor(s/5)` coordinates drawn without replacement
/// (from beyond the bank support when `identified`, from everywhere
/// otherwise), each `N(0, h / floor(s/5))` with the second argument read as a
/// variance.
pub fn gen_delta(
    p: usize,
    s: usize,
    h: f64,
    rng: &mut impl Rng,
    identified: bool,
) -> Result<DVector<f64>> {
    let s_delta = s / 5;
    if s_delta == 0 {
        return Err(Error::InvalidConfig(format!(
            "drift support needs floor(s/5) >= 1, got s = {s}"
        )));
    }
    let mut pool: Vec<usize> = if identified { (s..p).collect() } else { (0..p).collect() };
    if s_delta > pool.len() {
        return Err(Error::InvalidConfig(format!(
            "drift support of {s_delta} does not fit in {} candidate coordinates",
            pool.len()
        )));
    }
    let support = sample_without_replacement(&mut pool, s_delta, rng);
    let sd = (h / s_delta as f64).sqrt();
    let mut delta = DVector::zeros(p);
    for &j in &support {
        let z: f64 = StandardNormal.sample(rng);
        delta[j] = sd * z;
    }
    Ok(delta)
}

/// Mean shifts for one dataset: `floor(rho * m)` indices without replacement;
/// each selected point gets `gamma ~ N(a, b)` with `a ~ U(0, 20)` and
/// `b ~ U(0, 5)` read as a variance, drawn per point unless `shared`.
pub fn gen_contamination(
    m: usize,
    rho: f64,
    rng: &mut impl Rng,
    shared: bool,
) -> Result<(DVector<f64>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!(
            "rho must lie in [0, 1], got {rho}"
        )));
    }
    let count = (rho * m as f64).floor() as usize;
    let mut pool: Vec<usize> = (0..m).collect();
    let picked = sample_without_replacement(&mut pool, count, rng);
    let mut gamma = DVector::zeros(m);
    let shared_pair = if shared {
        Some((rng.gen_range(0.0..20.0), rng.gen_range(0.0..5.0)))
    } else {
        None
    };
    for &i in &picked {
        let (a, b): (f64, f64) = shared_pair.unwrap_or_else(|| {
            (rng.gen_range(0.0..20.0), rng.gen_range(0.0..5.0))
        });
        let z: f64 = StandardNormal.sample(rng);
        gamma[i] = a + b.sqrt() * z;
    }
    Ok((gamma, picked))
}

/// Covariance matrix of the covariates. `k` is the 1-based source index for
/// the per-source Toeplitz family and ignored otherwise.
pub fn covariance_matrix(
    kind: CovarianceKind,
    p: usize,
    k: Option<usize>,
) -> Result<DMatrix<f64>> {
    let sigma = match kind {
        CovarianceKind::Identity => DMatrix::identity(p, p),
        CovarianceKind::Ar05 => {
            DMatrix::from_fn(p, p, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()))
        }
        CovarianceKind::ToeplitzPerSource => {
            let k = k.ok_or_else(|| {
                Error::InvalidConfig("Toeplitz covariance needs a source index".into())
            })?;
            if k == 0 || 2 * k > p {
                return Err(Error::InvalidConfig(format!(
                    "Toeplitz covariance needs 1 <= k and 2k <= p, got k = {k}, p = {p}"
                )));
            }
            let band = 1.0 / (k as f64 + 1.0);
            DMatrix::from_fn(p, p, |i, j| {
                let d = (i as i64 - j as i64).unsigned_abs() as usize;
                if d == 0 {
                    1.0
                } else if d <= 2 * k - 1 {
                    band
                } else {
                    0.0
                }
            })
        }
    };
    if kind != CovarianceKind::Identity {
        let min_eig = sigma
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "covariance is not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
    }
    Ok(sigma)
}

fn normal_rows(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    chol_lower: Option<&DMatrix<f64>>,
) -> DMatrix<f64> {
    // Row-major draw order keeps each observation's coordinates contiguous in
    // the stream.
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = StandardNormal.sample(rng);
        }
    }
    match chol_lower {
        None => x,
        Some(l) => x * l.transpose(),
    }
}

/// Generate a full problem instance for trial `trial` of the configuration.
pub fn gen_problem(
    cfg: &SimulationConfig,
    trial: u64,
) -> Result<(Dataset, Vec<Dataset>, GroundTruth)> {
    cfg.validate()?;
    let seed = cfg.seed;

    let b = gen_coefficient_bank(cfg.p, cfg.s, cfg.k_sources, &mut trial_stream(seed, trial, "bank"))?;
    let delta = gen_delta(
        cfg.p,
        cfg.s,
        cfg.h,
        &mut trial_stream(seed, trial, "delta"),
        cfg.identified(),
    )?;
    let w = match &cfg.w_spec {
        WeightSpec::Fixed(v) => DVector::from_vec(v.clone()),
        WeightSpec::Uniform => {
            let mut r = trial_stream(seed, trial, "w");
            DVector::from_fn(cfg.k_sources, |_, _| r.gen_range(-2.0..2.0))
        }
    };
    let beta = &b * &w + &delta;

    let target_chol = match cfg.covariance {
        CovarianceKind::Ar05 => Some(crate::linalg::cholesky_lower(&covariance_matrix(
            CovarianceKind::Ar05,
            cfg.p,
            None,
        )?)?),
        _ => None,
    };
    let x = normal_rows(
        &mut trial_stream(seed, trial, "target/x"),
        cfg.n,
        cfg.p,
        target_chol.as_ref(),
    );
    let (gamma_t, outliers_t) = gen_contamination(
        cfg.n,
        cfg.rho,
        &mut trial_stream(seed, trial, "target/gamma"),
        cfg.shared_contamination,
    )?;
    let mut noise_rng = trial_stream(seed, trial, "target/noise");
    let eps = DVector::from_fn(cfg.n, |_, _| StandardNormal.sample(&mut noise_rng));
    let y = &x * &beta + &gamma_t + eps;
    let target = Dataset::new(x, y)?;

    let mut sources = Vec::with_capacity(cfg.k_sources);
    let mut gamma_sources = Vec::with_capacity(cfg.k_sources);
    let mut outliers_sources = Vec::with_capacity(cfg.k_sources);
    for k in 0..cfg.k_sources {
        let chol = match cfg.covariance {
            CovarianceKind::Identity => None,
            CovarianceKind::Ar05 => target_chol.clone(),
            CovarianceKind::ToeplitzPerSource => Some(crate::linalg::cholesky_lower(
                &covariance_matrix(CovarianceKind::ToeplitzPerSource, cfg.p, Some(k + 1))?,
            )?),
        };
        let xk = normal_rows(
            &mut trial_stream(seed, trial, &format!("source/{k}/x")),
            cfg.n_per_source,
            cfg.p,
            chol.as_ref(),
        );
        let (gamma_k, outliers_k) = gen_contamination(
            cfg.n_per_source,
            cfg.rho,
            &mut trial_stream(seed, trial, &format!("source/{k}/gamma")),
            cfg.shared_contamination,
        )?;
        let sd = match cfg.noise {
            NoiseKind::Unit => 1.0,
            NoiseKind::PerSourceScaled => ((k as f64 + 2.0) / 10.0).sqrt(),
        };
        let mut nk = trial_stream(seed, trial, &format!("source/{k}/noise"));
        let eps_k = DVector::from_fn(cfg.n_per_source, |_, _| {
            let z: f64 = StandardNormal.sample(&mut nk);
            sd * z
        });
        let beta_k = b.column(k).into_owned();
        let yk = &xk * &beta_k + &gamma_k + eps_k;
        sources.push(Dataset::new(xk, yk)?);
        gamma_sources.push(gamma_k);
        outliers_sources.push(outliers_k);
    }

    Ok((
        target,
        sources,
        GroundTruth {
            beta,
            b,
            w,
            delta,
            gamma_target: gamma_t,
            gamma_sources,
            outliers_target: outliers_t,
            outliers_sources,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn bank_structure() {
        let mut r = rng::stream(1, "bank-test");
        let (p, s, k) = (40, 25, 5);
        let b = gen_coefficient_bank(p, s, k, &mut r).unwrap();
        let r0 = s / 3;
        let top = b.view((0, 0), (r0, k)).into_owned();
        // Singular vectors are orthonormal, so (2U)'(2U) = 4I.
        let gram = top.tr_mul(&top);
        assert!((gram - DMatrix::<f64>::identity(k, k) * 4.0).amax() < 1e-10);
        for j in 0..k.min(s - r0) {
            assert_eq!(b[(r0 + j, j)], 0.3);
        }
        for i in r0..s {
            for j in 0..k {
                if i - r0 != j {
                    assert_eq!(b[(i, j)], 0.0);
                }
            }
        }
        for i in s..p {
            for j in 0..k {
                assert_eq!(b[(i, j)], 0.0);
            }
        }
        assert!(gen_coefficient_bank(40, 10, 5, &mut r).is_err());
    }

    #[test]
    fn delta_support_and_variance() {
        let (p, s, h) = (30, 25, 6.0);
        let s_delta = s / 5;
        let mut r = rng::stream(2, "delta-test");
        let d = gen_delta(p, s, h, &mut r, true).unwrap();
        assert_eq!(d.iter().filter(|&&v| v != 0.0).count(), s_delta);
        for j in 0..s {
            assert_eq!(d[j], 0.0);
        }
        // Law of large numbers on the nonzero values.
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for _ in 0..2000 {
            let d = gen_delta(p, s, h, &mut r, true).unwrap();
            for &v in d.iter() {
                if v != 0.0 {
                    sum_sq += v * v;
                    count += 1;
                }
            }
        }
        let var = sum_sq / count as f64;
        let expect = h / s_delta as f64;
        assert!(
            (var - expect).abs() < 0.05 * expect,
            "empirical variance {var} vs {expect}"
        );
    }

    #[test]
    fn unidentified_delta_can_hit_bank_rows() {
        // With s = p the identified pool {s..p} is empty, while the
        // unidentified design samples from every coordinate.
        let mut r = rng::stream(3, "delta-unid");
        assert!(gen_delta(10, 10, 4.0, &mut r, true).is_err());
        let mut hit_bank_rows = false;
        for _ in 0..50 {
            let d = gen_delta(20, 10, 4.0, &mut r, false).unwrap();
            hit_bank_rows |= (0..10).any(|j| d[j] != 0.0);
        }
        assert!(hit_bank_rows, "unidentified support never touched the bank rows");
    }

    #[test]
    fn contamination_counts_and_mean() {
        let mut r = rng::stream(4, "contam");
        let (g, idx) = gen_contamination(50, 0.0, &mut r, false).unwrap();
        assert!(idx.is_empty());
        assert_eq!(g.amax(), 0.0);

        let (g, idx) = gen_contamination(50, 1.0, &mut r, false).unwrap();
        assert_eq!(idx.len(), 50);
        assert!(g.iter().all(|&v| v != 0.0));

        let (_, idx) = gen_contamination(50, 0.1, &mut r, false).unwrap();
        assert_eq!(idx.len(), 5);

        // E[gamma] = E[a] = 10 by the tower property.
        let mut sum = 0.0;
        let mut count = 0usize;
        for _ in 0..400 {
            let (g, idx) = gen_contamination(30, 0.5, &mut r, false).unwrap();
            for &i in &idx {
                sum += g[i];
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 10.0).abs() < 0.5, "mean of contamination {mean}");
    }

    #[test]
    fn covariance_shapes() {
        let ar = covariance_matrix(CovarianceKind::Ar05, 2, None).unwrap();
        assert_eq!(ar[(0, 0)], 1.0);
        assert_eq!(ar[(0, 1)], 0.5);
        assert_eq!(ar[(1, 0)], 0.5);

        let t = covariance_matrix(CovarianceKind::ToeplitzPerSource, 4, Some(1)).unwrap();
        assert_eq!(t.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.5, 0.0, 0.0]);

        let id = covariance_matrix(CovarianceKind::Identity, 3, None).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));

        assert!(covariance_matrix(CovarianceKind::ToeplitzPerSource, 4, Some(3)).is_err());
    }

    fn small_cfg() -> SimulationConfig {
        SimulationConfig {
            example_id: ExampleId::Ex1,
            n: 40,
            p: 10,
            k_sources: 2,
            n_per_source: 30,
            s: 8,
            rho: 0.1,
            h: 4.0,
            w_spec: WeightSpec::Fixed(vec![1.0, -0.5]),
            covariance: CovarianceKind::Identity,
            noise: NoiseKind::Unit,
            seed: 9,
            shared_contamination: false,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_cfg();
        let (t1, s1, g1) = gen_problem(&cfg, 3).unwrap();
        let (t2, s2, g2) = gen_problem(&cfg, 3).unwrap();
        assert_eq!(t1.x, t2.x);
        assert_eq!(t1.y, t2.y);
        assert_eq!(s1[1].y, s2[1].y);
        assert_eq!(g1.beta, g2.beta);
        assert_eq!(g1.outliers_target, g2.outliers_target);
        // Different trials differ.
        let (t3, _, _) = gen_problem(&cfg, 4).unwrap();
        assert_ne!(t1.y, t3.y);
    }

    #[test]
    fn truth_bookkeeping_is_exact() {
        let cfg = small_cfg();
        let (target, sources, truth) = gen_problem(&cfg, 0).unwrap();
        assert!((&truth.b * &truth.w + &truth.delta - &truth.beta).amax() == 0.0);
        assert_eq!(truth.outliers_target.len(), (cfg.rho * cfg.n as f64) as usize);
        for k in 0..cfg.k_sources {
            assert_eq!(
                truth.outliers_sources[k].len(),
                (cfg.rho * cfg.n_per_source as f64) as usize
            );
        }
        for (i, &g) in truth.gamma_target.iter().enumerate() {
            assert_eq!(truth.outliers_target.contains(&i), g != 0.0);
        }
        assert_eq!(target.n(), cfg.n);
        assert_eq!(sources.len(), cfg.k_sources);
    }

    #[test]
    fn noise_variances_match_design() {
        // Large-n variance checks for the target and an Ex3 source.
        let mut cfg = small_cfg();
        cfg.n = 10_000;
        let (target, _, truth) = gen_problem(&cfg, 1).unwrap();
        let eps = &target.y - &target.x * &truth.beta - &truth.gamma_target;
        let var = eps.norm_squared() / eps.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "target noise variance {var}");

        let cfg3 = SimulationConfig {
            example_id: ExampleId::Ex3,
            covariance: CovarianceKind::ToeplitzPerSource,
            noise: NoiseKind::PerSourceScaled,
            p: 15,
            s: 12,
            k_sources: 4,
            n_per_source: 10_000,
            w_spec: WeightSpec::Fixed(vec![1.0, -0.5, 0.25, 0.5]),
            ..small_cfg()
        };
        cfg3.validate().unwrap();
        let (_, sources, truth) = gen_problem(&cfg3, 1).unwrap();
        let k = 3; // 1-based source 4: variance (4+1)/10 = 0.5
        let eps = &sources[k].y
            - &sources[k].x * truth.b.column(k).into_owned()
            - &truth.gamma_sources[k];
        let var = eps.norm_squared() / eps.len() as f64;
        assert!((var - 0.5).abs() < 0.05, "source noise variance {var}");
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = small_cfg();
        cfg.rho = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.s = cfg.p + 1;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.covariance = CovarianceKind::Ar05;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.w_spec = WeightSpec::Fixed(vec![1.0]);
        assert!(cfg.validate().is_err());
        assert!(SimulationConfig::example_desk(ExampleId::Ex1).validate().is_ok());
        assert!(SimulationConfig::example_desk(ExampleId::Ex3).validate().is_ok());
        assert!(SimulationConfig::example_desk(ExampleId::Ex4).validate().is_ok());
    }
}
