//! Internal dense linear-algebra helpers.
//!
//! Least-squares solves, projections and leverage values all go through one
//! rank-revealing SVD factor rather than explicit normal-equation inverses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for rank decisions.
pub(crate) const RANK_RTOL: f64 = 1e-10;

/// Thin SVD of a design matrix, kept around for repeated solves/projections.
#[derive(Debug, Clone)]
pub(crate) struct LstsqFactor {
    /// Orthonormal basis of col(X), n x r (numerical rank columns only).
    u: DMatrix<f64>,
    /// Right singular vectors, p x r.
    v: DMatrix<f64>,
    /// Singular values, descending, length r.
    sigma: Vec<f64>,
    cols: usize,
    rank: usize,
}

impl LstsqFactor {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "design matrix must be non-empty".into(),
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(
                "design matrix contains non-finite entries".into(),
            ));
        }
        let svd = x.clone().svd(true, true);
        let u_full = svd
            .u
            .ok_or_else(|| Error::NumericalFailure("SVD did not produce U".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::NumericalFailure("SVD did not produce V^T".into()))?;
        let sv = svd.singular_values;
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_RTOL * smax).count();
        Ok(Self {
            u: u_full.columns(0, rank).into_owned(),
            v: v_t.rows(0, rank).transpose(),
            sigma: sv.iter().take(rank).copied().collect(),
            cols: x.ncols(),
            rank,
        })
    }

    /// Errors with the numerical rank if X does not have full column rank.
    pub fn require_full_rank(&self) -> Result<()> {
        if self.rank < self.cols {
            Err(Error::SingularDesign {
                rank: self.rank,
                cols: self.cols,
            })
        } else {
            Ok(())
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Minimum-norm least-squares solution of `X b = y`.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut t = self.u.tr_mul(y);
        for (ti, s) in t.iter_mut().zip(&self.sigma) {
            *ti /= s;
        }
        &self.v * t
    }

    /// Projection of `y` onto col(X): `H y` without materializing H.
    pub fn project(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.u * self.u.tr_mul(y)
    }

    /// Residual `(I - H) y`.
    pub fn residual(&self, y: &DVector<f64>) -> DVector<f64> {
        y - self.project(y)
    }

    /// Diagonal of the hat matrix (leverage values), each in [0, 1].
    pub fn leverage(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.u.nrows(),
            self.u.row_iter().map(|r| r.iter().map(|v| v * v).sum()),
        )
    }

    /// Explicit hat matrix `H = U U^T`.
    pub fn hat(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }

}

/// Symmetric eigendecomposition with eigenpairs sorted by descending eigenvalue.
pub(crate) fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::NumericalFailure("matrix is not positive definite".into()))
}
