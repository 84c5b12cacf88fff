use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::neighbors::WeightedGraph;

/// `C̃ = L + σ²I` with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct PrecisionModel {
    graph: WeightedGraph,
    sigma2: f64,
    precision: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl PrecisionModel {
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn sigma0(&self) -> f64 {
        self.graph.sigma0()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn len(&self) -> usize {
        self.precision.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `C̃`.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Lower-triangular factor of `C̃`.
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `log |C̃|` from the factor diagonal.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `C = C̃⁻¹`, the prior covariance of the latent values.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `yᵀ C̃ y`.
    pub fn quadratic(&self, y: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for j in 0..n {
            let col = self.precision.column(j);
            let cy: f64 = col.iter().zip(y).map(|(c, v)| c * v).sum();
            acc += y[j] * cy;
        }
        acc
    }
}

/// Factorizes `L + σ²I` for a weighted graph.
pub fn build_precision(graph: &WeightedGraph, sigma2: f64) -> Result<PrecisionModel> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    let mut precision = graph.laplacian();
    for i in 0..precision.nrows() {
        precision[(i, i)] += sigma2;
    }
    let chol = factorize(precision.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite(format!(
            "L + {sigma2:e} I (n = {}, k = {}, sigma0 = {:e})",
            precision.nrows(),
            graph.k(),
            graph.sigma0()
        ))
    })?;
    let log_det = log_det_from_factor(&chol);
    if !log_det.is_finite() {
        return Err(Error::Numerical(format!("log-determinant is {log_det}")));
    }
    Ok(PrecisionModel { graph: graph.clone(), sigma2, precision, chol, log_det })
}

/// Cholesky factorization that rejects zero, negative and non-finite pivots.
pub(crate) fn factorize(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(m)?;
    chol.l_dirty().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()).then_some(chol)
}

pub(crate) fn log_det_from_factor(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Outcome of a symmetry and positive-definiteness check.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdReport {
    pub symmetric: bool,
    pub positive_definite: bool,
    /// Smallest Cholesky pivot (square of the smallest factor diagonal);
    /// `None` when factorization fails.
    pub min_pivot: Option<f64>,
}

impl SpdReport {
    pub fn passed(&self) -> bool {
        self.symmetric && self.positive_definite
    }
}

/// Checks exact symmetry and attempts a Cholesky factorization.
pub fn check_spd(m: &DMatrix<f64>) -> SpdReport {
    let symmetric = m.nrows() == m.ncols() && m == &m.transpose();
    let chol = if symmetric { factorize(m.clone()) } else { None };
    let min_pivot = chol.as_ref().map(|c| c.l_dirty().diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min));
    SpdReport { symmetric, positive_definite: chol.is_some(), min_pivot }
}
