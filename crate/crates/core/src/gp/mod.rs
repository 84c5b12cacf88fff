//! Gaussian processes whose precision matrix is a graph Laplacian plus a
//! ridge, `C̃ = L + σ²I`.
//!
//! With k-NN edge weights the predictive mean at a query reduces to a
//! shrunken weighted average of the neighbors' targets, and the marginal
//! likelihood of the training targets gives a criterion for choosing `k`.

mod evidence;
mod optimize;
mod precision;

pub use evidence::{
    build_cmul, evidence_gradient, log_evidence, log_evidence_binary, log_evidence_mul1, log_evidence_mul2,
    DifferenceCovariance, Formulation, HyperParam,
};
pub use optimize::{
    optimize_hyperparams, ContinuousMode, EvidencePoint, OptimizerSettings, Selection, SpectralEvidence,
};
pub use precision::{build_precision, check_spd, PrecisionModel, SpdReport};

use crate::dataset::RegressionTargets;
use crate::error::{Error, Result};
use crate::neighbors::{QueryProfile, Variant};

/// `Θ = {k, σ₀, σ²}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyperparams {
    pub k: usize,
    pub sigma0: f64,
    pub sigma2: f64,
}

impl Hyperparams {
    pub fn new(k: usize, sigma0: f64, sigma2: f64) -> Result<Self> {
        let hp = Self { k, sigma0, sigma2 };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        Ok(())
    }
}

/// Posterior of the latent function at one query.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesPrediction {
    /// One mean per target column.
    pub means: Vec<f64>,
    pub variance: f64,
    /// `Σᵢ w(q, xᵢ)`.
    pub weight_mass: f64,
}

impl BayesPrediction {
    pub fn mean(&self) -> f64 {
        self.means[0]
    }
}

/// Predictive mean and variance at a profiled query.
///
/// `mean_l = Σ w(q,xᵢ) yᵢₗ / (Σ w(q,xᵢ) + σ²)`, `variance = 1 / (Σ w(q,xᵢ) + σ²)`.
pub fn bayes_predict(
    profile: &QueryProfile,
    targets: &RegressionTargets,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<BayesPrediction> {
    hp.validate()?;
    if hp.k > profile.max_k() {
        return Err(Error::KOutOfRange { k: hp.k, max: profile.max_k() });
    }
    let active = profile.active(hp.k, variant);
    let multiplicity: u32 = active.iter().map(|a| a.1).sum();
    let weight_mass = hp.sigma0 * f64::from(multiplicity);
    let denom = weight_mass + hp.sigma2;
    let means = targets
        .columns()
        .map(|y| {
            let s: f64 = active.iter().map(|&(i, m)| f64::from(m) * y[i]).sum();
            hp.sigma0 * s / denom
        })
        .collect();
    Ok(BayesPrediction { means, variance: 1.0 / denom, weight_mass })
}

/// Bayesian mutual / symmetric k-NN regression at a single query point.
pub fn bayes_regress(
    q: &[f64],
    index: &crate::neighbors::NeighborIndex,
    targets: &RegressionTargets,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<BayesPrediction> {
    if targets.rows() != index.len() {
        return Err(Error::InvalidParameter(format!(
            "{} targets for {} points",
            targets.rows(),
            index.len()
        )));
    }
    bayes_predict(&index.profile(q, None), targets, hp, variant)
}
