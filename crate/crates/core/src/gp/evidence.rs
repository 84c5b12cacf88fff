//! Log marginal likelihood of class-encoded targets under the Laplacian
//! precision prior, for the binary encoding and the two multi-class
//! formulations, with analytic derivatives in `σ₀` and `σ²`.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::precision::{factorize, log_det_from_factor, PrecisionModel};
use crate::dataset::RegressionTargets;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// How class labels become regression targets for the evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// `±1` targets, two classes only.
    Binary,
    /// `J` independent outputs with one-hot targets.
    Mul1,
    /// `J − 1` difference outputs per point.
    Mul2,
}

impl Formulation {
    pub fn check_classes(self, num_classes: usize) -> Result<()> {
        match self {
            Formulation::Binary if num_classes != 2 => Err(Error::InvalidParameter(format!(
                "binary formulation needs J = 2, got J = {num_classes}"
            ))),
            Formulation::Mul1 | Formulation::Mul2 if num_classes < 2 => Err(Error::InvalidParameter(format!(
                "multi-class formulations need J >= 2, got J = {num_classes}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Binary => "binary",
            Formulation::Mul1 => "I",
            Formulation::Mul2 => "II",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "bin" => Ok(Formulation::Binary),
            "mul1" | "i" | "1" => Ok(Formulation::Mul1),
            "mul2" | "ii" | "2" => Ok(Formulation::Mul2),
            _ => Err(Error::Config(format!("unknown formulation {s:?} (binary, mul1, mul2)"))),
        }
    }
}

/// Continuous hyperparameter for derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperParam {
    Sigma0,
    Sigma2,
}

/// `½ log|C̃| − ½ yᵀC̃y − (n/2) log 2π`.
pub fn log_evidence_binary(model: &PrecisionModel, y: &[f64]) -> f64 {
    let n = model.len() as f64;
    0.5 * model.log_det() - 0.5 * model.quadratic(y) - 0.5 * n * LN_2PI
}

/// Block-diagonal prior with one copy of `C̃⁻¹` per class.
pub fn log_evidence_mul1(model: &PrecisionModel, onehot: &RegressionTargets) -> f64 {
    let n = model.len() as f64;
    let j = onehot.cols() as f64;
    let quad: f64 = onehot.columns().map(|y| model.quadratic(y)).sum();
    0.5 * j * model.log_det() - 0.5 * quad - 0.5 * j * n * LN_2PI
}

/// Covariance of the difference outputs `g_i^{y_i, j} = f_i^{y_i} − f_i^j`,
/// `j ≠ y_i`, stacked point by point with `j` ascending.
#[derive(Debug, Clone)]
pub struct DifferenceCovariance {
    labels: Vec<usize>,
    num_classes: usize,
    index: Vec<(usize, usize)>,
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `δ(yᵢ,y_k) − δ(yᵢ,l) − δ(y_k,j) + δ(j,l)`.
pub(crate) fn difference_coefficient(yi: usize, j: usize, yk: usize, l: usize) -> f64 {
    delta(yi, yk) - delta(yi, l) - delta(yk, j) + delta(j, l)
}

impl DifferenceCovariance {
    /// Row layout: `(point, off-class)` per row.
    pub fn index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// Diagonal jitter added when the plain factorization failed (0 otherwise).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn coefficient(&self, a: usize, b: usize) -> (usize, usize, f64) {
        let (i, j) = self.index[a];
        let (k, l) = self.index[b];
        (i, k, difference_coefficient(self.labels[i], j, self.labels[k], l))
    }

    /// `A*(Z)`: the `n × n` matrix `H` with `⟨A(X), Z⟩ = ⟨X, H⟩` for the
    /// linear map `A` taking a latent covariance to this layout.
    fn adjoint(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.labels.len();
        let mut h = DMatrix::zeros(n, n);
        let m = self.dim();
        for b in 0..m {
            for a in 0..m {
                let (i, k, c) = self.coefficient(a, b);
                if c != 0.0 {
                    h[(i, k)] += c * z[(a, b)];
                }
            }
        }
        h
    }
}

/// Expands the latent covariance `C̃⁻¹` into the difference-output covariance.
pub fn build_cmul(model: &PrecisionModel, labels: &[usize], num_classes: usize) -> Result<DifferenceCovariance> {
    Formulation::Mul2.check_classes(num_classes)?;
    if labels.len() != model.len() {
        return Err(Error::InvalidParameter(format!("{} labels for {} points", labels.len(), model.len())));
    }
    if let Some(&c) = labels.iter().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidParameter(format!("label {c} outside 0..{num_classes}")));
    }
    let cov = model.covariance();
    let index: Vec<(usize, usize)> = labels
        .iter()
        .enumerate()
        .flat_map(|(i, &y)| (0..num_classes).filter(move |&j| j != y).map(move |j| (i, j)))
        .collect();
    let m = index.len();
    let matrix = DMatrix::from_fn(m, m, |a, b| {
        let (i, j) = index[a];
        let (k, l) = index[b];
        difference_coefficient(labels[i], j, labels[k], l) * cov[(i, k)]
    });
    let (chol, jitter) = match factorize(matrix.clone()) {
        Some(c) => (c, 0.0),
        None => {
            let jitter = 1e-10 * matrix.trace() / m as f64;
            warn!("difference covariance not positive definite; adding {jitter:e} to the diagonal");
            let mut jittered = matrix.clone();
            for a in 0..m {
                jittered[(a, a)] += jitter;
            }
            let chol = factorize(jittered).ok_or_else(|| {
                Error::NotPositiveDefinite(format!("difference covariance ({m} x {m}) even after jitter {jitter:e}"))
            })?;
            (chol, jitter)
        }
    };
    Ok(DifferenceCovariance { labels: labels.to_vec(), num_classes, index, matrix, chol, jitter })
}

/// `−½ log|2π C^MUL| − ½ 𝟙ᵀ (C^MUL)⁻¹ 𝟙`.
pub fn log_evidence_mul2(cmul: &DifferenceCovariance) -> f64 {
    let m = cmul.dim();
    let ones = DVector::from_element(m, 1.0);
    let alpha = cmul.chol.solve(&ones);
    -0.5 * log_det_from_factor(&cmul.chol) - 0.5 * m as f64 * LN_2PI - 0.5 * ones.dot(&alpha)
}

/// Log evidence of `labels` under `formulation`.
pub fn log_evidence(
    model: &PrecisionModel,
    labels: &[usize],
    num_classes: usize,
    formulation: Formulation,
) -> Result<f64> {
    formulation.check_classes(num_classes)?;
    match formulation {
        Formulation::Binary => Ok(log_evidence_binary(model, &binary_targets(labels))),
        Formulation::Mul1 => Ok(log_evidence_mul1(model, &onehot_targets(labels, num_classes))),
        Formulation::Mul2 => Ok(log_evidence_mul2(&build_cmul(model, labels, num_classes)?)),
    }
}

pub(crate) fn binary_targets(labels: &[usize]) -> Vec<f64> {
    labels.iter().map(|&c| if c == 0 { -1.0 } else { 1.0 }).collect()
}

pub(crate) fn onehot_targets(labels: &[usize], num_classes: usize) -> RegressionTargets {
    RegressionTargets::from_columns(
        (0..num_classes).map(|l| labels.iter().map(|&c| if c == l { 1.0 } else { 0.0 }).collect()).collect(),
    )
    .expect("columns share length")
}

fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn quadratic_form(m: &DMatrix<f64>, y: &[f64]) -> f64 {
    let v = DVector::from_column_slice(y);
    v.dot(&(m * &v))
}

/// `(L, [∂L/∂σ₀, ∂L/∂σ²])`.
pub(crate) fn evidence_with_gradient(
    model: &PrecisionModel,
    labels: &[usize],
    num_classes: usize,
    formulation: Formulation,
) -> Result<(f64, [f64; 2])> {
    formulation.check_classes(num_classes)?;
    // ∂C̃/∂σ₀ = L/σ₀, ∂C̃/∂σ² = I
    let unit_lap = model.graph().unit_laplacian();
    let cov = model.covariance();
    match formulation {
        Formulation::Binary | Formulation::Mul1 => {
            let targets = match formulation {
                Formulation::Binary => RegressionTargets::from_column(binary_targets(labels)),
                _ => onehot_targets(labels, num_classes),
            };
            let copies = targets.cols() as f64;
            let value = if formulation == Formulation::Binary {
                log_evidence_binary(model, targets.column(0))
            } else {
                log_evidence_mul1(model, &targets)
            };
            let q_lap: f64 = targets.columns().map(|y| quadratic_form(&unit_lap, y)).sum();
            let q_id: f64 = targets.columns().map(|y| y.iter().map(|v| v * v).sum::<f64>()).sum();
            let d_sigma0 = 0.5 * copies * frobenius(&cov, &unit_lap) - 0.5 * q_lap;
            let d_sigma2 = 0.5 * copies * cov.trace() - 0.5 * q_id;
            Ok((value, [d_sigma0, d_sigma2]))
        }
        Formulation::Mul2 => {
            let cmul = build_cmul(model, labels, num_classes)?;
            let m = cmul.dim();
            let ones = DVector::from_element(m, 1.0);
            let alpha = cmul.chol.solve(&ones);
            let value = -0.5 * log_det_from_factor(&cmul.chol) - 0.5 * m as f64 * LN_2PI - 0.5 * ones.dot(&alpha);
            // dL = ⟨dM, ½ααᵀ − ½M⁻¹⟩ and dM = A(−C dC̃ C)
            let z = (&alpha * alpha.transpose() - cmul.chol.inverse()) * 0.5;
            let h = cmul.adjoint(&z);
            let k = &cov * h * &cov;
            let d_sigma0 = -frobenius(&unit_lap, &k);
            let d_sigma2 = -k.trace();
            Ok((value, [d_sigma0, d_sigma2]))
        }
    }
}

/// `∂L/∂θ` for `θ ∈ {σ₀, σ²}`.
pub fn evidence_gradient(
    model: &PrecisionModel,
    labels: &[usize],
    num_classes: usize,
    formulation: Formulation,
    param: HyperParam,
) -> Result<f64> {
    let (_, g) = evidence_with_gradient(model, labels, num_classes, formulation)?;
    Ok(match param {
        HyperParam::Sigma0 => g[0],
        HyperParam::Sigma2 => g[1],
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::gp::build_precision;
    use crate::neighbors::{Variant, WeightedGraph};

    fn edgeless(n: usize, sigma2: f64) -> PrecisionModel {
        build_precision(&WeightedGraph::edgeless(n, 1.0, Variant::Mutual).unwrap(), sigma2).unwrap()
    }

    #[test]
    fn single_point_binary() {
        let m = edgeless(1, 1.0);
        assert!((log_evidence_binary(&m, &[0.0]) + 0.5 * (2.0 * PI).ln()).abs() < 1e-14);
        assert!((log_evidence_binary(&m, &[0.0]) - -0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn zero_targets_leave_log_det_term() {
        let m = edgeless(3, 2.0);
        let expected = 0.5 * m.log_det() - 1.5 * LN_2PI;
        assert!((log_evidence_binary(&m, &[0.0; 3]) - expected).abs() < 1e-14);
    }

    #[test]
    fn mul1_single_class_equals_binary() {
        let m = edgeless(2, 0.5);
        let y = RegressionTargets::from_column(vec![1.0, 1.0]);
        assert_eq!(log_evidence_mul1(&m, &y), log_evidence_binary(&m, y.column(0)));
    }

    #[test]
    fn cmul_single_point_two_classes() {
        let m = edgeless(1, 0.25);
        let c = build_cmul(&m, &[0], 2).unwrap();
        assert_eq!(c.dim(), 1);
        assert!((c.matrix()[(0, 0)] - 8.0).abs() < 1e-12);
        let expected = -0.5 * (2.0 * PI * 8.0).ln() - 0.5 / 8.0;
        assert!((log_evidence_mul2(&c) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_targets_gradient_is_trace_term() {
        // all labels in class 0 with binary targets are -1, so compare the
        // plain formula directly instead
        let m = edgeless(2, 0.5);
        let (_, g) = evidence_with_gradient(&m, &[0, 1], 2, Formulation::Binary).unwrap();
        let cov = m.covariance();
        assert!((g[1] - (0.5 * cov.trace() - 0.5 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn formulation_class_checks() {
        let m = edgeless(3, 1.0);
        assert!(log_evidence(&m, &[0, 1, 2], 3, Formulation::Binary).is_err());
        assert!(log_evidence(&m, &[0, 0, 0], 1, Formulation::Mul2).is_err());
        assert!(log_evidence(&m, &[0, 1, 2], 3, Formulation::Mul1).is_ok());
        assert_eq!("ii".parse::<Formulation>().unwrap(), Formulation::Mul2);
    }
}
