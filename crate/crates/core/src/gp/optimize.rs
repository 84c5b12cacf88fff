//! Evidence maximization over `k` and the continuous hyperparameters.
//!
//! For each `k` the continuous pair `(σ₀, σ²)` is either held fixed or moved
//! by gradient ascent in `(ln σ₀, ln σ²)` with a deterministic step-halving
//! line search; the `k` with the largest evidence wins, ties to the smallest.

use rayon::prelude::*;

use super::evidence::{binary_targets, evidence_with_gradient, onehot_targets, Formulation};
use super::precision::build_precision;
use super::Hyperparams;
use crate::dataset::RegressionTargets;
use crate::error::{Error, Result};
use crate::neighbors::{build_weighted_graph, NeighborIndex, Variant, WeightedGraph};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Treatment of `(σ₀, σ²)` for each candidate `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousMode {
    /// Start at the initial values and maximize the evidence.
    Optimize,
    /// Evaluate at the initial values only.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the evidence by less than this,
    /// relative to `max(1, |L|)`.
    pub relative_tolerance: f64,
    /// Stop once the step length in log space falls below this.
    pub min_step: f64,
    pub max_step: f64,
    /// `|ln σ₀|` and `|ln σ²|` are kept within this bound.
    pub log_bound: f64,
    /// Use the eigenvalue form of the evidence (see [`SpectralEvidence`])
    /// instead of refactorizing at every step.
    pub spectral: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-8,
            min_step: 1e-12,
            max_step: 4.0,
            log_bound: 40.0,
            spectral: true,
        }
    }
}

/// Result for one `k`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvidencePoint {
    pub k: usize,
    pub sigma0: f64,
    pub sigma2: f64,
    /// `-inf` when the evidence could not be evaluated.
    pub log_evidence: f64,
    pub iterations: usize,
    pub failure: Option<String>,
}

/// Best hyperparameters over a `k` grid with the full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: Hyperparams,
    pub log_evidence: f64,
    pub trace: Vec<EvidencePoint>,
}

/// Log evidence of class labels as a function of `(σ₀, σ²)` for a fixed
/// edge structure, in the form
///
/// `L = (c/2) Σ ln(σ₀λ + σ²) − ½σ₀·q_L − ½σ²·q_I − const`
///
/// with `λ` the eigenvalues of the unit Laplacian `L₁ = L/σ₀`. Each
/// evaluation is `O(n)` after one eigendecomposition.
///
/// For the binary and formulation-I targets this is the plain expansion of
/// `log|C̃|` and `Σ yᵀC̃y` (`c = 1` or `J`, `q_I = n`). For formulation II,
/// completing the differences `f^{yᵢ} − f^j` with `f^{yᵢ}` itself is a
/// unit-determinant change of variables, and `C̃𝟙 = σ²𝟙` then gives
/// `log|C^MUL| = −(J−1) log|C̃| + n ln J` and
/// `𝟙ᵀ(C^MUL)⁻¹𝟙 = σ₀ Σₗ YₗᵀL₁Yₗ + σ² n(J−1)/J` for one-hot `Y`.
#[derive(Debug, Clone)]
pub struct SpectralEvidence {
    eigenvalues: Vec<f64>,
    copies: f64,
    quad_laplacian: f64,
    quad_identity: f64,
    constant: f64,
}

impl SpectralEvidence {
    pub fn new(graph: &WeightedGraph, labels: &[usize], num_classes: usize, formulation: Formulation) -> Result<Self> {
        formulation.check_classes(num_classes)?;
        let n = graph.len();
        if labels.len() != n {
            return Err(Error::InvalidParameter(format!("{} labels for {n} points", labels.len())));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidParameter(format!("label {c} outside 0..{num_classes}")));
        }
        let lap = graph.unit_laplacian();
        // L₁ is PSD; clamp round-off below zero
        let eigenvalues = lap.clone().symmetric_eigenvalues().iter().map(|&l| l.max(0.0)).collect();
        let targets = match formulation {
            Formulation::Binary => RegressionTargets::from_column(binary_targets(labels)),
            _ => onehot_targets(labels, num_classes),
        };
        let quad = |y: &[f64]| -> f64 { (0..n).map(|i| y[i] * (0..n).map(|j| lap[(i, j)] * y[j]).sum::<f64>()).sum() };
        let quad_laplacian = targets.columns().map(quad).sum();
        let (nf, j) = (n as f64, num_classes as f64);
        let (copies, quad_identity, constant) = match formulation {
            Formulation::Binary => (1.0, nf, 0.5 * nf * LN_2PI),
            Formulation::Mul1 => (j, nf, 0.5 * j * nf * LN_2PI),
            Formulation::Mul2 => (j - 1.0, nf * (j - 1.0) / j, 0.5 * nf * j.ln() + 0.5 * (j - 1.0) * nf * LN_2PI),
        };
        Ok(Self { eigenvalues, copies, quad_laplacian, quad_identity, constant })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn log_evidence(&self, sigma0: f64, sigma2: f64) -> f64 {
        self.value_and_gradient(sigma0, sigma2).0
    }

    /// `(L, [∂L/∂σ₀, ∂L/∂σ²])`.
    pub fn value_and_gradient(&self, sigma0: f64, sigma2: f64) -> (f64, [f64; 2]) {
        let (mut log_det, mut d0, mut d2) = (0.0, 0.0, 0.0);
        for &l in &self.eigenvalues {
            let e = sigma0 * l + sigma2;
            log_det += e.ln();
            d0 += l / e;
            d2 += 1.0 / e;
        }
        let c = self.copies;
        let value =
            0.5 * c * log_det - 0.5 * sigma0 * self.quad_laplacian - 0.5 * sigma2 * self.quad_identity - self.constant;
        (value, [0.5 * c * d0 - 0.5 * self.quad_laplacian, 0.5 * c * d2 - 0.5 * self.quad_identity])
    }
}

/// Evidence and gradient at `(σ₀, σ²)` for one fixed edge structure.
enum Objective<'a> {
    Spectral(SpectralEvidence),
    Dense { graph: WeightedGraph, labels: &'a [usize], num_classes: usize, formulation: Formulation },
}

impl Objective<'_> {
    fn eval(&self, sigma0: f64, sigma2: f64) -> Result<(f64, [f64; 2])> {
        let (v, g) = match self {
            Objective::Spectral(s) => s.value_and_gradient(sigma0, sigma2),
            Objective::Dense { graph, labels, num_classes, formulation } => {
                let model = build_precision(&graph.rescaled(sigma0)?, sigma2)?;
                evidence_with_gradient(&model, labels, *num_classes, *formulation)?
            }
        };
        if v.is_finite() && g.iter().all(|x| x.is_finite()) {
            Ok((v, g))
        } else {
            Err(Error::Numerical(format!("non-finite evidence at sigma0 = {sigma0:e}, sigma2 = {sigma2:e}")))
        }
    }
}

fn ascend(objective: &Objective<'_>, init: [f64; 2], settings: &OptimizerSettings) -> Result<([f64; 2], f64, usize)> {
    let bound = settings.log_bound;
    let mut x = [init[0].ln().clamp(-bound, bound), init[1].ln().clamp(-bound, bound)];
    let (mut value, mut grad) = objective.eval(x[0].exp(), x[1].exp())?;
    let mut step = 1.0f64;
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        // chain rule into log space, projected onto the box
        let mut dir = [grad[0] * x[0].exp(), grad[1] * x[1].exp()];
        for a in 0..2 {
            if (x[a] >= bound && dir[a] > 0.0) || (x[a] <= -bound && dir[a] < 0.0) {
                dir[a] = 0.0;
            }
        }
        let norm = dir[0].hypot(dir[1]);
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let mut accepted = false;
        while step >= settings.min_step {
            let cand = [
                (x[0] + step * dir[0] / norm).clamp(-bound, bound),
                (x[1] + step * dir[1] / norm).clamp(-bound, bound),
            ];
            match objective.eval(cand[0].exp(), cand[1].exp()) {
                Ok((v, g)) if v > value => {
                    let gain = v - value;
                    x = cand;
                    value = v;
                    grad = g;
                    accepted = true;
                    step = (2.0 * step).min(settings.max_step);
                    if gain < settings.relative_tolerance * value.abs().max(1.0) {
                        return Ok(([x[0].exp(), x[1].exp()], value, iterations));
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(([x[0].exp(), x[1].exp()], value, iterations))
}

fn evaluate_k(
    index: &NeighborIndex,
    variant: Variant,
    formulation: Formulation,
    k: usize,
    init: [f64; 2],
    mode: ContinuousMode,
    settings: &OptimizerSettings,
) -> EvidencePoint {
    let data = index.data();
    let run = || -> Result<([f64; 2], f64, usize)> {
        let graph = build_weighted_graph(index, k, 1.0, variant)?;
        let objective = if settings.spectral {
            Objective::Spectral(SpectralEvidence::new(&graph, data.labels(), data.num_classes(), formulation)?)
        } else {
            Objective::Dense { graph, labels: data.labels(), num_classes: data.num_classes(), formulation }
        };
        match mode {
            ContinuousMode::Fixed => Ok((init, objective.eval(init[0], init[1])?.0, 0)),
            ContinuousMode::Optimize => ascend(&objective, init, settings),
        }
    };
    match run() {
        Ok((theta, log_evidence, iterations)) => {
            EvidencePoint { k, sigma0: theta[0], sigma2: theta[1], log_evidence, iterations, failure: None }
        }
        Err(e) => EvidencePoint {
            k,
            sigma0: init[0],
            sigma2: init[1],
            log_evidence: f64::NEG_INFINITY,
            iterations: 0,
            failure: Some(e.to_string()),
        },
    }
}

/// Maximizes the log evidence of the dataset's labels over `k_grid`.
///
/// `init` is `(σ₀, σ²)`. Each `k` is handled independently (in parallel);
/// the trace keeps the grid order.
pub fn optimize_hyperparams(
    index: &NeighborIndex,
    variant: Variant,
    formulation: Formulation,
    k_grid: &[usize],
    init: (f64, f64),
    mode: ContinuousMode,
    settings: &OptimizerSettings,
) -> Result<Selection> {
    let data = index.data();
    formulation.check_classes(data.num_classes())?;
    Hyperparams::new(1, init.0, init.1)?;
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k == 0 || k > index.max_k()) {
        return Err(Error::KOutOfRange { k, max: index.max_k() });
    }
    let trace: Vec<EvidencePoint> = k_grid
        .par_iter()
        .map(|&k| evaluate_k(index, variant, formulation, k, [init.0, init.1], mode, settings))
        .collect();
    let mut best: Option<&EvidencePoint> = None;
    for p in trace.iter().filter(|p| p.failure.is_none()) {
        let better = match best {
            None => true,
            Some(b) => p.log_evidence > b.log_evidence || (p.log_evidence == b.log_evidence && p.k < b.k),
        };
        if better {
            best = Some(p);
        }
    }
    let best = best.ok_or_else(|| {
        let first = trace.iter().find_map(|p| p.failure.clone()).unwrap_or_default();
        Error::Numerical(format!("evidence failed for every k in the grid: {first}"))
    })?;
    Ok(Selection {
        best: Hyperparams { k: best.k, sigma0: best.sigma0, sigma2: best.sigma2 },
        log_evidence: best.log_evidence,
        trace,
    })
}
