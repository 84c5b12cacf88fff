//! Classifiers built on the Bayesian M/S-kNN regression means, the classic
//! rules with evidence-selected `k`, and fitting/batch prediction for every
//! method in one place.
//!
//! All Bayesian decisions compare per-class sums of edge multiplicities:
//! the predictive mean of class `l` is `σ₀·c_l / (σ₀·Σc + σ²)`, which is
//! strictly increasing in the integer count `c_l`, so argmax ties are exact.

use rayon::prelude::*;

use crate::classic::{ClassicRule, Decision};
use crate::error::{Error, Result};
use crate::eval::select_k_loocv;
use crate::gp::{optimize_hyperparams, ContinuousMode, Formulation, Hyperparams, OptimizerSettings, Selection};
use crate::neighbors::{NeighborIndex, QueryProfile, Variant};

/// Method families of the experiment tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Knn,
    Mknn,
    Sknn,
    Bmknn,
    Bsknn,
    /// Mutual k-NN vote with `k` from the Bayesian mutual evidence.
    MknnBk,
    /// Symmetric k-NN vote with `k` from the Bayesian symmetric evidence.
    SknnBk,
}

impl Method {
    pub fn is_bayes(self) -> bool {
        matches!(self, Method::Bmknn | Method::Bsknn)
    }

    /// Whether `k` comes from the evidence.
    pub fn uses_evidence(self) -> bool {
        matches!(self, Method::Bmknn | Method::Bsknn | Method::MknnBk | Method::SknnBk)
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::Knn => None,
            Method::Mknn | Method::Bmknn | Method::MknnBk => Some(Variant::Mutual),
            Method::Sknn | Method::Bsknn | Method::SknnBk => Some(Variant::Symmetric),
        }
    }

    pub fn classic_rule(self) -> Option<ClassicRule> {
        match self {
            Method::Knn => Some(ClassicRule::Knn),
            Method::Mknn | Method::MknnBk => Some(ClassicRule::Mknn),
            Method::Sknn | Method::SknnBk => Some(ClassicRule::Sknn),
            Method::Bmknn | Method::Bsknn => None,
        }
    }

    /// Row label in the tables, e.g. `BMkNN-II` or `SkNN (B-I k)`.
    pub fn label(self, formulation: Option<Formulation>) -> String {
        let suffix = |f: Option<Formulation>| match f {
            Some(Formulation::Binary) | None => String::new(),
            Some(f) => format!("-{}", f.name()),
        };
        match self {
            Method::Knn => "kNN".into(),
            Method::Mknn => "MkNN".into(),
            Method::Sknn => "SkNN".into(),
            Method::Bmknn => format!("BMkNN{}", suffix(formulation)),
            Method::Bsknn => format!("BSkNN{}", suffix(formulation)),
            Method::MknnBk => format!("MkNN (B{} k)", suffix(formulation)),
            Method::SknnBk => format!("SkNN (B{} k)", suffix(formulation)),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "knn" => Ok(Method::Knn),
            "mknn" => Ok(Method::Mknn),
            "sknn" => Ok(Method::Sknn),
            "bmknn" => Ok(Method::Bmknn),
            "bsknn" => Ok(Method::Bsknn),
            "mknnbk" => Ok(Method::MknnBk),
            "sknnbk" => Ok(Method::SknnBk),
            _ => Err(Error::Config(format!(
                "unknown method {s:?} (knn, mknn, sknn, bmknn, bsknn, mknn_bk, sknn_bk)"
            ))),
        }
    }
}

/// A method with everything needed to fit it on a training set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassifierSpec {
    pub method: Method,
    /// Required for the evidence-based methods.
    pub formulation: Option<Formulation>,
    /// Fixed `k`; `None` selects it (LOOCV for classic rules, evidence
    /// otherwise).
    pub k: Option<usize>,
    /// Upper end of the `k` search grid.
    pub k_max: usize,
    /// Initial (or fixed) `σ₀`.
    pub sigma0: f64,
    /// Initial (or fixed) `σ²`.
    pub sigma2: f64,
    pub mode: ContinuousMode,
}

impl ClassifierSpec {
    pub fn classic(method: Method) -> Self {
        Self { method, formulation: None, k: None, k_max: 100, sigma0: 1.0, sigma2: 1.0, mode: ContinuousMode::Fixed }
    }

    pub fn bayes(method: Method, formulation: Formulation, sigma0: f64, sigma2: f64, mode: ContinuousMode) -> Self {
        Self { method, formulation: Some(formulation), k: None, k_max: 100, sigma0, sigma2, mode }
    }

    pub fn label(&self) -> String {
        self.method.label(self.formulation)
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.k_max == 0 || self.k == Some(0) {
            return Err(Error::Config(format!("{}: k and k_max must be at least 1", self.label())));
        }
        if self.method.uses_evidence() {
            let f = self
                .formulation
                .ok_or_else(|| Error::Config(format!("{}: an evidence-based method needs a formulation", self.label())))?;
            f.check_classes(num_classes)?;
            Hyperparams::new(1, self.sigma0, self.sigma2)?;
        }
        Ok(())
    }

    /// Identifies the evidence selection this spec needs, so specs sharing
    /// it can reuse one optimization run.
    pub(crate) fn selection_key(&self) -> Option<String> {
        self.method.uses_evidence().then(|| {
            format!(
                "{:?}/{:?}/{:?}/{}/{:e}/{:e}/{:?}",
                self.method.variant(),
                self.formulation,
                self.k,
                self.k_max,
                self.sigma0,
                self.sigma2,
                self.mode
            )
        })
    }
}

/// A spec fitted to one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedClassifier {
    pub spec: ClassifierSpec,
    /// `k` plus `(σ₀, σ²)`; the continuous part is the spec's for the classic
    /// rules, which do not use it.
    pub hyper: Hyperparams,
    /// Evidence trace of the selection, when one was run.
    pub selection: Option<Selection>,
    /// LOOCV error curve `(k, error)`, when one was run.
    pub loocv: Option<Vec<(usize, f64)>>,
}

/// Evidence-selected hyperparameters for a spec.
pub fn select_evidence(index: &NeighborIndex, spec: &ClassifierSpec, settings: &OptimizerSettings) -> Result<Selection> {
    let variant = spec.method.variant().expect("evidence methods have a variant");
    let formulation = spec.formulation.ok_or_else(|| Error::Config("missing formulation".into()))?;
    let grid: Vec<usize> = match spec.k {
        Some(k) => vec![k],
        None => (1..=spec.k_max.min(index.max_k())).collect(),
    };
    optimize_hyperparams(index, variant, formulation, &grid, (spec.sigma0, spec.sigma2), spec.mode, settings)
}

/// Fits `spec` on the indexed training set; `selection` may carry a
/// precomputed evidence selection for the same key.
pub fn fit(
    index: &NeighborIndex,
    spec: &ClassifierSpec,
    settings: &OptimizerSettings,
    selection: Option<Selection>,
) -> Result<FittedClassifier> {
    spec.validate(index.data().num_classes())?;
    if spec.method.uses_evidence() {
        let selection = match selection {
            Some(s) => s,
            None => select_evidence(index, spec, settings)?,
        };
        return Ok(FittedClassifier { spec: spec.clone(), hyper: selection.best, selection: Some(selection), loocv: None });
    }
    let rule = spec.method.classic_rule().expect("classic method");
    let (k, loocv) = match spec.k {
        Some(k) => (k, None),
        None => {
            let grid: Vec<usize> = (1..=spec.k_max.min(index.len().saturating_sub(2))).collect();
            let (k, curve) = select_k_loocv(index, rule, &grid)?;
            (k, Some(curve))
        }
    };
    Ok(FittedClassifier {
        spec: spec.clone(),
        hyper: Hyperparams { k, sigma0: spec.sigma0, sigma2: spec.sigma2 },
        selection: None,
        loocv,
    })
}

/// Bayesian decision at one query.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesDecision {
    pub class: usize,
    /// Predictive means: one per class for the multi-class formulations,
    /// the single `±1`-target mean for the binary one.
    pub means: Vec<f64>,
    pub variance: f64,
    pub weight_mass: f64,
    /// Several classes share the top mean.
    pub tie: bool,
}

fn class_multiplicities(profile: &QueryProfile, labels: &[usize], num_classes: usize, k: usize, variant: Variant) -> Vec<u32> {
    let mut counts = vec![0u32; num_classes];
    for (i, m) in profile.active(k, variant) {
        counts[labels[i]] += m;
    }
    counts
}

fn check_query(profile: &QueryProfile, labels: &[usize], hp: &Hyperparams) -> Result<()> {
    hp.validate()?;
    if hp.k > profile.max_k() {
        return Err(Error::KOutOfRange { k: hp.k, max: profile.max_k() });
    }
    if labels.len() < profile.candidates() {
        return Err(Error::InvalidParameter(format!("{} labels for {} candidates", labels.len(), profile.candidates())));
    }
    Ok(())
}

fn argmax_lowest(counts: &[u32]) -> (usize, bool) {
    let best = counts.iter().copied().max().unwrap_or(0);
    let class = counts.iter().position(|&c| c == best).unwrap_or(0);
    (class, counts.iter().filter(|&&c| c == best).count() > 1)
}

/// Sign of the `±1`-target mean: negative or zero gives class 0.
pub fn classify_binary(profile: &QueryProfile, labels: &[usize], hp: &Hyperparams, variant: Variant) -> Result<BayesDecision> {
    check_query(profile, labels, hp)?;
    let c = class_multiplicities(profile, labels, 2, hp.k, variant);
    let total = f64::from(c[0] + c[1]);
    let denom = hp.sigma0 * total + hp.sigma2;
    let mean = hp.sigma0 * (f64::from(c[1]) - f64::from(c[0])) / denom;
    Ok(BayesDecision {
        class: usize::from(c[1] > c[0]),
        means: vec![mean],
        variance: 1.0 / denom,
        weight_mass: hp.sigma0 * total,
        tie: c[0] == c[1],
    })
}

fn onehot_means(counts: &[u32], hp: &Hyperparams) -> (Vec<f64>, f64, f64) {
    let total: u32 = counts.iter().sum();
    let denom = hp.sigma0 * f64::from(total) + hp.sigma2;
    let means = counts.iter().map(|&c| hp.sigma0 * f64::from(c) / denom).collect();
    (means, 1.0 / denom, hp.sigma0 * f64::from(total))
}

/// Argmax over the per-class means; ties to the lowest class index.
pub fn classify_mul1(
    profile: &QueryProfile,
    labels: &[usize],
    num_classes: usize,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<BayesDecision> {
    check_query(profile, labels, hp)?;
    let counts = class_multiplicities(profile, labels, num_classes, hp.k, variant);
    let (class, tie) = argmax_lowest(&counts);
    let (means, variance, weight_mass) = onehot_means(&counts, hp);
    Ok(BayesDecision { class, means, variance, weight_mass, tie })
}

/// Decision from the difference means `μ_g^{1,l} = μ_{f¹} − μ_{f^l}`:
/// class 0 when every difference is positive, otherwise the argmin over
/// `l` with `μ_g^{1,1} = 0` included, ties to the lowest index.
pub fn classify_mul2(
    profile: &QueryProfile,
    labels: &[usize],
    num_classes: usize,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<BayesDecision> {
    check_query(profile, labels, hp)?;
    let counts = class_multiplicities(profile, labels, num_classes, hp.k, variant);
    // μ_g^{1,l} ∝ c_1 − c_l with a positive factor
    let diffs: Vec<i64> = counts.iter().map(|&c| i64::from(counts[0]) - i64::from(c)).collect();
    let min = diffs.iter().copied().min().unwrap_or(0);
    let class = diffs.iter().position(|&d| d == min).unwrap_or(0);
    let tie = diffs.iter().filter(|&&d| d == min).count() > 1;
    let (means, variance, weight_mass) = onehot_means(&counts, hp);
    Ok(BayesDecision { class, means, variance, weight_mass, tie })
}

/// Classic mutual or symmetric vote at an evidence-selected `k`.
pub fn classic_with_bayes_k(profile: &QueryProfile, labels: &[usize], num_classes: usize, k: usize, variant: Variant) -> Result<Decision> {
    ClassicRule::from(variant).decide(profile, labels, num_classes, k)
}

/// Per-query output of [`predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub class: usize,
    /// Bayesian means (empty for classic rules).
    pub means: Vec<f64>,
    /// Bayesian predictive variance (`None` for classic rules).
    pub variance: Option<f64>,
    /// Total edge weight (Bayesian) or vote count (classic) at the query.
    pub weight_mass: f64,
    /// Classic vote counts per class (empty for Bayesian rules).
    pub tally: Vec<u32>,
    pub tie: bool,
    pub fallback: bool,
}

/// Classifies one profiled query with a fitted classifier.
pub fn predict_profile(model: &FittedClassifier, index: &NeighborIndex, profile: &QueryProfile) -> Result<PredictionRecord> {
    let data = index.data();
    let (labels, j) = (data.labels(), data.num_classes());
    let spec = &model.spec;
    if let Some(rule) = spec.method.classic_rule() {
        let d = rule.decide(profile, labels, j, model.hyper.k)?;
        return Ok(PredictionRecord {
            class: d.class,
            means: Vec::new(),
            variance: None,
            weight_mass: f64::from(d.tally.total()),
            tally: d.tally.counts().to_vec(),
            tie: d.tie,
            fallback: d.fallback,
        });
    }
    let variant = spec.method.variant().expect("bayes methods have a variant");
    let hp = &model.hyper;
    let d = match spec.formulation {
        Some(Formulation::Binary) => classify_binary(profile, labels, hp, variant)?,
        Some(Formulation::Mul1) => classify_mul1(profile, labels, j, hp, variant)?,
        Some(Formulation::Mul2) => classify_mul2(profile, labels, j, hp, variant)?,
        None => return Err(Error::Config(format!("{}: missing formulation", spec.label()))),
    };
    Ok(PredictionRecord {
        class: d.class,
        means: d.means,
        variance: Some(d.variance),
        weight_mass: d.weight_mass,
        tally: Vec::new(),
        tie: d.tie,
        fallback: false,
    })
}

/// Classifies every query (in parallel, results in query order).
pub fn predict(model: &FittedClassifier, index: &NeighborIndex, queries: &[Vec<f64>]) -> Result<Vec<PredictionRecord>> {
    let dim = index.data().dim();
    if let Some(q) = queries.iter().find(|q| q.len() != dim) {
        return Err(Error::Dataset(format!("query has {} features, training data has {dim}", q.len())));
    }
    queries.par_iter().map(|q| predict_profile(model, index, &index.profile(q, None))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledDataset;

    fn index(points: &[f64], labels: &[usize], j: usize) -> NeighborIndex {
        let ds = LabeledDataset::with_class_count(points.iter().map(|&x| vec![x]).collect(), labels.to_vec(), j).unwrap();
        NeighborIndex::new(&ds)
    }

    #[test]
    fn binary_sign_rule() {
        let idx = index(&[0.0, 1.0, 2.0, 10.0], &[0, 1, 1, 0], 2);
        let hp = Hyperparams::new(1, 1.0, 0.5).unwrap();
        let labels = idx.data().labels();
        // q = 1.5: point 1 (C2) mutual, point 2 (C2) reverse only
        let d = classify_binary(&idx.profile(&[1.5], None), labels, &hp, Variant::Symmetric).unwrap();
        assert_eq!(d.class, 1);
        assert!(d.means[0] > 0.0);
        // empty mutual set: mean 0 -> class 0
        let d = classify_binary(&idx.profile(&[6.0], None), labels, &hp, Variant::Mutual).unwrap();
        assert_eq!((d.class, d.means[0], d.variance), (0, 0.0, 2.0));
    }

    #[test]
    fn mul1_single_neighbor_and_empty() {
        let idx = index(&[0.0, 1.0, 5.0, 20.0], &[0, 1, 2, 2], 3);
        let hp = Hyperparams::new(1, 1.0, 1e-3).unwrap();
        let labels = idx.data().labels();
        let d = classify_mul1(&idx.profile(&[5.2], None), labels, 3, &hp, Variant::Mutual).unwrap();
        assert_eq!(d.class, 2);
        let d = classify_mul1(&idx.profile(&[12.0], None), labels, 3, &hp, Variant::Mutual).unwrap();
        assert_eq!(d.class, 0);
        assert!(d.means.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn mul2_matches_mul1_and_binary() {
        let idx = index(&[0.0, 0.7, 1.1, 2.0, 2.4, 3.9, 4.0, 6.5], &[0, 1, 1, 0, 1, 0, 1, 1], 2);
        let labels = idx.data().labels();
        for k in 1..=7 {
            let hp = Hyperparams::new(k, 3.0, 0.1).unwrap();
            for q in [-1.0, 0.35, 0.9, 1.55, 2.2, 3.0, 3.95, 5.0, 8.0] {
                let p = idx.profile(&[q], None);
                for v in [Variant::Mutual, Variant::Symmetric] {
                    let a = classify_mul1(&p, labels, 2, &hp, v).unwrap().class;
                    let b = classify_mul2(&p, labels, 2, &hp, v).unwrap().class;
                    let c = classify_binary(&p, labels, &hp, v).unwrap().class;
                    assert_eq!((a, b), (c, c), "k={k} q={q} {v:?}");
                }
            }
        }
    }

    #[test]
    fn method_labels_and_parsing() {
        assert_eq!(Method::Bmknn.label(Some(Formulation::Mul2)), "BMkNN-II");
        assert_eq!(Method::SknnBk.label(Some(Formulation::Mul1)), "SkNN (B-I k)");
        assert_eq!(Method::MknnBk.label(Some(Formulation::Binary)), "MkNN (B k)");
        assert_eq!("MkNN_BK".parse::<Method>().unwrap(), Method::MknnBk);
        assert!("foo".parse::<Method>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = ClassifierSpec::bayes(Method::Bmknn, Formulation::Binary, 1.0, 1.0, ContinuousMode::Fixed);
        assert!(s.validate(2).is_ok());
        assert!(s.validate(3).is_err());
        s.formulation = None;
        assert!(s.validate(2).is_err());
        assert!(ClassifierSpec::classic(Method::Knn).validate(5).is_ok());
    }

    #[test]
    fn single_class_training_set() {
        let idx = index(&[0.0, 1.0, 2.0], &[0, 0, 0], 1);
        let spec = ClassifierSpec { k: Some(1), ..ClassifierSpec::classic(Method::Mknn) };
        let fitted = fit(&idx, &spec, &OptimizerSettings::default(), None).unwrap();
        let out = predict(&fitted, &idx, &[vec![10.0], vec![0.4]]).unwrap();
        assert!(out.iter().all(|r| r.class == 0));
    }
}
