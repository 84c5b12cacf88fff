//! Leave-one-out selection of `k`, k-fold cross-validation and error rates.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::classic::ClassicRule;
use crate::classify::{fit, predict, select_evidence, ClassifierSpec};
use crate::dataset::{FoldPlan, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::gp::{Hyperparams, OptimizerSettings, Selection};
use crate::neighbors::NeighborIndex;

/// Fraction of mismatched labels.
pub fn error_rate(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() || predicted.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "error rate needs equal, nonempty lengths (got {} and {})",
            predicted.len(),
            actual.len()
        )));
    }
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(wrong as f64 / actual.len() as f64)
}

fn loocv_max_k(index: &NeighborIndex) -> usize {
    index.len().saturating_sub(2)
}

/// Leave-one-out error of a classic rule at `k`: each point is classified
/// by the others, acting as the query for the reverse relation.
pub fn loocv_error(index: &NeighborIndex, rule: ClassicRule, k: usize) -> Result<f64> {
    Ok(loocv_curve(index, rule, &[k])?[0].1)
}

/// LOOCV error for every `k` in the grid.
/// `(k, error)` pairs in grid order.
pub type LoocvCurve = Vec<(usize, f64)>;

pub fn loocv_curve(index: &NeighborIndex, rule: ClassicRule, k_grid: &[usize]) -> Result<LoocvCurve> {
    let n = index.len();
    if n < 2 {
        return Err(Error::Dataset("leave-one-out needs at least 2 points".into()));
    }
    let max = loocv_max_k(index).max(1);
    if let Some(&k) = k_grid.iter().find(|&&k| k == 0 || k > max) {
        return Err(Error::KOutOfRange { k, max });
    }
    let data = index.data();
    let (labels, j) = (data.labels(), data.num_classes());
    let profiles: Vec<_> = (0..n).into_par_iter().map(|i| index.held_out_profile(i)).collect();
    k_grid
        .par_iter()
        .map(|&k| {
            let mut wrong = 0usize;
            for (i, p) in profiles.iter().enumerate() {
                if rule.decide(p, labels, j, k)?.class != labels[i] {
                    wrong += 1;
                }
            }
            Ok((k, wrong as f64 / n as f64))
        })
        .collect()
}

/// Minimizes the LOOCV error over the grid; ties go to the smallest `k`.
pub fn select_k_loocv(index: &NeighborIndex, rule: ClassicRule, k_grid: &[usize]) -> Result<(usize, LoocvCurve)> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    let curve = loocv_curve(index, rule, k_grid)?;
    let mut best = curve[0];
    for &(k, e) in &curve[1..] {
        if e < best.1 || (e == best.1 && k < best.0) {
            best = (k, e);
        }
    }
    Ok((best.0, curve))
}

/// Cross-validated errors of one method.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CVResult {
    pub method: String,
    pub fold_errors: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator).
    pub std_dev: f64,
    /// Population standard deviation, for comparison.
    pub pop_std_dev: f64,
    pub fold_hyper: Vec<Hyperparams>,
}

impl CVResult {
    pub fn from_folds(method: String, fold_errors: Vec<f64>, fold_hyper: Vec<Hyperparams>) -> Self {
        let n = fold_errors.len() as f64;
        let mean = fold_errors.iter().sum::<f64>() / n;
        let ss: f64 = fold_errors.iter().map(|e| (e - mean) * (e - mean)).sum();
        let std_dev = if fold_errors.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        Self { method, fold_errors, mean, std_dev, pop_std_dev: (ss / n).sqrt(), fold_hyper }
    }

    pub fn mean_k(&self) -> f64 {
        self.fold_hyper.iter().map(|h| h.k as f64).sum::<f64>() / self.fold_hyper.len() as f64
    }
}

/// Settings shared by every fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvSettings {
    pub standardize: bool,
    pub optimizer: OptimizerSettings,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self { standardize: true, optimizer: OptimizerSettings::default() }
    }
}

/// Fold outcome per spec: `(error, hyperparameters)`.
type FoldOutcome = Vec<(f64, Hyperparams)>;

/// Fits on the training portion only, then scores the held-out fold.
pub fn run_fold(
    train: &LabeledDataset,
    test: &LabeledDataset,
    specs: &[ClassifierSpec],
    settings: &CvSettings,
) -> Result<FoldOutcome> {
    let (train, test) = if settings.standardize {
        let s = Standardizer::fit(train)?;
        (s.transform(train), s.transform(test))
    } else {
        (train.clone(), test.clone())
    };
    let index = NeighborIndex::new(&train);
    let mut cache: HashMap<String, Selection> = HashMap::new();
    for spec in specs {
        if let Some(key) = spec.selection_key() {
            if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(key) {
                e.insert(select_evidence(&index, spec, &settings.optimizer)?);
            }
        }
    }
    let queries: Vec<Vec<f64>> = test.points().map(<[f64]>::to_vec).collect();
    specs
        .iter()
        .map(|spec| {
            let sel = spec.selection_key().and_then(|k| cache.get(&k).cloned());
            let model = fit(&index, spec, &settings.optimizer, sel)?;
            let predicted: Vec<usize> = predict(&model, &index, &queries)?.into_iter().map(|r| r.class).collect();
            Ok((error_rate(&predicted, test.labels())?, model.hyper))
        })
        .collect()
}

/// k-fold cross-validation of every spec on the same folds.
pub fn run_cv(ds: &LabeledDataset, folds: &FoldPlan, specs: &[ClassifierSpec], settings: &CvSettings) -> Result<Vec<CVResult>> {
    if specs.is_empty() {
        return Err(Error::Config("no methods configured".into()));
    }
    for s in specs {
        s.validate(ds.num_classes())?;
    }
    let outcomes: Vec<FoldOutcome> = (0..folds.fold_count)
        .into_par_iter()
        .map(|f| {
            let (tr, te) = folds.split(f);
            run_fold(&ds.subset(&tr), &ds.subset(&te), specs, settings)
                .map_err(|e| Error::Fold { fold: f + 1, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    Ok(specs
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let (errs, hyper) = outcomes.iter().map(|o| o[s]).unzip();
            CVResult::from_folds(spec.label(), errs, hyper)
        })
        .collect())
}

/// Six significant digits.
pub fn format_rate(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 5 - x.abs().log10().floor() as i32;
    format!("{:.*}", digits.max(0) as usize, x)
}

/// Mean ± deviation table.
pub fn error_table(results: &[CVResult]) -> String {
    let width = results.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut out = format!("{:<width$}  {}\n", "Method", "error (mean ± sd)");
    for r in results {
        out.push_str(&format!("{:<width$}  {} ± {}\n", r.method, format_rate(r.mean), format_rate(r.std_dev)));
    }
    out
}

/// Per-fold selected `k` table with the mean.
pub fn k_table(results: &[CVResult]) -> String {
    let width = results.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let folds = results.first().map_or(0, |r| r.fold_hyper.len());
    let mut out = format!("{:<width$}", "Method");
    for f in 1..=folds {
        out.push_str(&format!(" {:>4}", format!("f{f}")));
    }
    out.push_str("   Mean\n");
    for r in results {
        out.push_str(&format!("{:<width$}", r.method));
        for h in &r.fold_hyper {
            out.push_str(&format!(" {:>4}", h.k));
        }
        out.push_str(&format!(" {:>6.1}\n", r.mean_k()));
    }
    out
}

/// Writes `cv_errors.csv` (per-fold errors, mean, sd) and `cv_k.csv`
/// (per-fold `k`, `σ₀`, `σ²`).
pub fn write_cv_csv(dir: &Path, results: &[CVResult]) -> Result<()> {
    let path = dir.join("cv_errors.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    let folds = results.first().map_or(0, |r| r.fold_errors.len());
    let mut header = vec!["method".to_string(), "mean".into(), "sd".into()];
    header.extend((1..=folds).map(|f| format!("fold{f}")));
    let io = |e: csv::Error| Error::Dataset(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(io)?;
    for r in results {
        let mut row = vec![r.method.clone(), format_rate(r.mean), format_rate(r.std_dev)];
        row.extend(r.fold_errors.iter().map(|&e| format_rate(e)));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("cv_k.csv");
    let io = |e: csv::Error| Error::Dataset(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(["method", "fold", "k", "sigma0", "sigma2"]).map_err(io)?;
    for r in results {
        for (f, h) in r.fold_hyper.iter().enumerate() {
            w.write_record([r.method.clone(), (f + 1).to_string(), h.k.to_string(), h.sigma0.to_string(), h.sigma2.to_string()])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    fs::write(dir.join("cv_table.txt"), format!("{}\n{}", error_table(results), k_table(results)))
        .map_err(|e| Error::io(dir.join("cv_table.txt"), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Method;
    use crate::dataset::make_folds;

    fn line(points: &[f64], labels: &[usize]) -> NeighborIndex {
        let ds = LabeledDataset::with_class_count(points.iter().map(|&x| vec![x]).collect(), labels.to_vec(), 2).unwrap();
        NeighborIndex::new(&ds)
    }

    #[test]
    fn error_rates() {
        assert_eq!(error_rate(&[0, 1, 2], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(error_rate(&[1, 0], &[0, 1]).unwrap(), 1.0);
        let mut p = vec![0; 201];
        p[..6].fill(1);
        assert_eq!(format_rate(error_rate(&p, &[0; 201]).unwrap()), "0.0298507");
        assert!(error_rate(&[0], &[0, 1]).is_err());
        assert!(error_rate(&[], &[]).is_err());
    }

    #[test]
    fn loocv_on_separated_clusters() {
        let idx = line(&[0.0, 0.1, 0.2, 9.0, 9.1, 9.2], &[0, 0, 0, 1, 1, 1]);
        for rule in [ClassicRule::Knn, ClassicRule::Mknn, ClassicRule::Sknn] {
            assert_eq!(loocv_error(&idx, rule, 1).unwrap(), 0.0);
        }
        let (k, curve) = select_k_loocv(&idx, ClassicRule::Knn, &[3]).unwrap();
        assert_eq!((k, curve.len()), (3, 1));
    }

    #[test]
    fn loocv_two_points() {
        let idx = line(&[0.0, 1.0], &[0, 1]);
        // the only other point is the held-out point's neighbor
        let curve = loocv_curve(&idx, ClassicRule::Knn, &[1]).unwrap();
        assert_eq!(curve, vec![(1, 1.0)]);
    }

    #[test]
    fn cv_result_statistics() {
        let r = CVResult::from_folds("x".into(), vec![0.1, 0.2, 0.3], vec![]);
        assert!((r.mean - 0.2).abs() < 1e-15);
        assert!((r.std_dev - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cv_is_deterministic() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let labels: Vec<usize> = (0..40).map(|i| usize::from((i as f64 * 0.37).sin() > 0.1)).collect();
        let ds = LabeledDataset::with_class_count(pts, labels, 2).unwrap();
        let specs = vec![
            ClassifierSpec::classic(Method::Mknn),
            ClassifierSpec::bayes(
                Method::Bsknn,
                crate::gp::Formulation::Binary,
                1.0,
                1e-2,
                crate::gp::ContinuousMode::Optimize,
            ),
        ];
        let run = || run_cv(&ds, &make_folds(&ds, 5, 7).unwrap(), &specs, &CvSettings::default()).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn format_six_digits() {
        assert_eq!(format_rate(0.25), "0.250000");
        assert_eq!(format_rate(0.079601990), "0.0796020");
        assert_eq!(format_rate(0.0), "0");
    }
}
