mod common;

use common::*;
use knn_evidence::classify::{ClassifierSpec, Method};
use knn_evidence::dataset::{make_folds, LabeledDataset};
use knn_evidence::eval::{run_cv, run_fold, CvSettings};
use knn_evidence::gp::{ContinuousMode, Formulation};
use rand::Rng;

fn specs() -> Vec<ClassifierSpec> {
    vec![
        ClassifierSpec::classic(Method::Knn),
        ClassifierSpec::classic(Method::Mknn),
        ClassifierSpec::classic(Method::Sknn),
        ClassifierSpec::bayes(Method::Bmknn, Formulation::Mul1, 1.0, 0.1, ContinuousMode::Optimize),
        ClassifierSpec::bayes(Method::Bsknn, Formulation::Mul2, 10.0, 1.0, ContinuousMode::Optimize),
        ClassifierSpec::bayes(Method::SknnBk, Formulation::Mul1, 1.0, 0.01, ContinuousMode::Fixed),
    ]
}

fn blobs(seed: u64, n: usize) -> LabeledDataset {
    let mut r = rng(seed);
    let labels = random_labels(&mut r, n, 3);
    let points = labels
        .iter()
        .map(|&c| vec![c as f64 + r.random_range(-0.8..0.8), r.random_range(-1.0..1.0)])
        .collect();
    LabeledDataset::with_class_count(points, labels, 3).unwrap()
}

#[test]
fn held_out_labels_never_reach_selection() {
    let ds = blobs(3, 60);
    let plan = make_folds(&ds, 5, 11).unwrap();
    let settings = CvSettings::default();
    for f in 0..plan.fold_count {
        let (tr, te) = plan.split(f);
        let train = ds.subset(&tr);
        let test = ds.subset(&te);
        let mut r = rng(f as u64);
        let scrambled = test.with_labels(random_labels(&mut r, test.len(), 3)).unwrap();
        let a = run_fold(&train, &test, &specs(), &settings).unwrap();
        let b = run_fold(&train, &scrambled, &specs(), &settings).unwrap();
        let hyper = |o: &[(f64, knn_evidence::gp::Hyperparams)]| o.iter().map(|x| x.1).collect::<Vec<_>>();
        assert_eq!(hyper(&a), hyper(&b));
    }
}

#[test]
fn cv_statistics_and_determinism() {
    let ds = blobs(5, 50);
    let plan = make_folds(&ds, 5, 2).unwrap();
    let settings = CvSettings::default();
    let a = run_cv(&ds, &plan, &specs(), &settings).unwrap();
    let b = run_cv(&ds, &plan, &specs(), &settings).unwrap();
    assert_eq!(a.len(), specs().len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.fold_errors, y.fold_errors);
        assert_eq!(x.fold_hyper, y.fold_hyper);
        let n = x.fold_errors.len() as f64;
        let mean = x.fold_errors.iter().sum::<f64>() / n;
        let ss: f64 = x.fold_errors.iter().map(|e| (e - mean).powi(2)).sum();
        assert!((x.mean - mean).abs() < 1e-12);
        assert!((x.std_dev - (ss / (n - 1.0)).sqrt()).abs() < 1e-12);
        assert!((x.pop_std_dev - (ss / n).sqrt()).abs() < 1e-12);
        assert!(x.fold_errors.iter().all(|e| (0.0..=1.0).contains(e)));
    }
    // well separated blobs: every method should do far better than chance
    assert!(a.iter().all(|r| r.mean < 0.35), "{a:?}");
}

#[test]
fn fold_failures_name_the_fold() {
    let ds = blobs(1, 20);
    let plan = make_folds(&ds, 2, 0).unwrap();
    // a fixed k that only the full dataset could support
    let mut spec = ClassifierSpec::classic(Method::Knn);
    spec.k = Some(15);
    let bad = vec![spec];
    let err = run_cv(&ds, &plan, &bad, &CvSettings::default()).unwrap_err();
    assert!(err.to_string().starts_with("fold "), "{err}");
    assert_eq!(err.exit_code(), 2);
}
