//! Ten-fold cross-validation on the New Thyroid data, loaded from CSV and
//! standardized with each fold's training statistics.
//!
//! ```text
//! cargo run --release --example cross_validation [seed]
//! ```

use knn_evidence::classify::{ClassifierSpec, Method};
use knn_evidence::dataset::{load_csv, make_folds, CsvOptions, LabelColumn};
use knn_evidence::error::Result;
use knn_evidence::eval::{error_table, k_table, run_cv, CvSettings};
use knn_evidence::gp::{ContinuousMode, Formulation};

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/new_thyroid.csv");
    let ds = load_csv(path, &CsvOptions { label: LabelColumn::Name("class".into()), ..CsvOptions::default() })?;
    println!("{} rows, {} features, classes {:?}, counts {:?}\n", ds.len(), ds.dim(), ds.class_names(), ds.class_counts());

    let specs = vec![
        ClassifierSpec::classic(Method::Knn),
        ClassifierSpec::classic(Method::Mknn),
        ClassifierSpec::bayes(Method::Bsknn, Formulation::Mul1, 100.0, 1.0, ContinuousMode::Optimize),
        ClassifierSpec::bayes(Method::SknnBk, Formulation::Mul1, 100.0, 1.0, ContinuousMode::Optimize),
        ClassifierSpec::bayes(Method::Bsknn, Formulation::Mul2, 100.0, 1.0, ContinuousMode::Optimize),
    ];
    let folds = make_folds(&ds, 10, seed)?;
    println!("fold sizes {:?}\n", folds.fold_sizes());
    let results = run_cv(&ds, &folds, &specs, &CvSettings::default())?;
    print!("{}\n{}", error_table(&results), k_table(&results));
    Ok(())
}
