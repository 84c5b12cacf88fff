//! The full Sinc3C comparison: three classic rules with LOOCV-selected k,
//! Bayesian classifiers with evidence-selected hyperparameters, and the
//! classic rules run at the evidence-selected k.
//!
//! ```text
//! cargo run --release --example sinc3c_table
//! ```

use knn_evidence::dataset::{sinc3c_test, sinc3c_train};
use knn_evidence::error::Result;
use knn_evidence::experiment::{run_train_test, table_text, ExperimentConfig};

fn main() -> Result<()> {
    let cfg = ExperimentConfig::sinc3c_default();
    let train = sinc3c_train();
    let test = sinc3c_test();
    println!("{} training points, {} test points, {} classes\n", train.len(), test.len(), train.num_classes());

    let (rows, fitted) = run_train_test(&cfg, &train, &test)?;
    print!("{}", table_text(&rows));

    println!("\ncontinuous hyperparameters of the evidence rows:");
    for (row, model) in rows.iter().zip(&fitted) {
        if let Some(sel) = &model.selection {
            println!("  {:<15} σ₀ = {:>10.4}  σ² = {:.4e}  L = {:.4}", row.label, row.sigma0, row.sigma2, sel.log_evidence);
        }
    }
    Ok(())
}
