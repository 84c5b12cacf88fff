//! Bayesian mutual / symmetric k-NN regression: the posterior mean is a
//! shrunken neighbor average that tends to the classic estimate as
//! σ²/σ₀ → 0, and the posterior variance reflects how many neighbors
//! support the query.
//!
//! ```text
//! cargo run --example bayes_regression
//! ```

use knn_evidence::classic::{mknn_regress, sknn_regress};
use knn_evidence::dataset::{sinc, LabeledDataset, RegressionTargets};
use knn_evidence::error::Result;
use knn_evidence::gp::{bayes_regress, Hyperparams};
use knn_evidence::neighbors::{NeighborIndex, Variant};

fn main() -> Result<()> {
    let xs: Vec<f64> = (0..40).map(|i| -4.0 + 0.2 * f64::from(i)).collect();
    let ds = LabeledDataset::with_class_count(xs.iter().map(|&x| vec![x]).collect(), vec![0; xs.len()], 1)?;
    let y = RegressionTargets::from_column(xs.iter().map(|&x| sinc(x)).collect());
    let index = NeighborIndex::new(&ds);
    let k = 3;

    println!("{:>6} {:>9} {:>9} {:>9} {:>9} {:>9}", "x", "sinc", "MkNN", "BMkNN", "SkNN", "var(S)");
    for q in [-3.05, -1.0, 0.1, 0.75, 2.5, 6.0] {
        let hp = Hyperparams::new(k, 1.0, 0.1)?;
        let bm = bayes_regress(&[q], &index, &y, &hp, Variant::Mutual)?;
        let bs = bayes_regress(&[q], &index, &y, &hp, Variant::Symmetric)?;
        println!(
            "{q:>6.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            sinc(q),
            mknn_regress(&[q], &index, &y, k)?,
            bm.mean(),
            sknn_regress(&[q], &index, &y, k)?,
            bs.variance,
        );
    }

    // the classic estimate is the σ²/σ₀ → 0 limit
    let q = [0.1];
    let classic = sknn_regress(&q, &index, &y, k)?;
    println!("\nSkNN at x = 0.1: classic {classic:.12}");
    for ratio in [1.0, 1e-2, 1e-4, 1e-8, 1e-12] {
        let hp = Hyperparams::new(k, 1.0, ratio)?;
        let m = bayes_regress(&q, &index, &y, &hp, Variant::Symmetric)?.mean();
        println!("  σ²/σ₀ = {ratio:<6e} mean {m:.12}  gap {:.2e}", (m - classic).abs());
    }
    Ok(())
}
