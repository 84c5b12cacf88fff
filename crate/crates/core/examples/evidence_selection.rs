//! Choosing k (and σ₀, σ²) by maximizing the marginal likelihood of the
//! Sinc3C training labels, for both variants and both multi-class
//! formulations.
//!
//! ```text
//! cargo run --release --example evidence_selection
//! ```

use knn_evidence::dataset::sinc3c_train;
use knn_evidence::error::Result;
use knn_evidence::gp::{optimize_hyperparams, ContinuousMode, Formulation, OptimizerSettings};
use knn_evidence::neighbors::{NeighborIndex, Variant};

fn main() -> Result<()> {
    let train = sinc3c_train();
    let index = NeighborIndex::new(&train);
    let grid: Vec<usize> = (1..=index.max_k()).collect();
    let settings = OptimizerSettings::default();

    for formulation in [Formulation::Mul1, Formulation::Mul2] {
        for variant in [Variant::Mutual, Variant::Symmetric] {
            let sel = optimize_hyperparams(&index, variant, formulation, &grid, (300.0, 9.0), ContinuousMode::Optimize, &settings)?;
            println!(
                "{}-{}: k = {}, σ₀ = {:.4}, σ² = {:.4e}, log evidence {:.4}",
                variant.short_name(),
                formulation.name(),
                sel.best.k,
                sel.best.sigma0,
                sel.best.sigma2,
                sel.log_evidence
            );
            let mut top = sel.trace.clone();
            top.sort_by(|a, b| b.log_evidence.total_cmp(&a.log_evidence));
            for p in top.iter().take(3) {
                println!("    k = {:>2}  L = {:>10.4}  ({} iterations)", p.k, p.log_evidence, p.iterations);
            }
        }
    }

    // holding (σ₀, σ²) fixed turns the search into a pure scan over k
    let fixed = optimize_hyperparams(&index, Variant::Mutual, Formulation::Mul1, &grid, (1.0, 1e-4), ContinuousMode::Fixed, &settings)?;
    println!("\nMkNN-I with (σ₀, σ²) fixed at (1, 1e-4): k = {}", fixed.best.k);
    Ok(())
}
