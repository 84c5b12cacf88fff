//! Fit one classifier and inspect per-query diagnostics: class, means,
//! variance, vote tally, ties and mutual-set fallbacks.
//!
//! ```text
//! cargo run --release --example predict
//! ```

use knn_evidence::classify::{fit, predict, ClassifierSpec, Method};
use knn_evidence::dataset::sinc3c_train;
use knn_evidence::error::Result;
use knn_evidence::gp::{ContinuousMode, Formulation, OptimizerSettings};
use knn_evidence::neighbors::NeighborIndex;

fn main() -> Result<()> {
    let train = sinc3c_train();
    let index = NeighborIndex::new(&train);
    let settings = OptimizerSettings::default();
    let queries: Vec<Vec<f64>> = [-4.9, -2.0, -0.3, 0.0, 1.02, 3.3].iter().map(|&x| vec![x]).collect();

    let bayes = fit(&index, &ClassifierSpec::bayes(Method::Bmknn, Formulation::Mul2, 300.0, 9.0, ContinuousMode::Optimize), &settings, None)?;
    println!("{}: k = {}, σ₀ = {:.3}, σ² = {:.3e}", bayes.spec.label(), bayes.hyper.k, bayes.hyper.sigma0, bayes.hyper.sigma2);
    for (q, r) in queries.iter().zip(predict(&bayes, &index, &queries)?) {
        let v = r.variance.unwrap_or(f64::NAN);
        println!("  x = {:>5.2} -> class {} means {:.3?} variance {v:.3e} tie {}", q[0], r.class, r.means, r.tie);
    }

    let classic = fit(&index, &ClassifierSpec::classic(Method::Mknn), &settings, None)?;
    println!("\n{}: LOOCV k = {}", classic.spec.label(), classic.hyper.k);
    for (q, r) in queries.iter().zip(predict(&classic, &index, &queries)?) {
        println!("  x = {:>5.2} -> class {} tally {:?} tie {} fallback {}", q[0], r.class, r.tally, r.tie, r.fallback);
    }
    Ok(())
}
