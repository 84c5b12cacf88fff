//! Leave-one-out error against k for the classic rules on the Sinc3C
//! training set; the minimizer (smallest on ties) is the selected k.
//!
//! ```text
//! cargo run --release --example loocv_curve
//! ```

use knn_evidence::classic::ClassicRule;
use knn_evidence::dataset::sinc3c_train;
use knn_evidence::error::Result;
use knn_evidence::eval::{format_rate, select_k_loocv};
use knn_evidence::neighbors::NeighborIndex;

fn main() -> Result<()> {
    let index = NeighborIndex::new(&sinc3c_train());
    let grid: Vec<usize> = (1..=index.len() - 2).collect();
    for rule in [ClassicRule::Knn, ClassicRule::Mknn, ClassicRule::Sknn] {
        let (k, curve) = select_k_loocv(&index, rule, &grid)?;
        println!("{}: selected k = {k}", rule.name());
        for (k, e) in curve.iter().take(10) {
            let bar = "#".repeat((e * 200.0).round() as usize);
            println!("  k = {k:>2}  {}  {bar}", format_rate(*e));
        }
        println!("  ...");
    }
    Ok(())
}
