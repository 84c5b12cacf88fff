//! The three evidence formulations on one two-class problem: a single ±1
//! output, one output per class (I), and J − 1 class differences (II).
//! Their evidences differ, their decisions at shared hyperparameters do not.
//!
//! ```text
//! cargo run --example formulations
//! ```

use knn_evidence::classify::{classify_binary, classify_mul1, classify_mul2};
use knn_evidence::dataset::LabeledDataset;
use knn_evidence::error::Result;
use knn_evidence::gp::{build_cmul, build_precision, log_evidence, Formulation, Hyperparams, SpectralEvidence};
use knn_evidence::neighbors::{build_weighted_graph, NeighborIndex, Variant};

fn main() -> Result<()> {
    let points: Vec<Vec<f64>> = (0..16).map(|i| vec![f64::from(i).sin() * 2.0, f64::from(i) * 0.3]).collect();
    let labels: Vec<usize> = (0..16).map(|i| usize::from(i % 5 < 2)).collect();
    let ds = LabeledDataset::with_class_count(points, labels, 2)?;
    let index = NeighborIndex::new(&ds);
    let (sigma0, sigma2) = (2.0, 0.5);

    println!("{:>3} {:>12} {:>12} {:>12}", "k", "binary", "I", "II");
    for k in 1..=6 {
        let graph = build_weighted_graph(&index, k, sigma0, Variant::Symmetric)?;
        let model = build_precision(&graph, sigma2)?;
        let l: Vec<f64> = [Formulation::Binary, Formulation::Mul1, Formulation::Mul2]
            .iter()
            .map(|&f| log_evidence(&model, ds.labels(), 2, f))
            .collect::<Result<_>>()?;
        println!("{k:>3} {:>12.5} {:>12.5} {:>12.5}", l[0], l[1], l[2]);
    }

    // formulation II from its dense difference covariance and from the spectrum
    let k = 3;
    let model = build_precision(&build_weighted_graph(&index, k, sigma0, Variant::Symmetric)?, sigma2)?;
    let cmul = build_cmul(&model, ds.labels(), 2)?;
    let unit = build_weighted_graph(&index, k, 1.0, Variant::Symmetric)?;
    let spectral = SpectralEvidence::new(&unit, ds.labels(), 2, Formulation::Mul2)?;
    println!(
        "\nII at k = {k}: dense ({}x{}) {:.10}, spectral {:.10}",
        cmul.dim(),
        cmul.dim(),
        knn_evidence::gp::log_evidence_mul2(&cmul),
        spectral.log_evidence(sigma0, sigma2)
    );

    let hp = Hyperparams::new(k, sigma0, sigma2)?;
    for q in [[0.0, 0.0], [1.5, 2.0], [-1.0, 4.2]] {
        let profile = index.profile(&q, None);
        let b = classify_binary(&profile, ds.labels(), &hp, Variant::Symmetric)?;
        let one = classify_mul1(&profile, ds.labels(), 2, &hp, Variant::Symmetric)?;
        let two = classify_mul2(&profile, ds.labels(), 2, &hp, Variant::Symmetric)?;
        println!(
            "q = {q:?}: binary {} (mean {:+.3}), I {} (means {:.3?}), II {}",
            b.class, b.means[0], one.class, one.means, two.class
        );
    }
    Ok(())
}
