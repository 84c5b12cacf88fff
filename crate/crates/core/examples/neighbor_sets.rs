//! Forward, reverse and mutual neighbor sets of a query, and the edge
//! weights the mutual and symmetric variants derive from them.
//!
//! ```text
//! cargo run --example neighbor_sets
//! ```

use knn_evidence::dataset::LabeledDataset;
use knn_evidence::error::Result;
use knn_evidence::neighbors::{build_weighted_graph, NeighborIndex, Variant};

fn main() -> Result<()> {
    // points on a line; the outlier at 10 has no mutual neighbors for small k
    let xs = [0.0, 1.0, 2.0, 10.0, 10.5, 4.0];
    let ds = LabeledDataset::with_class_count(xs.iter().map(|&x| vec![x]).collect(), vec![0, 0, 1, 1, 1, 0], 2)?;
    let index = NeighborIndex::new(&ds);
    let q = [1.4];
    let profile = index.profile(&q, None);

    println!("query at {}", q[0]);
    for k in 1..=3 {
        let reverse: Vec<usize> = (0..ds.len()).filter(|&j| profile.in_nprime(j, k)).collect();
        println!("k = {k}");
        println!("  N_k(q)        {:?}", profile.knn(k));
        println!("  q in N'_k(x)  {reverse:?}");
        println!("  M_k(q)        {:?}", profile.mutual_set(k));
        println!("  SkNN weights  {:?}", profile.active(k, Variant::Symmetric));
    }

    // within-dataset graph for k = 2
    let k = 2;
    for variant in [Variant::Mutual, Variant::Symmetric] {
        let g = build_weighted_graph(&index, k, 1.0, variant)?;
        println!("\n{:?} multiplicities, k = {k} ({} edges):", variant, g.edge_count());
        println!("{}", g.multiplicities());
    }

    // a held-out profile treats the removed point as the query
    let held = index.held_out_profile(2);
    println!("point 2 held out: N_2 = {:?}, M_2 = {:?}", held.knn(2), held.mutual_set(2));
    Ok(())
}
