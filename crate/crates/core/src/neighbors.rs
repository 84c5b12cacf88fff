//! Neighbor relations under Euclidean distance.
//!
//! Orderings are strict: candidates are sorted by `(distance, index)`, and a
//! query point that is not part of the dataset sorts after every dataset point
//! at the same distance. Squared distances are used throughout; the order is
//! the same as for Euclidean distance.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Edge-weight rule of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    /// Weight only when both points are among each other's k nearest neighbors.
    Mutual,
    /// One unit per direction in which the neighbor relation holds.
    Symmetric,
}

impl Variant {
    /// Edge multiplicity for the two directional indicators.
    pub fn multiplicity(self, forward: bool, backward: bool) -> u32 {
        match self {
            Variant::Mutual => u32::from(forward && backward),
            Variant::Symmetric => u32::from(forward) + u32::from(backward),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Variant::Mutual => "MkNN",
            Variant::Symmetric => "SkNN",
        }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_k(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        Err(Error::KOutOfRange { k, max })
    } else {
        Ok(())
    }
}

/// Every point's full neighbor ranking within the dataset.
///
/// Built once in `O(n² log n)`; a [`NeighborGraph`] for any `k` is a view on it.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    data: LabeledDataset,
    // order[i]: all j != i sorted by (d(i, j), j)
    order: Vec<Vec<usize>>,
    // sorted_dist[i][r] = d(i, order[i][r])
    sorted_dist: Vec<Vec<f64>>,
    // rank[i * n + j] = position of j in order[i]; usize::MAX on the diagonal
    rank: Vec<usize>,
}

impl NeighborIndex {
    pub fn new(data: &LabeledDataset) -> Self {
        let n = data.len();
        let mut order = Vec::with_capacity(n);
        let mut sorted_dist = Vec::with_capacity(n);
        let mut rank = vec![usize::MAX; n * n];
        for i in 0..n {
            let p = data.point(i);
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (squared_distance(p, data.point(j)), j)).collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (r, &(_, j)) in cand.iter().enumerate() {
                rank[i * n + j] = r;
            }
            sorted_dist.push(cand.iter().map(|c| c.0).collect());
            order.push(cand.into_iter().map(|c| c.1).collect());
        }
        Self { data: data.clone(), order, sorted_dist, rank }
    }

    pub fn data(&self) -> &LabeledDataset {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// All other points ordered by distance to point `i`.
    pub fn ranking(&self, i: usize) -> &[usize] {
        &self.order[i]
    }

    /// Position of `j` in the ranking of `i`.
    pub fn rank_of(&self, i: usize, j: usize) -> usize {
        self.rank[i * self.len() + j]
    }

    /// Largest admissible `k` for the within-dataset relation.
    pub fn max_k(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn graph(&self, k: usize) -> Result<NeighborGraph<'_>> {
        check_k(k, self.max_k())?;
        Ok(NeighborGraph { index: self, k })
    }

    /// Ranks a query against the dataset, optionally with one dataset point
    /// held out (the query then stands in for it).
    pub fn profile(&self, q: &[f64], exclude: Option<usize>) -> QueryProfile {
        let n = self.len();
        let dist: Vec<f64> = self.data.points().map(|p| squared_distance(q, p)).collect();
        let mut order: Vec<usize> = (0..n).filter(|&i| Some(i) != exclude).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let mut forward_rank = vec![usize::MAX; n];
        for (r, &i) in order.iter().enumerate() {
            forward_rank[i] = r;
        }
        let mut reverse_rank = vec![usize::MAX; n];
        for j in (0..n).filter(|&j| Some(j) != exclude) {
            let dq = dist[j];
            // dataset candidates of j at distance <= d(j, q) all precede q
            let mut before = self.sorted_dist[j].partition_point(|&d| d <= dq);
            if let Some(e) = exclude {
                if self.rank_of(j, e) < before {
                    before -= 1;
                }
            }
            reverse_rank[j] = before;
        }
        QueryProfile { order, dist, forward_rank, reverse_rank, exclude }
    }

    /// Profile of dataset point `i` queried with itself held out.
    pub fn held_out_profile(&self, i: usize) -> QueryProfile {
        self.profile(self.data.point(i), Some(i))
    }
}

/// The relation `i ∼_k j` (`j` is among the `k` nearest neighbors of `i`)
/// over one dataset.
#[derive(Debug, Clone, Copy)]
pub struct NeighborGraph<'a> {
    index: &'a NeighborIndex,
    k: usize,
}

impl<'a> NeighborGraph<'a> {
    pub fn build(index: &'a NeighborIndex, k: usize) -> Result<Self> {
        index.graph(k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn index(&self) -> &'a NeighborIndex {
        self.index
    }

    pub fn data(&self) -> &'a LabeledDataset {
        self.index.data()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// The `k` nearest neighbors of point `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &'a [usize] {
        &self.index.order[i][..self.k]
    }

    /// `true` iff `j != i` and `j` is among the `k` nearest neighbors of `i`.
    pub fn relates(&self, i: usize, j: usize) -> bool {
        i != j && self.index.rank_of(i, j) < self.k
    }

    /// Within-dataset mutual neighbors of point `i`.
    pub fn training_mutual_set(&self, i: usize) -> Vec<usize> {
        self.neighbors(i).iter().copied().filter(|&j| self.relates(j, i)).collect()
    }

    pub fn weight(&self, i: usize, j: usize, variant: Variant, sigma0: f64) -> f64 {
        sigma0 * f64::from(variant.multiplicity(self.relates(j, i), self.relates(i, j)))
    }
}

pub fn weight_mknn(i: usize, j: usize, graph: &NeighborGraph<'_>, sigma0: f64) -> f64 {
    graph.weight(i, j, Variant::Mutual, sigma0)
}

pub fn weight_sknn(i: usize, j: usize, graph: &NeighborGraph<'_>, sigma0: f64) -> f64 {
    graph.weight(i, j, Variant::Symmetric, sigma0)
}

/// A query ranked against every dataset point, reusable for every `k`.
#[derive(Debug, Clone)]
pub struct QueryProfile {
    order: Vec<usize>,
    dist: Vec<f64>,
    forward_rank: Vec<usize>,
    reverse_rank: Vec<usize>,
    exclude: Option<usize>,
}

impl QueryProfile {
    /// Number of candidate dataset points (excluding any held-out point).
    pub fn candidates(&self) -> usize {
        self.order.len()
    }

    pub fn max_k(&self) -> usize {
        self.order.len()
    }

    pub fn exclude(&self) -> Option<usize> {
        self.exclude
    }

    /// All candidates ordered by distance to the query.
    pub fn ordering(&self) -> &[usize] {
        &self.order
    }

    /// Squared distance from the query to dataset point `i`.
    pub fn squared_distance(&self, i: usize) -> f64 {
        self.dist[i]
    }

    /// `N_k(q)`, nearest first.
    pub fn knn(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    /// `q ∼_k x_i`: point `i` is among the `k` nearest neighbors of the query.
    pub fn in_knn(&self, i: usize, k: usize) -> bool {
        self.forward_rank[i] < k
    }

    /// `x_i ∼_k q`: the query is among the `k` nearest neighbors of point `i`
    /// once inserted into its candidate set.
    pub fn in_nprime(&self, i: usize, k: usize) -> bool {
        self.reverse_rank[i] < k
    }

    /// Number of dataset candidates of point `i` that precede the query.
    pub fn reverse_rank(&self, i: usize) -> usize {
        self.reverse_rank[i]
    }

    /// `M_k(q)` in nearest-first order.
    pub fn mutual_set(&self, k: usize) -> Vec<usize> {
        self.knn(k).iter().copied().filter(|&i| self.in_nprime(i, k)).collect()
    }

    /// Every point with a nonzero edge to the query under `variant`, paired
    /// with its multiplicity, nearest first.
    pub fn active(&self, k: usize, variant: Variant) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for &i in &self.order {
            let m = variant.multiplicity(self.in_knn(i, k), self.in_nprime(i, k));
            if m > 0 {
                out.push((i, m));
            }
        }
        out
    }

    pub fn weight(&self, i: usize, k: usize, variant: Variant, sigma0: f64) -> f64 {
        if Some(i) == self.exclude {
            return 0.0;
        }
        sigma0 * f64::from(variant.multiplicity(self.in_knn(i, k), self.in_nprime(i, k)))
    }
}

/// `N_k(q)` over `ds`, ordered by `(distance, index)`.
pub fn knn_list(q: &[f64], ds: &LabeledDataset, k: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
    let max = ds.len() - usize::from(exclude.is_some_and(|e| e < ds.len()));
    check_k(k, max)?;
    let mut cand: Vec<(f64, usize)> = ds
        .points()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| (squared_distance(q, p), i))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(cand.into_iter().take(k).map(|c| c.1).collect())
}

/// Whether `q` ranks among the `k` nearest neighbors of point `i` within
/// `(D \ {x_i}) ∪ {q}`.
pub fn in_nprime(i: usize, q: &[f64], graph: &NeighborGraph<'_>) -> bool {
    let index = graph.index();
    let dq = squared_distance(index.data().point(i), q);
    index.sorted_dist[i].partition_point(|&d| d <= dq) < graph.k()
}

/// `M_k(q)`: neighbors of `q` that also have `q` among their own neighbors.
pub fn mutual_set(q: &[f64], graph: &NeighborGraph<'_>) -> Vec<usize> {
    graph.index().profile(q, None).mutual_set(graph.k())
}

/// Symmetric edge weights over a dataset, stored as unit multiplicities
/// scaled by `sigma0`.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    variant: Variant,
    k: usize,
    sigma0: f64,
    // multiplicities in {0, 1, 2}
    adjacency: DMatrix<f64>,
    unit_degrees: Vec<f64>,
}

impl WeightedGraph {
    pub fn from_graph(graph: &NeighborGraph<'_>, sigma0: f64, variant: Variant) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma0 must be positive, got {sigma0}")));
        }
        let n = graph.len();
        let mut adjacency = DMatrix::zeros(n, n);
        for i in 0..n {
            for &j in graph.neighbors(i) {
                let m = f64::from(variant.multiplicity(true, graph.relates(j, i)));
                adjacency[(i, j)] = m;
                adjacency[(j, i)] = m;
            }
        }
        let unit_degrees = (0..n).map(|i| adjacency.row(i).sum()).collect();
        Ok(Self { variant, k: graph.k(), sigma0, adjacency, unit_degrees })
    }

    /// Graph with explicit edge multiplicities (symmetric, nonnegative, zero
    /// diagonal). `k` is recorded for reporting only.
    pub fn from_multiplicities(adjacency: DMatrix<f64>, k: usize, sigma0: f64, variant: Variant) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma0 must be positive, got {sigma0}")));
        }
        let n = adjacency.nrows();
        if adjacency.ncols() != n || adjacency != adjacency.transpose() {
            return Err(Error::InvalidParameter("edge multiplicities must form a symmetric matrix".into()));
        }
        if (0..n).any(|i| adjacency[(i, i)] != 0.0) || adjacency.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("edge multiplicities must be finite, >= 0, zero on the diagonal".into()));
        }
        let unit_degrees = (0..n).map(|i| adjacency.row(i).sum()).collect();
        Ok(Self { variant, k, sigma0, adjacency, unit_degrees })
    }

    /// `n` isolated vertices.
    pub fn edgeless(n: usize, sigma0: f64, variant: Variant) -> Result<Self> {
        Self::from_multiplicities(DMatrix::zeros(n, n), 0, sigma0, variant)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn len(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same edges with a different scale.
    pub fn rescaled(&self, sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma0 must be positive, got {sigma0}")));
        }
        Ok(Self { sigma0, ..self.clone() })
    }

    /// Edge multiplicities (`W / σ₀`).
    pub fn multiplicities(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn weights(&self) -> DMatrix<f64> {
        &self.adjacency * self.sigma0
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.unit_degrees.iter().map(|d| d * self.sigma0).collect()
    }

    /// `L / σ₀`, the Laplacian of the multiplicity graph.
    pub fn unit_laplacian(&self) -> DMatrix<f64> {
        let mut l = -&self.adjacency;
        for (i, d) in self.unit_degrees.iter().enumerate() {
            l[(i, i)] += d;
        }
        l
    }

    /// `L = D - W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.unit_laplacian() * self.sigma0
    }

    pub fn edge_count(&self) -> usize {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| self.adjacency[(i, j)] > 0.0).count()
    }
}

/// `W` for `(ds, k, σ₀, variant)`.
pub fn build_weighted_graph(index: &NeighborIndex, k: usize, sigma0: f64, variant: Variant) -> Result<WeightedGraph> {
    WeightedGraph::from_graph(&index.graph(k)?, sigma0, variant)
}

/// Dumps a dense matrix as headerless CSV.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for r in 0..m.nrows() {
            let row: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    // points {0, 1, 2, 10} on a line
    fn line() -> LabeledDataset {
        LabeledDataset::with_class_count(vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]], vec![0, 0, 1, 1], 2).unwrap()
    }

    #[test]
    fn knn_list_hand_cases() {
        let ds = line();
        assert_eq!(knn_list(&[0.0], &ds, 1, None).unwrap(), vec![0]);
        assert_eq!(knn_list(&[0.0], &ds, 1, Some(0)).unwrap(), vec![1]);
        // 0 and 2 are equidistant from 1: lower index wins
        assert_eq!(knn_list(&[1.0], &ds, 1, Some(1)).unwrap(), vec![0]);
        assert_eq!(knn_list(&[10.0], &ds, 3, Some(3)).unwrap(), vec![2, 1, 0]);
        assert!(knn_list(&[0.0], &ds, 4, Some(0)).is_err());
        assert!(knn_list(&[0.0], &ds, 0, None).is_err());
    }

    #[test]
    fn nprime_hand_cases() {
        let ds = line();
        let index = NeighborIndex::new(&ds);
        let g = index.graph(1).unwrap();
        assert!(in_nprime(2, &[1.5], &g));
        assert!(!in_nprime(0, &[1.5], &g));
        // query on top of point 0's nearest neighbor ties after it
        assert!(!in_nprime(0, &[1.0], &g));
    }

    #[test]
    fn mutual_set_hand_cases() {
        let ds = line();
        let index = NeighborIndex::new(&ds);
        let g = index.graph(1).unwrap();
        assert_eq!(mutual_set(&[1.5], &g), vec![1]);
        assert!(!g.relates(3, 2) || !g.relates(2, 3));
        assert!(g.relates(3, 2));
        let full = index.graph(3).unwrap();
        let p = index.profile(&[4.0], None);
        assert_eq!(mutual_set(&[4.0], &full), p.knn(3).to_vec());
    }

    #[test]
    fn weights_on_line() {
        let ds = line();
        let index = NeighborIndex::new(&ds);
        let g = index.graph(1).unwrap();
        assert_eq!(weight_mknn(0, 1, &g, 1.0), 1.0);
        assert_eq!(weight_sknn(0, 1, &g, 1.0), 2.0);
        assert_eq!(weight_mknn(1, 2, &g, 1.0), 0.0);
        assert_eq!(weight_sknn(2, 1, &g, 1.0), 1.0);
        assert_eq!(weight_sknn(2, 2, &g, 1.0), 0.0);

        let m = build_weighted_graph(&index, 1, 1.0, Variant::Mutual).unwrap();
        assert_eq!(m.edge_count(), 1);
        assert_eq!(m.weights()[(0, 1)], 1.0);

        let s = build_weighted_graph(&index, 1, 1.0, Variant::Symmetric).unwrap();
        let w = s.weights();
        assert_eq!((w[(0, 1)], w[(1, 2)], w[(2, 3)], w[(0, 2)]), (2.0, 1.0, 1.0, 0.0));
        assert_eq!(w, w.transpose());
        let l = s.laplacian();
        for r in 0..4 {
            assert_eq!(l.row(r).sum(), 0.0);
        }
    }

    #[test]
    fn parameter_checks() {
        let index = NeighborIndex::new(&line());
        assert!(build_weighted_graph(&index, 4, 1.0, Variant::Mutual).is_err());
        assert!(build_weighted_graph(&index, 1, 0.0, Variant::Mutual).is_err());
    }

    #[test]
    fn held_out_profile_matches_reduced_dataset() {
        let ds = line();
        let index = NeighborIndex::new(&ds);
        let held = index.held_out_profile(1);
        let rest = ds.subset(&[0, 2, 3]);
        let reduced = NeighborIndex::new(&rest).profile(ds.point(1), None);
        let map = [0, 2, 3];
        for k in 1..=2 {
            let a: Vec<usize> = held.knn(k).to_vec();
            let b: Vec<usize> = reduced.knn(k).iter().map(|&i| map[i]).collect();
            assert_eq!(a, b);
            for (r, &orig) in map.iter().enumerate() {
                assert_eq!(held.in_nprime(orig, k), reduced.in_nprime(r, k));
            }
        }
    }
}
