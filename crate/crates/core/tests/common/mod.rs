//! Shared generators and naive reference implementations for the
//! integration tests. Nothing here calls into the library's neighbor or
//! evidence code: every oracle works from raw pairwise distances and dense
//! matrices.
#![allow(dead_code)]

use knn_evidence::dataset::LabeledDataset;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Continuous coordinates: distance ties have probability zero.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, dim: usize, classes: usize) -> LabeledDataset {
    let points = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels = random_labels(rng, n, classes);
    LabeledDataset::with_class_count(points, labels, classes).unwrap()
}

/// Small integer grid: plenty of exact distance ties.
pub fn grid_dataset(rng: &mut ChaCha8Rng, n: usize, dim: usize, classes: usize) -> LabeledDataset {
    let points = (0..n).map(|_| (0..dim).map(|_| f64::from(rng.random_range(0..4))).collect()).collect();
    let labels = random_labels(rng, n, classes);
    LabeledDataset::with_class_count(points, labels, classes).unwrap()
}

/// Every class appears at least once when `n >= classes`.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    for (c, l) in labels.iter_mut().take(classes.min(n)).enumerate() {
        *l = c;
    }
    labels
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

pub fn points(ds: &LabeledDataset) -> Vec<Vec<f64>> {
    ds.points().map(<[f64]>::to_vec).collect()
}

/// Indices of the `k` nearest members of `pool` to `p`, by (distance, index).
/// `None` in the pool stands for the query, which sorts after every
/// dataset point at the same distance.
pub fn nearest(p: &[f64], pts: &[Vec<f64>], q: Option<&[f64]>, pool: &[Option<usize>], k: usize) -> Vec<Option<usize>> {
    let mut cand: Vec<(f64, usize, Option<usize>)> = pool
        .iter()
        .map(|&c| match c {
            Some(i) => (dist2(p, &pts[i]), i, c),
            None => (dist2(p, q.unwrap()), usize::MAX, None),
        })
        .collect();
    cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    cand.into_iter().take(k).map(|c| c.2).collect()
}

/// `N_k(q)` among the dataset points except `exclude`.
pub fn naive_knn(q: &[f64], pts: &[Vec<f64>], exclude: Option<usize>, k: usize) -> Vec<usize> {
    let pool: Vec<Option<usize>> = (0..pts.len()).filter(|&i| Some(i) != exclude).map(Some).collect();
    nearest(q, pts, None, &pool, k).into_iter().map(Option::unwrap).collect()
}

/// Is the query among the `k` nearest neighbors of point `j` once added to
/// `j`'s candidate set?
pub fn naive_nprime(j: usize, q: &[f64], pts: &[Vec<f64>], exclude: Option<usize>, k: usize) -> bool {
    let mut pool: Vec<Option<usize>> = (0..pts.len()).filter(|&i| i != j && Some(i) != exclude).map(Some).collect();
    pool.push(None);
    nearest(&pts[j], pts, Some(q), &pool, k).contains(&None)
}

pub fn naive_mutual(q: &[f64], pts: &[Vec<f64>], exclude: Option<usize>, k: usize) -> Vec<usize> {
    naive_knn(q, pts, exclude, k).into_iter().filter(|&j| naive_nprime(j, q, pts, exclude, k)).collect()
}

/// Within-dataset relation: is `j` among the `k` nearest neighbors of `i`?
pub fn naive_relates(i: usize, j: usize, pts: &[Vec<f64>], k: usize) -> bool {
    i != j && naive_knn(&pts[i], pts, Some(i), k).contains(&j)
}

/// Multiplicity matrix of the training graph: `fwd·rev` (mutual) or
/// `fwd + rev` (symmetric).
pub fn naive_multiplicity(pts: &[Vec<f64>], k: usize, symmetric: bool) -> DMatrix<f64> {
    let n = pts.len();
    DMatrix::from_fn(n, n, |i, j| {
        let a = naive_relates(i, j, pts, k);
        let b = naive_relates(j, i, pts, k);
        match (symmetric, a, b) {
            (true, _, _) => f64::from(u8::from(a) + u8::from(b)),
            (false, true, true) => 1.0,
            _ => 0.0,
        }
    })
}

/// `C̃ = σ₀(D − W₁) + σ²I` assembled entry by entry.
pub fn naive_precision(pts: &[Vec<f64>], k: usize, symmetric: bool, sigma0: f64, sigma2: f64) -> DMatrix<f64> {
    let m = naive_multiplicity(pts, k, symmetric);
    let n = pts.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            sigma0 * m.row(i).sum() + sigma2
        } else {
            -sigma0 * m[(i, j)]
        }
    })
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log density of `N(y; 0, precision⁻¹)` using a determinant and a plain
/// quadratic form.
pub fn gaussian_log_density_precision(precision: &DMatrix<f64>, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let v = nalgebra::DVector::from_column_slice(y);
    0.5 * precision.determinant().ln() - 0.5 * v.dot(&(precision * &v)) - 0.5 * n * LN_2PI
}

pub fn dense_binary(precision: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let y: Vec<f64> = labels.iter().map(|&c| if c == 0 { -1.0 } else { 1.0 }).collect();
    gaussian_log_density_precision(precision, &y)
}

pub fn dense_mul1(precision: &DMatrix<f64>, labels: &[usize], classes: usize) -> f64 {
    (0..classes)
        .map(|l| {
            let y: Vec<f64> = labels.iter().map(|&c| f64::from(u8::from(c == l))).collect();
            gaussian_log_density_precision(precision, &y)
        })
        .sum()
}

/// Difference outputs `f_i^{y_i} − f_i^j` (`j ≠ y_i`) as an explicit linear
/// map of the stacked latent vector `(f⁰, …, f^{J−1})`, whose prior is
/// block-diagonal with `J` copies of `C̃⁻¹`; evidence of the all-ones target.
pub fn dense_mul2(precision: &DMatrix<f64>, labels: &[usize], classes: usize) -> f64 {
    let n = labels.len();
    let cov = precision.clone().try_inverse().unwrap();
    let mut big = DMatrix::<f64>::zeros(classes * n, classes * n);
    for c in 0..classes {
        big.view_mut((c * n, c * n), (n, n)).copy_from(&cov);
    }
    let rows: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..classes).filter(move |&j| j != labels[i]).map(move |j| (i, j))).collect();
    let mut d = DMatrix::<f64>::zeros(rows.len(), classes * n);
    for (r, &(i, j)) in rows.iter().enumerate() {
        d[(r, labels[i] * n + i)] += 1.0;
        d[(r, j * n + i)] -= 1.0;
    }
    let cmul = &d * big * d.transpose();
    let m = rows.len();
    let inv = cmul.clone().try_inverse().unwrap();
    let ones = nalgebra::DVector::from_element(m, 1.0);
    -0.5 * cmul.determinant().ln() - 0.5 * m as f64 * LN_2PI - 0.5 * ones.dot(&(inv * &ones))
}

/// Classic vote from first principles. `votes` lists (point, multiplicity)
/// in nearest-first order; ties between top classes go to the class whose
/// closest voter is nearest; an empty vote gives `fallback`.
pub fn naive_vote(votes: &[(usize, u32)], labels: &[usize], classes: usize, fallback: usize) -> usize {
    if votes.is_empty() {
        return fallback;
    }
    let mut count = vec![0u32; classes];
    for &(i, m) in votes {
        count[labels[i]] += m;
    }
    let best = *count.iter().max().unwrap();
    votes.iter().map(|&(i, _)| labels[i]).find(|&c| count[c] == best).unwrap()
}

/// Decision of the classic rule `rule` ("knn", "mknn", "sknn") at query `q`.
pub fn naive_classic(rule: &str, q: &[f64], ds: &LabeledDataset, exclude: Option<usize>, k: usize) -> usize {
    let pts = points(ds);
    let labels = ds.labels();
    let classes = ds.num_classes();
    let knn = naive_knn(q, &pts, exclude, k);
    let first = naive_knn(q, &pts, exclude, 1)[0];
    match rule {
        "knn" => naive_vote(&knn.iter().map(|&i| (i, 1)).collect::<Vec<_>>(), labels, classes, labels[first]),
        "mknn" => {
            let m: Vec<(usize, u32)> = naive_mutual(q, &pts, exclude, k).into_iter().map(|i| (i, 1)).collect();
            naive_vote(&m, labels, classes, labels[first])
        }
        "sknn" => {
            let order = naive_knn(q, &pts, exclude, pts.len() - usize::from(exclude.is_some()));
            let votes: Vec<(usize, u32)> = order
                .into_iter()
                .map(|j| (j, u32::from(knn.contains(&j)) + u32::from(naive_nprime(j, q, &pts, exclude, k))))
                .filter(|v| v.1 > 0)
                .collect();
            naive_vote(&votes, labels, classes, 0)
        }
        _ => unreachable!(),
    }
}
