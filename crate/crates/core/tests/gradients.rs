//! Analytic evidence gradients against central finite differences.

mod common;

use common::*;
use knn_evidence::gp::{build_precision, evidence_gradient, log_evidence, Formulation, HyperParam, SpectralEvidence};
use knn_evidence::neighbors::{build_weighted_graph, NeighborIndex, Variant};
use rand::Rng;

fn evidence_at(index: &NeighborIndex, k: usize, variant: Variant, s0: f64, s2: f64, f: Formulation) -> f64 {
    let ds = index.data();
    let g = build_weighted_graph(index, k, s0, variant).unwrap();
    log_evidence(&build_precision(&g, s2).unwrap(), ds.labels(), ds.num_classes(), f).unwrap()
}

fn check(seed: u64, f: Formulation) {
    let mut r = rng(seed);
    let n = r.random_range(4..=15);
    let classes = if f == Formulation::Binary { 2 } else { r.random_range(2..=4) };
    let dim = r.random_range(1..=3);
    let ds = random_dataset(&mut r, n, dim, classes);
    let index = NeighborIndex::new(&ds);
    let k = r.random_range(1..n);
    let variant = if r.random_bool(0.5) { Variant::Mutual } else { Variant::Symmetric };
    let s0 = 10f64.powf(r.random_range(-1.0..1.0));
    let s2 = 10f64.powf(r.random_range(-1.0..0.5));
    let model = build_precision(&build_weighted_graph(&index, k, s0, variant).unwrap(), s2).unwrap();
    let unit = build_weighted_graph(&index, k, 1.0, variant).unwrap();
    let (_, spectral) = SpectralEvidence::new(&unit, ds.labels(), classes, f).unwrap().value_and_gradient(s0, s2);

    for (param, slot) in [(HyperParam::Sigma0, 0), (HyperParam::Sigma2, 1)] {
        let analytic = evidence_gradient(&model, ds.labels(), classes, f, param).unwrap();
        let (base, h) = if slot == 0 { (s0, 1e-5 * s0) } else { (s2, 1e-5 * s2) };
        let at = |v: f64| {
            if slot == 0 {
                evidence_at(&index, k, variant, v, s2, f)
            } else {
                evidence_at(&index, k, variant, s0, v, f)
            }
        };
        let fd = (at(base + h) - at(base - h)) / (2.0 * h);
        let rel = (analytic - fd).abs() / fd.abs().max(1.0);
        assert!(rel < 1e-4, "seed {seed} {f:?} {param:?}: analytic {analytic} fd {fd}");
        let rel = (spectral[slot] - fd).abs() / fd.abs().max(1.0);
        assert!(rel < 1e-4, "seed {seed} {f:?} {param:?} spectral: {} fd {fd}", spectral[slot]);
    }
}

#[test]
fn binary_gradient() {
    (0..100).for_each(|s| check(s, Formulation::Binary));
}

#[test]
fn formulation_one_gradient() {
    (0..100).for_each(|s| check(s, Formulation::Mul1));
}

#[test]
fn formulation_two_gradient() {
    (0..100).for_each(|s| check(s, Formulation::Mul2));
}
