//! Plain, mutual and symmetric k-NN rules: regression estimates and vote
//! classifiers.
//!
//! Vote ties go to the class of the nearest contributing neighbor among the
//! tied classes. A mutual vote with no mutual neighbors falls back to the
//! 1-NN label and is flagged.

use log::debug;

use crate::dataset::RegressionTargets;
use crate::error::{Error, Result};
use crate::neighbors::{NeighborIndex, QueryProfile, Variant};

/// The three classic neighbor rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ClassicRule {
    Knn,
    Mknn,
    Sknn,
}

impl ClassicRule {
    pub fn name(self) -> &'static str {
        match self {
            ClassicRule::Knn => "kNN",
            ClassicRule::Mknn => "MkNN",
            ClassicRule::Sknn => "SkNN",
        }
    }

    /// Classifies a profiled query.
    pub fn decide(self, profile: &QueryProfile, labels: &[usize], num_classes: usize, k: usize) -> Result<Decision> {
        match self {
            ClassicRule::Knn => knn_vote(profile, labels, num_classes, k),
            ClassicRule::Mknn => mknn_vote(profile, labels, num_classes, k),
            ClassicRule::Sknn => sknn_vote(profile, labels, num_classes, k),
        }
    }
}

impl From<Variant> for ClassicRule {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Mutual => ClassicRule::Mknn,
            Variant::Symmetric => ClassicRule::Sknn,
        }
    }
}

/// Per-class vote counts with the nearest contributor of each class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    counts: Vec<u32>,
    // (position in nearest-first order, dataset index) of the first contributor
    nearest: Vec<Option<(usize, usize)>>,
}

impl VoteTally {
    pub fn new(num_classes: usize) -> Self {
        Self { counts: vec![0; num_classes], nearest: vec![None; num_classes] }
    }

    /// Builds a tally from `(point, multiplicity)` pairs given nearest first.
    pub fn from_votes(votes: impl IntoIterator<Item = (usize, u32)>, labels: &[usize], num_classes: usize) -> Self {
        let mut t = Self::new(num_classes);
        for (pos, (i, m)) in votes.into_iter().enumerate() {
            let c = labels[i];
            t.counts[c] += m;
            if t.nearest[c].is_none() && m > 0 {
                t.nearest[c] = Some((pos, i));
            }
        }
        t
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Nearest contributing point of class `c`.
    pub fn nearest(&self, c: usize) -> Option<usize> {
        self.nearest[c].map(|n| n.1)
    }

    /// `(class, tied)`: the most-voted class, ties resolved toward the
    /// nearest contributor; all-zero tallies give class 0.
    pub fn winner(&self) -> (usize, bool) {
        let best = self.counts.iter().copied().max().unwrap_or(0);
        let tied: Vec<usize> = (0..self.counts.len()).filter(|&c| self.counts[c] == best).collect();
        if best == 0 {
            return (0, tied.len() > 1);
        }
        let class = tied.iter().copied().min_by_key(|&c| self.nearest[c].map_or(usize::MAX, |n| n.0)).unwrap_or(0);
        (class, tied.len() > 1)
    }
}

/// A classic vote decision with its diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub class: usize,
    pub tally: VoteTally,
    /// More than one class reached the top count.
    pub tie: bool,
    /// No mutual neighbors; the 1-NN label was used.
    pub fallback: bool,
}

fn check(profile: &QueryProfile, labels: &[usize], k: usize) -> Result<()> {
    if k == 0 || k > profile.max_k() {
        return Err(Error::KOutOfRange { k, max: profile.max_k() });
    }
    if labels.len() < profile.candidates() {
        return Err(Error::InvalidParameter(format!("{} labels for {} candidates", labels.len(), profile.candidates())));
    }
    Ok(())
}

fn decide(tally: VoteTally) -> Decision {
    let (class, tie) = tally.winner();
    Decision { class, tally, tie, fallback: false }
}

pub fn knn_vote(profile: &QueryProfile, labels: &[usize], num_classes: usize, k: usize) -> Result<Decision> {
    check(profile, labels, k)?;
    Ok(decide(VoteTally::from_votes(profile.knn(k).iter().map(|&i| (i, 1)), labels, num_classes)))
}

pub fn mknn_vote(profile: &QueryProfile, labels: &[usize], num_classes: usize, k: usize) -> Result<Decision> {
    check(profile, labels, k)?;
    let active = profile.active(k, Variant::Mutual);
    if active.is_empty() {
        let nearest = profile.knn(1)[0];
        debug!("empty mutual neighbor set at k = {k}; using the 1-NN label");
        return Ok(Decision {
            class: labels[nearest],
            tally: VoteTally::new(num_classes),
            tie: false,
            fallback: true,
        });
    }
    Ok(decide(VoteTally::from_votes(active, labels, num_classes)))
}

pub fn sknn_vote(profile: &QueryProfile, labels: &[usize], num_classes: usize, k: usize) -> Result<Decision> {
    check(profile, labels, k)?;
    Ok(decide(VoteTally::from_votes(profile.active(k, Variant::Symmetric), labels, num_classes)))
}

fn weighted_mean(profile: &QueryProfile, y: &[f64], k: usize, variant: Variant) -> Result<f64> {
    if k == 0 || k > profile.max_k() {
        return Err(Error::KOutOfRange { k, max: profile.max_k() });
    }
    let active = profile.active(k, variant);
    let total: u32 = active.iter().map(|a| a.1).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let s: f64 = active.iter().map(|&(i, m)| f64::from(m) * y[i]).sum();
    Ok(s / f64::from(total))
}

/// Mean target over `M_k(q)`, 0 when it is empty.
pub fn mknn_regress_profile(profile: &QueryProfile, y: &[f64], k: usize) -> Result<f64> {
    weighted_mean(profile, y, k, Variant::Mutual)
}

/// Symmetric-weight average: mutual neighbors count twice, one-sided once.
pub fn sknn_regress_profile(profile: &QueryProfile, y: &[f64], k: usize) -> Result<f64> {
    weighted_mean(profile, y, k, Variant::Symmetric)
}

fn target_column(index: &NeighborIndex, y: &RegressionTargets) -> Result<Vec<f64>> {
    if y.rows() != index.len() || y.cols() != 1 {
        return Err(Error::InvalidParameter(format!(
            "expected {} x 1 targets, got {} x {}",
            index.len(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(y.column(0).to_vec())
}

pub fn mknn_regress(q: &[f64], index: &NeighborIndex, y: &RegressionTargets, k: usize) -> Result<f64> {
    mknn_regress_profile(&index.profile(q, None), &target_column(index, y)?, k)
}

pub fn sknn_regress(q: &[f64], index: &NeighborIndex, y: &RegressionTargets, k: usize) -> Result<f64> {
    sknn_regress_profile(&index.profile(q, None), &target_column(index, y)?, k)
}

fn classify_with(rule: ClassicRule, q: &[f64], index: &NeighborIndex, k: usize) -> Result<Decision> {
    let data = index.data();
    if k > index.max_k() {
        return Err(Error::KOutOfRange { k, max: index.max_k() });
    }
    rule.decide(&index.profile(q, None), data.labels(), data.num_classes(), k)
}

pub fn knn_classify(q: &[f64], index: &NeighborIndex, k: usize) -> Result<Decision> {
    classify_with(ClassicRule::Knn, q, index, k)
}

pub fn mknn_classify(q: &[f64], index: &NeighborIndex, k: usize) -> Result<Decision> {
    classify_with(ClassicRule::Mknn, q, index, k)
}

pub fn sknn_classify(q: &[f64], index: &NeighborIndex, k: usize) -> Result<Decision> {
    classify_with(ClassicRule::Sknn, q, index, k)
}
