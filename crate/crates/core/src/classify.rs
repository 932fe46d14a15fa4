//! Posterior classification, cluster similarity, and classification
//! breakdown verdicts.

use crate::data::Dataset;
use crate::em::{e_step, FitResult};
use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::model::MixtureParams;
use serde::Serialize;

/// Label value reserved for the noise class; components are `1..=s`.
pub const NOISE_LABEL: usize = 0;

/// A hard clustering of point indices. Component clusters carry labels
/// `1..=s`; points assigned to the noise class keep [`NOISE_LABEL`] and
/// belong to no cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    labels: Vec<usize>,
    s: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, s: usize) -> Result<Self> {
        if labels.iter().any(|&l| l > s) {
            return Err(Error::InvalidArgument(format!(
                "labels must lie in 0..={s}"
            )));
        }
        Ok(Partition { labels, s })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Nonempty component clusters as `(label, ascending point indices)`.
    pub fn clusters(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = (1..=self.s).map(|l| (l, Vec::new())).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            if l != NOISE_LABEL {
                out[l - 1].1.push(i);
            }
        }
        out.retain(|(_, members)| !members.is_empty());
        out
    }

    /// Number of nonempty component clusters.
    pub fn cluster_count(&self) -> usize {
        self.clusters().len()
    }

    /// Indices assigned to the noise class.
    pub fn noise_points(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == NOISE_LABEL)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Hard classification by posterior weight. Component ties go to the
/// lowest component index; the noise class wins only a strict maximum.
pub fn classify(params: &MixtureParams, data: &Dataset) -> Result<Partition> {
    let resp = e_step(params, data)?;
    let s = params.s();
    let noise = resp.has_noise_column();
    let mut labels = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let row = resp.row(i);
        let mut best_j = 0usize;
        let mut best = f64::NEG_INFINITY;
        for j in 0..s {
            let v = row[j + usize::from(noise)];
            if v > best {
                best = v;
                best_j = j + 1;
            }
        }
        let label = if noise && row[0] > best {
            NOISE_LABEL
        } else {
            best_j
        };
        labels.push(label);
    }
    Partition::new(labels, s)
}

/// Set similarity `2|C ∩ D| / (|C| + |D|)` as an exact rational:
/// 0 only for disjoint sets, 1 only for equal sets.
pub fn gamma(c: &[usize], d: &[usize]) -> Result<Frac> {
    if c.is_empty() || d.is_empty() {
        return Err(Error::InvalidArgument(
            "similarity of an empty cluster is undefined".into(),
        ));
    }
    debug_assert!(c.windows(2).all(|w| w[0] < w[1]), "index sets must be sorted");
    debug_assert!(d.windows(2).all(|w| w[0] < w[1]), "index sets must be sorted");
    let mut inter = 0u64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < c.len() && j < d.len() {
        match c[i].cmp(&d[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(Frac::new(2 * inter, (c.len() + d.len()) as u64))
}

/// Similarity of `c` to its best-matching cluster of `partition`
/// (the largest `gamma` over the partition's clusters; zero when the
/// partition has no clusters left).
pub fn gamma_star(c: &[usize], partition: &Partition) -> Result<Frac> {
    if c.is_empty() {
        return Err(Error::InvalidArgument(
            "similarity of an empty cluster is undefined".into(),
        ));
    }
    let mut best = Frac::zero();
    for (_, members) in partition.clusters() {
        let g = gamma(c, &members)?;
        if g > best {
            best = g;
        }
    }
    Ok(best)
}

/// Classification of the augmented data restricted to the original points.
///
/// `orig_to_aug[i]` is the index of original point `i` inside `augmented`
/// (as produced by [`Dataset::augmented`]). Clusters that lose all their
/// points under the restriction disappear (they only held added points).
pub fn induced_partition(
    fit_on_augmented: &FitResult,
    augmented: &Dataset,
    orig_to_aug: &[usize],
) -> Result<Partition> {
    let full = classify(&fit_on_augmented.params, augmented)?;
    let labels: Vec<usize> = orig_to_aug.iter().map(|&j| full.labels()[j]).collect();
    Partition::new(labels, fit_on_augmented.params.s())
}

/// Verdict for one original cluster.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterCheck {
    pub label: usize,
    pub size: usize,
    pub gamma_star: Frac,
    pub broke: bool,
}

/// Per-cluster classification-breakdown verdicts: a cluster breaks when
/// its best-match similarity is at most 2/3 (compared exactly).
#[derive(Debug, Clone, Serialize)]
pub struct BreakdownVerdict {
    pub clusters: Vec<ClusterCheck>,
    pub broken_count: usize,
}

pub fn classification_breakdown_check(
    original: &Partition,
    restricted: &Partition,
) -> Result<BreakdownVerdict> {
    let threshold = Frac::new(2, 3);
    let mut clusters = Vec::new();
    let mut broken_count = 0usize;
    for (label, members) in original.clusters() {
        let g = gamma_star(&members, restricted)?;
        let broke = g <= threshold;
        if broke {
            broken_count += 1;
        }
        clusters.push(ClusterCheck {
            label,
            size: members.len(),
            gamma_star: g,
            broke,
        });
    }
    Ok(BreakdownVerdict {
        clusters,
        broken_count,
    })
}
