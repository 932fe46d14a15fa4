//! Ordered sample container.

use crate::error::{Error, Result};

/// A one-dimensional sample held in nondecreasing order, with cached
/// extremes and the count of distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    distinct: usize,
}

impl Dataset {
    /// Builds a dataset from arbitrary-order values (sorted internally).
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("dataset must not be empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dataset values must be finite".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        let distinct = count_distinct(&values);
        Ok(Dataset { values, distinct })
    }

    /// Like [`Dataset::new`], but also returns the map from each input
    /// position to its index in the sorted order. Used when point identity
    /// must survive sorting (e.g. restricting an augmented clustering to
    /// the original points).
    pub fn from_unsorted(values: Vec<f64>) -> Result<(Self, Vec<usize>)> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("dataset must not be empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dataset values must be finite".into(),
            ));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut map = vec![0usize; values.len()];
        for (sorted_pos, &orig) in order.iter().enumerate() {
            map[orig] = sorted_pos;
        }
        let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let distinct = count_distinct(&sorted);
        Ok((
            Dataset {
                values: sorted,
                distinct,
            },
            map,
        ))
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn xmin(&self) -> f64 {
        self.values[0]
    }

    pub fn xmax(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn range(&self) -> f64 {
        self.xmax() - self.xmin()
    }

    /// Number of distinct values; caps the identifiable component count.
    pub fn distinct(&self) -> usize {
        self.distinct
    }

    /// New dataset with `added` appended, plus the original-index map
    /// into the sorted result.
    pub fn augmented(&self, added: &[f64]) -> Result<(Self, Vec<usize>)> {
        let mut values = self.values.clone();
        values.extend_from_slice(added);
        Dataset::from_unsorted(values)
    }

    /// Interpolated empirical quantile (linear between order statistics).
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let pos = q * (self.values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 >= self.values.len() {
            self.values[lo]
        } else {
            self.values[lo] * (1.0 - frac) + self.values[lo + 1] * frac
        }
    }

    /// Population standard deviation (1/n denominator).
    pub fn sd(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        var.sqrt()
    }
}

fn count_distinct(sorted: &[f64]) -> usize {
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}
