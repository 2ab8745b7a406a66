//! k-nearest-neighbor vote over a stored training set.

use serde::{Deserialize, Serialize};

use super::dataset::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
    ChiSquare,
}

impl Distance {
    /// Squared Euclidean distance or the chi-square statistic. Only the
    /// ordering matters for voting, so the square root is skipped.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Distance::ChiSquare => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let s = x + y;
                    if s == 0.0 {
                        0.0
                    } else {
                        (x - y) * (x - y) / s
                    }
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnState {
    pub k: usize,
    pub metric: Distance,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl KnnState {
    /// Indices of the `k` nearest rows, nearest first. Equal distances keep
    /// the smaller training index.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (self.metric.eval(r, x), i))
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Tumor fraction among the neighbors.
    pub fn score(&self, x: &[f64]) -> f64 {
        let nn = self.neighbors(x);
        let tumor = nn.iter().filter(|&&i| self.labels[i].is_tumor()).count();
        tumor as f64 / nn.len() as f64
    }
}
