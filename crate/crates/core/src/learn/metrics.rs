//! Confusion counts and derived percentages, tumor as the positive class.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth.is_tumor(), predicted.is_tumor()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Self::default();
        for (t, p) in pairs {
            c.record(t, p);
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Percentages in `[0, 100]`. A ratio with a zero denominator is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(c: Confusion) -> Self {
        Self {
            confusion: c,
            accuracy: percent(c.tp + c.tn, c.total()),
            precision: percent(c.tp, c.tp + c.fp),
            recall: percent(c.tp, c.tp + c.fn_),
            f1: percent(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.confusion;
        writeln!(f, "            predicted T  predicted N")?;
        writeln!(f, "actual T    {:>11}  {:>11}", c.tp, c.fn_)?;
        writeln!(f, "actual N    {:>11}  {:>11}", c.fp, c.tn)?;
        writeln!(f, "accuracy  {:>7.2}%", self.accuracy)?;
        writeln!(f, "precision {:>7.2}%", self.precision)?;
        writeln!(f, "recall    {:>7.2}%", self.recall)?;
        write!(f, "f1        {:>7.2}%", self.f1)
    }
}
