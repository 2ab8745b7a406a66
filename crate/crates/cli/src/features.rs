//! Dictionary learning and feature tables over collections of patches.

use std::path::Path;

use drlbp_core::imaging::{to_channel, RgbPatch};
use drlbp_core::learn::{Dataset, Label};
use drlbp_core::texture::{
    extract_histogram, extract_histogram_pair, project, DictionaryBuilder, DominantPatternDictionary, FeatureLayout,
    PatternHistogram, SparseHistogram, Variant,
};
use drlbp_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ChannelSpec;
use crate::synth::Split;

/// Random access to patch `i` of a collection.
pub type Fetch<'a> = &'a (dyn Fn(usize) -> Result<RgbPatch> + Sync);

/// Histograms of one patch indexed `[variant][channel]`. The channel image is
/// computed once and both variants come from a single sampling pass.
pub fn patch_histograms(
    patch: &RgbPatch,
    channels: &[ChannelSpec],
    variants: &[Variant],
) -> Result<Vec<Vec<PatternHistogram>>> {
    let mut out: Vec<Vec<PatternHistogram>> = vec![Vec::with_capacity(channels.len()); variants.len()];
    for spec in channels {
        let img = to_channel(patch, spec.channel);
        if variants.len() > 1 {
            let (lbp, rlbp) = extract_histogram_pair(&img, &spec.lbp)?;
            for (slot, v) in out.iter_mut().zip(variants) {
                slot.push(if *v == Variant::Lbp { lbp.clone() } else { rlbp.clone() });
            }
        } else {
            out[0].push(extract_histogram(&img, &spec.lbp.with_variant(variants[0]))?);
        }
    }
    Ok(out)
}

/// Dictionaries `[variant][channel]` learned from patches `0..n`.
///
/// Per-thread sums are merged afterwards; integer addition makes the result
/// independent of the split.
pub fn learn_dictionaries(
    n: usize,
    fetch: Fetch<'_>,
    channels: &[ChannelSpec],
    variants: &[Variant],
    theta: f64,
) -> Result<Vec<Vec<DominantPatternDictionary>>> {
    if n == 0 {
        return Err(Error::Dataset("no training patches to learn dictionaries from".into()));
    }
    let fresh = || -> Result<Vec<Vec<DictionaryBuilder>>> {
        variants
            .iter()
            .map(|&v| {
                channels
                    .iter()
                    .map(|c| DictionaryBuilder::new(c.channel, c.lbp.with_variant(v)))
                    .collect()
            })
            .collect()
    };
    let template = fresh()?;
    let sums = (0..n)
        .into_par_iter()
        .try_fold(
            || template.clone(),
            |mut acc, i| -> Result<_> {
                let hists = patch_histograms(&fetch(i)?, channels, variants)?;
                for (builders, hs) in acc.iter_mut().zip(&hists) {
                    for (b, h) in builders.iter_mut().zip(hs) {
                        b.add(h)?;
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || template.clone(),
            |a, b| {
                a.into_iter()
                    .zip(&b)
                    .map(|(xs, ys)| xs.into_iter().zip(ys).map(|(x, y)| x.merge(y)).collect())
                    .collect()
            },
        )?;
    sums.iter()
        .map(|builders| builders.iter().map(|b| b.finish(theta)).collect())
        .collect()
}

/// Feature rows `[set][patch]` for every dictionary set in `sets`. All sets
/// must share the channel list; they may differ in variant.
pub fn featurize(n: usize, fetch: Fetch<'_>, sets: &[Vec<DominantPatternDictionary>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let channels: Vec<ChannelSpec> = sets[0]
        .iter()
        .map(|d| ChannelSpec {
            channel: d.channel,
            lbp: d.config(),
        })
        .collect();
    let variants: Vec<Variant> = sets.iter().map(|s| s[0].variant).collect();
    let per_patch = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<Vec<f64>>> {
            let hists = patch_histograms(&fetch(i)?, &channels, &variants)?;
            sets.iter()
                .zip(&hists)
                .map(|(dicts, hs)| {
                    let mut row = Vec::new();
                    for (d, h) in dicts.iter().zip(hs) {
                        row.extend(project(h, d)?);
                    }
                    Ok(row)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::with_capacity(n); sets.len()];
    for rows in per_patch {
        for (slot, row) in out.iter_mut().zip(rows) {
            slot.push(row);
        }
    }
    Ok(out)
}

/// Dictionary sets `[variant][channel]` with feature rows `[variant][patch]`.
pub type LearnedFeatures = (Vec<Vec<DominantPatternDictionary>>, Vec<Vec<Vec<f64>>>);

/// Learns dictionaries from patches `0..n_train` and projects every patch in
/// `0..n` with them. Training histograms are kept in sparse form in between,
/// so each patch is read and described exactly once.
pub fn learn_and_featurize(
    n_train: usize,
    n: usize,
    fetch: Fetch<'_>,
    channels: &[ChannelSpec],
    variants: &[Variant],
    theta: f64,
) -> Result<LearnedFeatures> {
    if n_train == 0 {
        return Err(Error::Dataset("no training patches to learn dictionaries from".into()));
    }
    let train: Vec<Vec<Vec<SparseHistogram>>> = (0..n_train)
        .into_par_iter()
        .map(|i| {
            let hists = patch_histograms(&fetch(i)?, channels, variants)?;
            Ok(hists
                .iter()
                .map(|hs| hs.iter().map(|h| h.to_sparse()).collect())
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut sets = Vec::with_capacity(variants.len());
    for (vi, &v) in variants.iter().enumerate() {
        let mut dicts = Vec::with_capacity(channels.len());
        for (ci, spec) in channels.iter().enumerate() {
            let mut b = DictionaryBuilder::new(spec.channel, spec.lbp.with_variant(v))?;
            for h in &train {
                b.add(&h[vi][ci])?;
            }
            dicts.push(b.finish(theta)?);
        }
        sets.push(dicts);
    }

    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n); sets.len()];
    let projected = train
        .par_iter()
        .map(|h| -> Result<Vec<Vec<f64>>> {
            sets.iter()
                .zip(h)
                .map(|(dicts, hs)| {
                    let mut row = Vec::new();
                    for (d, x) in dicts.iter().zip(hs) {
                        row.extend(project(x, d)?);
                    }
                    Ok(row)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    drop(train);
    for per_set in projected {
        for (slot, row) in rows.iter_mut().zip(per_set) {
            slot.push(row);
        }
    }
    if n > n_train {
        let rest = |i: usize| fetch(n_train + i);
        for (slot, more) in rows.iter_mut().zip(featurize(n - n_train, &rest, &sets)?) {
            slot.extend(more);
        }
    }
    Ok((sets, rows))
}

/// Feature rows with their manifest metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub layout: FeatureLayout,
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub slide_ids: Vec<String>,
    pub splits: Vec<Split>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CsvMeta {
    id: String,
    label: Label,
    slide_id: String,
    split: Split,
}

impl FeatureTable {
    pub fn dataset(&self, split: Split) -> Result<Dataset> {
        let idx: Vec<usize> = (0..self.rows.len()).filter(|&i| self.splits[i] == split).collect();
        if idx.is_empty() {
            return Err(Error::Dataset(format!(
                "no {} rows in the feature table",
                split.as_str()
            )));
        }
        Dataset::new(
            self.layout.clone(),
            idx.iter().map(|&i| self.rows[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            idx.iter().map(|&i| self.ids[i].clone()).collect(),
        )
    }

    /// CSV with `id,label,slide_id,split,f0..f{d-1}`; values print in
    /// shortest round-trip form.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        let d = self.layout.dim();
        let mut header = vec!["id".to_string(), "label".into(), "slide_id".into(), "split".into()];
        header.extend((0..d).map(|j| format!("f{j}")));
        w.write_record(&header)?;
        for i in 0..self.rows.len() {
            let mut rec = vec![
                self.ids[i].clone(),
                self.labels[i].to_string(),
                self.slide_ids[i].clone(),
                self.splits[i].as_str().to_string(),
            ];
            rec.extend(self.rows[i].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.as_ref().into(),
            source: e,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>, layout: FeatureLayout) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path)?;
        let d = layout.dim();
        let width = r.headers()?.len();
        if width != d + 4 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: width.saturating_sub(4),
            });
        }
        let mut t = FeatureTable {
            layout,
            ids: vec![],
            labels: vec![],
            slide_ids: vec![],
            splits: vec![],
            rows: vec![],
        };
        for rec in r.records() {
            let rec = rec?;
            let meta: CsvMeta = csv::StringRecord::from(rec.iter().take(4).collect::<Vec<_>>())
                .deserialize(None)
                .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
            let row = rec
                .iter()
                .skip(4)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Dataset(format!("{}: row {}: {e}", path.display(), meta.id)))?;
            t.ids.push(meta.id);
            t.labels.push(meta.label);
            t.slide_ids.push(meta.slide_id);
            t.splits.push(meta.split);
            t.rows.push(row);
        }
        Ok(t)
    }
}
