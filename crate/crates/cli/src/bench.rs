//! Per-stage timings of the patch pipeline.

use std::time::{Duration, Instant};

use drlbp_core::imaging::{to_channel, RgbPatch};
use drlbp_core::learn::{train, ClassifierSpec, Dataset, Label, Prediction, TrainedModel};
use drlbp_core::texture::{assemble_feature, extract_histogram, project, FeatureExtractor, FeatureVector};
use drlbp_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::features::learn_dictionaries;
use crate::synth::{derive_seed, render_patch, TextureClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub iterations: usize,
    /// Patches in the throughput run.
    pub patches: usize,
    /// Patches used to learn the benchmark dictionaries and model.
    pub training_patches: usize,
    pub threads: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            iterations: 20,
            patches: 100,
            training_patches: 8,
            threads: 4,
        }
    }
}

/// Median milliseconds per patch and stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub channel_transform_ms: f64,
    pub histogram_ms: f64,
    pub projection_ms: f64,
    pub predict_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub patches: usize,
    pub threads: usize,
    pub sequential_ms: f64,
    pub parallel_ms: f64,
    pub speedup: f64,
    /// Parallel features and predictions equal the sequential ones bit for bit.
    pub identical: bool,
    pub available_cores: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub patch_size: usize,
    pub iterations: usize,
    pub classifier: ClassifierSpec,
    pub dictionary_sizes: Vec<usize>,
    pub single_thread: StageTimes,
    pub parallel: Throughput,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn bench_patch(cfg: &RunConfig, i: usize) -> RgbPatch {
    let class = if i.is_multiple_of(2) {
        TextureClass::Tumor
    } else {
        TextureClass::Healthy
    };
    render_patch(
        class,
        cfg.tile_size,
        derive_seed(cfg.seed, (0xbe9c << 16) | i as u64),
        0.37 * i as f64,
    )
}

/// Dictionaries and a model trained on a few synthetic patches, so the bench
/// needs no inputs.
pub fn bench_model(cfg: &RunConfig, n: usize) -> Result<(FeatureExtractor, TrainedModel)> {
    let n = n.max(2);
    let variant = cfg.channels[0].lbp.variant;
    let fetch = |i: usize| Ok(bench_patch(cfg, i));
    let sets = learn_dictionaries(n, &fetch, &cfg.channels, &[variant], cfg.theta)?;
    let extractor = FeatureExtractor::new(sets.into_iter().next().expect("one variant"))?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        rows.push(extractor.extract(&bench_patch(cfg, i))?.values);
    }
    let labels = (0..n)
        .map(|i| if i % 2 == 0 { Label::Tumor } else { Label::NotTumor })
        .collect();
    let ids = (0..n).map(|i| format!("bench{i}")).collect();
    let ds = Dataset::new(extractor.layout().clone(), rows, labels, ids)?;
    let spec = match cfg.classifier {
        ClassifierSpec::Knn { k, metric } => ClassifierSpec::Knn { k: k.min(n), metric },
        ref other => other.clone(),
    };
    Ok((extractor.clone(), train(&ds, &spec)?))
}

fn staged(patch: &RgbPatch, extractor: &FeatureExtractor, model: &TrainedModel) -> Result<[Duration; 4]> {
    let dicts = extractor.dictionaries();
    let t = Instant::now();
    let channels: Vec<_> = dicts.iter().map(|d| to_channel(patch, d.channel)).collect();
    let t_channel = t.elapsed();

    let t = Instant::now();
    let hists = channels
        .iter()
        .zip(dicts)
        .map(|(c, d)| extract_histogram(c, &d.config()))
        .collect::<Result<Vec<_>>>()?;
    let t_hist = t.elapsed();

    let t = Instant::now();
    let projections = hists
        .iter()
        .zip(dicts)
        .map(|(h, d)| Ok((d.channel, project(h, d)?)))
        .collect::<Result<Vec<_>>>()?;
    let x = assemble_feature(extractor.layout(), &projections)?;
    let t_proj = t.elapsed();

    let t = Instant::now();
    std::hint::black_box(model.predict(&x)?);
    Ok([t_channel, t_hist, t_proj, t.elapsed()])
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn process_all(
    patches: &[RgbPatch],
    extractor: &FeatureExtractor,
    model: &TrainedModel,
) -> Result<Vec<(FeatureVector, Prediction)>> {
    patches
        .par_iter()
        .map(|p| {
            let x = extractor.extract(p)?;
            let y = model.predict(&x)?;
            Ok((x, y))
        })
        .collect()
}

pub fn run_bench(cfg: &RunConfig, opts: &BenchOptions) -> Result<BenchReport> {
    if opts.iterations < 20 {
        return Err(Error::Config(format!(
            "bench needs at least 20 iterations, got {}",
            opts.iterations
        )));
    }
    if opts.patches == 0 || opts.threads == 0 {
        return Err(Error::Config("bench needs at least one patch and one thread".into()));
    }
    let (extractor, model) = bench_model(cfg, opts.training_patches)?;
    let patch = bench_patch(cfg, 1_000_000);

    let single = pool(1)?;
    let stages = single.install(|| -> Result<Vec<[Duration; 4]>> {
        (0..opts.iterations)
            .map(|_| staged(&patch, &extractor, &model))
            .collect()
    })?;
    let col = |k: usize| median(stages.iter().map(|s| ms(s[k])).collect());
    let single_thread = StageTimes {
        channel_transform_ms: col(0),
        histogram_ms: col(1),
        projection_ms: col(2),
        predict_ms: col(3),
        total_ms: median(stages.iter().map(|s| s.iter().copied().map(ms).sum()).collect()),
    };

    let patches: Vec<RgbPatch> = (0..opts.patches).map(|i| bench_patch(cfg, 2_000_000 + i)).collect();
    let t = Instant::now();
    let seq = single.install(|| process_all(&patches, &extractor, &model))?;
    let sequential_ms = ms(t.elapsed());
    let many = pool(opts.threads)?;
    let t = Instant::now();
    let par = many.install(|| process_all(&patches, &extractor, &model))?;
    let parallel_ms = ms(t.elapsed());
    let identical = seq.len() == par.len()
        && seq.iter().zip(&par).all(|((xa, ya), (xb, yb))| {
            xa.layout_hash == xb.layout_hash
                && xa
                    .values
                    .iter()
                    .map(|v| v.to_bits())
                    .eq(xb.values.iter().map(|v| v.to_bits()))
                && ya.label == yb.label
                && ya.score.to_bits() == yb.score.to_bits()
        });

    Ok(BenchReport {
        patch_size: cfg.tile_size,
        iterations: opts.iterations,
        classifier: model.spec().clone(),
        dictionary_sizes: extractor.dictionaries().iter().map(|d| d.len()).collect(),
        single_thread,
        parallel: Throughput {
            patches: opts.patches,
            threads: opts.threads,
            sequential_ms,
            parallel_ms,
            speedup: sequential_ms / parallel_ms,
            identical,
            available_cores: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    })
}
