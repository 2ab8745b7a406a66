//! Argument parsing and the seven subcommands.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use drlbp_core::imaging::io::{read_rgb, read_roi_mask, write_rgb_png, write_roi_mask};
use drlbp_core::learn::{train, ClassifierSpec, Label, ModelKind, TrainedModel};
use drlbp_core::nuclei::{assess, CellularityReport};
use drlbp_core::pipeline::{
    region_metrics, render_overlay, render_thumbnail, run_inference, tile_slide, truth_to_grid, RegionMetrics,
};
use drlbp_core::texture::{DominantPatternDictionary, FeatureExtractor, FeatureLayout, Variant};
use drlbp_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::audit::{read_document, write_document, Audit};
use crate::bench::{run_bench, BenchOptions};
use crate::config::RunConfig;
use crate::features::{learn_and_featurize, FeatureTable};
use crate::manifest::{Manifest, ManifestRow};
use crate::protocol::run_comparison;
use crate::synth::{compose_slide, dataset_recipes, Split};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "drlbp",
    version,
    about = "Tumor-region detection in tiled H&E slides from rotated LBP texture"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; missing fields take defaults
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Overrides the config seed
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a slide into r{row}_c{col}.png tiles
    Tile {
        /// Slide image (PNG or TIFF)
        #[arg(long)]
        slide: PathBuf,
        /// Keep only tiles that pass the cellularity gate
        #[arg(long)]
        gate: bool,
    },
    /// Learn dictionaries on the train split and write the feature table
    Features {
        /// CSV with patch_path,label,slide_id,split
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Train the configured classifier on a feature directory
    Train {
        /// Directory written by `features`
        #[arg(long)]
        features: PathBuf,
    },
    /// Classify every tile of a slide and write the tumor map
    Predict {
        /// Slide image (PNG or TIFF)
        #[arg(long)]
        slide: PathBuf,
        /// model.json written by `train`
        #[arg(long)]
        model: PathBuf,
        /// Directory written by `features` (for the dictionaries)
        #[arg(long)]
        features: PathBuf,
        /// Ground-truth ROI mask (black = tumor)
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Patch-level and region-level evaluation, or the descriptor comparison
    Evaluate {
        /// model.json written by `train`
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory written by `features`
        #[arg(long)]
        features: Option<PathBuf>,
        /// Slide to predict for region metrics
        #[arg(long, requires_all = ["model", "features"])]
        slide: Option<PathBuf>,
        /// Ground-truth ROI mask (black = tumor)
        #[arg(long, requires = "slide")]
        truth: Option<PathBuf>,
        /// Compare LBP and RLBP under k-NN, SVM and RF on a manifest
        #[arg(long, conflicts_with_all = ["model", "features", "slide"])]
        compare: Option<PathBuf>,
    },
    /// Write a synthetic labeled slide, patch set and manifest
    Synth {
        /// Training patches
        #[arg(long, default_value_t = 80)]
        train: usize,
        /// Test patches
        #[arg(long, default_value_t = 40)]
        test: usize,
    },
    /// Time the per-patch stages
    Bench {
        /// Timed repetitions per stage (at least 20)
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        /// Patches in the throughput run
        #[arg(long, default_value_t = 100)]
        patches: usize,
    },
}

/// Exit status for an error: configuration problems are usage errors,
/// everything else is a data error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::LayoutMismatch { .. } | Error::ChannelMismatch { .. } => EXIT_USAGE,
        Error::Tile { source, .. } => exit_code(source),
        _ => EXIT_DATA,
    }
}

/// Parses `argv` and runs the command, printing errors to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    }
    .with_seed(g.seed);
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    fs::create_dir_all(&g.out).map_err(|e| Error::Io {
        path: g.out.clone(),
        source: e,
    })?;
    let mut audit = Audit::new(&cfg);
    if let Some(p) = &g.config {
        audit.hash_file("config", p)?;
    }
    pool.install(|| match &cli.command {
        Command::Tile { slide, gate } => cmd_tile(&cfg, audit, slide, *gate, &g.out),
        Command::Features { manifest } => cmd_features(&cfg, audit, manifest, &g.out),
        Command::Train { features } => cmd_train(&cfg, audit, features, &g.out),
        Command::Predict {
            slide,
            model,
            features,
            truth,
        } => cmd_predict(&cfg, audit, slide, model, features, truth.as_deref(), &g.out),
        Command::Evaluate {
            model,
            features,
            slide,
            truth,
            compare,
        } => match (compare, model, features) {
            (Some(m), _, _) => cmd_compare(&cfg, audit, m, &g.out),
            (None, Some(model), Some(features)) => {
                cmd_evaluate(&cfg, audit, model, features, slide.as_deref(), truth.as_deref(), &g.out)
            }
            _ => Err(Error::Config(
                "evaluate needs --model and --features, or --compare MANIFEST".into(),
            )),
        },
        Command::Synth { train, test } => cmd_synth(&cfg, audit, *train, *test, &g.out),
        Command::Bench { iterations, patches } => {
            let threads = g.threads.unwrap_or(4);
            let opts = BenchOptions {
                iterations: *iterations,
                patches: *patches,
                threads,
                ..BenchOptions::default()
            };
            cmd_bench(&cfg, audit, &opts, &g.out)
        }
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.into(),
        source: e,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TileIndex {
    tile_size: usize,
    rows: usize,
    cols: usize,
    gated: bool,
    kept: Vec<String>,
    cellularity: Vec<CellularityReport>,
}

fn cmd_tile(cfg: &RunConfig, mut audit: Audit, slide: &Path, gate: bool, out: &Path) -> Result<()> {
    audit.hash_file("slide", slide)?;
    let image = read_rgb(slide)?;
    let tiling = tile_slide(&image, cfg.tile_size)?;
    let slide_id = slide
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut kept = Vec::new();
    let mut reports = Vec::new();
    for (row, col) in tiling.coords() {
        let patch = tiling.crop(&image, row, col)?;
        let name = format!("r{row}_c{col}.png");
        if gate {
            let report = assess(name.clone(), &patch, &cfg.gate)?;
            let accepted = report.accepted;
            reports.push(report);
            if !accepted {
                continue;
            }
        }
        write_rgb_png(out.join(&name), &patch)?;
        kept.push(name);
    }
    // labels and splits are left for the annotator
    let stub = out.join("manifest_stub.csv");
    let mut w = csv::Writer::from_path(&stub)?;
    w.write_record(["patch_path", "label", "slide_id", "split"])?;
    for name in &kept {
        w.write_record([name.as_str(), "", slide_id.as_str(), ""])?;
    }
    w.flush().map_err(io_err(&stub))?;
    let index = TileIndex {
        tile_size: cfg.tile_size,
        rows: tiling.rows,
        cols: tiling.cols,
        gated: gate,
        kept,
        cellularity: reports,
    };
    write_document(&out.join("tiles.json"), &audit, "tiles", &index)?;
    println!(
        "{} of {} tiles written to {}",
        index.kept.len(),
        tiling.len(),
        out.display()
    );
    Ok(())
}

/// Contents of `features.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureIndex {
    pub layout: FeatureLayout,
    pub dictionaries: Vec<String>,
    pub table: String,
    pub train_rows: usize,
    pub test_rows: usize,
}

fn dictionary_file(d: &DominantPatternDictionary) -> String {
    format!("dict_{}.json", d.channel)
}

fn shared_variant(cfg: &RunConfig) -> Result<Variant> {
    let v = cfg.channels[0].lbp.variant;
    if cfg.channels.iter().any(|c| c.lbp.variant != v) {
        return Err(Error::Config(
            "all channels must use the same descriptor variant".into(),
        ));
    }
    Ok(v)
}

fn cmd_features(cfg: &RunConfig, mut audit: Audit, manifest_path: &Path, out: &Path) -> Result<()> {
    let variant = shared_variant(cfg)?;
    let manifest = Manifest::load(manifest_path)?;
    audit.hash_file("manifest", manifest_path)?;
    // training rows first so the dictionaries see only them
    let order: Vec<&ManifestRow> = manifest
        .split(Split::Train)
        .into_iter()
        .chain(manifest.split(Split::Test))
        .collect();
    let n_train = order.iter().filter(|r| r.split == Split::Train).count();
    if n_train == 0 {
        return Err(Error::Dataset("manifest has an empty train split".into()));
    }
    let paths: Vec<PathBuf> = order.iter().map(|r| manifest.resolve(r)).collect();
    audit.hash_files("patches", paths.iter().map(PathBuf::as_path))?;
    let fetch = |i: usize| read_rgb(&paths[i]);
    let (mut sets, mut rows) = learn_and_featurize(n_train, order.len(), &fetch, &cfg.channels, &[variant], cfg.theta)?;
    let dicts = sets.pop().expect("one variant");
    let rows = rows.pop().expect("one variant");

    let layout = FeatureLayout::from_dictionaries(&dicts);
    let mut files = Vec::new();
    for d in &dicts {
        let name = dictionary_file(d);
        d.save(out.join(&name))?;
        files.push(name);
    }
    let table = FeatureTable {
        layout: layout.clone(),
        ids: order.iter().map(|r| r.patch_path.clone()).collect(),
        labels: order.iter().map(|r| r.label).collect(),
        slide_ids: order.iter().map(|r| r.slide_id.clone()).collect(),
        splits: order.iter().map(|r| r.split).collect(),
        rows,
    };
    table.write_csv(out.join("features.csv"))?;
    let index = FeatureIndex {
        layout,
        dictionaries: files,
        table: "features.csv".into(),
        train_rows: n_train,
        test_rows: order.len() - n_train,
    };
    write_document(&out.join("features.json"), &audit, "features", &index)?;
    let sizes: Vec<String> = dicts.iter().map(|d| format!("{}={}", d.channel, d.len())).collect();
    println!(
        "dictionaries {}; {} rows written to {}",
        sizes.join(" "),
        order.len(),
        out.display()
    );
    Ok(())
}

struct FeatureDir {
    index: FeatureIndex,
    root: PathBuf,
}

impl FeatureDir {
    fn open(dir: &Path, audit: &mut Audit) -> Result<Self> {
        let doc = dir.join("features.json");
        audit.hash_file("features.json", &doc)?;
        let index: FeatureIndex = read_document(&doc, "features")?;
        Ok(Self {
            index,
            root: dir.to_path_buf(),
        })
    }

    fn table(&self, audit: &mut Audit) -> Result<FeatureTable> {
        let path = self.root.join(&self.index.table);
        audit.hash_file("features.csv", &path)?;
        FeatureTable::read_csv(&path, self.index.layout.clone())
    }

    fn extractor(&self, audit: &mut Audit) -> Result<FeatureExtractor> {
        let mut dicts = Vec::new();
        for name in &self.index.dictionaries {
            let path = self.root.join(name);
            audit.hash_file(name.clone(), &path)?;
            dicts.push(DominantPatternDictionary::load(&path)?);
        }
        let ex = FeatureExtractor::new(dicts)?;
        if ex.layout() != &self.index.layout {
            return Err(Error::LayoutMismatch {
                expected: self.index.layout.hash(),
                found: ex.layout().hash(),
            });
        }
        Ok(ex)
    }
}

fn cmd_train(cfg: &RunConfig, mut audit: Audit, features: &Path, out: &Path) -> Result<()> {
    let dir = FeatureDir::open(features, &mut audit)?;
    let table = dir.table(&mut audit)?;
    let ds = table.dataset(Split::Train)?;
    let model = train(&ds, &cfg.classifier)?;
    let report = model.evaluate(&ds)?;
    let model = model.with_metadata(serde_json::to_value(&audit)?);
    let path = out.join("model.json");
    model.save(&path)?;
    println!(
        "{:?} model {} trained on {} rows, training accuracy {:.2}%",
        model.kind(),
        model.id(),
        ds.len(),
        report.accuracy
    );
    Ok(())
}

fn load_model(path: &Path, audit: &mut Audit) -> Result<TrainedModel> {
    audit.hash_file("model", path)?;
    TrainedModel::load(path)
}

fn cmd_predict(
    cfg: &RunConfig,
    mut audit: Audit,
    slide: &Path,
    model: &Path,
    features: &Path,
    truth: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let model = load_model(model, &mut audit)?;
    let extractor = FeatureDir::open(features, &mut audit)?.extractor(&mut audit)?;
    audit.hash_file("slide", slide)?;
    let image = read_rgb(slide)?;
    let map = run_inference(&image, &model, &extractor, &cfg.inference())?;
    if let Some(t) = truth {
        audit.hash_file("truth", t)?;
    }
    write_document(&out.join("tumor_map.json"), &audit, "tumor_map", &map)?;
    write_rgb_png(out.join("overlay.png"), &render_overlay(&map))?;
    write_rgb_png(out.join("thumbnail.png"), &render_thumbnail(&map, 8))?;
    if let Some(t) = truth {
        let grid = truth_to_grid(&read_roi_mask(t)?, &map.tiling)?;
        let m = region_metrics(&map.cleaned, &grid)?;
        write_document(&out.join("metrics.json"), &audit, "region", &m)?;
        println!("region IoU {:.2}%, Dice {:.2}%", m.iou, m.dice);
    }
    println!(
        "{} tumor, {} not tumor, {} skipped of {} tiles; {} after cleanup",
        map.count(drlbp_core::pipeline::TileLabel::Tumor),
        map.count(drlbp_core::pipeline::TileLabel::NotTumor),
        map.count(drlbp_core::pipeline::TileLabel::Skipped),
        map.tiling.len(),
        map.cleaned.count()
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Evaluation {
    model_id: String,
    model_kind: ModelKind,
    patch: drlbp_core::learn::EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<RegionMetrics>,
}

fn cmd_evaluate(
    cfg: &RunConfig,
    mut audit: Audit,
    model: &Path,
    features: &Path,
    slide: Option<&Path>,
    truth: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let model = load_model(model, &mut audit)?;
    let dir = FeatureDir::open(features, &mut audit)?;
    let test = dir.table(&mut audit)?.dataset(Split::Test)?;
    let patch = model.evaluate(&test)?;
    println!("patch-level, {} test rows\n{patch}", test.len());

    let region = match (slide, truth) {
        (Some(s), Some(t)) => {
            let extractor = dir.extractor(&mut audit)?;
            audit.hash_file("slide", s)?;
            audit.hash_file("truth", t)?;
            let map = run_inference(&read_rgb(s)?, &model, &extractor, &cfg.inference())?;
            let grid = truth_to_grid(&read_roi_mask(t)?, &map.tiling)?;
            let m = region_metrics(&map.cleaned, &grid)?;
            println!("region IoU {:.2}%, Dice {:.2}%", m.iou, m.dice);
            Some(m)
        }
        _ => None,
    };
    let eval = Evaluation {
        model_id: model.id(),
        model_kind: model.kind(),
        patch,
        region,
    };
    write_document(&out.join("evaluation.json"), &audit, "evaluation", &eval)
}

/// Classifiers of the comparison; a classifier of the configured kind
/// takes the configured hyperparameters.
fn comparison_specs(cfg: &RunConfig) -> Vec<ClassifierSpec> {
    [
        ClassifierSpec::knn(5),
        ClassifierSpec::default(),
        ClassifierSpec::rf(1000, cfg.seed),
    ]
    .into_iter()
    .map(|s| {
        if s.kind() == cfg.classifier.kind() {
            cfg.classifier.clone()
        } else {
            s
        }
    })
    .collect()
}

fn cmd_compare(cfg: &RunConfig, mut audit: Audit, manifest_path: &Path, out: &Path) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    audit.hash_file("manifest", manifest_path)?;
    let order: Vec<&ManifestRow> = manifest
        .split(Split::Train)
        .into_iter()
        .chain(manifest.split(Split::Test))
        .collect();
    let n_train = order.iter().filter(|r| r.split == Split::Train).count();
    let paths: Vec<PathBuf> = order.iter().map(|r| manifest.resolve(r)).collect();
    audit.hash_files("patches", paths.iter().map(PathBuf::as_path))?;
    let labels: Vec<Label> = order.iter().map(|r| r.label).collect();
    let fetch = |i: usize| read_rgb(&paths[i]);
    let table = run_comparison(
        n_train,
        &fetch,
        &labels,
        &cfg.channels,
        cfg.theta,
        &[Variant::Lbp, Variant::Rlbp],
        &comparison_specs(cfg),
    )?;
    print!("{table}");
    write_document(&out.join("comparison.json"), &audit, "comparison", &table)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SynthIndex {
    patch_size: usize,
    train: usize,
    test: usize,
    slide: String,
    truth: String,
    manifest: String,
}

fn cmd_synth(cfg: &RunConfig, audit: Audit, n_train: usize, n_test: usize, out: &Path) -> Result<()> {
    if n_train < 2 || n_test < 2 {
        return Err(Error::Config(
            "synth needs at least two train and two test patches".into(),
        ));
    }
    let size = cfg.tile_size;
    let slide = compose_slide(cfg.seed, size)?;
    write_rgb_png(out.join("slide.png"), &slide.image)?;
    write_roi_mask(out.join("slide_roi.png"), &slide.roi)?;
    let dir = out.join("patches");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let recipes = dataset_recipes(cfg.seed, n_train, n_test);
    let rows = {
        use rayon::prelude::*;
        recipes
            .par_iter()
            .map(|r| {
                let rel = format!("patches/{}.png", r.id);
                write_rgb_png(out.join(&rel), &r.render(size))?;
                Ok(ManifestRow {
                    patch_path: rel,
                    label: r.class.label(),
                    slide_id: r.slide_id.clone(),
                    split: r.split,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    Manifest::write(&rows, out.join("manifest.csv"))?;
    let index = SynthIndex {
        patch_size: size,
        train: n_train,
        test: n_test,
        slide: "slide.png".into(),
        truth: "slide_roi.png".into(),
        manifest: "manifest.csv".into(),
    };
    write_document(&out.join("synth.json"), &audit, "synth", &index)?;
    println!(
        "{} patches, slide and manifest written to {}",
        rows.len(),
        out.display()
    );
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, audit: Audit, opts: &BenchOptions, out: &Path) -> Result<()> {
    let r = run_bench(cfg, opts)?;
    let s = &r.single_thread;
    println!(
        "median ms per {0}x{0} patch over {1} runs, one thread",
        r.patch_size, r.iterations
    );
    println!("  channel transform {:>9.2}", s.channel_transform_ms);
    println!("  histogram         {:>9.2}", s.histogram_ms);
    println!("  projection        {:>9.2}", s.projection_ms);
    println!("  predict           {:>9.2}", s.predict_ms);
    println!("  total             {:>9.2}", s.total_ms);
    let p = &r.parallel;
    println!(
        "{} patches: {:.0} ms on 1 thread, {:.0} ms on {} threads ({:.2}x, {} cores available), identical: {}",
        p.patches, p.sequential_ms, p.parallel_ms, p.threads, p.speedup, p.available_cores, p.identical
    );
    write_document(&out.join("bench.json"), &audit, "bench", &r)
}
