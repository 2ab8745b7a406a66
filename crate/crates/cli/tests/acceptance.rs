//! Acceptance run: one line per criterion, non-zero exit on any hard failure.
//!
//! `cargo test -p drlbp-cli --test acceptance`

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use drlbp_cli::bench::{run_bench, BenchOptions};
use drlbp_cli::config::RunConfig;
use drlbp_cli::protocol::run_comparison;
use drlbp_cli::synth::{dataset_recipes, derive_seed, render_patch, TextureClass};
use drlbp_core::imaging::{BinaryMask, Channel, Morphology, ScalarImage, SeShape, StructuringElement};
use drlbp_core::learn::{train, ClassifierSpec, Dataset, Label, ModelKind, ModelState};
use drlbp_core::nuclei::{assess, CellularityReport, NucleiConfig};
use drlbp_core::pipeline::{clean_grid, region_metrics, CleanupConfig};
use drlbp_core::rng::Prng;
use drlbp_core::texture::{
    build_dictionary, extract_histogram, extract_histogram_pair, LbpConfig, PatternHistogram, Variant,
};

struct Outcome {
    pass: bool,
    soft: bool,
    detail: String,
}

impl Outcome {
    fn hard(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            soft: false,
            detail: detail.into(),
        }
    }
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

// ---------------------------------------------------------------- criterion 1

/// Per-pixel reference: geometry, interpolation and both code rules written
/// out directly, one neighbor at a time.
fn naive_histogram(img: &ScalarImage, points: usize, radius: f64, variant: Variant) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let m = radius.ceil() as usize;
    let px = |x: i64, y: i64| img.get(x as usize, y as usize);
    let snap = |v: f64| if (v - v.round()).abs() <= 1e-6 { v.round() } else { v };
    let mut counts = vec![0u32; 1 << points];
    for y in m..h - m {
        for x in m..w - m {
            let gc = img.get(x, y);
            let mut g = vec![0.0; points];
            for (p, gp) in g.iter_mut().enumerate() {
                let a = 2.0 * std::f64::consts::PI * p as f64 / points as f64;
                let dx = snap(radius * a.cos());
                let dy = snap(-radius * a.sin());
                let (fx, fy) = (dx.floor(), dy.floor());
                let (tx, ty) = (dx - fx, dy - fy);
                let x0 = x as i64 + fx as i64;
                let y0 = y as i64 + fy as i64;
                let x1 = if tx == 0.0 { x0 } else { x0 + 1 };
                let y1 = if ty == 0.0 { y0 } else { y0 + 1 };
                let top = px(x0, y0) + tx * (px(x1, y0) - px(x0, y0));
                let bottom = px(x0, y1) + tx * (px(x1, y1) - px(x0, y1));
                *gp = top + ty * (bottom - top);
            }
            let mut d = 0;
            for p in 1..points {
                if (g[p] - gc).abs() > (g[d] - gc).abs() {
                    d = p;
                }
            }
            let mut code = 0u32;
            for (p, &gp) in g.iter().enumerate() {
                if gp >= gc {
                    let weight = match variant {
                        Variant::Lbp => p,
                        Variant::Rlbp => (p + points - d) % points,
                    };
                    code += 1 << weight;
                }
            }
            counts[code as usize] += 1;
        }
    }
    counts
}

fn criterion_1() -> Result<String, String> {
    let mut rng = Prng::new(101);
    let mut compared = 0;
    for i in 0..100 {
        let w = 16 + rng.below(49);
        let h = 16 + rng.below(49);
        // alternate quantized and continuous values so ties are exercised
        let quantized = i % 2 == 0;
        let values: Vec<f64> = (0..w * h)
            .map(|_| {
                if quantized {
                    rng.below(8) as f64 * 32.0
                } else {
                    rng.range(0.0, 255.0)
                }
            })
            .collect();
        let img = ScalarImage::new(w, h, values, Channel::Gray).unwrap();
        for (p, r) in [(8, 1.0), (12, 2.0), (16, 3.0)] {
            let (pair_lbp, pair_rlbp) =
                extract_histogram_pair(&img, &LbpConfig::new(p, r, Variant::Lbp).unwrap()).unwrap();
            for (variant, pair) in [(Variant::Lbp, &pair_lbp), (Variant::Rlbp, &pair_rlbp)] {
                let fast = extract_histogram(&img, &LbpConfig::new(p, r, variant).unwrap()).unwrap();
                let slow = naive_histogram(&img, p, r, variant);
                check(fast.counts() == slow.as_slice(), || {
                    format!("image {i} ({w}x{h}) P={p} R={r} {variant}: histograms differ")
                })?;
                check(pair.counts() == slow.as_slice(), || {
                    format!("image {i} P={p} {variant}: pair extraction differs")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{compared} histograms bit-identical to the per-pixel reference"
    ))
}

// ---------------------------------------------------------------- criterion 2

/// Smooth random field: a sum of plane waves with random directions,
/// frequencies and phases. Real-valued, so sampled values essentially never
/// tie.
fn wave_texture(size: usize, seed: u64, waves: usize, anisotropic: bool) -> ScalarImage {
    let mut rng = Prng::new(seed);
    let comps: Vec<(f64, f64, f64, f64)> = (0..waves)
        .map(|_| {
            let theta = if anisotropic {
                rng.range(-0.2, 0.2)
            } else {
                rng.range(0.0, std::f64::consts::TAU)
            };
            let freq = rng.range(0.15, 0.9);
            (
                freq * theta.cos(),
                freq * theta.sin(),
                rng.range(0.0, std::f64::consts::TAU),
                rng.range(0.5, 1.5),
            )
        })
        .collect();
    ScalarImage::from_fn(size, size, Channel::Gray, |x, y| {
        let (x, y) = (x as f64, y as f64);
        128.0
            + comps
                .iter()
                .map(|&(kx, ky, ph, a)| 30.0 * a * (kx * x + ky * y + ph).sin())
                .sum::<f64>()
    })
    .unwrap()
}

fn l1(h: &PatternHistogram) -> Vec<f64> {
    let t = h.counts().iter().map(|&c| c as f64).sum::<f64>();
    h.counts().iter().map(|&c| c as f64 / t).collect()
}

fn total_variation(a: &PatternHistogram, b: &PatternHistogram) -> f64 {
    0.5 * l1(a).iter().zip(l1(b)).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn criterion_2() -> Result<String, String> {
    let rlbp = LbpConfig::new(16, 3.0, Variant::Rlbp).unwrap();
    let lbp = rlbp.with_variant(Variant::Lbp);
    let mut min_tv = f64::INFINITY;
    for (seed, anisotropic) in [(7, false), (8, true)] {
        let img = wave_texture(256, seed, 12, anisotropic);
        let base = extract_histogram(&img, &rlbp).unwrap();
        let base_lbp = extract_histogram(&img, &lbp).unwrap();
        for q in 1..4 {
            let rot = img.rotate90(q);
            let h = extract_histogram(&rot, &rlbp).unwrap();
            check(h.counts() == base.counts(), || {
                format!("texture {seed}: RLBP differs at {} degrees", 90 * q)
            })?;
            if anisotropic {
                min_tv = min_tv.min(total_variation(&base_lbp, &extract_histogram(&rot, &lbp).unwrap()));
            }
        }
    }
    check(min_tv > 0.01, || format!("LBP total variation only {min_tv:.4}"))?;
    Ok(format!(
        "RLBP equal at 90/180/270 on 2 textures; LBP total variation >= {min_tv:.3}"
    ))
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3() -> Result<String, String> {
    let (n_train, n_test, size) = (800, 400, 600);
    let recipes = dataset_recipes(2024, n_train, n_test);
    let labels: Vec<Label> = recipes.iter().map(|r| r.class.label()).collect();
    let fetch = |i: usize| Ok(recipes[i].render(size));
    let cfg = RunConfig::default();
    let specs = [
        ClassifierSpec::knn(5),
        ClassifierSpec::rf(1000, 2024),
        ClassifierSpec::default(),
    ];
    let t = Instant::now();
    let table = run_comparison(
        n_train,
        &fetch,
        &labels,
        &cfg.channels,
        cfg.theta,
        &[Variant::Lbp, Variant::Rlbp],
        &specs,
    )
    .map_err(|e| e.to_string())?;
    print!("{table}");
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in [ModelKind::Knn, ModelKind::Rf, ModelKind::Svm] {
        let r = table.get(Variant::Rlbp, kind).unwrap().report.accuracy;
        let l = table.get(Variant::Lbp, kind).unwrap().report.accuracy;
        ok &= r >= 95.0 && r >= l;
        parts.push(format!("{kind:?} RLBP {r:.2}% / LBP {l:.2}%"));
    }
    let m = &table.get(Variant::Rlbp, ModelKind::Knn).unwrap().dictionary_sizes;
    let detail = format!("{}; M = {m:?}; {:.0} s", parts.join(", "), t.elapsed().as_secs_f64());
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- criterion 4

/// Brute force: every prefix length, smallest one reaching theta.
fn brute_force_selection(sums: &[u64], theta: f64) -> Vec<u32> {
    let mut bins: Vec<(u64, u32)> = sums
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(p, &c)| (c, p as u32))
        .collect();
    bins.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let total: u64 = sums.iter().sum();
    for m in 1..=bins.len() {
        let mass: u64 = bins[..m].iter().map(|b| b.0).sum();
        if mass as f64 / total as f64 >= theta {
            return bins[..m].iter().map(|b| b.1).collect();
        }
    }
    unreachable!("the full prefix carries all the mass")
}

fn criterion_4() -> Result<String, String> {
    let mut rng = Prng::new(404);
    let cfg = LbpConfig::new(8, 1.0, Variant::Rlbp).unwrap();
    let mut cases = 0;
    for set in 0..50 {
        let n_hist = 1 + rng.below(6);
        let support = 1 + rng.below(256);
        let hists: Vec<PatternHistogram> = (0..n_hist)
            .map(|_| {
                let mut counts = vec![0u32; 256];
                for _ in 0..support {
                    // small counts force plenty of ties
                    counts[rng.below(256)] += 1 + rng.below(4) as u32;
                }
                PatternHistogram::from_counts(counts, Channel::H, cfg).unwrap()
            })
            .collect();
        let mut sums = vec![0u64; 256];
        for h in &hists {
            for (s, &c) in sums.iter_mut().zip(h.counts()) {
                *s += u64::from(c);
            }
        }
        let total: u64 = sums.iter().sum();
        for theta in [0.5, 0.85, 0.90, 0.95, 1.0] {
            let dict = build_dictionary(&hists, theta).unwrap();
            let expected = brute_force_selection(&sums, theta);
            check(dict.selected == expected, || {
                format!("set {set}, theta {theta}: selection differs")
            })?;
            let mass =
                |k: usize| dict.selected[..k].iter().map(|&p| sums[p as usize]).sum::<u64>() as f64 / total as f64;
            check(mass(dict.len()) >= theta, || {
                format!("set {set}, theta {theta}: selection below theta")
            })?;
            check(dict.len() == 1 || mass(dict.len() - 1) < theta, || {
                format!("set {set}, theta {theta}: not minimal")
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} selections match the brute-force oracle and are minimal"
    ))
}

// ---------------------------------------------------------------- criterion 5

fn random_mask(rng: &mut Prng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::new(w, h, (0..w * h).map(|_| rng.unit() < density).collect()).unwrap()
}

fn criterion_5() -> Result<String, String> {
    let mut rng = Prng::new(505);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let (w, h) = (1 + rng.below(24), 1 + rng.below(24));
        let da = rng.unit();
        let a = random_mask(&mut rng, w, h, da);
        let db = rng.unit();
        let b = random_mask(&mut rng, w, h, db);
        let m = region_metrics(&a, &b).unwrap();
        if m.predicted + m.truth > m.intersection {
            let j = m.iou / 100.0;
            let err = (m.dice / 100.0 - 2.0 * j / (1.0 + j)).abs();
            worst = worst.max(err);
            check(err < 1e-9, || format!("pair {i}: Dice/IoU identity off by {err:e}"))?;
        }
        if !a.is_empty() {
            check(region_metrics(&a, &a).unwrap().iou == 100.0, || {
                format!("pair {i}: IoU(U,U) != 100")
            })?;
            let disjoint =
                BinaryMask::new(w, h, a.bits().iter().zip(b.bits()).map(|(&x, &y)| !x && y).collect()).unwrap();
            if !disjoint.is_empty() {
                let d = region_metrics(&a, &disjoint).unwrap();
                check(d.iou == 0.0 && d.dice == 0.0, || {
                    format!("pair {i}: disjoint masks overlap")
                })?;
            }
        }
    }
    Ok(format!("1000 pairs, worst identity error {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Result<String, String> {
    let mut rng = Prng::new(606);
    let cleanup = CleanupConfig::default();
    for i in 0..100 {
        let (w, h) = (4 + rng.below(29), 4 + rng.below(29));
        let density = rng.range(0.2, 0.8);
        let m = random_mask(&mut rng, w, h, density);
        for shape in [SeShape::Disk, SeShape::Square] {
            for r in 1..=2 {
                let se = StructuringElement::new(shape, r).unwrap();
                let (o, c) = (m.open(&se), m.close(&se));
                check(o.open(&se) == o, || {
                    format!("mask {i}: opening not idempotent ({shape:?} r={r})")
                })?;
                check(c.close(&se) == c, || {
                    format!("mask {i}: closing not idempotent ({shape:?} r={r})")
                })?;
                check(m.dilate(&se).complement() == m.complement().erode(&se), || {
                    format!("mask {i}: duality fails")
                })?;
                check(m.erode(&se).complement() == m.complement().dilate(&se), || {
                    format!("mask {i}: duality fails")
                })?;
            }
        }
        let cleaned = clean_grid(&m, &cleanup);
        check(clean_grid(&cleaned, &cleanup) == cleaned, || {
            format!("mask {i}: cleanup not idempotent")
        })?;
        check(cleaned.is_subset_of(&m), || format!("mask {i}: cleanup added tiles"))?;
    }
    Ok("idempotence, duality and cleanup laws hold on 100 masks x 4 elements".into())
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Result<String, String> {
    let gate = NucleiConfig::default();
    let mut rng = Prng::new(707);
    let (mut bg_max, mut tumor_min) = (0.0f64, 1.0f64);
    for i in 0..20u64 {
        let angle = rng.range(0.0, std::f64::consts::TAU);
        let bg = assess(
            format!("bg{i}"),
            &render_patch(TextureClass::Background, 600, derive_seed(7, i), angle),
            &gate,
        )
        .unwrap();
        let tumor = assess(
            format!("t{i}"),
            &render_patch(TextureClass::Tumor, 600, derive_seed(8, i), angle),
            &gate,
        )
        .unwrap();
        check(!bg.accepted, || {
            format!("background patch {i} accepted at {:.4}", bg.ratio)
        })?;
        check(tumor.accepted, || {
            format!("tumor patch {i} rejected at {:.4}", tumor.ratio)
        })?;
        bg_max = bg_max.max(bg.ratio);
        tumor_min = tumor_min.min(tumor.ratio);
    }
    // 10800 of 600 x 600 pixels is exactly 3%
    let boundary = BinaryMask::new(600, 600, (0..360_000).map(|i| i < 10_800).collect()).unwrap();
    let at = CellularityReport::from_mask("boundary", &boundary, gate.min_ratio);
    check(at.ratio == 0.03 && at.accepted, || {
        format!("boundary ratio {} rejected", at.ratio)
    })?;
    let below = BinaryMask::new(600, 600, (0..360_000).map(|i| i < 10_799).collect()).unwrap();
    check(
        !CellularityReport::from_mask("below", &below, gate.min_ratio).accepted,
        || "10799 px accepted".into(),
    )?;
    Ok(format!(
        "20 background rejected (max {bg_max:.3}), 20 tumor accepted (min {tumor_min:.3}), 0.03 accepted"
    ))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let cfg = RunConfig {
        classifier: ClassifierSpec::knn(5),
        ..RunConfig::default()
    };
    let opts = BenchOptions {
        iterations: 20,
        patches: 100,
        training_patches: 8,
        threads: 4,
    };
    let r = match run_bench(&cfg, &opts) {
        Ok(r) => r,
        Err(e) => return Outcome::hard(false, e.to_string()),
    };
    let p = &r.parallel;
    let latency_ok = r.single_thread.total_ms <= 500.0;
    let scaling_ok = p.speedup >= 3.0;
    let detail = format!(
        "{:.1} ms/patch single-threaded (limit 500); {:.2}x on {} threads with {} core(s) available (target 3x); identical outputs: {}",
        r.single_thread.total_ms, p.speedup, p.threads, p.available_cores, p.identical
    );
    if !p.identical {
        return Outcome::hard(false, detail);
    }
    Outcome {
        pass: latency_ok && scaling_ok,
        soft: true,
        detail,
    }
}

// ---------------------------------------------------------------- criterion 9

fn drlbp(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_drlbp"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!(
            "drlbp {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn criterion_9() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    std::fs::write(d.join("cfg.json"), r#"{"classifier":{"kind":"rf","n_trees":200}}"#).unwrap();
    let c = ["--config", "cfg.json", "--seed", "9"];
    let with = |extra: &[&'static str]| -> Vec<&'static str> { [&c[..], extra].concat() };
    drlbp(d, &with(&["synth", "--train", "24", "--test", "8", "--out", "syn"]))?;
    drlbp(
        d,
        &with(&["features", "--manifest", "syn/manifest.csv", "--out", "feat"]),
    )?;
    drlbp(d, &with(&["train", "--features", "feat", "--out", "m1"]))?;
    drlbp(
        d,
        &with(&["train", "--features", "feat", "--out", "m2", "--threads", "1"]),
    )?;
    check(read(d.join("m1/model.json")) == read(d.join("m2/model.json")), || {
        "RF model files differ".into()
    })?;
    for run in ["p1", "p2"] {
        drlbp(
            d,
            &with(&[
                "predict",
                "--slide",
                "syn/slide.png",
                "--model",
                "m1/model.json",
                "--features",
                "feat",
                "--out",
                run,
            ]),
        )?;
    }
    for f in ["tumor_map.json", "overlay.png", "thumbnail.png"] {
        check(read(d.join("p1").join(f)) == read(d.join("p2").join(f)), || {
            format!("{f} differs between runs")
        })?;
    }

    // in-process: the same seed grows the same trees
    let mut rng = Prng::new(909);
    let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..6).map(|_| rng.unit()).collect()).collect();
    let labels: Vec<Label> = rows
        .iter()
        .map(|r| {
            if r[0] + r[1] > 1.0 {
                Label::Tumor
            } else {
                Label::NotTumor
            }
        })
        .collect();
    let ds = Dataset::from_matrix(rows, labels).map_err(|e| e.to_string())?;
    let spec = ClassifierSpec::rf(50, 77);
    let (a, b) = (train(&ds, &spec).unwrap(), train(&ds, &spec).unwrap());
    let same = matches!((a.state(), b.state()), (ModelState::Rf(x), ModelState::Rf(y)) if x.trees == y.trees);
    check(same, || "RF trees differ across runs".into())?;
    Ok("tumor map, overlay and thumbnail byte-identical; RF model files and trees identical".into())
}

// ----------------------------------------------------------------------------

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "descriptor oracle equivalence", || result(criterion_1())),
        (2, "rotation invariance", || result(criterion_2())),
        (3, "synthetic end-to-end classification", || result(criterion_3())),
        (4, "dominant-pattern selection oracle", || result(criterion_4())),
        (5, "region metric identities", || result(criterion_5())),
        (6, "morphology laws", || result(criterion_6())),
        (7, "cellularity gate", || result(criterion_7())),
        (8, "performance", criterion_8),
        (9, "determinism", || result(criterion_9())),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut lines = Vec::new();
    let mut hard_failures = 0;
    for (n, name, f) in &criteria {
        if only.is_some_and(|o| o != *n) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| Outcome::hard(false, format!("panicked: {}", panic_message(&e))));
        let status = match (outcome.pass, outcome.soft) {
            (true, _) => "PASS",
            (false, true) => "FAIL (soft)",
            (false, false) => "FAIL",
        };
        if !outcome.pass && !outcome.soft {
            hard_failures += 1;
        }
        let line = format!(
            "criterion {n} [{name}]: {status} - {} ({:.1} s)",
            outcome.detail,
            t.elapsed().as_secs_f64()
        );
        println!("{line}");
        lines.push(line);
    }
    println!("\nsummary");
    for l in &lines {
        println!("{l}");
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}

fn result(r: Result<String, String>) -> Outcome {
    match r {
        Ok(d) => Outcome::hard(true, d),
        Err(d) => Outcome::hard(false, d),
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}
