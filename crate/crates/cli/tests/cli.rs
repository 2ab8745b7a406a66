use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use drlbp_cli::manifest::{Manifest, ManifestRow};
use drlbp_core::imaging::io::write_rgb_png;
use drlbp_core::imaging::RgbImage;
use serde_json::Value;

const SMALL: &str = r#"{
  "tile_size": 64,
  "channels": [
    {"channel": "H", "lbp": {"P": 8, "R": 1.0, "variant": "rlbp"}},
    {"channel": "V", "lbp": {"P": 8, "R": 1.0, "variant": "rlbp"}}
  ],
  "classifier": {"kind": "knn", "k": 3}
}"#;

/// Runs the binary in `dir` with whitespace-separated `args`.
fn drlbp(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drlbp"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &str) -> Output {
    let out = drlbp(dir, args);
    assert!(out.status.success(), "{args}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Synthetic patches, features and a model under `dir` with the small config.
fn prepared() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.json"), SMALL).unwrap();
    ok(d, "--config cfg.json synth --train 12 --test 6 --out syn");
    ok(d, "--config cfg.json features --manifest syn/manifest.csv --out feat");
    ok(d, "--config cfg.json train --features feat --out model");
    tmp
}

#[test]
fn tiling_writes_one_file_per_tile_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let slide = RgbImage::from_fn(1800, 1200, |x, y| [(x % 251) as u8, (y % 241) as u8, 90]).unwrap();
    write_rgb_png(d.join("slide.png"), &slide).unwrap();
    ok(d, "tile --slide slide.png --out a");
    ok(d, "tile --slide slide.png --out b");
    let mut tiles: Vec<String> = fs::read_dir(d.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".png"))
        .collect();
    tiles.sort();
    assert_eq!(
        tiles,
        [
            "r0_c0.png",
            "r0_c1.png",
            "r0_c2.png",
            "r1_c0.png",
            "r1_c1.png",
            "r1_c2.png"
        ]
    );
    for f in tiles
        .iter()
        .map(String::as_str)
        .chain(["manifest_stub.csv", "tiles.json"])
    {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let stub = fs::read_to_string(d.join("a/manifest_stub.csv")).unwrap();
    assert!(stub.starts_with("patch_path,label,slide_id,split\nr0_c0.png,,slide,\n"));
}

#[test]
fn slide_smaller_than_a_tile_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_rgb_png(
        d.join("small.png"),
        &RgbImage::filled(599, 599, [200, 100, 150]).unwrap(),
    )
    .unwrap();
    let out = drlbp(d, "tile --slide small.png --out t");
    assert_eq!(out.status.code(), Some(2));
    let out = drlbp(d, "tile --slide missing.png --out t");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(drlbp(d, "frobnicate").status.code(), Some(1));
    assert_eq!(drlbp(d, "train").status.code(), Some(1));
    fs::write(d.join("bad.json"), r#"{"tile_sise": 64}"#).unwrap();
    assert_eq!(drlbp(d, "--config bad.json bench").status.code(), Some(1));
    fs::write(d.join("theta.json"), r#"{"theta": 1.5}"#).unwrap();
    assert_eq!(drlbp(d, "--config theta.json bench").status.code(), Some(1));
    assert_eq!(drlbp(d, "--threads 0 bench").status.code(), Some(1));
    assert_eq!(drlbp(d, "--help").status.code(), Some(0));
}

#[test]
fn features_train_evaluate_round_trip() {
    let tmp = prepared();
    let d = tmp.path();

    let index = json(d.join("feat/features.json"));
    assert_eq!(index["features"]["train_rows"], 12);
    assert_eq!(index["features"]["test_rows"], 6);
    assert_eq!(index["audit"]["config"]["tile_size"], 64);
    for key in ["config", "manifest", "patches"] {
        assert_eq!(index["audit"]["inputs"][key].as_str().unwrap().len(), 64, "{key}");
    }
    assert!(d.join("feat/dict_H.json").is_file() && d.join("feat/dict_V.json").is_file());
    let header = fs::read_to_string(d.join("feat/features.csv")).unwrap();
    assert!(header.starts_with("id,label,slide_id,split,f0,"));

    let model = json(d.join("model/model.json"));
    assert_eq!(model["kind"], "knn");
    assert_eq!(model["metadata"]["config"]["classifier"]["k"], 3);

    ok(
        d,
        "--config cfg.json evaluate --model model/model.json --features feat --out eval",
    );
    let eval = json(d.join("eval/evaluation.json"));
    let patch = &eval["evaluation"]["patch"];
    for k in ["accuracy", "precision", "recall", "f1"] {
        assert!(patch[k].is_number(), "{k}");
    }
    assert_eq!(
        patch["confusion"]
            .as_object()
            .unwrap()
            .values()
            .map(|v| v.as_u64().unwrap())
            .sum::<u64>(),
        6
    );
    // no ground truth: the section is absent rather than zeroed
    assert!(eval["evaluation"].get("region").is_none());

    ok(
        d,
        "--config cfg.json evaluate --model model/model.json --features feat --slide syn/slide.png --truth syn/slide_roi.png --out eval2",
    );
    let region = &json(d.join("eval2/evaluation.json"))["evaluation"]["region"];
    assert!(region["iou"].is_number() && region["dice"].is_number());
}

#[test]
fn predict_writes_map_overlay_and_metrics() {
    let tmp = prepared();
    let d = tmp.path();
    let args = |out: &str| {
        format!(
            "--config cfg.json predict --slide syn/slide.png --model model/model.json \
             --features feat --truth syn/slide_roi.png --out {out}"
        )
    };
    ok(d, &args("p1"));
    ok(d, &args("p2"));
    for f in ["tumor_map.json", "overlay.png", "thumbnail.png", "metrics.json"] {
        assert_eq!(
            fs::read(d.join("p1").join(f)).unwrap(),
            fs::read(d.join("p2").join(f)).unwrap(),
            "{f}"
        );
    }
    let map = json(d.join("p1/tumor_map.json"));
    assert_eq!(map["tumor_map"]["tiles"].as_array().unwrap().len(), 24);
    assert_eq!(map["tumor_map"]["cleaned"].as_array().unwrap().len(), 4);
    assert!(map["audit"]["inputs"]["slide"].is_string());
    assert!(map["audit"]["inputs"]["dict_H.json"].is_string());
    let m = json(d.join("p1/metrics.json"));
    assert!(m["region"]["iou"].as_f64().unwrap() >= 0.0);
}

#[test]
fn mismatched_dictionaries_are_a_config_error() {
    let tmp = prepared();
    let d = tmp.path();
    // features learned at another theta give a different layout
    let other = SMALL.replace("\"tile_size\": 64,", "\"tile_size\": 64, \"theta\": 0.5,");
    fs::write(d.join("other.json"), other).unwrap();
    ok(
        d,
        "--config other.json features --manifest syn/manifest.csv --out feat2",
    );
    let out = drlbp(
        d,
        "--config cfg.json predict --slide syn/slide.png --model model/model.json --features feat2 --out p",
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("layout"));
}

#[test]
fn dictionaries_ignore_test_rows() {
    let tmp = prepared();
    let d = tmp.path();
    let m = Manifest::load(d.join("syn/manifest.csv")).unwrap();
    let mut rows: Vec<ManifestRow> = m.rows.clone();
    let first_test = rows.iter().position(|r| r.split.as_str() == "test").unwrap();
    rows[first_test..].reverse();
    // drop one test row as well: the train split alone decides the dictionary
    rows.pop();
    Manifest::write(&rows, d.join("syn/permuted.csv")).unwrap();
    ok(d, "--config cfg.json features --manifest syn/permuted.csv --out feat_p");
    for f in ["dict_H.json", "dict_V.json"] {
        assert_eq!(
            fs::read(d.join("feat").join(f)).unwrap(),
            fs::read(d.join("feat_p").join(f)).unwrap()
        );
    }
}

#[test]
fn manifest_problems_are_data_errors() {
    let tmp = prepared();
    let d = tmp.path();
    let m = Manifest::load(d.join("syn/manifest.csv")).unwrap();

    let train_only: Vec<ManifestRow> = m.rows.iter().filter(|r| r.split.as_str() == "test").cloned().collect();
    Manifest::write(&train_only, d.join("syn/test_only.csv")).unwrap();
    let out = drlbp(d, "--config cfg.json features --manifest syn/test_only.csv --out f");
    assert_eq!(out.status.code(), Some(2));

    let mut straddle = m.rows.clone();
    let last = straddle.len() - 1;
    straddle[last].slide_id = straddle[0].slide_id.clone();
    Manifest::write(&straddle, d.join("syn/straddle.csv")).unwrap();
    let out = drlbp(d, "--config cfg.json features --manifest syn/straddle.csv --out f");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("straddles"));
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.json"), SMALL).unwrap();
    ok(d, "--config cfg.json --seed 3 synth --train 4 --test 2 --out a");
    ok(d, "--config cfg.json --seed 3 synth --train 4 --test 2 --out b");
    for f in [
        "slide.png",
        "slide_roi.png",
        "manifest.csv",
        "synth.json",
        "patches/train_00000.png",
        "patches/test_00001.png",
    ] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(json(d.join("a/synth.json"))["audit"]["config"]["seed"], 3);
}

#[test]
fn compare_reports_both_descriptors() {
    let tmp = prepared();
    let d = tmp.path();
    let cfg = SMALL.replace(r#""kind": "knn", "k": 3"#, r#""kind": "rf", "n_trees": 20"#);
    fs::write(d.join("cmp.json"), cfg).unwrap();
    let out = ok(d, "--config cmp.json evaluate --compare syn/manifest.csv --out cmp");
    assert!(String::from_utf8_lossy(&out.stdout).contains("RLBP"));
    let rows = json(d.join("cmp/comparison.json"))["comparison"]["rows"]
        .as_array()
        .unwrap()
        .clone();
    assert_eq!(rows.len(), 6);
    let rf = rows.iter().find(|r| r["classifier"] == "rf").unwrap();
    assert_eq!(rf["hyperparameters"]["n_trees"], 20);
}

#[test]
fn bench_reports_all_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.json"), SMALL).unwrap();
    ok(
        d,
        "--config cfg.json --threads 2 bench --iterations 20 --patches 4 --out b",
    );
    let b = json(d.join("b/bench.json"));
    for k in [
        "channel_transform_ms",
        "histogram_ms",
        "projection_ms",
        "predict_ms",
        "total_ms",
    ] {
        assert!(b["bench"]["single_thread"][k].is_number(), "{k}");
    }
    assert_eq!(b["bench"]["parallel"]["identical"], true);
    assert_eq!(
        drlbp(d, "--config cfg.json bench --iterations 5").status.code(),
        Some(1)
    );
}
