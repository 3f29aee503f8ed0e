//! The dataset workflow on disk: generate, postprocess, convert, split,
//! evaluate and inspect. The binary is a thin wrapper over these functions.
//!
//! Dataset layout:
//! ```text
//! manifest.json
//! images/img_000000.ppm        rendered colour images
//! ids/img_000000.pgm           16-bit instance-id buffers (optional)
//! annotations/raw.json         per-object statistics for every image
//! annotations/coco.json        filtered annotations (after postprocess)
//! quarantine/                  images dropped by postprocess
//! labels/                      YOLO labels (after convert)
//! splits/                      subset lists (after split)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{
    coco_to_yolo, extract_instances, filter_instances, format_yolo, parse_coco, parse_coco_results, parse_yolo,
    write_coco, CocoDataset, FilterThresholds, ImageRecord, InstanceStats,
};
use crate::config::LoadedConfig;
use crate::eval::{evaluate, BBox, Detection, EvalDataset, EvalOptions, EvalReport, GroundTruth};
use crate::image::RgbImage;
use crate::render::{rasterize_with, solo_pixel_counts};
use crate::scene::SceneTemplate;

pub const THREADS_ENV: &str = "CADSYNTH_THREADS";
pub const MANIFEST: &str = "manifest.json";
pub const RAW_ANNOTATIONS: &str = "annotations/raw.json";
pub const COCO_ANNOTATIONS: &str = "annotations/coco.json";
pub const IMAGES_DIR: &str = "images";
pub const IDS_DIR: &str = "ids";
pub const QUARANTINE_DIR: &str = "quarantine";
pub const CLASSES_FILE: &str = "classes.txt";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration.
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    /// Inputs that exist but are inconsistent or malformed.
    #[error("{0}")]
    Integrity(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Integrity(_) => 3,
        }
    }
}

fn integrity(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Integrity(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = match fs::read(path) {
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(CliError::Integrity(format!("missing {}", path.display())))
        }
        other => other.map_err(|e| CliError::io(path, e))?,
    };
    serde_json::from_slice(&bytes).map_err(|e| integrity(path, e))
}

fn stem(name: &str) -> String {
    Path::new(name).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn image_name(index: u64) -> String {
    format!("img_{index:06}.ppm")
}

/// Worker count from `CADSYNTH_THREADS`; `None` lets rayon decide.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("{THREADS_ENV}: expected a positive integer, got `{v}`"))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessRecord {
    pub min_visibility: f64,
    pub min_pixels: usize,
    pub kept_images: usize,
    pub kept_instances: usize,
    pub removed_instances: usize,
    /// Images without surviving instances, moved to `quarantine/`.
    pub dropped_images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub count: usize,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub asset_hashes: BTreeMap<String, String>,
    pub categories: Vec<String>,
    pub width: u32,
    pub height: u32,
    /// Thresholds from the config; postprocess uses them unless overridden.
    pub thresholds: FilterThresholds,
    pub images: Vec<String>,
    #[serde(default)]
    pub postprocess: Option<PostprocessRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawImage {
    pub file_name: String,
    pub scene_index: u64,
    pub instances: Vec<InstanceStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotations {
    pub categories: Vec<String>,
    pub width: u32,
    pub height: u32,
    pub images: Vec<RawImage>,
}

#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GenerateSummary {
    pub out: PathBuf,
    pub images: usize,
    pub instances: usize,
}

/// Only the directories this tool writes are cleared; other files are left alone.
fn clear_outputs(out: &Path) -> Result<(), CliError> {
    for dir in [IMAGES_DIR, IDS_DIR, "annotations", QUARANTINE_DIR, "labels", "splits", "inspect"] {
        let p = out.join(dir);
        if p.is_dir() {
            fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    let m = out.join(MANIFEST);
    if m.exists() {
        fs::remove_file(&m).map_err(|e| CliError::io(&m, e))?;
    }
    Ok(())
}

/// Builds, renders and annotates `count` scenes. Output depends only on the
/// config, assets, seed and count, not on the thread count.
pub fn generate(opts: &GenerateOptions) -> Result<GenerateSummary, CliError> {
    let loaded = LoadedConfig::load(&opts.config)?;
    let cfg = &loaded.config;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let count = opts.count.unwrap_or(cfg.count);
    if count == 0 {
        return Err(CliError::Validation("count: must be at least 1".into()));
    }
    let out = opts.out.clone().unwrap_or_else(|| loaded.output_dir());
    let template = SceneTemplate::new(&cfg.scene_config(&loaded.meshes))
        .map_err(|e| CliError::Validation(format!("categories: {e}")))?;

    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    clear_outputs(&out)?;
    for dir in [IMAGES_DIR, IDS_DIR] {
        if dir == IDS_DIR && !cfg.output.write_id_buffers {
            continue;
        }
        let p = out.join(dir);
        fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
    }

    let work = |index: u64| -> Result<RawImage, CliError> {
        let scene = template.build(seed, index);
        let render = rasterize_with(&scene, &cfg.camera, &cfg.lights, cfg.ambient, &cfg.render);
        let solo = solo_pixel_counts(&scene, &cfg.camera, &cfg.render);
        let instances = extract_instances(&render, &scene, &solo).map_err(|e| CliError::Integrity(e.to_string()))?;
        let file_name = image_name(index);
        write(&out.join(IMAGES_DIR).join(&file_name), &render.image().to_ppm())?;
        if cfg.output.write_id_buffers {
            write(&out.join(IDS_DIR).join(format!("{}.pgm", stem(&file_name))), &render.id_image().to_pgm())?;
        }
        log::debug!("{file_name}: {} objects", instances.len());
        Ok(RawImage { file_name, scene_index: index, instances })
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let images: Vec<RawImage> =
        pool.install(|| (0..count as u64).into_par_iter().map(work).collect::<Result<_, _>>())?;

    let raw = RawAnnotations {
        categories: cfg.category_names(),
        width: cfg.camera.width(),
        height: cfg.camera.height(),
        images,
    };
    write(&out.join(RAW_ANNOTATIONS), &to_json(&raw))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        count,
        config_hash: loaded.config_hash.clone(),
        asset_hashes: loaded.asset_hashes.clone(),
        categories: raw.categories.clone(),
        width: raw.width,
        height: raw.height,
        thresholds: cfg.postprocess,
        images: raw.images.iter().map(|i| i.file_name.clone()).collect(),
        postprocess: None,
    };
    write(&out.join(MANIFEST), &to_json(&manifest))?;
    let instances = raw.images.iter().map(|i| i.instances.len()).sum();
    Ok(GenerateSummary { out, images: count, instances })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PostprocessOptions {
    pub min_visibility: Option<f64>,
    pub min_pixels: Option<usize>,
}

fn move_file(from: &Path, to: &Path) -> Result<(), CliError> {
    if let Some(dir) = to.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::rename(from, to).map_err(|e| CliError::io(from, e))
}

/// Filters every image, quarantines images left without instances, writes
/// `annotations/coco.json` and records the outcome in the manifest.
/// Re-running with other thresholds restores previously quarantined images.
pub fn postprocess(dir: &Path, opts: &PostprocessOptions) -> Result<PostprocessRecord, CliError> {
    let manifest_path = dir.join(MANIFEST);
    let mut manifest: Manifest = read_json(&manifest_path)?;
    let raw: RawAnnotations = read_json(&dir.join(RAW_ANNOTATIONS))?;
    let min_visibility = opts.min_visibility.unwrap_or(manifest.thresholds.min_visibility);
    let min_pixels = opts.min_pixels.unwrap_or(manifest.thresholds.min_pixels);
    if !(0.0..=1.0).contains(&min_visibility) {
        return Err(CliError::Validation(format!("--min-visibility: {min_visibility} outside [0, 1]")));
    }

    let listed: BTreeSet<&str> = manifest.images.iter().map(String::as_str).collect();
    let mut records = Vec::new();
    let mut dropped = Vec::new();
    let (mut kept_instances, mut removed_instances) = (0, 0);
    for img in &raw.images {
        if !listed.contains(img.file_name.as_str()) {
            return Err(CliError::Integrity(format!("{} is not listed in the manifest", img.file_name)));
        }
        let live = dir.join(IMAGES_DIR).join(&img.file_name);
        let parked = dir.join(QUARANTINE_DIR).join(&img.file_name);
        let outcome = filter_instances(&img.instances, min_visibility, min_pixels);
        kept_instances += outcome.kept.len();
        removed_instances += outcome.removed.len();
        let (from, to) = if outcome.drop_image { (&live, &parked) } else { (&parked, &live) };
        if from.exists() {
            move_file(from, to)?;
        } else if !to.exists() {
            return Err(CliError::Integrity(format!("image {} is missing", img.file_name)));
        }
        if outcome.drop_image {
            log::info!("{}: no instance survives filtering; quarantined", img.file_name);
            dropped.push(img.file_name.clone());
        } else {
            records.push(ImageRecord {
                file_name: img.file_name.clone(),
                width: raw.width,
                height: raw.height,
                instances: outcome.kept,
            });
        }
    }
    let coco = write_coco(&records, &raw.categories).map_err(|e| CliError::Integrity(e.to_string()))?;
    write(&dir.join(COCO_ANNOTATIONS), &coco)?;

    let record = PostprocessRecord {
        min_visibility,
        min_pixels,
        kept_images: records.len(),
        kept_instances,
        removed_instances,
        dropped_images: dropped,
    };
    manifest.postprocess = Some(record.clone());
    write(&manifest_path, &to_json(&manifest))?;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelFormat {
    Coco,
    Yolo,
}

#[derive(Debug, Clone)]
pub struct ConvertSummary {
    pub files: usize,
    pub warnings: Vec<String>,
}

/// A dataset directory stands for its `annotations/coco.json`.
fn coco_path(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.join(COCO_ANNOTATIONS)
    } else {
        input.to_path_buf()
    }
}

fn load_coco(path: &Path) -> Result<CocoDataset, CliError> {
    parse_coco(&read(path)?).map_err(|e| integrity(path, e))
}

/// COCO to one YOLO file per image (named after the image stem) plus `classes.txt`.
pub fn convert_to_yolo(input: &Path, out: &Path) -> Result<ConvertSummary, CliError> {
    let path = coco_path(input);
    let coco = load_coco(&path)?;
    let conv = coco_to_yolo(&coco).map_err(|e| integrity(&path, e))?;
    let mut stems = BTreeSet::new();
    for (name, records) in &conv.labels {
        let s = stem(name);
        if !stems.insert(s.clone()) {
            return Err(CliError::Integrity(format!("two images share the label name `{s}.txt`")));
        }
        write(&out.join(format!("{s}.txt")), format_yolo(records).as_bytes())?;
    }
    let mut classes = conv.class_names.join("\n");
    classes.push('\n');
    write(&out.join(CLASSES_FILE), classes.as_bytes())?;
    for w in &conv.warnings {
        log::warn!("{w}");
    }
    Ok(ConvertSummary { files: conv.labels.len(), warnings: conv.warnings })
}

fn read_classes(dir: &Path) -> Result<Vec<String>, CliError> {
    let path = dir.join(CLASSES_FILE);
    let text = String::from_utf8(read(&path)?).map_err(|e| integrity(&path, e))?;
    let names: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if names.is_empty() {
        return Err(integrity(&path, "no class names"));
    }
    Ok(names)
}

/// Label files of a YOLO directory, keyed by stem.
fn yolo_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let is_label = path.extension().is_some_and(|e| e == "txt") && path.file_name() != Some(CLASSES_FILE.as_ref());
        if is_label {
            out.insert(path.file_stem().unwrap().to_string_lossy().into_owned(), path);
        }
    }
    Ok(out)
}

fn read_yolo(path: &Path, size: [u32; 2], classes: usize) -> Result<Vec<crate::annotate::YoloLabel>, CliError> {
    let text = String::from_utf8(read(path)?).map_err(|e| integrity(path, e))?;
    parse_yolo(&text, size[0], size[1], classes).map_err(|e| integrity(path, e))
}

/// YOLO directory back to COCO. Images are named `<stem>.<image_ext>`.
pub fn convert_to_coco(input: &Path, out: &Path, size: [u32; 2], image_ext: &str) -> Result<ConvertSummary, CliError> {
    let classes = read_classes(input)?;
    let mut records = Vec::new();
    for (s, path) in yolo_files(input)? {
        let boxes = read_yolo(&path, size, classes.len())?.iter().map(|l| (l.class, l.bbox)).collect();
        records.push((format!("{s}.{image_ext}"), boxes));
    }
    let files = records.len();
    let coco = yolo_records_to_coco(records, size, &classes);
    write(out, &coco.to_json())?;
    Ok(ConvertSummary { files, warnings: Vec::new() })
}

/// Image file name with `(class, box)` pairs.
type LabelledImage = (String, Vec<(usize, BBox<f64>)>);

fn yolo_records_to_coco(images: Vec<LabelledImage>, size: [u32; 2], classes: &[String]) -> CocoDataset {
    use crate::annotate::{CocoAnnotation, CocoCategory, CocoImage};
    let mut coco = CocoDataset {
        images: Vec::new(),
        annotations: Vec::new(),
        categories: classes
            .iter()
            .enumerate()
            .map(|(i, n)| CocoCategory { id: i as u64 + 1, name: n.clone() })
            .collect(),
    };
    for (file_name, boxes) in images {
        let image_id = coco.images.len() as u64 + 1;
        coco.images.push(CocoImage { id: image_id, file_name, width: size[0], height: size[1] });
        for (class, b) in boxes {
            coco.annotations.push(CocoAnnotation {
                id: coco.annotations.len() as u64 + 1,
                image_id,
                category_id: class as u64 + 1,
                bbox: [b.x, b.y, b.w, b.h],
                area: b.w * b.h,
                iscrowd: 0,
            });
        }
    }
    coco
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    Counts(Vec<usize>),
    Fractions(Vec<f64>),
}

pub const SUBSET_NAMES: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subset {
    pub name: String,
    pub count: usize,
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub pool_size: usize,
    pub subsets: Vec<Subset>,
}

impl SplitSpec {
    pub fn counts(&self, pool: usize) -> Result<Vec<usize>, CliError> {
        let counts = match self {
            SplitSpec::Counts(c) => c.clone(),
            SplitSpec::Fractions(f) => {
                if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(CliError::Validation("split fractions must lie in [0, 1]".into()));
                }
                if f.iter().sum::<f64>() > 1.0 + 1e-9 {
                    return Err(CliError::Validation("split fractions sum to more than 1".into()));
                }
                f.iter().map(|v| (v * pool as f64 + 1e-9).floor() as usize).collect()
            }
        };
        if counts.is_empty() || counts.len() > SUBSET_NAMES.len() {
            return Err(CliError::Validation("expected 1 to 3 subset sizes (train, val, test)".into()));
        }
        let total: usize = counts.iter().sum();
        if total > pool {
            return Err(CliError::Validation(format!("split requests {total} images but only {pool} are available")));
        }
        Ok(counts)
    }
}

/// Seeded shuffle of the sorted pool; subsets take consecutive runs of it.
pub fn split_names(pool: &[String], spec: &SplitSpec, seed: u64) -> Result<SplitManifest, CliError> {
    let counts = spec.counts(pool.len())?;
    let mut order: Vec<String> = pool.to_vec();
    order.sort();
    order.dedup();
    if order.len() != pool.len() {
        return Err(CliError::Integrity("duplicate image names in the split pool".into()));
    }
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut start = 0;
    let subsets = counts
        .iter()
        .zip(SUBSET_NAMES)
        .map(|(&count, name)| {
            let mut images = order[start..start + count].to_vec();
            images.sort();
            start += count;
            Subset { name: name.into(), count, images }
        })
        .collect();
    Ok(SplitManifest { seed, pool_size: pool.len(), subsets })
}

/// Splits the images currently in `<dir>/images` (quarantined images are not
/// eligible) and writes `splits/{train,val,test}.txt` and `splits/split_manifest.json`.
pub fn split(dir: &Path, spec: &SplitSpec, seed: u64) -> Result<SplitManifest, CliError> {
    let images_dir = dir.join(IMAGES_DIR);
    let mut pool = Vec::new();
    for entry in fs::read_dir(&images_dir).map_err(|e| CliError::io(&images_dir, e))? {
        let entry = entry.map_err(|e| CliError::io(&images_dir, e))?;
        if entry.file_type().map_err(|e| CliError::io(&images_dir, e))?.is_file() {
            pool.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    let manifest = split_names(&pool, spec, seed)?;
    let out = dir.join("splits");
    for s in &manifest.subsets {
        let text: String = s.images.iter().map(|n| format!("{IMAGES_DIR}/{n}\n")).collect();
        write(&out.join(format!("{}.txt", s.name)), text.as_bytes())?;
    }
    write(&out.join("split_manifest.json"), &to_json(&manifest))?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct EvaluateInputs {
    /// COCO file, dataset directory, or YOLO label directory with `classes.txt`.
    pub ground_truth: PathBuf,
    /// COCO results file or YOLO label directory with confidences.
    pub detections: PathBuf,
    /// Image size for YOLO inputs.
    pub image_size: [u32; 2],
    pub options: EvalOptions,
}

enum GroundTruthSource {
    Coco(CocoDataset),
    Yolo { size: [u32; 2] },
}

/// Loads both sides keyed by image stem and runs the evaluation.
pub fn evaluate_files(inputs: &EvaluateInputs) -> Result<EvalReport, CliError> {
    let gt_path = &inputs.ground_truth;
    let yolo_gt = gt_path.is_dir() && gt_path.join(CLASSES_FILE).is_file();
    let (dataset, source) = if yolo_gt {
        let categories = read_classes(gt_path)?;
        let mut ds = EvalDataset { categories, ..Default::default() };
        for (s, path) in yolo_files(gt_path)? {
            for l in read_yolo(&path, inputs.image_size, ds.categories.len())? {
                ds.ground_truth.push(GroundTruth { image: s.clone(), class: l.class, bbox: l.bbox });
            }
            ds.images.push(s);
        }
        (ds, GroundTruthSource::Yolo { size: inputs.image_size })
    } else {
        let path = coco_path(gt_path);
        let coco = load_coco(&path)?;
        let classes = coco.class_index();
        let stems: BTreeMap<u64, String> = coco.images.iter().map(|i| (i.id, stem(&i.file_name))).collect();
        if stems.values().collect::<BTreeSet<_>>().len() != stems.len() {
            return Err(integrity(&path, "image file names collide after dropping extensions"));
        }
        let ds = EvalDataset {
            images: stems.values().cloned().collect(),
            categories: coco.sorted_categories().iter().map(|c| c.name.clone()).collect(),
            ground_truth: coco
                .annotations
                .iter()
                .map(|a| GroundTruth {
                    image: stems[&a.image_id].clone(),
                    class: classes[&a.category_id],
                    bbox: BBox::new(a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]),
                })
                .collect(),
        };
        (ds, GroundTruthSource::Coco(coco))
    };

    let det_path = &inputs.detections;
    let mut dets = Vec::new();
    if det_path.is_dir() {
        let size = match &source {
            GroundTruthSource::Yolo { size } => *size,
            GroundTruthSource::Coco(_) => inputs.image_size,
        };
        let known: BTreeSet<&String> = dataset.images.iter().collect();
        for (s, path) in yolo_files(det_path)? {
            if !known.contains(&s) {
                return Err(CliError::Validation(format!(
                    "format mismatch: detections {} have no ground-truth image `{s}`",
                    path.display()
                )));
            }
            for l in read_yolo(&path, size, dataset.categories.len())? {
                let confidence = l
                    .confidence
                    .ok_or_else(|| integrity(&path, "detection lines need a sixth field with the confidence"))?;
                dets.push(Detection { image: s.clone(), class: l.class, bbox: l.bbox, confidence });
            }
        }
    } else {
        let GroundTruthSource::Coco(coco) = &source else {
            return Err(CliError::Validation(
                "format mismatch: COCO results need COCO ground truth to resolve image ids".into(),
            ));
        };
        let results = parse_coco_results(&read(det_path)?).map_err(|e| integrity(det_path, e))?;
        let stems: BTreeMap<u64, String> = coco.images.iter().map(|i| (i.id, stem(&i.file_name))).collect();
        let classes = coco.class_index();
        for (i, r) in results.iter().enumerate() {
            let image = stems
                .get(&r.image_id)
                .ok_or_else(|| integrity(det_path, format!("result {i} references unknown image id {}", r.image_id)))?;
            let class = *classes.get(&r.category_id).ok_or_else(|| {
                integrity(det_path, format!("result {i} references unknown category id {}", r.category_id))
            })?;
            let [x, y, w, h] = r.bbox;
            dets.push(Detection { image: image.clone(), class, bbox: BBox::new(x, y, w, h), confidence: r.score });
        }
    }
    evaluate(&dataset, &dets, &inputs.options).map_err(|e| CliError::Integrity(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct InspectSummary {
    pub preview: PathBuf,
    pub instances: Vec<InstanceStats>,
    pub boxes: usize,
}

const PALETTE: [[u8; 3]; 6] =
    [[255, 64, 64], [64, 255, 64], [64, 128, 255], [255, 220, 0], [255, 0, 255], [0, 255, 255]];

/// Burns the image's boxes and class indices into `inspect/<stem>.ppm`.
/// Boxes come from `coco.json` when present, otherwise from the raw statistics.
pub fn inspect(dir: &Path, image: &str) -> Result<InspectSummary, CliError> {
    let file_name = if Path::new(image).extension().is_some() { image.to_string() } else { format!("{image}.ppm") };
    let raw: RawAnnotations = read_json(&dir.join(RAW_ANNOTATIONS))?;
    let entry = raw
        .images
        .iter()
        .find(|i| i.file_name == file_name)
        .ok_or_else(|| CliError::Validation(format!("unknown image `{file_name}`")))?;
    let live = dir.join(IMAGES_DIR).join(&file_name);
    if !live.exists() {
        if dir.join(QUARANTINE_DIR).join(&file_name).exists() {
            return Err(CliError::Integrity(format!("{file_name}: image was removed by postprocess")));
        }
        return Err(CliError::Integrity(format!("{file_name}: image file is missing")));
    }
    let bytes = read(&live)?;
    let mut img = RgbImage::from_ppm(&bytes).map_err(|e| integrity(&live, e))?;

    let coco_file = dir.join(COCO_ANNOTATIONS);
    let boxes: Vec<(usize, [f64; 4])> = if coco_file.exists() {
        let coco = load_coco(&coco_file)?;
        let classes = coco.class_index();
        match coco.images.iter().find(|i| i.file_name == file_name) {
            Some(ci) => coco
                .annotations
                .iter()
                .filter(|a| a.image_id == ci.id)
                .map(|a| (classes[&a.category_id], a.bbox))
                .collect(),
            None => Vec::new(),
        }
    } else {
        entry
            .instances
            .iter()
            .filter_map(|s| s.bbox_px.map(|b| (s.class_id, [b.x as f64, b.y as f64, b.w as f64, b.h as f64])))
            .collect()
    };
    if boxes.is_empty() {
        log::warn!("{file_name}: no annotations to draw");
    }
    for &(class, [x, y, w, h]) in &boxes {
        let c = PALETTE[class % PALETTE.len()];
        let (x, y, w, h) = (x.round() as i64, y.round() as i64, w.round() as i64, h.round() as i64);
        img.draw_rect(x, y, w, h, c);
        img.draw_number(x + 2, y + 2, class, 2, c);
    }
    let preview = dir.join("inspect").join(format!("{}.ppm", stem(&file_name)));
    write(&preview, &img.to_ppm())?;
    Ok(InspectSummary { preview, instances: entry.instances.clone(), boxes: boxes.len() })
}

/// One line per object for terminal output.
pub fn describe_instances(categories: &[String], instances: &[InstanceStats]) -> String {
    let mut s = String::from("object  class            visible     solo  visibility  collided  bbox\n");
    for i in instances {
        let name = categories.get(i.class_id).map(String::as_str).unwrap_or("?");
        let bbox = match i.bbox_px {
            Some(b) => format!("{} {} {} {}", b.x, b.y, b.w, b.h),
            None => "-".into(),
        };
        s.push_str(&format!(
            "{:>6}  {:<15} {:>8} {:>8} {:>11.3} {:>9}  {}\n",
            i.object_id, name, i.visible_pixels, i.solo_pixels, i.visibility, i.collided, bbox
        ));
    }
    s
}

pub fn raw_categories(dir: &Path) -> Result<Vec<String>, CliError> {
    Ok(read_json::<RawAnnotations>(&dir.join(RAW_ANNOTATIONS))?.categories)
}
