#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cadsynth::eval::{iou, BBox, Detection, EvalDataset, GroundTruth};
use cadsynth::mesh::{cuboid, quad_xy};
use cadsynth::pipeline::{convert_to_yolo, generate, postprocess, GenerateOptions, PostprocessOptions};
use cadsynth::render::{Camera, Light, Material};
use cadsynth::scene::{Model, Scene, SceneObject};
use cadsynth::{Pose, Vector3};

/// Demo assets and config under `root/assets`; returns the config path.
pub fn demo_config(root: &Path, count: usize, seed: u64) -> PathBuf {
    cadsynth::demo::write_demo(&root.join("assets"), count, seed).unwrap()
}

/// generate, postprocess, then convert into `out/labels`.
pub fn run_pipeline(config: &Path, out: &Path, threads: Option<usize>) {
    generate(&GenerateOptions { config: config.into(), out: Some(out.into()), threads, ..Default::default() }).unwrap();
    postprocess(out, &PostprocessOptions::default()).unwrap();
    convert_to_yolo(out, &out.join("labels")).unwrap();
}

/// Every file below `dir`, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn matte(rgb: [f64; 3]) -> Arc<Material> {
    Arc::new(Material::matte(rgb))
}

pub fn object(id: u32, class: Option<usize>, model: Model, at: Vector3) -> SceneObject {
    SceneObject {
        id,
        class_id: class,
        model: Arc::new(model),
        pose: Pose::from_translation(at),
        active: class.is_some(),
        collided: false,
    }
}

pub fn cube(id: u32, edge: f64, at: Vector3) -> SceneObject {
    object(id, Some(0), Model::single(Arc::new(cuboid(Vector3::splat(edge))), matte([0.8, 0.2, 0.2])), at)
}

/// Passive square facing +z, centred at `at`.
pub fn passive_quad(id: u32, size: f64, at: Vector3) -> SceneObject {
    object(id, None, Model::single(Arc::new(quad_xy(size, size)), matte([0.3, 0.3, 0.3])), at)
}

pub fn scene(objects: Vec<SceneObject>) -> Scene {
    Scene { objects, plane_z: 0.0, rng_seed: 0, scene_index: 0 }
}

/// Looking straight down from `height` above the origin.
pub fn top_camera(height: f64) -> Camera {
    Camera { position: Vector3::new(0.0, 0.0, height), ..Camera::default() }
}

pub fn sun() -> Vec<Light> {
    vec![Light::Directional { direction: Vector3::new(0.2, 0.3, -1.0), intensity: 0.9, color: [1.0; 3] }]
}

// ---- evaluation oracle ----

/// Matching by exhaustive search over every partial one-to-one assignment.
/// Detections are ranked by confidence; the chosen assignment is the
/// lexicographically best sequence of (matched, IoU, lower GT index) per
/// detection in that order. Returns a TP flag per input detection.
pub fn oracle_match(dets: &[(BBox<f64>, f64)], gts: &[BBox<f64>], thr: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].1.partial_cmp(&dets[a].1).unwrap());

    type Key = Vec<(u8, f64, i64)>;
    struct Search<'a> {
        order: Vec<usize>,
        dets: &'a [(BBox<f64>, f64)],
        gts: &'a [BBox<f64>],
        thr: f64,
        used: Vec<bool>,
        key: Key,
        pick: Vec<Option<usize>>,
        best: Option<(Key, Vec<Option<usize>>)>,
    }
    impl Search<'_> {
        fn run(&mut self, k: usize) {
            if k == self.order.len() {
                let better = match &self.best {
                    None => true,
                    Some((bk, _)) => self.key.partial_cmp(bk) == Some(std::cmp::Ordering::Greater),
                };
                if better {
                    self.best = Some((self.key.clone(), self.pick.clone()));
                }
                return;
            }
            let d = self.order[k];
            self.key.push((0, 0.0, 0));
            self.pick.push(None);
            self.run(k + 1);
            self.key.pop();
            self.pick.pop();
            for g in 0..self.gts.len() {
                let v = iou(&self.dets[d].0, &self.gts[g]);
                if self.used[g] || v < self.thr {
                    continue;
                }
                self.used[g] = true;
                self.key.push((1, v, -(g as i64)));
                self.pick.push(Some(g));
                self.run(k + 1);
                self.key.pop();
                self.pick.pop();
                self.used[g] = false;
            }
        }
    }
    let mut search = Search {
        order: order.clone(),
        dets,
        gts,
        thr,
        used: vec![false; gts.len()],
        key: Vec::new(),
        pick: Vec::new(),
        best: None,
    };
    search.run(0);
    let best = search.best;
    let (_, pick) = best.unwrap();
    let mut tp = vec![false; dets.len()];
    for (k, &d) in order.iter().enumerate() {
        tp[d] = pick[k].is_some();
    }
    tp
}

/// AP straight from the PR curve: at each recall level i/100, the best
/// precision of any ranking prefix reaching that recall.
pub fn oracle_ap(mut scored: Vec<(f64, bool)>, total_gt: usize) -> f64 {
    if total_gt == 0 {
        return if scored.is_empty() { 1.0 } else { 0.0 };
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut points = Vec::new();
    for k in 1..=scored.len() {
        let tp = scored[..k].iter().filter(|s| s.1).count();
        points.push((tp as f64 / total_gt as f64, tp as f64 / k as f64));
    }
    let mut sum = 0.0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        sum += points.iter().filter(|p| p.0 >= r).map(|p| p.1).fold(0.0, f64::max);
    }
    sum / 101.0
}

pub struct OracleClass {
    pub ap_per_threshold: Vec<f64>,
    pub included: bool,
}

pub fn oracle_evaluate(ds: &EvalDataset, dets: &[Detection], thresholds: &[f64]) -> Vec<OracleClass> {
    (0..ds.categories.len())
        .map(|class| {
            let gt_of = |img: &str| -> Vec<BBox<f64>> {
                ds.ground_truth.iter().filter(|g| g.class == class && g.image == img).map(|g| g.bbox).collect()
            };
            let total_gt = ds.ground_truth.iter().filter(|g| g.class == class).count();
            let n_det = dets.iter().filter(|d| d.class == class).count();
            let ap_per_threshold = thresholds
                .iter()
                .map(|&t| {
                    let mut scored = Vec::new();
                    for img in &ds.images {
                        let mine: Vec<(BBox<f64>, f64)> = dets
                            .iter()
                            .filter(|d| d.class == class && &d.image == img)
                            .map(|d| (d.bbox, d.confidence))
                            .collect();
                        let tp = oracle_match(&mine, &gt_of(img), t);
                        scored.extend(mine.iter().zip(tp).map(|(d, tp)| (d.1, tp)));
                    }
                    oracle_ap(scored, total_gt)
                })
                .collect();
            OracleClass { ap_per_threshold, included: total_gt > 0 || n_det > 0 }
        })
        .collect()
}

/// At most 5 images, 3 classes and 6 boxes of each kind per image. Detections
/// are jittered copies of ground truth or free boxes, with distinct confidences.
pub fn micro_dataset(seed: u64) -> (EvalDataset, Vec<Detection>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_images = rng.gen_range(1..=5);
    let n_classes = rng.gen_range(1..=3);
    let mut ds = EvalDataset {
        images: (0..n_images).map(|i| format!("im{i}")).collect(),
        categories: (0..n_classes).map(|c| format!("c{c}")).collect(),
        ground_truth: Vec::new(),
    };
    let mut dets = Vec::new();
    let rand_box = |rng: &mut ChaCha8Rng| {
        BBox::new(
            rng.gen_range(0.0..100.0),
            rng.gen_range(0.0..100.0),
            rng.gen_range(5.0..40.0),
            rng.gen_range(5.0..40.0),
        )
    };
    for img in ds.images.clone() {
        let n_gt = rng.gen_range(0..=6);
        let gts: Vec<GroundTruth> = (0..n_gt)
            .map(|_| GroundTruth { image: img.clone(), class: rng.gen_range(0..n_classes), bbox: rand_box(&mut rng) })
            .collect();
        for _ in 0..rng.gen_range(0..=6) {
            let (class, bbox) = match gts.get(rng.gen_range(0..gts.len().max(1))) {
                Some(g) if rng.gen_bool(0.7) => {
                    let j = rng.gen_range(0.0..6.0);
                    let b = g.bbox;
                    let cls = if rng.gen_bool(0.9) { g.class } else { rng.gen_range(0..n_classes) };
                    (
                        cls,
                        BBox::new(
                            b.x + rng.gen_range(-j..=j),
                            b.y + rng.gen_range(-j..=j),
                            b.w + rng.gen_range(0.0..=j),
                            b.h + rng.gen_range(0.0..=j),
                        ),
                    )
                }
                _ => (rng.gen_range(0..n_classes), rand_box(&mut rng)),
            };
            dets.push(Detection { image: img.clone(), class, bbox, confidence: rng.gen_range(0.0..1.0) });
        }
        ds.ground_truth.extend(gts);
    }
    (ds, dets)
}
