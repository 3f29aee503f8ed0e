//! Detection metrics: IoU, greedy matching, 101-point interpolated AP and
//! per-class precision / recall / mAP reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("{what} references unknown image `{image}`")]
    UnknownImage { what: &'static str, image: String },
    #[error("{what} references unknown class {class}")]
    UnknownClass { what: &'static str, class: usize },
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
}

/// Axis-aligned box: top-left corner plus width and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Real> BBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    /// Area measured between corner coordinates, consistent with
    /// [`intersection_area`](Self::intersection_area) so that `iou(a, a) == 1` exactly.
    fn corner_area(&self) -> T {
        ((self.x + self.w) - self.x) * ((self.y + self.h) - self.y)
    }

    pub fn intersection_area(&self, o: &Self) -> T {
        let iw = (self.x + self.w).min(o.x + o.w) - self.x.max(o.x);
        let ih = (self.y + self.h).min(o.y + o.h) - self.y.max(o.y);
        if iw <= T::zero() || ih <= T::zero() {
            T::zero()
        } else {
            iw * ih
        }
    }
}

/// Intersection over union of two continuous boxes; 0 when the union is empty.
pub fn iou<T: Real>(a: &BBox<T>, b: &BBox<T>) -> T {
    let inter = a.intersection_area(b);
    let union = a.corner_area() + b.corner_area() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one()).max(T::zero())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image: String,
    pub class: usize,
    pub bbox: BBox<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image: String,
    pub class: usize,
    pub bbox: BBox<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchOutcome {
    /// Matched ground-truth index per detection, in input order.
    pub assignment: Vec<Option<usize>>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Greedy matching on `(box, confidence)` pairs of one image and class.
///
/// Detections are visited by descending confidence (stable, so ties keep input
/// order). Each claims the still unmatched ground truth with the highest IoU,
/// provided that IoU reaches `iou_threshold`; IoU ties go to the lowest index.
pub fn match_boxes(dets: &[(BBox<f64>, f64)], gts: &[BBox<f64>], iou_threshold: f64) -> MatchOutcome {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].1.total_cmp(&dets[a].1));
    let mut taken = vec![false; gts.len()];
    let mut assignment = vec![None; dets.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let v = iou(&dets[d].0, gt);
            if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            assignment[d] = Some(g);
        }
    }
    let tp = assignment.iter().flatten().count();
    MatchOutcome { tp, fp: dets.len() - tp, fn_: gts.len() - tp, assignment }
}

/// [`match_boxes`] for detections that all belong to one image and class.
pub fn match_detections(dets: &[Detection], gts: &[BBox<f64>], iou_threshold: f64) -> MatchOutcome {
    let pairs: Vec<_> = dets.iter().map(|d| (d.bbox, d.confidence)).collect();
    match_boxes(&pairs, gts, iou_threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredMatch {
    pub confidence: f64,
    pub true_positive: bool,
}

/// Number of recall sample points, `0.00, 0.01, ..., 1.00`.
pub const RECALL_POINTS: usize = 101;

/// COCO-style interpolated AP: the precision envelope (running maximum from the
/// right) sampled at recall `i / 100` for `i = 0..=100`, averaged.
///
/// Without ground truth the result is 0 if anything was detected and 1 otherwise.
pub fn average_precision(matches: &[ScoredMatch], total_gt: usize) -> f64 {
    if total_gt == 0 {
        return if matches.is_empty() { 1.0 } else { 0.0 };
    }
    let mut sorted = matches.to_vec();
    sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));

    let mut precision = Vec::with_capacity(sorted.len());
    let mut recall = Vec::with_capacity(sorted.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for m in &sorted {
        if m.true_positive {
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / total_gt as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let sum: f64 = (0..RECALL_POINTS)
        .map(|i| {
            let r = i as f64 / (RECALL_POINTS - 1) as f64;
            let k = recall.partition_point(|&v| v < r);
            precision.get(k).copied().unwrap_or(0.0)
        })
        .sum();
    sum / RECALL_POINTS as f64
}

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Minimum confidence for the single-point precision / recall figures.
    pub conf_threshold: f64,
    pub iou_thresholds: Vec<f64>,
    /// IoU threshold for precision, recall and the TP/FP/FN tallies.
    pub report_iou: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { conf_threshold: 0.25, iou_thresholds: coco_iou_thresholds(), report_iou: 0.5 }
    }
}

/// Ground truth over a fixed image set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalDataset {
    pub images: Vec<String>,
    pub categories: Vec<String>,
    pub ground_truth: Vec<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    pub instances: usize,
    pub detections: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub ap50: f64,
    pub ap50_95: f64,
    /// AP per entry of `EvalReport::iou_thresholds`.
    pub ap_per_threshold: Vec<f64>,
    /// False for classes with neither ground truth nor detections; those stay
    /// out of the `All` means.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub interpolation: String,
    pub iou_thresholds: Vec<f64>,
    pub conf_threshold: f64,
    pub report_iou: f64,
    pub images: usize,
    pub classes: Vec<ClassReport>,
    /// Arithmetic means over included classes; counts are summed.
    pub all: ClassReport,
}

type Key = (usize, usize);

fn validate(dataset: &EvalDataset, dets: &[Detection]) -> Result<BTreeMap<String, usize>, EvalError> {
    let images: BTreeMap<String, usize> = dataset.images.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let nc = dataset.categories.len();
    for g in &dataset.ground_truth {
        if !images.contains_key(&g.image) {
            return Err(EvalError::UnknownImage { what: "ground truth", image: g.image.clone() });
        }
        if g.class >= nc {
            return Err(EvalError::UnknownClass { what: "ground truth", class: g.class });
        }
    }
    for d in dets {
        if !images.contains_key(&d.image) {
            return Err(EvalError::UnknownImage { what: "detection", image: d.image.clone() });
        }
        if d.class >= nc {
            return Err(EvalError::UnknownClass { what: "detection", class: d.class });
        }
        if !(0.0..=1.0).contains(&d.confidence) {
            return Err(EvalError::InvalidDetection(format!("confidence {} outside [0, 1]", d.confidence)));
        }
        if !(d.bbox.w > 0.0 && d.bbox.h > 0.0) {
            return Err(EvalError::InvalidDetection(format!("box {:?} has no area", d.bbox)));
        }
    }
    Ok(images)
}

/// Scores `dets` against the dataset's ground truth, class by class.
pub fn evaluate(dataset: &EvalDataset, dets: &[Detection], options: &EvalOptions) -> Result<EvalReport, EvalError> {
    let images = validate(dataset, dets)?;

    // (class, image) -> boxes
    let mut gts: BTreeMap<Key, Vec<BBox<f64>>> = BTreeMap::new();
    for g in &dataset.ground_truth {
        gts.entry((g.class, images[&g.image])).or_default().push(g.bbox);
    }
    let mut found: BTreeMap<Key, Vec<(BBox<f64>, f64)>> = BTreeMap::new();
    for d in dets {
        found.entry((d.class, images[&d.image])).or_default().push((d.bbox, d.confidence));
    }
    let keys: BTreeSet<Key> = gts.keys().chain(found.keys()).copied().collect();
    let empty_gt: Vec<BBox<f64>> = Vec::new();
    let empty_det: Vec<(BBox<f64>, f64)> = Vec::new();

    let mut classes = Vec::with_capacity(dataset.categories.len());
    for (class, name) in dataset.categories.iter().enumerate() {
        let class_keys: Vec<Key> = keys.iter().filter(|k| k.0 == class).copied().collect();
        let instances: usize = class_keys.iter().map(|k| gts.get(k).map_or(0, Vec::len)).sum();
        let detections: usize = class_keys.iter().map(|k| found.get(k).map_or(0, Vec::len)).sum();

        let ap_per_threshold: Vec<f64> = options
            .iou_thresholds
            .iter()
            .map(|&t| {
                let mut scored = Vec::with_capacity(detections);
                for k in &class_keys {
                    let d = found.get(k).unwrap_or(&empty_det);
                    let m = match_boxes(d, gts.get(k).unwrap_or(&empty_gt), t);
                    scored.extend(
                        d.iter()
                            .zip(&m.assignment)
                            .map(|(&(_, c), a)| ScoredMatch { confidence: c, true_positive: a.is_some() }),
                    );
                }
                average_precision(&scored, instances)
            })
            .collect();

        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for k in &class_keys {
            let confident: Vec<_> = found
                .get(k)
                .unwrap_or(&empty_det)
                .iter()
                .filter(|(_, c)| *c >= options.conf_threshold)
                .copied()
                .collect();
            let m = match_boxes(&confident, gts.get(k).unwrap_or(&empty_gt), options.report_iou);
            tp += m.tp;
            fp += m.fp;
            fn_ += m.fn_;
        }
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let ap50 = options.iou_thresholds.iter().position(|&t| (t - 0.5).abs() < 1e-12).map_or_else(
            || {
                let mut scored = Vec::new();
                for k in &class_keys {
                    let d = found.get(k).unwrap_or(&empty_det);
                    let m = match_boxes(d, gts.get(k).unwrap_or(&empty_gt), 0.5);
                    scored.extend(
                        d.iter()
                            .zip(&m.assignment)
                            .map(|(&(_, c), a)| ScoredMatch { confidence: c, true_positive: a.is_some() }),
                    );
                }
                average_precision(&scored, instances)
            },
            |i| ap_per_threshold[i],
        );
        let ap50_95 = if ap_per_threshold.is_empty() {
            0.0
        } else {
            ap_per_threshold.iter().sum::<f64>() / ap_per_threshold.len() as f64
        };
        classes.push(ClassReport {
            name: name.clone(),
            instances,
            detections,
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, instances),
            ap50,
            ap50_95,
            ap_per_threshold,
            included: instances > 0 || detections > 0,
        });
    }

    let all = aggregate(&classes, options.iou_thresholds.len());
    Ok(EvalReport {
        interpolation: format!("{RECALL_POINTS}-point interpolated AP"),
        iou_thresholds: options.iou_thresholds.clone(),
        conf_threshold: options.conf_threshold,
        report_iou: options.report_iou,
        images: dataset.images.len(),
        classes,
        all,
    })
}

fn aggregate(classes: &[ClassReport], thresholds: usize) -> ClassReport {
    let included: Vec<&ClassReport> = classes.iter().filter(|c| c.included).collect();
    let n = included.len();
    let mean = |f: &dyn Fn(&ClassReport) -> f64| {
        if n == 0 {
            0.0
        } else {
            included.iter().map(|c| f(c)).sum::<f64>() / n as f64
        }
    };
    ClassReport {
        name: "All".into(),
        instances: classes.iter().map(|c| c.instances).sum(),
        detections: classes.iter().map(|c| c.detections).sum(),
        tp: classes.iter().map(|c| c.tp).sum(),
        fp: classes.iter().map(|c| c.fp).sum(),
        fn_: classes.iter().map(|c| c.fn_).sum(),
        precision: mean(&|c| c.precision),
        recall: mean(&|c| c.recall),
        ap50: mean(&|c| c.ap50),
        ap50_95: mean(&|c| c.ap50_95),
        ap_per_threshold: (0..thresholds).map(|i| mean(&|c| c.ap_per_threshold[i])).collect(),
        included: n > 0,
    }
}

impl EvalReport {
    /// Aligned table: one row for `All`, then one per class.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.iou_thresholds;
        let range = match (t.first(), t.last()) {
            (Some(a), Some(b)) => format!("{a:.2}..{b:.2} ({} thresholds)", t.len()),
            _ => "none".into(),
        };
        let _ = writeln!(s, "# {}; IoU {range}", self.interpolation);
        let _ = writeln!(
            s,
            "# precision/recall at IoU {:.2}, confidence >= {:.2}; {} images",
            self.report_iou, self.conf_threshold, self.images
        );
        let width = self.classes.iter().map(|c| c.name.len()).max().unwrap_or(0).max(5);
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>8}  {:>8}  {:>12}",
            "Class", "Instances", "Precision", "Recall", "mAP@0.5", "", "mAP@0.5:0.95"
        );
        for c in std::iter::once(&self.all).chain(&self.classes) {
            if c.included {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>9}  {:>9.3}  {:>9.3}  {:>8.3}  {:>8}  {:>12.3}",
                    c.name, c.instances, c.precision, c.recall, c.ap50, "", c.ap50_95
                );
            } else {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>9}  {:>9}  {:>9}  {:>8}  {:>8}  {:>12}",
                    c.name, c.instances, "-", "-", "-", "", "-"
                );
            }
        }
        s
    }
}

/// `(train_size / batch_size) * epochs`, without rounding.
pub fn training_iterations(train_size: u64, batch_size: u64, epochs: u64) -> Result<f64, EvalError> {
    if batch_size == 0 {
        return Err(EvalError::ZeroBatchSize);
    }
    Ok(train_size as f64 / batch_size as f64 * epochs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox<f64> {
        BBox::new(x, y, w, h)
    }

    #[test]
    fn iou_cases() {
        assert_eq!(iou(&b(1.0, 2.0, 3.0, 4.0), &b(1.0, 2.0, 3.0, 4.0)), 1.0);
        assert_eq!(iou(&b(0.0, 0.0, 1.0, 1.0), &b(5.0, 5.0, 1.0, 1.0)), 0.0);
        assert!((iou(&b(0.0, 0.0, 2.0, 2.0), &b(1.0, 1.0, 2.0, 2.0)) - 1.0 / 7.0).abs() < 1e-12);
        let f = iou(&BBox::<f32>::new(0.0, 0.0, 2.0, 2.0), &BBox::new(1.0, 1.0, 2.0, 2.0));
        assert!((f - 1.0 / 7.0).abs() < 1e-6);
    }

    #[test]
    fn iou_matches_pixel_counting() {
        // Unit-cell counting on integer boxes.
        let count = |a: [i32; 4], c: [i32; 4]| {
            let (mut inter, mut union) = (0, 0);
            for y in -5..10 {
                for x in -5..10 {
                    let ina = x >= a[0] && x < a[0] + a[2] && y >= a[1] && y < a[1] + a[3];
                    let inc = x >= c[0] && x < c[0] + c[2] && y >= c[1] && y < c[1] + c[3];
                    inter += (ina && inc) as i32;
                    union += (ina || inc) as i32;
                }
            }
            inter as f64 / union as f64
        };
        for (a, c) in [([0, 0, 2, 2], [1, 1, 2, 2]), ([0, 0, 4, 3], [2, -1, 3, 5]), ([1, 1, 1, 1], [1, 1, 3, 3])] {
            let fa = a.map(f64::from);
            let fc = c.map(f64::from);
            let v = iou(&b(fa[0], fa[1], fa[2], fa[3]), &b(fc[0], fc[1], fc[2], fc[3]));
            assert!((v - count(a, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_cases() {
        let gt = b(10.0, 10.0, 20.0, 20.0);
        let m = match_boxes(&[(gt, 0.9)], &[gt], 0.5);
        assert_eq!((m.tp, m.fp, m.fn_), (1, 0, 0));

        let m = match_boxes(&[], &[gt, gt], 0.5);
        assert_eq!(m.fn_, 2);

        // Both at IoU 0.9 (width 18 inside 20): the more confident one wins.
        let near = b(10.0, 10.0, 18.0, 20.0);
        let m = match_boxes(&[(near, 0.8), (near, 0.9)], &[gt], 0.5);
        assert_eq!((m.tp, m.fp), (1, 1));
        assert_eq!(m.assignment, vec![None, Some(0)]);
    }

    #[test]
    fn matching_ties() {
        let gt = b(0.0, 0.0, 10.0, 10.0);
        // Equal confidence: first in input order claims the box.
        let m = match_boxes(&[(gt, 0.5), (gt, 0.5)], &[gt], 0.5);
        assert_eq!(m.assignment, vec![Some(0), None]);
        // Equal IoU: lowest ground-truth index.
        let m = match_boxes(&[(gt, 0.5)], &[gt, gt], 0.5);
        assert_eq!(m.assignment, vec![Some(0)]);
    }

    #[test]
    fn ap_cases() {
        let tp = |c| ScoredMatch { confidence: c, true_positive: true };
        let fp = |c| ScoredMatch { confidence: c, true_positive: false };
        assert_eq!(average_precision(&[tp(0.9)], 1), 1.0);
        assert_eq!(average_precision(&[fp(0.9), fp(0.5)], 1), 0.0);
        assert_eq!(average_precision(&[], 3), 0.0);
        assert_eq!(average_precision(&[], 0), 1.0);
        assert_eq!(average_precision(&[fp(0.3)], 0), 0.0);
        // Recall 0.5 at precision 1, recall 1 at precision 2/3:
        // 51 samples at 1 and 50 at 2/3.
        let ap = average_precision(&[tp(0.9), fp(0.8), tp(0.7)], 2);
        assert!((ap - (51.0 + 50.0 * 2.0 / 3.0) / 101.0).abs() < 1e-12);
        // Input order does not matter.
        assert_eq!(ap, average_precision(&[tp(0.7), tp(0.9), fp(0.8)], 2));
    }

    #[test]
    fn thresholds() {
        let t = coco_iou_thresholds();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], 0.5);
        assert_eq!(t[9], 0.95);
    }

    #[test]
    fn iterations() {
        assert_eq!(training_iterations(414, 32, 100), Ok(1293.75));
        assert_eq!(training_iterations(32, 32, 1), Ok(1.0));
        assert_eq!(training_iterations(400, 32, 100), Ok(1250.0));
        assert_eq!(training_iterations(1, 0, 1), Err(EvalError::ZeroBatchSize));
    }

    fn dataset() -> EvalDataset {
        let gt = |image: &str, class, bbox| GroundTruth { image: image.into(), class, bbox };
        EvalDataset {
            images: vec!["a".into(), "b".into()],
            categories: vec!["gear".into(), "ring".into(), "unused".into()],
            ground_truth: vec![
                gt("a", 0, b(0.0, 0.0, 10.0, 10.0)),
                gt("a", 1, b(20.0, 20.0, 5.0, 8.0)),
                gt("b", 0, b(3.0, 4.0, 30.0, 12.0)),
            ],
        }
    }

    #[test]
    fn perfect_detector() {
        let ds = dataset();
        let dets: Vec<_> = ds
            .ground_truth
            .iter()
            .map(|g| Detection { image: g.image.clone(), class: g.class, bbox: g.bbox, confidence: 0.9 })
            .collect();
        let r = evaluate(&ds, &dets, &EvalOptions::default()).unwrap();
        for c in r.classes.iter().filter(|c| c.included).chain([&r.all]) {
            assert_eq!((c.precision, c.recall, c.ap50, c.ap50_95), (1.0, 1.0, 1.0, 1.0));
            assert!(c.ap_per_threshold.iter().all(|&v| v == 1.0));
        }
        assert!(!r.classes[2].included);
        assert_eq!(r.all.tp, 3);
    }

    #[test]
    fn unknown_references() {
        let ds = dataset();
        let det =
            |image: &str, class| Detection { image: image.into(), class, bbox: b(0.0, 0.0, 1.0, 1.0), confidence: 0.5 };
        assert!(matches!(
            evaluate(&ds, &[det("zzz", 0)], &EvalOptions::default()),
            Err(EvalError::UnknownImage { .. })
        ));
        assert!(matches!(evaluate(&ds, &[det("a", 7)], &EvalOptions::default()), Err(EvalError::UnknownClass { .. })));
    }

    #[test]
    fn detections_without_ground_truth_score_zero() {
        let ds = dataset();
        let dets = vec![Detection { image: "a".into(), class: 2, bbox: b(0.0, 0.0, 5.0, 5.0), confidence: 0.9 }];
        let r = evaluate(&ds, &dets, &EvalOptions::default()).unwrap();
        let unused = &r.classes[2];
        assert!(unused.included);
        assert_eq!((unused.ap50, unused.ap50_95, unused.fp), (0.0, 0.0, 1));
        // gear and ring were missed entirely.
        assert_eq!(r.all.ap50, 0.0);
    }

    #[test]
    fn confidence_cutoff_only_affects_point_metrics() {
        let ds = dataset();
        let dets: Vec<_> = ds
            .ground_truth
            .iter()
            .map(|g| Detection { image: g.image.clone(), class: g.class, bbox: g.bbox, confidence: 0.1 })
            .collect();
        let r = evaluate(&ds, &dets, &EvalOptions::default()).unwrap();
        assert_eq!(r.all.ap50, 1.0);
        assert_eq!((r.all.precision, r.all.recall, r.all.tp, r.all.fn_), (0.0, 0.0, 0, 3));
        let text = r.to_text();
        assert!(text.contains("101-point"));
        assert!(text.lines().any(|l| l.starts_with("All")));
        assert!(text.lines().any(|l| l.starts_with("unused") && l.contains('-')));
    }

    fn arb_box() -> impl Strategy<Value = BBox<f64>> {
        (0.0..50.0f64, 0.0..50.0f64, 0.5..30.0f64, 0.5..30.0f64).prop_map(|(x, y, w, h)| b(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let v = iou(&a, &c);
            prop_assert_eq!(v, iou(&c, &a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn lower_threshold_never_loses_tp(
            dets in prop::collection::vec((arb_box(), 0.0..1.0f64), 0..6),
            gts in prop::collection::vec(arb_box(), 0..6),
            t in 0.3..0.9f64,
        ) {
            let strict = match_boxes(&dets, &gts, t + 0.1);
            let loose = match_boxes(&dets, &gts, t);
            prop_assert!(loose.tp >= strict.tp);
        }

        #[test]
        fn ap_bounded_and_monotone_in_threshold(
            dets in prop::collection::vec((arb_box(), 0.0..1.0f64), 0..6),
            gts in prop::collection::vec(arb_box(), 1..6),
        ) {
            let mut last = f64::INFINITY;
            for t in coco_iou_thresholds() {
                let m = match_boxes(&dets, &gts, t);
                let scored: Vec<_> = dets.iter().zip(&m.assignment)
                    .map(|(d, a)| ScoredMatch { confidence: d.1, true_positive: a.is_some() })
                    .collect();
                let ap = average_precision(&scored, gts.len());
                prop_assert!((0.0..=1.0).contains(&ap));
                prop_assert!(ap <= last + 1e-12);
                last = ap;
            }
        }
    }
}
