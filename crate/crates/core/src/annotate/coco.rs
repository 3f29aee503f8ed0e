//! COCO detection JSON: writing, validated parsing and conversion to YOLO.
//!
//! Output is canonical: keys in the order `images`, `annotations`,
//! `categories`; per-object keys in declaration order below; reals rounded to
//! six decimals; pretty-printed with a trailing newline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize, Serializer};

use super::yolo::YoloRecord;
use super::{AnnotateError, InstanceStats};
use crate::eval::BBox;

fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn ser_round6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*v))
}

fn ser_round6_box<S: Serializer>(v: &[f64; 4], s: S) -> Result<S::Ok, S::Error> {
    v.map(round6).serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, width, height]` in pixels from the top-left corner.
    #[serde(serialize_with = "ser_round6_box")]
    pub bbox: [f64; 4],
    #[serde(serialize_with = "ser_round6")]
    pub area: f64,
    #[serde(default)]
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

/// One entry of a COCO detection-results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoResult {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    pub score: f64,
}

/// A rendered image and its surviving instances.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<InstanceStats>,
}

impl CocoDataset {
    /// Categories sorted by id; a category's YOLO class index is its rank here.
    pub fn sorted_categories(&self) -> Vec<&CocoCategory> {
        let mut cats: Vec<_> = self.categories.iter().collect();
        cats.sort_by_key(|c| c.id);
        cats
    }

    pub fn class_index(&self) -> BTreeMap<u64, usize> {
        self.sorted_categories().iter().enumerate().map(|(i, c)| (c.id, i)).collect()
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("COCO dataset serializes");
        out.push(b'\n');
        out
    }
}

/// Category ids are `class_id + 1`; images without instances are omitted.
/// Image and annotation ids are assigned sequentially from 1.
pub fn build_coco(images: &[ImageRecord], categories: &[String]) -> Result<CocoDataset, AnnotateError> {
    let mut names = BTreeSet::new();
    for img in images {
        if !names.insert(img.file_name.as_str()) {
            return Err(AnnotateError::DuplicateFileName(img.file_name.clone()));
        }
    }
    let mut coco = CocoDataset {
        images: Vec::new(),
        annotations: Vec::new(),
        categories: categories
            .iter()
            .enumerate()
            .map(|(i, name)| CocoCategory { id: i as u64 + 1, name: name.clone() })
            .collect(),
    };
    for img in images {
        let boxes: Vec<_> = img.instances.iter().filter_map(|s| s.bbox_px.map(|b| (s.class_id, b))).collect();
        if boxes.is_empty() {
            continue;
        }
        let image_id = coco.images.len() as u64 + 1;
        coco.images.push(CocoImage {
            id: image_id,
            file_name: img.file_name.clone(),
            width: img.width,
            height: img.height,
        });
        for (class_id, b) in boxes {
            let (w, h) = (b.w as f64, b.h as f64);
            coco.annotations.push(CocoAnnotation {
                id: coco.annotations.len() as u64 + 1,
                image_id,
                category_id: class_id as u64 + 1,
                bbox: [b.x as f64, b.y as f64, w, h],
                area: w * h,
                iscrowd: 0,
            });
        }
    }
    Ok(coco)
}

pub fn write_coco(images: &[ImageRecord], categories: &[String]) -> Result<Vec<u8>, AnnotateError> {
    Ok(build_coco(images, categories)?.to_json())
}

/// Parses and validates id uniqueness, references, image sizes and boxes.
/// Annotations are returned sorted by `(image_id, id)`.
pub fn parse_coco(bytes: &[u8]) -> Result<CocoDataset, AnnotateError> {
    let mut coco: CocoDataset = serde_json::from_slice(bytes)?;
    let mut images = BTreeSet::new();
    for img in &coco.images {
        if !images.insert(img.id) {
            return Err(AnnotateError::DuplicateId { kind: "image", id: img.id });
        }
        if img.width == 0 || img.height == 0 {
            return Err(AnnotateError::EmptyImage(img.id));
        }
    }
    let mut categories = BTreeSet::new();
    for c in &coco.categories {
        if !categories.insert(c.id) {
            return Err(AnnotateError::DuplicateId { kind: "category", id: c.id });
        }
    }
    let mut ids = BTreeSet::new();
    for a in &coco.annotations {
        if !ids.insert(a.id) {
            return Err(AnnotateError::DuplicateId { kind: "annotation", id: a.id });
        }
        if !images.contains(&a.image_id) {
            return Err(AnnotateError::MissingImage { annotation: a.id, image: a.image_id });
        }
        if !categories.contains(&a.category_id) {
            return Err(AnnotateError::MissingCategory { annotation: a.id, category: a.category_id });
        }
        let [x, y, w, h] = a.bbox;
        if ![x, y, w, h].iter().all(|v| v.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(AnnotateError::InvalidBox(a.id));
        }
    }
    coco.annotations.sort_by_key(|a| (a.image_id, a.id));
    Ok(coco)
}

pub fn parse_coco_results(bytes: &[u8]) -> Result<Vec<CocoResult>, AnnotateError> {
    Ok(serde_json::from_slice(bytes)?)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct YoloConversion {
    /// Records per image file name; images without annotations map to an empty list.
    pub labels: BTreeMap<String, Vec<YoloRecord>>,
    /// Category names in class-index order.
    pub class_names: Vec<String>,
    pub warnings: Vec<String>,
}

/// `cx = (x + w/2) / W`, `cy = (y + h/2) / H`, `w' = w / W`, `h' = h / H`.
/// Boxes reaching outside the image are clipped first, with a warning.
pub fn coco_to_yolo(coco: &CocoDataset) -> Result<YoloConversion, AnnotateError> {
    let class_index = coco.class_index();
    let images: BTreeMap<u64, &CocoImage> = coco.images.iter().map(|i| (i.id, i)).collect();
    let mut out = YoloConversion {
        class_names: coco.sorted_categories().iter().map(|c| c.name.clone()).collect(),
        ..Default::default()
    };
    for img in &coco.images {
        if img.width == 0 || img.height == 0 {
            return Err(AnnotateError::EmptyImage(img.id));
        }
        out.labels.entry(img.file_name.clone()).or_default();
    }
    let mut annotations: Vec<&CocoAnnotation> = coco.annotations.iter().collect();
    annotations.sort_by_key(|a| (a.image_id, a.id));
    for a in annotations {
        let img = images.get(&a.image_id).ok_or(AnnotateError::MissingImage { annotation: a.id, image: a.image_id })?;
        let class = *class_index
            .get(&a.category_id)
            .ok_or(AnnotateError::MissingCategory { annotation: a.id, category: a.category_id })?;
        let (iw, ih) = (img.width as f64, img.height as f64);
        let [x, y, w, h] = a.bbox;
        let (x0, y0) = (x.max(0.0), y.max(0.0));
        let (x1, y1) = ((x + w).min(iw), (y + h).min(ih));
        if (x0, y0, x1, y1) != (x, y, x + w, y + h) {
            out.warnings.push(format!("annotation {} clipped to the bounds of `{}`", a.id, img.file_name));
        }
        if !(x1 > x0 && y1 > y0) {
            out.warnings.push(format!("annotation {} lies outside `{}`; skipped", a.id, img.file_name));
            continue;
        }
        let (w, h) = (x1 - x0, y1 - y0);
        out.labels.get_mut(&img.file_name).expect("inserted above").push(YoloRecord {
            class,
            cx: (x0 + w / 2.0) / iw,
            cy: (y0 + h / 2.0) / ih,
            w: w / iw,
            h: h / ih,
        });
    }
    Ok(out)
}

/// Inverse of [`coco_to_yolo`] for one image: pixel-space boxes per class index.
pub fn yolo_to_coco(records: &[YoloRecord], width: u32, height: u32) -> Vec<(usize, BBox<f64>)> {
    records.iter().map(|r| (r.class, r.to_pixels(width, height))).collect()
}
