//! Annotation extraction from render buffers, postprocess filtering and the
//! COCO / YOLO file formats.

mod coco;
mod yolo;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coco::{
    build_coco, coco_to_yolo, parse_coco, parse_coco_results, write_coco, yolo_to_coco, CocoAnnotation, CocoCategory,
    CocoDataset, CocoImage, CocoResult, ImageRecord, YoloConversion,
};
pub use yolo::{format_yolo, parse_yolo, YoloLabel, YoloRecord};

use crate::render::{RenderOutput, NO_INSTANCE};
use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("render buffers ({found}) do not match {width}x{height}")]
    BufferMismatch { width: u32, height: u32, found: usize },
    #[error("instance id {0} in the render is not an active object of the scene")]
    UnknownInstance(u32),
    #[error("no solo pixel count for object {0}")]
    MissingSoloCount(u32),
    #[error("duplicate image file name `{0}`")]
    DuplicateFileName(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("annotation {annotation} references missing image {image}")]
    MissingImage { annotation: u64, image: u64 },
    #[error("annotation {annotation} references missing category {category}")]
    MissingCategory { annotation: u64, category: u64 },
    #[error("image {0} has non-positive dimensions")]
    EmptyImage(u64),
    #[error("annotation {0} has a non-positive or non-finite box")]
    InvalidBox(u64),
    #[error("YOLO line {line}: {message}")]
    Yolo { line: usize, message: String },
}

/// Tight pixel bounds: columns `x..x+w`, rows `y..y+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub object_id: u32,
    pub class_id: usize,
    /// `None` when the object covers no pixel.
    pub bbox_px: Option<PixelBox>,
    pub visible_pixels: usize,
    pub solo_pixels: usize,
    /// `visible / max(solo, 1)`, clamped to 1.
    pub visibility: f64,
    pub collided: bool,
}

/// Per-object statistics for every active object, including invisible ones.
pub fn extract_instances(
    render: &RenderOutput,
    scene: &Scene,
    solo: &BTreeMap<u32, usize>,
) -> Result<Vec<InstanceStats>, AnnotateError> {
    let n = render.pixel_count();
    if render.instance_ids.len() != n || render.depth.len() != n || render.rgb.len() != 3 * n {
        return Err(AnnotateError::BufferMismatch {
            width: render.width,
            height: render.height,
            found: render.instance_ids.len(),
        });
    }

    // [min_x, min_y, max_x, max_y, count]
    let mut acc: BTreeMap<u32, [u32; 5]> = BTreeMap::new();
    for (i, &id) in render.instance_ids.iter().enumerate() {
        if id == NO_INSTANCE {
            continue;
        }
        let (x, y) = (i as u32 % render.width, i as u32 / render.width);
        let e = acc.entry(id).or_insert([x, y, x, y, 0]);
        e[0] = e[0].min(x);
        e[1] = e[1].min(y);
        e[2] = e[2].max(x);
        e[3] = e[3].max(y);
        e[4] += 1;
    }
    if let Some(&id) = acc.keys().find(|&&id| !scene.active_objects().any(|o| o.id == id)) {
        return Err(AnnotateError::UnknownInstance(id));
    }

    scene
        .active_objects()
        .map(|o| {
            let solo_pixels = *solo.get(&o.id).ok_or(AnnotateError::MissingSoloCount(o.id))?;
            let (bbox_px, visible_pixels) = match acc.get(&o.id) {
                Some(&[x0, y0, x1, y1, count]) => {
                    (Some(PixelBox { x: x0, y: y0, w: x1 - x0 + 1, h: y1 - y0 + 1 }), count as usize)
                }
                None => (None, 0),
            };
            let visibility = (visible_pixels as f64 / solo_pixels.max(1) as f64).min(1.0);
            Ok(InstanceStats {
                object_id: o.id,
                class_id: o.class_id.expect("active objects carry a class"),
                bbox_px,
                visible_pixels,
                solo_pixels,
                visibility,
                collided: o.collided,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    #[serde(default = "default_min_visibility")]
    pub min_visibility: f64,
    #[serde(default = "default_min_pixels")]
    pub min_pixels: usize,
}

fn default_min_visibility() -> f64 {
    0.25
}

fn default_min_pixels() -> usize {
    16
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self { min_visibility: default_min_visibility(), min_pixels: default_min_pixels() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<InstanceStats>,
    pub removed: Vec<InstanceStats>,
    /// No instance survived: the whole image is discarded.
    pub drop_image: bool,
}

/// Removes collided objects and objects below either visibility threshold.
/// Values exactly at a threshold are kept.
pub fn filter_instances(stats: &[InstanceStats], min_visibility: f64, min_pixels: usize) -> FilterOutcome {
    let (removed, kept): (Vec<_>, Vec<_>) = stats
        .iter()
        .cloned()
        .partition(|s| s.collided || s.visibility < min_visibility || s.visible_pixels < min_pixels);
    let drop_image = kept.is_empty();
    FilterOutcome { kept, removed, drop_image }
}

#[cfg(test)]
mod tests;
