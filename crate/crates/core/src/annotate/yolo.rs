//! YOLO text labels: `class cx cy w h [confidence]`, coordinates normalized
//! to the image size.

use std::fmt::Write as _;

use super::AnnotateError;
use crate::eval::BBox;

const RANGE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoloRecord {
    /// 0-based rank of the category in declaration order.
    pub class: usize,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl YoloRecord {
    pub fn to_pixels(&self, width: u32, height: u32) -> BBox<f64> {
        let (iw, ih) = (width as f64, height as f64);
        BBox::new((self.cx - self.w / 2.0) * iw, (self.cy - self.h / 2.0) * ih, self.w * iw, self.h * ih)
    }
}

/// A parsed label line: ground truth, or a detection when a confidence is present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoloLabel {
    pub class: usize,
    pub bbox: BBox<f64>,
    pub confidence: Option<f64>,
}

/// One record per line, six decimals.
pub fn format_yolo(records: &[YoloRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{} {:.6} {:.6} {:.6} {:.6}", r.class, r.cx, r.cy, r.w, r.h);
    }
    s
}

/// Parses label lines for an image of `width` x `height`. Blank lines are skipped.
pub fn parse_yolo(text: &str, width: u32, height: u32, num_classes: usize) -> Result<Vec<YoloLabel>, AnnotateError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| AnnotateError::Yolo { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 && fields.len() != 6 {
            return Err(err(format!("expected 5 or 6 fields, found {}", fields.len())));
        }
        let class: usize = fields[0].parse().map_err(|_| err(format!("invalid class index `{}`", fields[0])))?;
        if class >= num_classes {
            return Err(err(format!("class {class} out of range for {num_classes} classes")));
        }
        let mut nums = [0.0f64; 5];
        for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| err(format!("invalid number `{f}`")))?;
            if !slot.is_finite() {
                return Err(err(format!("invalid number `{f}`")));
            }
        }
        let [cx, cy, w, h, conf] = nums;
        if [cx, cy, w, h].iter().any(|v| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(v)) {
            return Err(err("normalized coordinate outside [0, 1]".into()));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(err("box width and height must be positive".into()));
        }
        let confidence = if fields.len() == 6 {
            if !(0.0..=1.0).contains(&conf) {
                return Err(err(format!("confidence {conf} outside [0, 1]")));
            }
            Some(conf)
        } else {
            None
        };
        let bbox = YoloRecord { class, cx, cy, w, h }.to_pixels(width, height);
        out.push(YoloLabel { class, bbox, confidence });
    }
    Ok(out)
}
