//! YOLO text labels: one `class cx cy w h` line per box, normalized to the
//! image size, plus a `classes.txt` with one class name per line.

use std::fmt::Write as _;

use crate::annotation::{BBox, ClassRegistry, FrameAnnotations, ImageSize, LabeledBox};

use super::FormatError;

/// Slack allowed on normalized values before they count as out of range.
pub const RANGE_EPSILON: f64 = 1e-6;

pub fn serialize_yolo(frame: &FrameAnnotations) -> String {
    let (iw, ih) = (frame.image_size.w(), frame.image_size.h());
    let mut out = String::new();
    for a in &frame.annotations {
        let (cx, cy) = a.bbox.center();
        // writing to a String cannot fail
        let _ = writeln!(
            out,
            "{} {:.6} {:.6} {:.6} {:.6}",
            a.class_id,
            cx / iw,
            cy / ih,
            a.bbox.w / iw,
            a.bbox.h / ih
        );
    }
    out
}

/// Contents of `classes.txt`.
pub fn serialize_classes(registry: &ClassRegistry) -> String {
    registry.names().iter().map(|n| format!("{n}\n")).collect()
}

pub fn parse_classes(text: &str) -> Result<ClassRegistry, FormatError> {
    let mut reg = ClassRegistry::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        reg.add(line).map_err(|e| FormatError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(reg)
}

/// Parses YOLO label text into absolute-pixel boxes, clipped to the image.
pub fn parse_yolo(
    text: &str,
    image_size: ImageSize,
    registry: &ClassRegistry,
) -> Result<Vec<LabeledBox>, FormatError> {
    if image_size.is_empty() {
        return Err(FormatError::Schema {
            path: "image_size".into(),
        });
    }
    let (iw, ih) = (image_size.w(), image_size.h());
    let mut boxes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(FormatError::Parse {
                line,
                message: format!("expected 5 fields, found {}", tokens.len()),
            });
        }
        let class_id: u32 = tokens[0].parse().map_err(|_| FormatError::Parse {
            line,
            message: format!("invalid class id {:?}", tokens[0]),
        })?;
        let mut vals = [0.0f64; 4];
        for (slot, tok) in vals.iter_mut().zip(&tokens[1..]) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FormatError::Parse {
                    line,
                    message: format!("invalid number {tok:?}"),
                })?;
        }
        if !registry.contains(class_id) {
            return Err(FormatError::UnknownClass { line, class_id });
        }
        if let Some(&bad) = vals
            .iter()
            .find(|&&v| v < -RANGE_EPSILON || v > 1.0 + RANGE_EPSILON)
        {
            return Err(FormatError::Range { line, value: bad });
        }
        let [cx, cy, w, h] = vals;
        let bbox = BBox::new((cx - w / 2.0) * iw, (cy - h / 2.0) * ih, w * iw, h * ih);
        if !bbox.has_positive_area() {
            return Err(FormatError::Geometry {
                context: format!("line {line}"),
                message: "box has zero size".into(),
            });
        }
        let bbox = bbox.clip_to(image_size).ok_or_else(|| FormatError::Geometry {
            context: format!("line {line}"),
            message: "box lies outside the image".into(),
        })?;
        boxes.push(LabeledBox { class_id, bbox });
    }
    Ok(boxes)
}
