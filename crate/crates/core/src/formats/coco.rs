//! COCO detection JSON: a single document for the whole dataset.
//!
//! Category ids are `class_id + 1`; image and annotation ids start at 1 and
//! ascend in dataset order. Boxes are written as integer `[x, y, w, h]`.

use std::collections::HashMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::annotation::{BBox, ClassRegistry, FrameAnnotations, ImageSize, LabeledBox};

use super::FormatError;

#[derive(Serialize)]
struct CocoDocument<'a> {
    images: Vec<CocoImage<'a>>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory<'a>>,
}

#[derive(Serialize)]
struct CocoImage<'a> {
    id: u64,
    file_name: &'a str,
    width: u32,
    height: u32,
}

#[derive(Serialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: [i64; 4],
    area: i64,
    iscrowd: u8,
}

#[derive(Serialize)]
struct CocoCategory<'a> {
    id: u64,
    name: &'a str,
}

pub fn serialize_coco(frames: &[FrameAnnotations], registry: &ClassRegistry) -> String {
    let mut images = Vec::with_capacity(frames.len());
    let mut annotations = Vec::new();
    let mut next_ann = 1u64;
    for (i, frame) in frames.iter().enumerate() {
        let image_id = i as u64 + 1;
        images.push(CocoImage {
            id: image_id,
            file_name: &frame.image_path,
            width: frame.image_size.width,
            height: frame.image_size.height,
        });
        for a in &frame.annotations {
            let b = a.bbox.rounded();
            let (x, y, w, h) = (b.x as i64, b.y as i64, b.w as i64, b.h as i64);
            annotations.push(CocoAnnotation {
                id: next_ann,
                image_id,
                category_id: u64::from(a.class_id) + 1,
                bbox: [x, y, w, h],
                area: w * h,
                iscrowd: 0,
            });
            next_ann += 1;
        }
    }
    let categories = registry
        .iter()
        .map(|(id, name)| CocoCategory {
            id: u64::from(id) + 1,
            name,
        })
        .collect();
    let doc = CocoDocument {
        images,
        annotations,
        categories,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("COCO document serializes");
    out.push('\n');
    out
}

fn schema(path: impl Into<String>) -> FormatError {
    FormatError::Schema { path: path.into() }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, FormatError> {
    obj.get(key).ok_or_else(|| schema(format!("{path}.{key}")))
}

fn as_u64(obj: &Map<String, Value>, key: &str, path: &str) -> Result<u64, FormatError> {
    field(obj, key, path)?
        .as_u64()
        .ok_or_else(|| schema(format!("{path}.{key}")))
}

fn as_str<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, FormatError> {
    field(obj, key, path)?
        .as_str()
        .ok_or_else(|| schema(format!("{path}.{key}")))
}

fn objects<'a>(root: &'a Map<String, Value>, key: &str) -> Result<Vec<(String, &'a Map<String, Value>)>, FormatError> {
    let arr = root
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| schema(key))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("{key}[{i}]");
            v.as_object().map(|o| (path.clone(), o)).ok_or_else(|| schema(path))
        })
        .collect()
}

/// Parses a COCO document into frames (in `images[]` order) and the class
/// registry (categories ordered by id).
pub fn parse_coco(json: &str) -> Result<(Vec<FrameAnnotations>, ClassRegistry), FormatError> {
    let value: Value = serde_json::from_str(json).map_err(|e| FormatError::Json(e.to_string()))?;
    let root = value.as_object().ok_or_else(|| schema("$"))?;

    let mut categories = Vec::new();
    for (path, obj) in objects(root, "categories")? {
        categories.push((as_u64(obj, "id", &path)?, as_str(obj, "name", &path)?.to_string(), path));
    }
    categories.sort_by_key(|c| c.0);
    let mut registry = ClassRegistry::new();
    let mut class_of = HashMap::new();
    for (cat_id, name, path) in categories {
        if class_of.contains_key(&cat_id) {
            return Err(FormatError::Reference(format!("duplicate category id {cat_id}")));
        }
        let class_id = registry
            .add(name)
            .map_err(|e| schema(format!("{path}.name ({e})")))?;
        class_of.insert(cat_id, class_id);
    }

    let mut frames = Vec::new();
    let mut frame_of = HashMap::new();
    let mut boxes: Vec<Vec<LabeledBox>> = Vec::new();
    for (path, obj) in objects(root, "images")? {
        let id = as_u64(obj, "id", &path)?;
        let file_name = as_str(obj, "file_name", &path)?;
        let width = as_u64(obj, "width", &path)?;
        let height = as_u64(obj, "height", &path)?;
        let (Ok(width), Ok(height)) = (u32::try_from(width), u32::try_from(height)) else {
            return Err(schema(format!("{path}.width")));
        };
        if width == 0 || height == 0 {
            return Err(FormatError::Geometry {
                context: path,
                message: "image has zero size".into(),
            });
        }
        if frame_of.insert(id, frames.len()).is_some() {
            return Err(FormatError::Reference(format!("duplicate image id {id}")));
        }
        frames.push(FrameAnnotations::new(file_name, file_name, ImageSize::new(width, height)));
        boxes.push(Vec::new());
    }

    for (path, obj) in objects(root, "annotations")? {
        as_u64(obj, "id", &path)?;
        let image_id = as_u64(obj, "image_id", &path)?;
        let category_id = as_u64(obj, "category_id", &path)?;
        let raw = field(obj, "bbox", &path)?
            .as_array()
            .filter(|a| a.len() == 4)
            .ok_or_else(|| schema(format!("{path}.bbox")))?;
        let mut v = [0.0; 4];
        for (slot, n) in v.iter_mut().zip(raw) {
            *slot = n
                .as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| schema(format!("{path}.bbox")))?;
        }
        let &frame_idx = frame_of.get(&image_id).ok_or_else(|| {
            FormatError::Reference(format!("{path}.image_id {image_id} has no image"))
        })?;
        let &class_id = class_of.get(&category_id).ok_or_else(|| {
            FormatError::Reference(format!("{path}.category_id {category_id} has no category"))
        })?;
        let bbox = BBox::new(v[0], v[1], v[2], v[3]);
        if !bbox.has_positive_area() {
            return Err(FormatError::Geometry {
                context: path,
                message: "box has zero size".into(),
            });
        }
        let bbox = bbox
            .clip_to(frames[frame_idx].image_size)
            .ok_or_else(|| FormatError::Geometry {
                context: path.clone(),
                message: "box lies outside the image".into(),
            })?;
        boxes[frame_idx].push(LabeledBox { class_id, bbox });
    }

    let frames = frames
        .into_iter()
        .zip(boxes)
        .map(|(f, b)| FrameAnnotations::with_boxes(f.frame_id, f.image_path, f.image_size, b))
        .collect();
    Ok((frames, registry))
}
