//! Pascal VOC XML, one document per image.
//!
//! Box corners are exported as 1-based inclusive integers:
//! `xmin = round(x) + 1`, `xmax = round(x + w)`. Importing reverses that
//! (or treats corners as 0-based half-open when `zero_based` is set).

use std::fmt::Write as _;
use std::path::Path;

use roxmltree::{Document, Node};

use crate::annotation::{BBox, ClassRegistry, FrameAnnotations, ImageSize, LabeledBox};

use super::FormatError;

pub const DEFAULT_DEPTH: u32 = 3;

/// Contents of a parsed VOC document.
#[derive(Debug, Clone, PartialEq)]
pub struct VocDocument {
    pub folder: String,
    pub filename: String,
    pub image_size: ImageSize,
    pub depth: u32,
    pub boxes: Vec<LabeledBox>,
    /// Non-fatal notes, such as classes added to the registry on import.
    pub warnings: Vec<String>,
}

impl VocDocument {
    pub fn into_frame(self, frame_id: impl Into<String>, image_path: impl Into<String>) -> FrameAnnotations {
        FrameAnnotations::with_boxes(frame_id, image_path, self.image_size, self.boxes)
    }
}

/// Escapes the five XML-reserved characters.
pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// 1-based inclusive integer corners of a box.
pub fn voc_corners(bbox: &BBox) -> (i64, i64, i64, i64) {
    (
        bbox.x.round() as i64 + 1,
        bbox.y.round() as i64 + 1,
        bbox.right().round() as i64,
        bbox.bottom().round() as i64,
    )
}

pub fn serialize_voc(frame: &FrameAnnotations, registry: &ClassRegistry) -> String {
    let path = Path::new(&frame.image_path);
    let filename = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let folder = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut out = String::new();
    // writing to a String cannot fail
    let _ = writeln!(out, "<annotation>");
    let _ = writeln!(out, "\t<folder>{}</folder>", escape_xml(&folder));
    let _ = writeln!(out, "\t<filename>{}</filename>", escape_xml(&filename));
    let _ = writeln!(out, "\t<size>");
    let _ = writeln!(out, "\t\t<width>{}</width>", frame.image_size.width);
    let _ = writeln!(out, "\t\t<height>{}</height>", frame.image_size.height);
    let _ = writeln!(out, "\t\t<depth>{DEFAULT_DEPTH}</depth>");
    let _ = writeln!(out, "\t</size>");
    for a in &frame.annotations {
        let name = registry
            .name(a.class_id)
            .map(str::to_owned)
            .unwrap_or_else(|| a.class_id.to_string());
        let (xmin, ymin, xmax, ymax) = voc_corners(&a.bbox);
        let _ = writeln!(out, "\t<object>");
        let _ = writeln!(out, "\t\t<name>{}</name>", escape_xml(&name));
        let _ = writeln!(out, "\t\t<pose>Unspecified</pose>");
        let _ = writeln!(out, "\t\t<truncated>0</truncated>");
        let _ = writeln!(out, "\t\t<difficult>0</difficult>");
        let _ = writeln!(out, "\t\t<bndbox>");
        let _ = writeln!(out, "\t\t\t<xmin>{xmin}</xmin>");
        let _ = writeln!(out, "\t\t\t<ymin>{ymin}</ymin>");
        let _ = writeln!(out, "\t\t\t<xmax>{xmax}</xmax>");
        let _ = writeln!(out, "\t\t\t<ymax>{ymax}</ymax>");
        let _ = writeln!(out, "\t\t</bndbox>");
        let _ = writeln!(out, "\t</object>");
    }
    let _ = writeln!(out, "</annotation>");
    out
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn text_of(node: Node<'_, '_>, name: &str, path: &str) -> Result<String, FormatError> {
    child(node, name)
        .map(|n| n.text().unwrap_or("").trim().to_string())
        .ok_or_else(|| FormatError::Schema {
            path: format!("{path}/{name}"),
        })
}

fn number_of(node: Node<'_, '_>, name: &str, path: &str) -> Result<f64, FormatError> {
    let raw = text_of(node, name, path)?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| FormatError::Schema {
            path: format!("{path}/{name} ({raw:?} is not a number)"),
        })
}

/// Parses a VOC document. Class names missing from `registry` are appended
/// to it and reported in [`VocDocument::warnings`].
pub fn parse_voc(
    xml: &str,
    registry: &mut ClassRegistry,
    zero_based: bool,
) -> Result<VocDocument, FormatError> {
    let doc = Document::parse(xml).map_err(|e| FormatError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("annotation") {
        return Err(FormatError::Schema {
            path: "annotation".into(),
        });
    }
    let folder = child(root, "folder")
        .and_then(|n| n.text())
        .unwrap_or("")
        .trim()
        .to_string();
    let filename = child(root, "filename")
        .and_then(|n| n.text())
        .unwrap_or("")
        .trim()
        .to_string();
    let size_node = child(root, "size").ok_or_else(|| FormatError::Schema {
        path: "annotation/size".into(),
    })?;
    let width = number_of(size_node, "width", "annotation/size")?;
    let height = number_of(size_node, "height", "annotation/size")?;
    if width < 1.0 || height < 1.0 || width > f64::from(u32::MAX) || height > f64::from(u32::MAX) {
        return Err(FormatError::Geometry {
            context: "annotation/size".into(),
            message: format!("invalid image size {width}x{height}"),
        });
    }
    let image_size = ImageSize::new(width as u32, height as u32);
    let depth = child(size_node, "depth")
        .and_then(|n| n.text())
        .and_then(|t| t.trim().parse().ok())
        .unwrap_or(DEFAULT_DEPTH);

    let mut boxes = Vec::new();
    let mut warnings = Vec::new();
    for (i, obj) in root.children().filter(|n| n.has_tag_name("object")).enumerate() {
        let path = format!("annotation/object[{i}]");
        let name = text_of(obj, "name", &path)?;
        let bb = child(obj, "bndbox").ok_or_else(|| FormatError::Schema {
            path: format!("{path}/bndbox"),
        })?;
        let bb_path = format!("{path}/bndbox");
        let xmin = number_of(bb, "xmin", &bb_path)?;
        let ymin = number_of(bb, "ymin", &bb_path)?;
        let xmax = number_of(bb, "xmax", &bb_path)?;
        let ymax = number_of(bb, "ymax", &bb_path)?;
        if xmax < xmin || ymax < ymin {
            return Err(FormatError::Geometry {
                context: bb_path,
                message: format!("max corner ({xmax}, {ymax}) precedes min corner ({xmin}, {ymin})"),
            });
        }
        let bbox = if zero_based {
            BBox::new(xmin, ymin, xmax - xmin, ymax - ymin)
        } else {
            BBox::new(xmin - 1.0, ymin - 1.0, xmax - xmin + 1.0, ymax - ymin + 1.0)
        };
        if !bbox.has_positive_area() {
            return Err(FormatError::Geometry {
                context: bb_path,
                message: "box has zero size".into(),
            });
        }
        let bbox = bbox.clip_to(image_size).ok_or_else(|| FormatError::Geometry {
            context: bb_path.clone(),
            message: "box lies outside the image".into(),
        })?;
        let (class_id, added) = registry
            .get_or_add(&name)
            .map_err(|e| FormatError::Schema {
                path: format!("{path}/name ({e})"),
            })?;
        if added {
            warnings.push(format!("added class {name:?} as id {class_id}"));
        }
        boxes.push(LabeledBox { class_id, bbox });
    }
    Ok(VocDocument {
        folder,
        filename,
        image_size,
        depth,
        boxes,
        warnings,
    })
}
