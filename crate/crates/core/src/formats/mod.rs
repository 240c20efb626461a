//! Annotation file formats (YOLO, Pascal VOC, COCO) and dataset scanning.

pub mod coco;
pub mod dataset;
pub mod voc;
pub mod yolo;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coco::{parse_coco, serialize_coco};
pub use dataset::{annotation_path, scan_dataset, DatasetLayout, ImageEntry};
pub use voc::{parse_voc, serialize_voc, VocDocument};
pub use yolo::{parse_classes, parse_yolo, serialize_classes, serialize_yolo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Yolo,
    Voc,
    Coco,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 3] = [ExportFormat::Yolo, ExportFormat::Voc, ExportFormat::Coco];

    pub fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Yolo => "yolo",
            ExportFormat::Voc => "voc",
            ExportFormat::Coco => "coco",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yolo" => Ok(ExportFormat::Yolo),
            "voc" => Ok(ExportFormat::Voc),
            "coco" => Ok(ExportFormat::Coco),
            other => Err(format!("unknown format {other:?} (expected yolo, voc or coco)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: class {class_id} is not registered")]
    UnknownClass { line: usize, class_id: u32 },
    #[error("line {line}: normalized value {value} outside [0, 1]")]
    Range { line: usize, value: f64 },
    #[error("{context}: {message}")]
    Geometry { context: String, message: String },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing or invalid field {path}")]
    Schema { path: String },
    #[error("dangling reference: {0}")]
    Reference(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl FormatError {
    /// Line number for line-oriented errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Parse { line, .. }
            | FormatError::UnknownClass { line, .. }
            | FormatError::Range { line, .. } => Some(*line),
            _ => None,
        }
    }
}
