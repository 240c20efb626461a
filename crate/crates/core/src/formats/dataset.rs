use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::annotation::ClassRegistry;

use super::{coco, yolo, ExportFormat, FormatError};

pub const IMAGE_EXTENSIONS: [&str; 5] = ["jpg", "jpeg", "png", "bmp", "webp"];
pub const CLASSES_FILE: &str = "classes.txt";
pub const COCO_FILE: &str = "annotations.json";
/// Directory (under the dataset root) that receives augmented output; never
/// scanned as part of the source dataset.
pub const AUGMENTED_DIR: &str = "augmented";

#[derive(Debug, Clone, PartialEq)]
pub struct ImageEntry {
    /// Path relative to the dataset root, `/`-separated.
    pub rel_path: String,
    pub annotation_path: PathBuf,
    pub annotated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetLayout {
    pub root: PathBuf,
    pub format: ExportFormat,
    pub images: Vec<ImageEntry>,
    pub classes_path: PathBuf,
    /// Classes read from `classes.txt` (YOLO) or the COCO categories.
    pub registry: ClassRegistry,
    pub warnings: Vec<String>,
}

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Where the annotation for `rel_image` lives in `format`.
pub fn annotation_path(root: &Path, rel_image: &str, format: ExportFormat) -> PathBuf {
    match format {
        ExportFormat::Coco => root.join(COCO_FILE),
        ExportFormat::Yolo => root.join(rel_image).with_extension("txt"),
        ExportFormat::Voc => root.join(rel_image).with_extension("xml"),
    }
}

fn rel_string(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Option<Vec<&str>> = rel.components().map(|c| c.as_os_str().to_str()).collect();
    parts.map(|p| p.join("/"))
}

/// Lists images under `root` in lexicographic order of their relative paths
/// and pairs each with its annotation file.
pub fn scan_dataset(root: &Path, format: ExportFormat) -> Result<DatasetLayout, FormatError> {
    let io_err = |e: std::io::Error| FormatError::Io {
        path: root.to_path_buf(),
        message: e.to_string(),
    };
    let meta = fs::metadata(root).map_err(io_err)?;
    if !meta.is_dir() {
        return Err(FormatError::Io {
            path: root.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    fs::read_dir(root).map_err(io_err)?;

    let mut warnings = Vec::new();
    let mut rel_paths = Vec::new();
    let walker = WalkDir::new(root).follow_links(false).into_iter().filter_entry(|e| {
        if e.depth() == 0 {
            return true;
        }
        let name = e.file_name().to_string_lossy();
        if name.starts_with('.') {
            return false;
        }
        !(e.depth() == 1 && e.file_type().is_dir() && name == AUGMENTED_DIR)
    });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warnings.push(format!("skipped unreadable entry: {e}"));
                continue;
            }
        };
        if !entry.file_type().is_file() || !is_image_path(entry.path()) {
            continue;
        }
        match rel_string(root, entry.path()) {
            Some(rel) => rel_paths.push(rel),
            None => warnings.push(format!("skipped non-UTF-8 path {}", entry.path().display())),
        }
    }
    rel_paths.sort();

    let classes_path = root.join(CLASSES_FILE);
    let mut registry = ClassRegistry::new();
    let mut coco_listed: HashSet<String> = HashSet::new();
    match format {
        ExportFormat::Yolo => match fs::read_to_string(&classes_path) {
            Ok(text) => match yolo::parse_classes(&text) {
                Ok(r) => registry = r,
                Err(e) => warnings.push(format!("{}: {e}", classes_path.display())),
            },
            Err(_) => warnings.push(format!(
                "{} not found; starting with an empty class list",
                classes_path.display()
            )),
        },
        ExportFormat::Coco => {
            let coco_path = root.join(COCO_FILE);
            if let Ok(text) = fs::read_to_string(&coco_path) {
                match coco::parse_coco(&text) {
                    Ok((frames, reg)) => {
                        registry = reg;
                        coco_listed = frames.into_iter().map(|f| f.image_path).collect();
                    }
                    Err(e) => warnings.push(format!("{}: {e}", coco_path.display())),
                }
            }
        }
        ExportFormat::Voc => {
            if let Ok(text) = fs::read_to_string(&classes_path) {
                if let Ok(r) = yolo::parse_classes(&text) {
                    registry = r;
                }
            }
        }
    }

    let images = rel_paths
        .into_iter()
        .map(|rel| {
            let annotation_path = annotation_path(root, &rel, format);
            let annotated = match format {
                ExportFormat::Coco => coco_listed.contains(&rel),
                _ => annotation_path.is_file(),
            };
            ImageEntry {
                rel_path: rel,
                annotation_path,
                annotated,
            }
        })
        .collect();

    Ok(DatasetLayout {
        root: root.to_path_buf(),
        format,
        images,
        classes_path,
        registry,
        warnings,
    })
}
