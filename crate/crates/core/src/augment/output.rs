use std::path::{Path, PathBuf};

use crate::annotation::{ClassRegistry, FrameAnnotations};
use crate::formats::dataset::{annotation_path, AUGMENTED_DIR, CLASSES_FILE, COCO_FILE};
use crate::formats::{serialize_classes, serialize_coco, serialize_voc, serialize_yolo, ExportFormat};
use crate::fsutil::write_atomic;

use super::{AugmentError, AugmentedSample};

/// `dir/stem.ext` → `dir/stem_aug<i>.ext`.
pub fn augmented_rel_path(rel_path: &str, sample_index: u32) -> String {
    let (dir, file) = match rel_path.rsplit_once('/') {
        Some((d, f)) => (Some(d), f),
        None => (None, rel_path),
    };
    let name = match file.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() => format!("{stem}_aug{sample_index}.{ext}"),
        _ => format!("{file}_aug{sample_index}"),
    };
    match dir {
        Some(d) => format!("{d}/{name}"),
        None => name,
    }
}

/// Writes sample images and their annotation files under
/// `<root>/augmented/`, mirroring source subpaths. COCO output goes to one
/// `augmented/annotations.json` covering every sample passed in.
pub fn write_samples(
    root: &Path,
    format: ExportFormat,
    samples: &[AugmentedSample],
    registry: &ClassRegistry,
) -> Result<Vec<PathBuf>, AugmentError> {
    let mut written = write_sample_files(root, format, samples, registry)?;
    let frames: Vec<_> = samples.iter().map(|s| s.annotations.clone()).collect();
    written.extend(write_dataset_files(root, format, &frames, registry)?);
    Ok(written)
}

fn io_error(path: &Path, e: &dyn std::fmt::Display) -> AugmentError {
    AugmentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Per-sample output: the image and, for YOLO and VOC, its label file.
pub fn write_sample_files(
    root: &Path,
    format: ExportFormat,
    samples: &[AugmentedSample],
    registry: &ClassRegistry,
) -> Result<Vec<PathBuf>, AugmentError> {
    let out_root = root.join(AUGMENTED_DIR);
    let mut written = Vec::new();
    for s in samples {
        let rel = &s.annotations.image_path;
        let img_path = out_root.join(rel);
        if let Some(parent) = img_path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_error(parent, &e))?;
        }
        s.image.save(&img_path).map_err(|e| io_error(&img_path, &e))?;
        written.push(img_path);
        let text = match format {
            ExportFormat::Yolo => Some(serialize_yolo(&s.annotations)),
            ExportFormat::Voc => Some(serialize_voc(&s.annotations, registry)),
            ExportFormat::Coco => None,
        };
        if let Some(text) = text {
            let ann_path = annotation_path(&out_root, rel, format);
            write_atomic(&ann_path, text.as_bytes()).map_err(|e| io_error(&ann_path, &e))?;
            written.push(ann_path);
        }
    }
    Ok(written)
}

/// Dataset-level output: `classes.txt` for YOLO, `annotations.json` over
/// `frames` for COCO, nothing for VOC.
pub fn write_dataset_files(
    root: &Path,
    format: ExportFormat,
    frames: &[FrameAnnotations],
    registry: &ClassRegistry,
) -> Result<Vec<PathBuf>, AugmentError> {
    let out_root = root.join(AUGMENTED_DIR);
    let (path, text) = match format {
        ExportFormat::Coco => (out_root.join(COCO_FILE), serialize_coco(frames, registry)),
        ExportFormat::Yolo => (out_root.join(CLASSES_FILE), serialize_classes(registry)),
        ExportFormat::Voc => return Ok(Vec::new()),
    };
    write_atomic(&path, text.as_bytes()).map_err(|e| io_error(&path, &e))?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naming() {
        assert_eq!(augmented_rel_path("a.jpg", 0), "a_aug0.jpg");
        assert_eq!(augmented_rel_path("seq1/frame.001.png", 12), "seq1/frame.001_aug12.png");
        assert_eq!(augmented_rel_path("noext", 1), "noext_aug1");
    }
}
