//! An open dataset: frames with per-frame locks, classes, prompts, settings
//! and the autosave writer.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use framelabel_core::annotation::{
    Annotation, BBox, BoxId, ClassRegistry, EditJournal, Frame, FrameAnnotations, ImageSize,
    LabeledBox, DEFAULT_JOURNAL_CAPACITY,
};
use framelabel_core::augment::{generate, write_dataset_files, write_sample_files, AugmentationConfig};
use framelabel_core::autolabel::model::BackendSpec;
use framelabel_core::autolabel::{
    apply_detections, detect_frame, AutoLabelConfig, FrameOutcome, FrameSummary, ModelBackend,
    PromptStore, VisualPrompt,
};
use framelabel_core::formats::dataset::{annotation_path, scan_dataset, CLASSES_FILE, COCO_FILE};
use framelabel_core::formats::{
    parse_coco, parse_voc, parse_yolo, serialize_classes, serialize_coco, serialize_voc,
    serialize_yolo, ExportFormat,
};
use framelabel_core::fsutil::write_atomic;
use framelabel_core::propagation::{self, PropagationPolicy, PropagationRequest, PropagationSummary};
use image::RgbImage;
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::autosave::{AutosaveQueue, AutosaveStatus, AutosaveTiming, Batch};
use crate::backend::create_backend;
use crate::error::ServiceError;

/// Project document kept at the dataset root.
pub const PROJECT_FILE: &str = "bakuproject.json";
pub const DOCUMENT_VERSION: u32 = 1;

/// Per-project tunables persisted in the project document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectSettings {
    pub augmentation: AugmentationConfig,
    pub autolabel: AutoLabelConfig,
    pub backend: BackendSpec,
    pub locale: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProjectDocument {
    version: u32,
    format: ExportFormat,
    #[serde(default)]
    classes: ClassRegistry,
    #[serde(default)]
    settings: ProjectSettings,
    #[serde(default)]
    prompts: PromptStore,
}

#[derive(Debug, Clone)]
pub struct OpenOptions {
    /// Annotation format; defaults to the one recorded in the project
    /// document, else YOLO.
    pub format: Option<ExportFormat>,
    pub voc_zero_based: bool,
    pub journal_capacity: usize,
    /// `None` disables background saving; call [`Project::save`] instead.
    pub autosave: Option<AutosaveTiming>,
}

impl Default for OpenOptions {
    fn default() -> Self {
        Self {
            format: None,
            voc_zero_based: false,
            journal_capacity: DEFAULT_JOURNAL_CAPACITY,
            autosave: Some(AutosaveTiming::default()),
        }
    }
}

/// A non-fatal problem found while opening, tied to a file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileWarning {
    pub path: String,
    pub message: String,
}

struct FrameSlot {
    frame: RwLock<Frame>,
    image_file: PathBuf,
    annotation_file: PathBuf,
    /// Parse problem with this frame's annotation file, if any.
    warning: Mutex<Option<String>>,
    /// Whether the unreadable original was copied aside before overwriting.
    backed_up: AtomicBool,
}

/// Overview of one frame.
#[derive(Debug, Clone, Serialize)]
pub struct FrameInfo {
    pub index: usize,
    pub frame_id: String,
    pub image_path: String,
    pub image_size: ImageSize,
    pub box_count: usize,
    pub revision: u64,
    pub warning: Option<String>,
}

/// Box as supplied by a client when replacing a frame's list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxInput {
    #[serde(default)]
    pub box_id: Option<BoxId>,
    pub class_id: u32,
    pub bbox: BBox,
    #[serde(default)]
    pub source: Option<framelabel_core::annotation::Source>,
    #[serde(default)]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentReport {
    pub images: usize,
    pub samples: usize,
    pub files: Vec<String>,
}

pub struct Project {
    id: String,
    root: PathBuf,
    format: ExportFormat,
    journal_capacity: usize,
    registry: RwLock<ClassRegistry>,
    frames: Vec<FrameSlot>,
    by_frame_id: HashMap<String, usize>,
    prompts: RwLock<PromptStore>,
    settings: RwLock<ProjectSettings>,
    backend: Mutex<Option<(BackendSpec, Arc<dyn ModelBackend>)>>,
    warnings: Vec<FileWarning>,
    coco_unreadable: AtomicBool,
    autosave: Arc<AutosaveQueue>,
    background: bool,
    writer: Mutex<Option<JoinHandle<()>>>,
    write_lock: Mutex<()>,
}

impl std::fmt::Debug for Project {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Project")
            .field("id", &self.id)
            .field("root", &self.root)
            .field("format", &self.format)
            .field("frames", &self.frames.len())
            .finish()
    }
}

fn read_document(root: &Path, warnings: &mut Vec<FileWarning>) -> Option<ProjectDocument> {
    let path = root.join(PROJECT_FILE);
    let text = fs::read_to_string(&path).ok()?;
    match serde_json::from_str(&text) {
        Ok(doc) => Some(doc),
        Err(e) => {
            warnings.push(FileWarning {
                path: path.display().to_string(),
                message: e.to_string(),
            });
            None
        }
    }
}

fn remap_classes(
    boxes: Vec<LabeledBox>,
    from: &ClassRegistry,
    to: &mut ClassRegistry,
) -> Result<Vec<LabeledBox>, String> {
    boxes
        .into_iter()
        .map(|b| {
            let name = from.name(b.class_id).ok_or_else(|| format!("unknown class {}", b.class_id))?;
            let (class_id, _) = to.get_or_add(name).map_err(|e| e.to_string())?;
            Ok(LabeledBox { class_id, ..b })
        })
        .collect()
}

impl Project {
    /// Scans `root`, loads existing annotations and starts autosaving.
    ///
    /// Unreadable annotation files do not fail the open: the frame starts
    /// empty and carries a warning.
    pub fn open(id: impl Into<String>, root: &Path, options: OpenOptions) -> Result<Arc<Self>, ServiceError> {
        let root = root.to_path_buf();
        if !root.is_dir() {
            return Err(ServiceError::io(&root, "dataset root is not a directory"));
        }
        let mut warnings = Vec::new();
        let doc = read_document(&root, &mut warnings);
        let format = options
            .format
            .or(doc.as_ref().map(|d| d.format))
            .unwrap_or(ExportFormat::Yolo);
        let layout = scan_dataset(&root, format)?;
        for w in &layout.warnings {
            if !w.contains(CLASSES_FILE) || !layout.images.is_empty() {
                warnings.push(FileWarning {
                    path: root.display().to_string(),
                    message: w.clone(),
                });
            }
        }
        if layout.images.is_empty() {
            return Err(ServiceError::EmptyDataset(root));
        }

        let mut registry = match (format, &doc) {
            (ExportFormat::Yolo, _) if !layout.registry.is_empty() => layout.registry.clone(),
            (_, Some(d)) => d.classes.clone(),
            _ => ClassRegistry::new(),
        };
        if format != ExportFormat::Yolo {
            for name in layout.registry.names() {
                let _ = registry.get_or_add(name);
            }
        }

        let mut coco_boxes: HashMap<String, Vec<LabeledBox>> = HashMap::new();
        let mut coco_unreadable = false;
        if format == ExportFormat::Coco {
            let path = root.join(COCO_FILE);
            if let Ok(text) = fs::read_to_string(&path) {
                match parse_coco(&text) {
                    Ok((frames, reg)) => {
                        for f in frames {
                            let boxes = remap_classes(f.labeled_boxes(), &reg, &mut registry)
                                .map_err(ServiceError::Validation)?;
                            coco_boxes.insert(f.image_path.clone(), boxes);
                        }
                    }
                    Err(e) => {
                        coco_unreadable = true;
                        warnings.push(FileWarning {
                            path: path.display().to_string(),
                            message: e.to_string(),
                        });
                    }
                }
            }
        }

        let mut frames = Vec::with_capacity(layout.images.len());
        for entry in &layout.images {
            let image_file = root.join(&entry.rel_path);
            let size = match image::image_dimensions(&image_file) {
                Ok((w, h)) if w > 0 && h > 0 => ImageSize::new(w, h),
                Ok(_) => {
                    warnings.push(FileWarning {
                        path: image_file.display().to_string(),
                        message: "image has no pixels; skipped".into(),
                    });
                    continue;
                }
                Err(e) => {
                    warnings.push(FileWarning {
                        path: image_file.display().to_string(),
                        message: format!("unreadable image, skipped: {e}"),
                    });
                    continue;
                }
            };
            let mut warning = None;
            let boxes = match format {
                ExportFormat::Coco => coco_boxes.remove(&entry.rel_path).unwrap_or_default(),
                _ if !entry.annotated => Vec::new(),
                ExportFormat::Yolo => fs::read_to_string(&entry.annotation_path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| parse_yolo(&t, size, &registry).map_err(|e| e.to_string()))
                    .unwrap_or_else(|e| {
                        warning = Some(e);
                        Vec::new()
                    }),
                ExportFormat::Voc => fs::read_to_string(&entry.annotation_path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| parse_voc(&t, &mut registry, options.voc_zero_based).map_err(|e| e.to_string()))
                    .map(|d| {
                        for w in &d.warnings {
                            warnings.push(FileWarning {
                                path: entry.annotation_path.display().to_string(),
                                message: w.clone(),
                            });
                        }
                        if d.image_size != size {
                            warnings.push(FileWarning {
                                path: entry.annotation_path.display().to_string(),
                                message: format!(
                                    "declared size {}x{} differs from the image ({}x{}); boxes clipped",
                                    d.image_size.width, d.image_size.height, size.width, size.height
                                ),
                            });
                        }
                        d.boxes
                    })
                    .unwrap_or_else(|e| {
                        warning = Some(e);
                        Vec::new()
                    }),
            };
            if let Some(w) = &warning {
                warnings.push(FileWarning {
                    path: entry.annotation_path.display().to_string(),
                    message: w.clone(),
                });
            }
            let data = FrameAnnotations::with_boxes(&entry.rel_path, &entry.rel_path, size, boxes);
            frames.push(FrameSlot {
                frame: RwLock::new(Frame::with_journal(
                    data,
                    EditJournal::with_capacity(options.journal_capacity.max(1)),
                )),
                image_file,
                annotation_file: entry.annotation_path.clone(),
                warning: Mutex::new(warning),
                backed_up: AtomicBool::new(false),
            });
        }
        if frames.is_empty() {
            return Err(ServiceError::EmptyDataset(root));
        }

        let by_frame_id = frames
            .iter()
            .enumerate()
            .map(|(i, s)| (s.frame.read().data().frame_id.clone(), i))
            .collect();
        let (settings, prompts) = doc.map(|d| (d.settings, d.prompts)).unwrap_or_default();
        let background = options.autosave.is_some();
        let project = Arc::new(Self {
            id: id.into(),
            root,
            format,
            journal_capacity: options.journal_capacity,
            registry: RwLock::new(registry),
            frames,
            by_frame_id,
            prompts: RwLock::new(prompts),
            settings: RwLock::new(settings),
            backend: Mutex::new(None),
            warnings,
            coco_unreadable: AtomicBool::new(coco_unreadable),
            autosave: Arc::new(AutosaveQueue::new(options.autosave.unwrap_or_default())),
            background,
            writer: Mutex::new(None),
            write_lock: Mutex::new(()),
        });
        if background {
            let worker = Arc::clone(&project);
            let handle = std::thread::Builder::new()
                .name(format!("autosave-{}", project.id))
                .spawn(move || worker.autosave_loop())
                .map_err(|e| ServiceError::Internal(e.to_string()))?;
            *project.writer.lock() = Some(handle);
        }
        Ok(project)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn format(&self) -> ExportFormat {
        self.format
    }

    pub fn journal_capacity(&self) -> usize {
        self.journal_capacity
    }

    pub fn warnings(&self) -> &[FileWarning] {
        &self.warnings
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Index of the frame whose dataset-relative image path is `frame_id`.
    pub fn index_of(&self, frame_id: &str) -> Option<usize> {
        self.by_frame_id.get(frame_id).copied()
    }

    fn slot(&self, index: usize) -> Result<&FrameSlot, ServiceError> {
        self.frames
            .get(index)
            .ok_or_else(|| ServiceError::not_found("frame", format!("{}#{index}", self.id)))
    }

    pub fn frame(&self, index: usize) -> Result<FrameAnnotations, ServiceError> {
        Ok(self.slot(index)?.frame.read().data().clone())
    }

    pub fn frame_info(&self, index: usize) -> Result<FrameInfo, ServiceError> {
        let slot = self.slot(index)?;
        let f = slot.frame.read();
        let data = f.data();
        Ok(FrameInfo {
            index,
            frame_id: data.frame_id.clone(),
            image_path: data.image_path.clone(),
            image_size: data.image_size,
            box_count: data.annotations.len(),
            revision: data.revision,
            warning: slot.warning.lock().clone(),
        })
    }

    pub fn frames(&self) -> Vec<FrameInfo> {
        (0..self.frames.len()).filter_map(|i| self.frame_info(i).ok()).collect()
    }

    pub fn image_file(&self, index: usize) -> Result<PathBuf, ServiceError> {
        Ok(self.slot(index)?.image_file.clone())
    }

    pub fn load_image(&self, index: usize) -> Result<RgbImage, ServiceError> {
        let slot = self.slot(index)?;
        let img = image::open(&slot.image_file)
            .map_err(|e| ServiceError::io(&slot.image_file, e))?
            .to_rgb8();
        let size = slot.frame.read().image_size();
        if img.dimensions() != (size.width, size.height) {
            return Err(ServiceError::io(
                &slot.image_file,
                format!("image changed size on disk to {:?}", img.dimensions()),
            ));
        }
        Ok(img)
    }

    /// Runs a mutation on one frame under its write lock.
    ///
    /// With `expected_revision`, a frame at a different revision is left
    /// untouched and [`ServiceError::Conflict`] is returned. Any change is
    /// queued for autosave.
    pub fn edit_frame<T>(
        &self,
        index: usize,
        expected_revision: Option<u64>,
        change: impl FnOnce(&mut Frame, &ClassRegistry) -> Result<T, ServiceError>,
    ) -> Result<(T, FrameAnnotations), ServiceError> {
        let slot = self.slot(index)?;
        let registry = self.registry.read();
        let mut frame = slot.frame.write();
        if let Some(expected) = expected_revision {
            if frame.revision() != expected {
                return Err(ServiceError::Conflict {
                    expected,
                    actual: frame.revision(),
                });
            }
        }
        let before = frame.revision();
        let out = change(&mut frame, &registry)?;
        let changed = frame.revision() != before;
        let snapshot = frame.data().clone();
        drop(frame);
        drop(registry);
        if changed {
            self.mark_frame(index);
        }
        Ok((out, snapshot))
    }

    /// Replaces the frame's whole box list as one undoable step. Given box
    /// ids are kept; missing ones are allocated.
    pub fn replace_boxes(
        &self,
        index: usize,
        expected_revision: Option<u64>,
        boxes: Vec<BoxInput>,
    ) -> Result<FrameAnnotations, ServiceError> {
        let (_, snapshot) = self.edit_frame(index, expected_revision, |frame, registry| {
            for b in &boxes {
                registry.ensure(b.class_id)?;
                if !b.bbox.is_within(frame.image_size()) {
                    return Err(ServiceError::OutOfBounds(format!(
                        "box {:?} lies outside the {}x{} image",
                        b.bbox,
                        frame.image_size().width,
                        frame.image_size().height
                    )));
                }
                if b.score.is_some_and(|s| !(0.0..=1.0).contains(&s)) {
                    return Err(ServiceError::Validation("score must lie in [0, 1]".into()));
                }
            }
            frame.bulk(|list, ctx| {
                list.clear();
                for b in &boxes {
                    let box_id = match b.box_id {
                        Some(id) => {
                            ctx.reserve_id(id);
                            id
                        }
                        None => ctx.allocate_id(),
                    };
                    let source = b.source.unwrap_or_default();
                    let score = if source == framelabel_core::annotation::Source::Autolabel {
                        b.score
                    } else {
                        None
                    };
                    list.push(Annotation {
                        box_id,
                        class_id: b.class_id,
                        bbox: b.bbox,
                        source,
                        score,
                    });
                }
                Ok(())
            })?;
            Ok(())
        })?;
        Ok(snapshot)
    }

    pub fn undo(&self, index: usize) -> Result<FrameAnnotations, ServiceError> {
        Ok(self.edit_frame(index, None, |f, _| Ok(f.undo().map(|_| ())?))?.1)
    }

    pub fn redo(&self, index: usize) -> Result<FrameAnnotations, ServiceError> {
        Ok(self.edit_frame(index, None, |f, _| Ok(f.redo().map(|_| ())?))?.1)
    }

    /// Copies boxes from one frame to others; each target changes in a
    /// single undoable step.
    pub fn propagate(&self, request: &PropagationRequest) -> Result<Vec<PropagationSummary>, ServiceError> {
        let source_index = self
            .index_of(&request.source_frame_id)
            .ok_or_else(|| ServiceError::not_found("frame", &request.source_frame_id))?;
        let source = self.frame(source_index)?;
        let boxes = propagation::validate(request, &source, |id| self.index_of(id).is_some())?;
        let mut targets: Vec<usize> = request
            .target_frame_ids
            .iter()
            .map(|t| self.index_of(t).expect("validated"))
            .collect();
        targets.sort_unstable();
        targets.dedup();
        targets
            .into_iter()
            .map(|t| {
                let (summary, _) = self.edit_frame(t, None, |frame, _| {
                    Ok(propagation::copy_into(&boxes, frame, request.policy)?)
                })?;
                Ok(summary)
            })
            .collect()
    }

    /// Frame ids of the `count` frames following `source_frame_id`.
    pub fn range_targets(&self, source_frame_id: &str, count: usize) -> Result<Vec<String>, ServiceError> {
        let source = self
            .index_of(source_frame_id)
            .ok_or_else(|| ServiceError::not_found("frame", source_frame_id))?;
        if count == 0 {
            return Err(propagation::PropagationError::InvalidCount.into());
        }
        if source + count >= self.frames.len() {
            return Err(propagation::PropagationError::RangeExceedsDataset {
                source_index: source,
                count,
                len: self.frames.len(),
            }
            .into());
        }
        (source + 1..=source + count)
            .map(|i| Ok(self.frame(i)?.frame_id))
            .collect()
    }

    pub fn propagate_range(
        &self,
        source_frame_id: &str,
        count: usize,
        box_ids: Option<Vec<BoxId>>,
        policy: PropagationPolicy,
    ) -> Result<Vec<PropagationSummary>, ServiceError> {
        let targets = self.range_targets(source_frame_id, count)?;
        self.propagate(&PropagationRequest {
            source_frame_id: source_frame_id.to_string(),
            target_frame_ids: targets,
            box_ids,
            policy,
        })
    }

    pub fn classes(&self) -> ClassRegistry {
        self.registry.read().clone()
    }

    pub fn add_class(&self, name: &str) -> Result<u32, ServiceError> {
        let id = self.registry.write().add(name)?;
        self.mark_document();
        Ok(id)
    }

    pub fn settings(&self) -> ProjectSettings {
        self.settings.read().clone()
    }

    pub fn set_settings(&self, settings: ProjectSettings) -> Result<(), ServiceError> {
        settings.augmentation.validate()?;
        settings.autolabel.validate()?;
        *self.settings.write() = settings;
        self.mark_document();
        Ok(())
    }

    /// Backend named in the settings, created on first use.
    pub fn backend(&self) -> Result<Arc<dyn ModelBackend>, ServiceError> {
        let spec = self.settings.read().backend.clone();
        let mut cached = self.backend.lock();
        if let Some((s, b)) = cached.as_ref() {
            if *s == spec {
                return Ok(Arc::clone(b));
            }
        }
        let backend = create_backend(&spec)?;
        *cached = Some((spec, Arc::clone(&backend)));
        Ok(backend)
    }

    pub fn prompts(&self) -> PromptStore {
        self.prompts.read().clone()
    }

    /// Embeds `bbox` of a frame's image and stores it as a prompt.
    pub fn add_prompt(&self, class_id: u32, index: usize, bbox: BBox) -> Result<VisualPrompt, ServiceError> {
        let backend = self.backend()?;
        let data = self.frame(index)?;
        let image = self.load_image(index)?;
        let registry = self.registry.read().clone();
        let prompt = self
            .prompts
            .write()
            .add_prompt(&registry, class_id, &data, &image, bbox, backend.as_ref())?;
        self.mark_document();
        Ok(prompt)
    }

    pub fn remove_prompt(&self, prompt_id: u64) -> Result<VisualPrompt, ServiceError> {
        let removed = self.prompts.write().remove(prompt_id)?;
        self.mark_document();
        Ok(removed)
    }

    /// Drops the prompts of one class, or all prompts. Returns how many.
    pub fn clear_prompts(&self, class_id: Option<u32>) -> usize {
        let mut store = self.prompts.write();
        let n = match class_id {
            Some(k) => store.clear_class(k),
            None => {
                let n = store.total();
                *store = PromptStore::new();
                n
            }
        };
        drop(store);
        if n > 0 {
            self.mark_document();
        }
        n
    }

    /// Auto-labels frames one at a time with a snapshot of the prompts.
    ///
    /// Detection runs without holding the frame lock; only appending the
    /// result does, so interactive edits interleave at frame boundaries.
    /// `cancelled` is checked before each frame.
    pub fn autolabel(
        &self,
        indices: &[usize],
        config: &AutoLabelConfig,
        cancelled: &dyn Fn() -> bool,
        progress: &dyn Fn(usize, usize),
    ) -> Result<Vec<FrameSummary>, ServiceError> {
        config.validate()?;
        let store = self.prompts.read().clone();
        if store.is_empty() {
            return Err(framelabel_core::autolabel::AutolabelError::EmptyPromptStore.into());
        }
        let backend = self.backend()?;
        let mut out = Vec::with_capacity(indices.len());
        for (done, &index) in indices.iter().enumerate() {
            if cancelled() {
                return Err(ServiceError::Cancelled);
            }
            let frame_id = self.frame(index)?.frame_id;
            let result = self
                .load_image(index)
                .and_then(|img| Ok(detect_frame(&frame_id, &img, &store, backend.as_ref(), config)?))
                .and_then(|dets| {
                    self.edit_frame(index, None, |frame, _| Ok(apply_detections(frame, &dets)?))
                });
            out.push(match result {
                Ok((box_ids, snapshot)) => FrameSummary {
                    frame_id,
                    outcome: FrameOutcome::Ok {
                        added: box_ids.len(),
                        box_ids,
                        revision: snapshot.revision,
                    },
                },
                Err(e) => FrameSummary {
                    frame_id,
                    outcome: FrameOutcome::Error { message: e.to_string() },
                },
            });
            progress(done + 1, indices.len());
        }
        Ok(out)
    }

    /// Writes augmented samples of every frame under `<root>/augmented/`.
    pub fn augment(
        &self,
        config: &AugmentationConfig,
        cancelled: &dyn Fn() -> bool,
        progress: &dyn Fn(usize, usize),
    ) -> Result<AugmentReport, ServiceError> {
        config.validate()?;
        let registry = self.registry.read().clone();
        let total = self.frames.len();
        let mut files = Vec::new();
        let mut frames_out = Vec::new();
        let mut samples = 0;
        for index in 0..total {
            if cancelled() {
                return Err(ServiceError::Cancelled);
            }
            let data = self.frame(index)?;
            let image = self.load_image(index)?;
            let generated = generate(&image, &data, config)?;
            samples += generated.len();
            for p in write_sample_files(&self.root, self.format, &generated, &registry)? {
                files.push(p.display().to_string());
            }
            frames_out.extend(generated.into_iter().map(|s| s.annotations));
            progress(index + 1, total);
        }
        for p in write_dataset_files(&self.root, self.format, &frames_out, &registry)? {
            files.push(p.display().to_string());
        }
        Ok(AugmentReport {
            images: total,
            samples,
            files,
        })
    }

    /// Writes every frame in `format` under `out_dir`, mirroring image paths.
    pub fn export(&self, format: ExportFormat, out_dir: &Path) -> Result<Vec<PathBuf>, ServiceError> {
        let registry = self.registry.read().clone();
        let frames: Vec<FrameAnnotations> = (0..self.frames.len()).map(|i| self.frame(i)).collect::<Result<_, _>>()?;
        let mut written = Vec::new();
        let mut put = |path: PathBuf, text: String| -> Result<(), ServiceError> {
            write_atomic(&path, text.as_bytes()).map_err(|e| ServiceError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        match format {
            ExportFormat::Coco => put(out_dir.join(COCO_FILE), serialize_coco(&frames, &registry))?,
            ExportFormat::Yolo => {
                put(out_dir.join(CLASSES_FILE), serialize_classes(&registry))?;
                for f in &frames {
                    put(annotation_path(out_dir, &f.image_path, format), serialize_yolo(f))?;
                }
            }
            ExportFormat::Voc => {
                for f in &frames {
                    put(annotation_path(out_dir, &f.image_path, format), serialize_voc(f, &registry))?;
                }
            }
        }
        Ok(written)
    }

    fn mark_frame(&self, index: usize) {
        self.autosave.mark_frame(index);
    }

    fn mark_document(&self) {
        self.autosave.mark_document();
    }

    pub fn autosave_status(&self) -> AutosaveStatus {
        self.autosave.status()
    }

    fn autosave_loop(&self) {
        while let Some(batch) = self.autosave.next_batch() {
            match self.write_batch(&batch) {
                Ok(()) => self.autosave.succeeded(),
                Err((unwritten, e)) => {
                    tracing::warn!(project = %self.id, error = %e, "autosave failed");
                    self.autosave.failed(unwritten, e.to_string());
                }
            }
        }
    }

    /// Writes all pending changes now.
    pub fn save(&self) -> Result<(), ServiceError> {
        let batch = self.autosave.drain();
        match self.write_batch(&batch) {
            Ok(()) => {
                self.autosave.succeeded();
                Ok(())
            }
            Err((unwritten, e)) => {
                let message = e.to_string();
                self.autosave.failed(unwritten, message);
                Err(e)
            }
        }
    }

    /// Stops the autosave thread and flushes what is left.
    pub fn close(&self) -> Result<(), ServiceError> {
        self.autosave.close();
        if let Some(handle) = self.writer.lock().take() {
            let _ = handle.join();
        }
        self.save()
    }

    pub fn has_background_autosave(&self) -> bool {
        self.background
    }

    fn document_text(&self) -> String {
        let doc = ProjectDocument {
            version: DOCUMENT_VERSION,
            format: self.format,
            classes: self.registry.read().clone(),
            settings: self.settings.read().clone(),
            prompts: self.prompts.read().clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
        text.push('\n');
        text
    }

    /// Copies an unreadable original to `<name>.bak` before it is first
    /// overwritten.
    fn back_up(path: &Path) -> Result<(), ServiceError> {
        if path.is_file() {
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".bak");
            let backup = path.with_file_name(name);
            fs::copy(path, &backup).map_err(|e| ServiceError::io(&backup, e))?;
        }
        Ok(())
    }

    fn write_batch(&self, batch: &Batch) -> Result<(), (Batch, ServiceError)> {
        let _guard = self.write_lock.lock();
        let mut remaining = batch.clone();
        let fail = |remaining: &Batch, e: ServiceError| Err((remaining.clone(), e));
        if batch.document {
            let path = self.root.join(PROJECT_FILE);
            if let Err(e) = write_atomic(&path, self.document_text().as_bytes()) {
                return fail(&remaining, ServiceError::io(&path, e));
            }
            if self.format == ExportFormat::Yolo {
                let path = self.root.join(CLASSES_FILE);
                let text = serialize_classes(&self.registry.read());
                if let Err(e) = write_atomic(&path, text.as_bytes()) {
                    return fail(&remaining, ServiceError::io(&path, e));
                }
            }
            remaining.document = false;
        }
        match self.format {
            ExportFormat::Coco => {
                if !batch.frames.is_empty() || batch.document {
                    let path = self.root.join(COCO_FILE);
                    if self.coco_unreadable.load(Ordering::SeqCst) {
                        if let Err(e) = Self::back_up(&path) {
                            return fail(&remaining, e);
                        }
                        self.coco_unreadable.store(false, Ordering::SeqCst);
                    }
                    let frames: Vec<FrameAnnotations> =
                        self.frames.iter().map(|s| s.frame.read().data().clone()).collect();
                    let text = serialize_coco(&frames, &self.registry.read());
                    if let Err(e) = write_atomic(&path, text.as_bytes()) {
                        return fail(&remaining, ServiceError::io(&path, e));
                    }
                }
                remaining.frames.clear();
            }
            format => {
                for &index in &batch.frames {
                    let slot = &self.frames[index];
                    let data = slot.frame.read().data().clone();
                    if slot.warning.lock().is_some() && !slot.backed_up.load(Ordering::SeqCst) {
                        if let Err(e) = Self::back_up(&slot.annotation_file) {
                            return fail(&remaining, e);
                        }
                        slot.backed_up.store(true, Ordering::SeqCst);
                    }
                    let text = match format {
                        ExportFormat::Yolo => serialize_yolo(&data),
                        _ => serialize_voc(&data, &self.registry.read()),
                    };
                    if let Err(e) = write_atomic(&slot.annotation_file, text.as_bytes()) {
                        return fail(&remaining, ServiceError::io(&slot.annotation_file, e));
                    }
                    *slot.warning.lock() = None;
                    remaining.frames.remove(&index);
                }
            }
        }
        Ok(())
    }

    /// Indices for a list of frame ids, or all frames when `None`.
    pub fn resolve_indices(&self, frame_ids: Option<&[String]>) -> Result<Vec<usize>, ServiceError> {
        match frame_ids {
            None => Ok((0..self.frames.len()).collect()),
            Some(ids) => ids
                .iter()
                .map(|id| self.index_of(id).ok_or_else(|| ServiceError::not_found("frame", id)))
                .collect(),
        }
    }
}
