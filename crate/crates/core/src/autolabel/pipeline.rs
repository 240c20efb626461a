use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::annotation::{Annotation, BoxId, Frame, FrameAnnotations, ImageSize, Source};
use crate::sequence::FrameSequence;

use super::backend::ModelBackend;
use super::classify::{classify_candidates, AutoLabelConfig, Detection};
use super::prompts::PromptStore;
use super::AutolabelError;

/// Proposes, classifies and suppresses detections for one image.
///
/// Proposals are clipped to the image; ones entirely outside are ignored.
pub fn detect_frame(
    frame_id: &str,
    image: &RgbImage,
    store: &PromptStore,
    backend: &dyn ModelBackend,
    config: &AutoLabelConfig,
) -> Result<Vec<Detection>, AutolabelError> {
    config.validate()?;
    if store.is_empty() {
        return Err(AutolabelError::EmptyPromptStore);
    }
    let backend_err = |source| AutolabelError::Backend {
        frame_id: frame_id.to_string(),
        source,
    };
    let size = ImageSize::new(image.width(), image.height());
    let mut candidates = backend.propose(image).map_err(backend_err)?;
    candidates.retain_mut(|c| match c.bbox.clip_to(size) {
        Some(b) => {
            c.bbox = b;
            true
        }
        None => false,
    });
    classify_candidates(&candidates, store, config)
}

/// Appends detections to the frame as a single journal entry and returns the
/// new box ids. Nothing is recorded when `detections` is empty.
pub fn apply_detections(
    frame: &mut Frame,
    detections: &[Detection],
) -> Result<Vec<BoxId>, AutolabelError> {
    if detections.is_empty() {
        return Ok(Vec::new());
    }
    let ids = frame.bulk(|list, ctx| {
        let size = ctx.image_size();
        let mut ids = Vec::with_capacity(detections.len());
        for d in detections {
            let Some(bbox) = d.bbox.clip_to(size) else {
                continue;
            };
            let box_id = ctx.allocate_id();
            ids.push(box_id);
            list.push(Annotation {
                box_id,
                class_id: d.class_id,
                bbox,
                source: Source::Autolabel,
                score: Some(d.score.clamp(0.0, 1.0)),
            });
        }
        Ok(ids)
    })?;
    Ok(ids)
}

/// Result of auto-labeling one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub frame_id: String,
    #[serde(flatten)]
    pub outcome: FrameOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FrameOutcome {
    Ok {
        added: usize,
        box_ids: Vec<BoxId>,
        revision: u64,
    },
    Error {
        message: String,
    },
}

impl FrameSummary {
    pub fn is_ok(&self) -> bool {
        matches!(self.outcome, FrameOutcome::Ok { .. })
    }

    pub fn added(&self) -> usize {
        match self.outcome {
            FrameOutcome::Ok { added, .. } => added,
            FrameOutcome::Error { .. } => 0,
        }
    }

    pub fn error(frame_id: impl Into<String>, err: &AutolabelError) -> Self {
        Self {
            frame_id: frame_id.into(),
            outcome: FrameOutcome::Error {
                message: err.to_string(),
            },
        }
    }
}

/// Auto-labels one frame: detections are appended with `Source::Autolabel`
/// and their scores, undoable as one step.
pub fn autolabel_frame(
    frame: &mut Frame,
    image: &RgbImage,
    store: &PromptStore,
    backend: &dyn ModelBackend,
    config: &AutoLabelConfig,
) -> Result<FrameSummary, AutolabelError> {
    let detections = detect_frame(&frame.data().frame_id, image, store, backend, config)?;
    let box_ids = apply_detections(frame, &detections)?;
    Ok(FrameSummary {
        frame_id: frame.data().frame_id.clone(),
        outcome: FrameOutcome::Ok {
            added: box_ids.len(),
            box_ids,
            revision: frame.revision(),
        },
    })
}

/// Auto-labels several frames with one prompt-store snapshot.
///
/// Failures are reported per frame and never abort the run. Detection runs
/// on several threads when the backend allows it; edits are applied in
/// `frame_ids` order.
pub fn autolabel_range<L>(
    frames: &mut FrameSequence,
    frame_ids: &[String],
    store: &PromptStore,
    backend: &dyn ModelBackend,
    config: &AutoLabelConfig,
    load_image: L,
) -> Vec<FrameSummary>
where
    L: Fn(&FrameAnnotations) -> Result<RgbImage, String> + Sync,
{
    let snapshot = store.clone();
    let inputs: Vec<Option<FrameAnnotations>> = frame_ids
        .iter()
        .map(|id| frames.get(id).map(|f| f.data().clone()))
        .collect();
    let detect = |i: usize| -> Result<Vec<Detection>, AutolabelError> {
        let data = inputs[i]
            .as_ref()
            .ok_or_else(|| AutolabelError::FrameNotFound(frame_ids[i].clone()))?;
        let image = load_image(data).map_err(|message| AutolabelError::Image {
            frame_id: data.frame_id.clone(),
            message,
        })?;
        detect_frame(&data.frame_id, &image, &snapshot, backend, config)
    };

    let results: Vec<Result<Vec<Detection>, AutolabelError>> =
        if backend.supports_concurrency() && frame_ids.len() > 1 {
            let workers = std::thread::available_parallelism()
                .map_or(1, |n| n.get())
                .min(frame_ids.len());
            let next = AtomicUsize::new(0);
            let slots: Mutex<Vec<Option<Result<Vec<Detection>, AutolabelError>>>> =
                Mutex::new(vec![None; frame_ids.len()]);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= frame_ids.len() {
                            break;
                        }
                        let r = detect(i);
                        slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                    });
                }
            });
            slots
                .into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .into_iter()
                .map(|r| r.expect("every frame visited"))
                .collect()
        } else {
            (0..frame_ids.len()).map(detect).collect()
        };

    frame_ids
        .iter()
        .zip(results)
        .map(|(id, result)| {
            let applied = result.and_then(|dets| {
                let frame = frames
                    .get_mut(id)
                    .ok_or_else(|| AutolabelError::FrameNotFound(id.clone()))?;
                let box_ids = apply_detections(frame, &dets)?;
                Ok((box_ids, frame.revision()))
            });
            match applied {
                Ok((box_ids, revision)) => FrameSummary {
                    frame_id: id.clone(),
                    outcome: FrameOutcome::Ok {
                        added: box_ids.len(),
                        box_ids,
                        revision,
                    },
                },
                Err(e) => FrameSummary::error(id.clone(), &e),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BBox, ClassRegistry};
    use crate::autolabel::{BackendError, CandidateDetection, MockBackend};
    use image::Rgb;

    fn planted() -> (RgbImage, BBox, BBox) {
        let mut img = RgbImage::new(80, 60);
        let a = BBox::new(4.0, 6.0, 20.0, 12.0);
        let b = BBox::new(40.0, 30.0, 14.0, 22.0);
        for (bbox, color) in [(a, [230u8, 20, 20]), (b, [20, 20, 230])] {
            for y in bbox.y as u32..bbox.bottom() as u32 {
                for x in bbox.x as u32..bbox.right() as u32 {
                    img.put_pixel(x, y, Rgb(color));
                }
            }
        }
        (img, a, b)
    }

    fn frame(id: &str) -> Frame {
        Frame::new(FrameAnnotations::new(id, format!("{id}.png"), ImageSize::new(80, 60)))
    }

    fn prompts(img: &RgbImage, a: BBox, b: BBox) -> PromptStore {
        let registry = ClassRegistry::from_names(["red", "blue"]).unwrap();
        let backend = MockBackend::new();
        let data = frame("f0").into_data();
        let mut store = PromptStore::new();
        store.add_prompt(&registry, 0, &data, img, a, &backend).unwrap();
        store.add_prompt(&registry, 1, &data, img, b, &backend).unwrap();
        store
    }

    #[test]
    fn two_planted_objects() {
        let (img, a, b) = planted();
        let store = prompts(&img, a, b);
        let mut f = frame("f1");
        let s = autolabel_frame(&mut f, &img, &store, &MockBackend::new(), &AutoLabelConfig::default()).unwrap();
        assert_eq!(s.added(), 2);
        let anns = f.annotations();
        let red = anns.iter().find(|x| x.class_id == 0).unwrap();
        let blue = anns.iter().find(|x| x.class_id == 1).unwrap();
        assert!(red.bbox.iou(&a) >= 0.9 && blue.bbox.iou(&b) >= 0.9);
        assert!(anns.iter().all(|x| x.source == Source::Autolabel && x.score.is_some()));
        f.undo().unwrap();
        assert!(f.annotations().is_empty());
    }

    #[test]
    fn no_candidates_no_commit() {
        let (img, a, b) = planted();
        let store = prompts(&img, a, b);
        let mut f = frame("f1");
        let blank = RgbImage::new(80, 60);
        let s = autolabel_frame(&mut f, &blank, &store, &MockBackend::new(), &AutoLabelConfig::default()).unwrap();
        assert_eq!(s.added(), 0);
        assert_eq!(f.revision(), 0);
        assert_eq!(f.journal().undo_depth(), 0);
    }

    #[test]
    fn threshold_above_every_score() {
        let (img, a, b) = planted();
        let store = prompts(&img, a, b);
        let backend = MockBackend::with_candidates(vec![(a, 0.8), (b, 0.9)]);
        let cfg = AutoLabelConfig::default();
        let best = detect_frame("f", &img, &store, &backend, &cfg)
            .unwrap()
            .iter()
            .map(|d| d.score)
            .fold(0.0, f64::max);
        assert!(best < 1.0);
        let cfg = AutoLabelConfig { score_threshold: best + 1e-9, ..cfg };
        assert!(detect_frame("f", &img, &store, &backend, &cfg).unwrap().is_empty());
    }

    struct FailOn(&'static str, MockBackend);

    impl ModelBackend for FailOn {
        fn dimension(&self) -> usize {
            self.1.dimension()
        }
        fn propose(&self, image: &RgbImage) -> Result<Vec<CandidateDetection>, BackendError> {
            // marker pixel identifies the poisoned frame
            if image.get_pixel(79, 59).0 == [1, 2, 3] {
                return Err(BackendError(self.0.into()));
            }
            self.1.propose(image)
        }
        fn embed(&self, image: &RgbImage, bbox: &BBox) -> Result<crate::autolabel::Embedding, BackendError> {
            self.1.embed(image, bbox)
        }
    }

    #[test]
    fn range_isolates_failures() {
        let (img, a, b) = planted();
        let store = prompts(&img, a, b);
        let mut seq = FrameSequence::new(vec![frame("f1"), frame("f2"), frame("f3")]);
        let ids: Vec<String> = ["f1", "f2", "f3"].iter().map(|s| s.to_string()).collect();
        let backend = FailOn("boom", MockBackend::new());
        let out = autolabel_range(&mut seq, &ids, &store, &backend, &AutoLabelConfig::default(), |data| {
            let mut i = img.clone();
            if data.frame_id == "f2" {
                i.put_pixel(79, 59, Rgb([1, 2, 3]));
            }
            Ok(i)
        });
        assert_eq!(out.iter().map(FrameSummary::is_ok).collect::<Vec<_>>(), [true, false, true]);
        assert_eq!(out[0].added(), 2);
        assert_eq!(seq.get("f2").unwrap().annotations().len(), 0);
        assert!(autolabel_range(&mut seq, &[], &store, &backend, &AutoLabelConfig::default(), |_| Ok(img.clone())).is_empty());
    }

    #[test]
    fn range_parallel_matches_sequential() {
        let (img, a, b) = planted();
        let store = prompts(&img, a, b);
        let ids: Vec<String> = (0..6).map(|i| format!("f{i}")).collect();
        let mut par = FrameSequence::new(ids.iter().map(|i| frame(i)).collect());
        let mut seq = par.clone();
        let cfg = AutoLabelConfig::default();
        let p = autolabel_range(&mut par, &ids, &store, &MockBackend::new(), &cfg, |_| Ok(img.clone()));
        let backend = FailOn("never", MockBackend::new());
        let s = autolabel_range(&mut seq, &ids, &store, &backend, &cfg, |_| Ok(img.clone()));
        assert_eq!(p, s);
        assert_eq!(par.snapshot(), seq.snapshot());
    }

    #[test]
    fn missing_frame_reported() {
        let (img, a, b) = planted();
        let store = prompts(&img, a, b);
        let mut seq = FrameSequence::new(vec![frame("f1")]);
        let out = autolabel_range(&mut seq, &["nope".to_string()], &store, &MockBackend::new(), &AutoLabelConfig::default(), |_| Ok(img.clone()));
        assert!(!out[0].is_ok());
    }
}
