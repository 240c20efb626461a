//! Copying annotations from one frame onto others.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Annotation, AnnotationError, BoxId, Frame, FrameAnnotations, Source};
use crate::sequence::FrameSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationPolicy {
    /// Keep the target's boxes and add copies after them.
    #[default]
    Append,
    /// Drop the target's boxes first.
    Replace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationRequest {
    pub source_frame_id: String,
    pub target_frame_ids: Vec<String>,
    /// Subset of source boxes to copy; `None` copies all of them.
    #[serde(default)]
    pub box_ids: Option<Vec<BoxId>>,
    #[serde(default)]
    pub policy: PropagationPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationSummary {
    pub target_frame_id: String,
    pub copied: usize,
    pub new_box_ids: Vec<BoxId>,
    pub revision: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("source frame {0} is also a target")]
    SourceInTargets(String),
    #[error("box {0} not found in the source frame")]
    BoxNotFound(BoxId),
    #[error("frame {0} not found")]
    FrameNotFound(String),
    #[error("propagating {count} frames past index {source_index} exceeds the dataset ({len} frames)")]
    RangeExceedsDataset {
        source_index: usize,
        count: usize,
        len: usize,
    },
    #[error("frame count must be at least 1")]
    InvalidCount,
    #[error(transparent)]
    Edit(#[from] AnnotationError),
}

/// Source annotations selected by `box_ids` (all when `None`), in source
/// order.
pub fn select_boxes(
    source: &FrameAnnotations,
    box_ids: Option<&[BoxId]>,
) -> Result<Vec<Annotation>, PropagationError> {
    match box_ids {
        None => Ok(source.annotations.clone()),
        Some(ids) => {
            let wanted: HashSet<BoxId> = ids.iter().copied().collect();
            if let Some(&missing) = ids.iter().find(|id| source.get(**id).is_none()) {
                return Err(PropagationError::BoxNotFound(missing));
            }
            Ok(source
                .annotations
                .iter()
                .filter(|a| wanted.contains(&a.box_id))
                .cloned()
                .collect())
        }
    }
}

/// Copies `boxes` into `target` as one journal entry.
///
/// Copies get fresh ids and `Source::Propagated`; geometry and class are
/// kept, shifted inside the target image if it is smaller.
pub fn copy_into(
    boxes: &[Annotation],
    target: &mut Frame,
    policy: PropagationPolicy,
) -> Result<PropagationSummary, PropagationError> {
    let new_ids = target.bulk(|list, ctx| {
        if policy == PropagationPolicy::Replace {
            list.clear();
        }
        let size = ctx.image_size();
        let mut ids = Vec::with_capacity(boxes.len());
        for a in boxes {
            let box_id = ctx.allocate_id();
            ids.push(box_id);
            list.push(Annotation {
                box_id,
                class_id: a.class_id,
                bbox: a.bbox.shift_into(size),
                source: Source::Propagated,
                score: None,
            });
        }
        Ok(ids)
    })?;
    Ok(PropagationSummary {
        target_frame_id: target.data().frame_id.clone(),
        copied: new_ids.len(),
        new_box_ids: new_ids,
        revision: target.revision(),
    })
}

/// Validates a request against the frames it names.
pub fn validate(
    request: &PropagationRequest,
    source: &FrameAnnotations,
    exists: impl Fn(&str) -> bool,
) -> Result<Vec<Annotation>, PropagationError> {
    if request.target_frame_ids.iter().any(|t| *t == request.source_frame_id) {
        return Err(PropagationError::SourceInTargets(request.source_frame_id.clone()));
    }
    if let Some(missing) = request.target_frame_ids.iter().find(|t| !exists(t)) {
        return Err(PropagationError::FrameNotFound(missing.clone()));
    }
    select_boxes(source, request.box_ids.as_deref())
}

/// Copies annotations from the source frame to every target, targets in
/// dataset order. Nothing is changed if the request is invalid.
pub fn propagate(
    request: &PropagationRequest,
    frames: &mut FrameSequence,
) -> Result<Vec<PropagationSummary>, PropagationError> {
    let source = frames
        .get(&request.source_frame_id)
        .ok_or_else(|| PropagationError::FrameNotFound(request.source_frame_id.clone()))?
        .data()
        .clone();
    let boxes = validate(request, &source, |id| frames.position(id).is_some())?;
    let mut targets: Vec<usize> = request
        .target_frame_ids
        .iter()
        .filter_map(|t| frames.position(t))
        .collect();
    targets.sort_unstable();
    let mut summaries = Vec::with_capacity(targets.len());
    for idx in targets {
        let target = frames.at_mut(idx).expect("validated index");
        summaries.push(copy_into(&boxes, target, request.policy)?);
    }
    Ok(summaries)
}

/// Ids of the `count` frames following `source_frame_id`.
pub fn range_targets(
    frames: &FrameSequence,
    source_frame_id: &str,
    count: usize,
) -> Result<Vec<String>, PropagationError> {
    if count == 0 {
        return Err(PropagationError::InvalidCount);
    }
    let source_index = frames
        .position(source_frame_id)
        .ok_or_else(|| PropagationError::FrameNotFound(source_frame_id.to_string()))?;
    if source_index + count >= frames.len() {
        return Err(PropagationError::RangeExceedsDataset {
            source_index,
            count,
            len: frames.len(),
        });
    }
    Ok((source_index + 1..=source_index + count)
        .map(|i| frames.at(i).expect("in range").data().frame_id.clone())
        .collect())
}

/// Copies every source box onto each of the next `count` frames.
pub fn propagate_range(
    source_frame_id: &str,
    count: usize,
    frames: &mut FrameSequence,
    policy: PropagationPolicy,
) -> Result<Vec<PropagationSummary>, PropagationError> {
    let targets = range_targets(frames, source_frame_id, count)?;
    propagate(
        &PropagationRequest {
            source_frame_id: source_frame_id.to_string(),
            target_frame_ids: targets,
            box_ids: None,
            policy,
        },
        frames,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BBox, ClassRegistry, ImageSize};

    fn seq(sizes: &[(u32, u32)]) -> FrameSequence {
        FrameSequence::from_annotations(sizes.iter().enumerate().map(|(i, &(w, h))| {
            FrameAnnotations::new(format!("f{i}"), format!("f{i}.png"), ImageSize::new(w, h))
        }))
    }

    fn reg() -> ClassRegistry {
        ClassRegistry::from_names(["a", "b"]).unwrap()
    }

    fn req(src: &str, targets: &[&str], ids: Option<Vec<BoxId>>, policy: PropagationPolicy) -> PropagationRequest {
        PropagationRequest {
            source_frame_id: src.into(),
            target_frame_ids: targets.iter().map(|s| s.to_string()).collect(),
            box_ids: ids,
            policy,
        }
    }

    #[test]
    fn append_all() {
        let mut s = seq(&[(100, 100), (100, 100)]);
        let r = reg();
        let src = s.get_mut("f0").unwrap();
        let b1 = src.create_box(&r, 0, BBox::new(1.0, 1.0, 10.0, 10.0)).unwrap();
        let b2 = src.create_box(&r, 1, BBox::new(20.0, 20.0, 5.0, 5.0)).unwrap();
        let before = s.get("f0").unwrap().data().clone();

        let out = propagate(&req("f0", &["f1"], None, PropagationPolicy::Append), &mut s).unwrap();
        assert_eq!(out[0].copied, 2);
        let t = s.get("f1").unwrap().annotations();
        assert_eq!((t[0].class_id, t[0].bbox), (b1.class_id, b1.bbox));
        assert_eq!((t[1].class_id, t[1].bbox), (b2.class_id, b2.bbox));
        assert!(t.iter().all(|a| a.source == Source::Propagated));
        assert_eq!(s.get("f0").unwrap().data(), &before);
    }

    #[test]
    fn selective_append_keeps_existing() {
        let mut s = seq(&[(100, 100), (100, 100)]);
        let r = reg();
        let b1 = s.get_mut("f0").unwrap().create_box(&r, 0, BBox::new(1.0, 1.0, 10.0, 10.0)).unwrap();
        s.get_mut("f0").unwrap().create_box(&r, 1, BBox::new(20.0, 20.0, 5.0, 5.0)).unwrap();
        let c1 = s.get_mut("f1").unwrap().create_box(&r, 1, BBox::new(50.0, 50.0, 5.0, 5.0)).unwrap();

        propagate(&req("f0", &["f1"], Some(vec![b1.box_id]), PropagationPolicy::Append), &mut s).unwrap();
        let t = s.get("f1").unwrap().annotations();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0], c1);
        assert_eq!(t[1].bbox, b1.bbox);
        assert_ne!(t[1].box_id, c1.box_id);
    }

    #[test]
    fn smaller_target_shifts_copy_inside() {
        let mut s = seq(&[(1920, 1080), (1280, 720)]);
        s.get_mut("f0").unwrap().create_box(&reg(), 0, BBox::new(1900.0, 0.0, 20.0, 20.0)).unwrap();
        propagate(&req("f0", &["f1"], None, PropagationPolicy::Append), &mut s).unwrap();
        assert_eq!(s.get("f1").unwrap().annotations()[0].bbox, BBox::new(1260.0, 0.0, 20.0, 20.0));
    }

    #[test]
    fn errors_leave_frames_untouched() {
        let mut s = seq(&[(100, 100), (100, 100)]);
        assert!(matches!(
            propagate(&req("f0", &["f0"], None, PropagationPolicy::Append), &mut s),
            Err(PropagationError::SourceInTargets(_))
        ));
        assert!(matches!(
            propagate(&req("f0", &["f9"], None, PropagationPolicy::Append), &mut s),
            Err(PropagationError::FrameNotFound(_))
        ));
        assert!(matches!(
            propagate(&req("f0", &["f1"], Some(vec![BoxId(42)]), PropagationPolicy::Append), &mut s),
            Err(PropagationError::BoxNotFound(BoxId(42)))
        ));
        assert_eq!(s.get("f1").unwrap().revision(), 0);
    }

    #[test]
    fn replace_is_idempotent_and_append_duplicates() {
        let mut s = seq(&[(100, 100), (100, 100)]);
        s.get_mut("f0").unwrap().create_box(&reg(), 0, BBox::new(1.0, 1.0, 10.0, 10.0)).unwrap();
        let r = req("f0", &["f1"], None, PropagationPolicy::Replace);
        propagate(&r, &mut s).unwrap();
        let once = s.get("f1").unwrap().data().labeled_boxes();
        propagate(&r, &mut s).unwrap();
        assert_eq!(s.get("f1").unwrap().data().labeled_boxes(), once);

        let a = req("f0", &["f1"], None, PropagationPolicy::Append);
        propagate(&a, &mut s).unwrap();
        assert_eq!(s.get("f1").unwrap().annotations().len(), 2);
    }

    #[test]
    fn undo_reverts_whole_propagation() {
        let mut s = seq(&[(100, 100), (100, 100)]);
        let r = reg();
        for i in 0..3 {
            s.get_mut("f0").unwrap().create_box(&r, 0, BBox::new(f64::from(i) * 10.0, 0.0, 5.0, 5.0)).unwrap();
        }
        s.get_mut("f1").unwrap().create_box(&r, 1, BBox::new(60.0, 60.0, 5.0, 5.0)).unwrap();
        let prior = s.get("f1").unwrap().annotations().to_vec();
        propagate(&req("f0", &["f1"], None, PropagationPolicy::Replace), &mut s).unwrap();
        s.get_mut("f1").unwrap().undo().unwrap();
        assert_eq!(s.get("f1").unwrap().annotations(), prior.as_slice());
    }

    #[test]
    fn range_examples() {
        let mut s = seq(&[(100, 100); 4]);
        s.get_mut("f0").unwrap().create_box(&reg(), 0, BBox::new(1.0, 1.0, 10.0, 10.0)).unwrap();
        let out = propagate_range("f0", 3, &mut s, PropagationPolicy::Append).unwrap();
        assert_eq!(
            out.iter().map(|o| o.target_frame_id.as_str()).collect::<Vec<_>>(),
            ["f1", "f2", "f3"]
        );
        assert!(matches!(
            propagate_range("f3", 1, &mut s, PropagationPolicy::Append),
            Err(PropagationError::RangeExceedsDataset { .. })
        ));
        assert!(matches!(
            propagate_range("f0", 0, &mut s, PropagationPolicy::Append),
            Err(PropagationError::InvalidCount)
        ));
        let single = propagate_range("f1", 1, &mut s, PropagationPolicy::Append).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].target_frame_id, "f2");
    }
}
