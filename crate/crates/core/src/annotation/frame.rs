use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::{BBox, ImageSize, MIN_BOX_SIDE};
use super::journal::{Edit, EditJournal};
use super::registry::ClassRegistry;
use super::AnnotationError;

/// Identifier of a box, unique within its frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxId(pub u64);

impl fmt::Display for BoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

/// Where an annotation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Manual,
    Propagated,
    Autolabel,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub box_id: BoxId,
    pub class_id: u32,
    pub bbox: BBox,
    #[serde(default)]
    pub source: Source,
    /// Detector confidence; set only for auto-labeled boxes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// A class id and box without identity, as read from an annotation file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub class_id: u32,
    pub bbox: BBox,
}

/// Boxes of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotations {
    pub frame_id: String,
    pub image_path: String,
    pub image_size: ImageSize,
    pub annotations: Vec<Annotation>,
    pub revision: u64,
    #[serde(default)]
    next_box_id: u64,
}

impl FrameAnnotations {
    pub fn new(
        frame_id: impl Into<String>,
        image_path: impl Into<String>,
        image_size: ImageSize,
    ) -> Self {
        Self {
            frame_id: frame_id.into(),
            image_path: image_path.into(),
            image_size,
            annotations: Vec::new(),
            revision: 0,
            next_box_id: 1,
        }
    }

    /// Frame pre-populated with manual boxes, each clipped to the image.
    /// Boxes entirely outside the image are skipped.
    pub fn with_boxes(
        frame_id: impl Into<String>,
        image_path: impl Into<String>,
        image_size: ImageSize,
        boxes: impl IntoIterator<Item = LabeledBox>,
    ) -> Self {
        let mut frame = Self::new(frame_id, image_path, image_size);
        for lb in boxes {
            if let Some(bbox) = lb.bbox.clip_to(image_size) {
                let box_id = frame.allocate_id();
                frame.annotations.push(Annotation {
                    box_id,
                    class_id: lb.class_id,
                    bbox,
                    source: Source::Manual,
                    score: None,
                });
            }
        }
        frame
    }

    pub fn get(&self, box_id: BoxId) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.box_id == box_id)
    }

    pub fn position(&self, box_id: BoxId) -> Option<usize> {
        self.annotations.iter().position(|a| a.box_id == box_id)
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn labeled_boxes(&self) -> Vec<LabeledBox> {
        self.annotations
            .iter()
            .map(|a| LabeledBox {
                class_id: a.class_id,
                bbox: a.bbox,
            })
            .collect()
    }

    /// Hands out the next unused box id.
    pub fn allocate_id(&mut self) -> BoxId {
        let floor = self
            .annotations
            .iter()
            .map(|a| a.box_id.0 + 1)
            .max()
            .unwrap_or(1);
        let id = self.next_box_id.max(floor).max(1);
        self.next_box_id = id + 1;
        BoxId(id)
    }

    /// Equality of everything but the revision counter and id allocator.
    pub fn same_content(&self, other: &FrameAnnotations) -> bool {
        self.frame_id == other.frame_id
            && self.image_path == other.image_path
            && self.image_size == other.image_size
            && self.annotations == other.annotations
    }

    fn find(&self, box_id: BoxId) -> Result<usize, AnnotationError> {
        self.position(box_id)
            .ok_or(AnnotationError::BoxNotFound(box_id))
    }
}

/// One of the eight drag handles on a box outline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handle {
    N,
    S,
    E,
    W,
    NE,
    NW,
    SE,
    SW,
}

impl Handle {
    pub const ALL: [Handle; 8] = [
        Handle::N,
        Handle::S,
        Handle::E,
        Handle::W,
        Handle::NE,
        Handle::NW,
        Handle::SE,
        Handle::SW,
    ];

    fn moves_left(self) -> bool {
        matches!(self, Handle::W | Handle::NW | Handle::SW)
    }

    fn moves_right(self) -> bool {
        matches!(self, Handle::E | Handle::NE | Handle::SE)
    }

    fn moves_top(self) -> bool {
        matches!(self, Handle::N | Handle::NE | Handle::NW)
    }

    fn moves_bottom(self) -> bool {
        matches!(self, Handle::S | Handle::SE | Handle::SW)
    }
}

/// New geometry of `bbox` after dragging `handle` by `(dx, dy)`.
///
/// Dragged edges stop at the image border and at one minimum side length
/// from the opposite edge.
pub fn resized(bbox: BBox, handle: Handle, dx: f64, dy: f64, size: ImageSize) -> BBox {
    let (mut l, mut t, mut r, mut b) = (bbox.x, bbox.y, bbox.right(), bbox.bottom());
    if handle.moves_left() {
        l = (l + dx).clamp(0.0, (r - MIN_BOX_SIDE).max(0.0));
    }
    if handle.moves_right() {
        r = (r + dx).clamp((l + MIN_BOX_SIDE).min(size.w()), size.w());
    }
    if handle.moves_top() {
        t = (t + dy).clamp(0.0, (b - MIN_BOX_SIDE).max(0.0));
    }
    if handle.moves_bottom() {
        b = (b + dy).clamp((t + MIN_BOX_SIDE).min(size.h()), size.h());
    }
    BBox::new(l, t, r - l, b - t)
}

/// A frame plus its edit journal. Every mutation goes through here so that it
/// is journaled and bumps the revision.
#[derive(Debug, Clone)]
pub struct Frame {
    data: FrameAnnotations,
    journal: EditJournal,
}

impl Frame {
    pub fn new(data: FrameAnnotations) -> Self {
        Self::with_journal(data, EditJournal::default())
    }

    pub fn with_journal(data: FrameAnnotations, journal: EditJournal) -> Self {
        Self { data, journal }
    }

    pub fn data(&self) -> &FrameAnnotations {
        &self.data
    }

    pub fn into_data(self) -> FrameAnnotations {
        self.data
    }

    pub fn journal(&self) -> &EditJournal {
        &self.journal
    }

    pub fn revision(&self) -> u64 {
        self.data.revision
    }

    pub fn image_size(&self) -> ImageSize {
        self.data.image_size
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.data.annotations
    }

    pub fn get(&self, box_id: BoxId) -> Option<&Annotation> {
        self.data.get(box_id)
    }

    fn commit(&mut self, edit: Edit) {
        edit.apply(&mut self.data.annotations);
        self.journal.record(edit);
        self.data.revision += 1;
    }

    /// Draws a new box. Geometry is clipped to the image.
    pub fn create_box(
        &mut self,
        registry: &ClassRegistry,
        class_id: u32,
        bbox: BBox,
    ) -> Result<Annotation, AnnotationError> {
        self.create_with_source(registry, class_id, bbox, Source::Manual, None)
    }

    pub fn create_with_source(
        &mut self,
        registry: &ClassRegistry,
        class_id: u32,
        bbox: BBox,
        source: Source,
        score: Option<f64>,
    ) -> Result<Annotation, AnnotationError> {
        registry.ensure(class_id)?;
        if !bbox.has_positive_area() {
            return Err(AnnotationError::InvalidGeometry(bbox));
        }
        let clipped = bbox
            .clip_to(self.data.image_size)
            .ok_or(AnnotationError::OutOfBounds(bbox))?;
        let annotation = Annotation {
            box_id: self.data.allocate_id(),
            class_id,
            bbox: clipped,
            source,
            score,
        };
        let index = self.data.annotations.len();
        self.commit(Edit::Insert {
            index,
            annotation: annotation.clone(),
        });
        Ok(annotation)
    }

    pub fn delete_box(&mut self, box_id: BoxId) -> Result<Annotation, AnnotationError> {
        let index = self.data.find(box_id)?;
        let annotation = self.data.annotations[index].clone();
        self.commit(Edit::Remove {
            index,
            annotation: annotation.clone(),
        });
        Ok(annotation)
    }

    /// Translates a box; it is shifted back inside the image if needed.
    pub fn move_box(
        &mut self,
        box_id: BoxId,
        dx: f64,
        dy: f64,
    ) -> Result<Annotation, AnnotationError> {
        check_delta(dx, dy)?;
        let size = self.data.image_size;
        self.update(box_id, |a| a.bbox = a.bbox.translate(dx, dy).shift_into(size))
    }

    pub fn resize_box(
        &mut self,
        box_id: BoxId,
        handle: Handle,
        dx: f64,
        dy: f64,
    ) -> Result<Annotation, AnnotationError> {
        check_delta(dx, dy)?;
        let size = self.data.image_size;
        self.update(box_id, |a| a.bbox = resized(a.bbox, handle, dx, dy, size))
    }

    pub fn relabel(
        &mut self,
        registry: &ClassRegistry,
        box_id: BoxId,
        class_id: u32,
    ) -> Result<Annotation, AnnotationError> {
        registry.ensure(class_id)?;
        self.update(box_id, |a| a.class_id = class_id)
    }

    fn update(
        &mut self,
        box_id: BoxId,
        change: impl FnOnce(&mut Annotation),
    ) -> Result<Annotation, AnnotationError> {
        let index = self.data.find(box_id)?;
        let before = self.data.annotations[index].clone();
        let mut after = before.clone();
        change(&mut after);
        self.commit(Edit::Update {
            index,
            before,
            after: after.clone(),
        });
        Ok(after)
    }

    /// Runs a bulk change as a single journal entry.
    ///
    /// The closure receives the annotation list and the frame (for id
    /// allocation and the image size). Every resulting box must satisfy the
    /// frame invariants, otherwise nothing is committed.
    pub fn bulk<T>(
        &mut self,
        change: impl FnOnce(&mut Vec<Annotation>, &mut BulkContext<'_>) -> Result<T, AnnotationError>,
    ) -> Result<T, AnnotationError> {
        let before = self.data.annotations.clone();
        let mut after = before.clone();
        let saved_next = self.data.next_box_id;
        let mut ctx = BulkContext { frame: &mut self.data };
        let out = match change(&mut after, &mut ctx) {
            Ok(out) => out,
            Err(e) => {
                self.data.next_box_id = saved_next;
                return Err(e);
            }
        };
        let size = self.data.image_size;
        let mut seen = std::collections::HashSet::new();
        for a in &after {
            if !a.bbox.is_within(size) {
                self.data.next_box_id = saved_next;
                return Err(AnnotationError::OutOfBounds(a.bbox));
            }
            if !seen.insert(a.box_id) {
                self.data.next_box_id = saved_next;
                return Err(AnnotationError::DuplicateBoxId(a.box_id));
            }
        }
        self.commit(Edit::Replace { before, after });
        Ok(out)
    }

    pub fn undo(&mut self) -> Result<&FrameAnnotations, AnnotationError> {
        let edit = self.journal.pop_undo().ok_or(AnnotationError::NothingToUndo)?;
        edit.revert(&mut self.data.annotations);
        self.journal.push_redo(edit);
        self.data.revision += 1;
        Ok(&self.data)
    }

    pub fn redo(&mut self) -> Result<&FrameAnnotations, AnnotationError> {
        let edit = self.journal.pop_redo().ok_or(AnnotationError::NothingToRedo)?;
        edit.apply(&mut self.data.annotations);
        self.journal.push_undo(edit);
        self.data.revision += 1;
        Ok(&self.data)
    }
}

/// Access handed to [`Frame::bulk`] closures.
pub struct BulkContext<'a> {
    frame: &'a mut FrameAnnotations,
}

impl BulkContext<'_> {
    pub fn allocate_id(&mut self) -> BoxId {
        self.frame.allocate_id()
    }

    /// Marks an externally chosen id as used so later allocations skip it.
    pub fn reserve_id(&mut self, box_id: BoxId) {
        self.frame.next_box_id = self.frame.next_box_id.max(box_id.0 + 1);
    }

    pub fn image_size(&self) -> ImageSize {
        self.frame.image_size
    }
}

fn check_delta(dx: f64, dy: f64) -> Result<(), AnnotationError> {
    if dx.is_finite() && dy.is_finite() {
        Ok(())
    } else {
        Err(AnnotationError::InvalidDelta)
    }
}
