//! In-memory annotation engine: box geometry, editing with undo/redo, class
//! colors, hit-testing and magnifier math.

mod frame;
mod geometry;
mod hit;
mod journal;
mod magnifier;
mod registry;

pub use frame::{
    resized, Annotation, BoxId, BulkContext, Frame, FrameAnnotations, Handle, LabeledBox, Source,
};
pub use geometry::{BBox, ImageSize, GEOMETRY_EPSILON, MIN_BOX_SIDE};
pub use hit::{hit_test, Hit, Region};
pub use journal::{Edit, EditJournal, DEFAULT_JOURNAL_CAPACITY};
pub use magnifier::{magnifier_view, MagnifierView, MIN_DISPLAY_SIZE};
pub use registry::{class_color, class_hue, hsv_to_rgb, ClassRegistry, Rgb, GOLDEN_ANGLE_DEG};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("class {0} is not registered")]
    ClassNotFound(u32),
    #[error("class name {0:?} is empty")]
    InvalidClassName(String),
    #[error("class {0:?} already exists")]
    DuplicateClass(String),
    #[error("box {0} not found")]
    BoxNotFound(BoxId),
    #[error("box id {0} used twice")]
    DuplicateBoxId(BoxId),
    #[error("box {0:?} lies outside the image")]
    OutOfBounds(BBox),
    #[error("box {0:?} has no area")]
    InvalidGeometry(BBox),
    #[error("drag offsets must be finite")]
    InvalidDelta,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
    #[error("zoom must be greater than 1, got {0}")]
    InvalidZoom(f64),
    #[error("magnifier display size must be at least {MIN_DISPLAY_SIZE}, got {0}")]
    InvalidDisplaySize(u32),
    #[error("cursor ({x}, {y}) is outside the image")]
    CursorOutsideImage { x: f64, y: f64 },
    #[error("magnifier source side {side} exceeds the image")]
    MagnifierLargerThanImage { side: f64 },
}
