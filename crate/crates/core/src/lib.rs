//! Annotation engine for sequential image datasets.

pub mod annotation;
pub mod augment;
pub mod autolabel;
pub mod formats;
pub mod fsutil;
pub mod propagation;
pub mod sequence;

pub use annotation::{Annotation, BBox, BoxId, ClassRegistry, Frame, FrameAnnotations, ImageSize};
pub use sequence::FrameSequence;
