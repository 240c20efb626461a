//! Auto-labeling from visual prompts: any number of exemplar regions per
//! class, matched against backend proposals by embedding similarity.

mod backend;
mod classify;
mod embedding;
mod mock;
pub mod model;
mod nms;
mod pipeline;
mod prompts;

pub use backend::{BackendError, CandidateDetection, ModelBackend};
pub use classify::{
    best_class, class_similarities, classify_candidates, score_candidates, Aggregation,
    AutoLabelConfig, Detection,
};
pub use embedding::{cosine, Embedding, NORM_TOLERANCE};
pub use mock::{crop_features, MockBackend, MOCK_DIMENSION};
pub use nms::{nms, priority};
pub use pipeline::{
    apply_detections, autolabel_frame, autolabel_range, detect_frame, FrameOutcome,
    FrameSummary,
};
pub use prompts::{PromptStore, VisualPrompt};

use thiserror::Error;

use crate::annotation::{AnnotationError, BBox};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutolabelError {
    #[error("class {0} is not registered")]
    ClassNotFound(u32),
    #[error("no visual prompts defined")]
    EmptyPromptStore,
    #[error("embedding dimension {actual} does not match {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("backend failed on frame {frame_id}: {source}")]
    Backend {
        frame_id: String,
        #[source]
        source: BackendError,
    },
    #[error("box {0:?} lies outside the image")]
    OutOfBounds(BBox),
    #[error("prompt {0} not found")]
    PromptNotFound(u64),
    #[error("frame {0} not found")]
    FrameNotFound(String),
    #[error("invalid auto-label config: {0}")]
    Config(String),
    #[error("could not load image for frame {frame_id}: {message}")]
    Image { frame_id: String, message: String },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}
