use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::BBox;

use super::embedding::Embedding;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct BackendError(pub String);

/// A region proposed by a detector, with its appearance embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDetection {
    pub bbox: BBox,
    pub embedding: Embedding,
    pub objectness: f64,
}

/// Detection and embedding model behind the auto-labeler.
pub trait ModelBackend: Send + Sync {
    /// Embedding dimension produced by [`ModelBackend::embed`].
    fn dimension(&self) -> usize;

    fn propose(&self, image: &RgbImage) -> Result<Vec<CandidateDetection>, BackendError>;

    /// Must be deterministic for identical `(image, bbox)`.
    fn embed(&self, image: &RgbImage, bbox: &BBox) -> Result<Embedding, BackendError>;

    /// Whether `propose`/`embed` may run from several threads at once.
    fn supports_concurrency(&self) -> bool {
        false
    }
}
