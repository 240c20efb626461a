use serde::{Deserialize, Serialize};

use super::AutolabelError;

/// Allowed deviation of a stored embedding's norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// An L2-normalized feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `raw`. Fails on empty, non-finite or all-zero input.
    pub fn new(raw: Vec<f64>) -> Result<Self, AutolabelError> {
        if raw.is_empty() || raw.iter().any(|v| !v.is_finite()) {
            return Err(AutolabelError::InvalidEmbedding("empty or non-finite vector".into()));
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(AutolabelError::InvalidEmbedding("zero vector".into()));
        }
        Ok(Self(raw.into_iter().map(|v| v / norm).collect()))
    }

    pub fn from_f32(raw: &[f32]) -> Result<Self, AutolabelError> {
        Self::new(raw.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = AutolabelError;

    /// Keeps already-normalized vectors bit-for-bit; normalizes the rest.
    fn try_from(raw: Vec<f64>) -> Result<Self, Self::Error> {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !raw.is_empty() && raw.iter().all(|v| v.is_finite()) && (norm - 1.0).abs() <= NORM_TOLERANCE {
            Ok(Self(raw))
        } else {
            Self::new(raw)
        }
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

/// Cosine similarity of two embeddings, in `[-1, 1]`.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, AutolabelError> {
    if a.dim() != b.dim() {
        return Err(AutolabelError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}
