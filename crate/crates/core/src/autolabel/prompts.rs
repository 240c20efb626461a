use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::annotation::{BBox, ClassRegistry, FrameAnnotations};

use super::backend::ModelBackend;
use super::embedding::Embedding;
use super::AutolabelError;

/// An exemplar region standing for "objects like this belong to the class".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualPrompt {
    pub prompt_id: u64,
    pub class_id: u32,
    pub source_frame_id: String,
    pub bbox: BBox,
    pub embedding: Embedding,
}

/// Visual prompts grouped by class. A class may hold any number of prompts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "PromptDocument", into = "PromptDocument")]
pub struct PromptStore {
    by_class: BTreeMap<u32, Vec<VisualPrompt>>,
    next_id: u64,
}

/// Persisted form: a flat prompt list plus the id counter.
#[derive(Serialize, Deserialize)]
struct PromptDocument {
    #[serde(default)]
    next_prompt_id: u64,
    prompts: Vec<VisualPrompt>,
}

impl From<PromptDocument> for PromptStore {
    fn from(doc: PromptDocument) -> Self {
        let mut store = PromptStore::default();
        let max_id = doc.prompts.iter().map(|p| p.prompt_id).max().unwrap_or(0);
        for p in doc.prompts {
            store.by_class.entry(p.class_id).or_default().push(p);
        }
        store.next_id = doc.next_prompt_id.max(max_id + 1);
        store
    }
}

impl From<PromptStore> for PromptDocument {
    fn from(store: PromptStore) -> Self {
        PromptDocument {
            next_prompt_id: store.next_id,
            prompts: store.by_class.into_values().flatten().collect(),
        }
    }
}

impl PromptStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Embedding dimension shared by every stored prompt.
    pub fn dimension(&self) -> Option<usize> {
        self.iter().next().map(|p| p.embedding.dim())
    }

    pub fn total(&self) -> usize {
        self.by_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn for_class(&self, class_id: u32) -> &[VisualPrompt] {
        self.by_class.get(&class_id).map_or(&[], Vec::as_slice)
    }

    /// Classes holding at least one prompt, ascending, with their prompts.
    pub fn classes(&self) -> impl Iterator<Item = (u32, &[VisualPrompt])> {
        self.by_class
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &VisualPrompt> {
        self.by_class.values().flatten()
    }

    pub fn get(&self, prompt_id: u64) -> Option<&VisualPrompt> {
        self.iter().find(|p| p.prompt_id == prompt_id)
    }

    /// Stores a prompt whose embedding is already computed.
    pub fn insert(
        &mut self,
        class_id: u32,
        source_frame_id: impl Into<String>,
        bbox: BBox,
        embedding: Embedding,
    ) -> Result<VisualPrompt, AutolabelError> {
        if let Some(dim) = self.dimension() {
            if dim != embedding.dim() {
                return Err(AutolabelError::DimensionMismatch {
                    expected: dim,
                    actual: embedding.dim(),
                });
            }
        }
        let prompt = VisualPrompt {
            prompt_id: self.next_id.max(1),
            class_id,
            source_frame_id: source_frame_id.into(),
            bbox,
            embedding,
        };
        self.next_id = prompt.prompt_id + 1;
        self.by_class.entry(class_id).or_default().push(prompt.clone());
        Ok(prompt)
    }

    /// Embeds `bbox` of `image` with the backend and stores it as a prompt
    /// for `class_id`.
    pub fn add_prompt(
        &mut self,
        registry: &ClassRegistry,
        class_id: u32,
        frame: &FrameAnnotations,
        image: &RgbImage,
        bbox: BBox,
        backend: &dyn ModelBackend,
    ) -> Result<VisualPrompt, AutolabelError> {
        if !registry.contains(class_id) {
            return Err(AutolabelError::ClassNotFound(class_id));
        }
        if !bbox.has_positive_area() || !bbox.is_within(frame.image_size) {
            return Err(AutolabelError::OutOfBounds(bbox));
        }
        let embedding = backend.embed(image, &bbox).map_err(|source| AutolabelError::Backend {
            frame_id: frame.frame_id.clone(),
            source,
        })?;
        if embedding.dim() != backend.dimension() {
            return Err(AutolabelError::DimensionMismatch {
                expected: backend.dimension(),
                actual: embedding.dim(),
            });
        }
        self.insert(class_id, frame.frame_id.clone(), bbox, embedding)
    }

    pub fn remove(&mut self, prompt_id: u64) -> Result<VisualPrompt, AutolabelError> {
        let (class_id, pos) = self
            .by_class
            .iter()
            .find_map(|(&k, list)| list.iter().position(|p| p.prompt_id == prompt_id).map(|i| (k, i)))
            .ok_or(AutolabelError::PromptNotFound(prompt_id))?;
        let list = self.by_class.get_mut(&class_id).expect("class present");
        let removed = list.remove(pos);
        if list.is_empty() {
            self.by_class.remove(&class_id);
        }
        Ok(removed)
    }

    /// Drops every prompt of a class.
    pub fn clear_class(&mut self, class_id: u32) -> usize {
        self.by_class.remove(&class_id).map_or(0, |v| v.len())
    }
}
