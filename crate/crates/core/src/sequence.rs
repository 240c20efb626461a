use std::collections::HashMap;

use crate::annotation::{Frame, FrameAnnotations};

/// Frames of a dataset in dataset order, addressable by frame id.
#[derive(Debug, Clone, Default)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    index: HashMap<String, usize>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Self {
        let index = frames
            .iter()
            .enumerate()
            .map(|(i, f)| (f.data().frame_id.clone(), i))
            .collect();
        Self { frames, index }
    }

    pub fn from_annotations(frames: impl IntoIterator<Item = FrameAnnotations>) -> Self {
        Self::new(frames.into_iter().map(Frame::new).collect())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn position(&self, frame_id: &str) -> Option<usize> {
        self.index.get(frame_id).copied()
    }

    pub fn get(&self, frame_id: &str) -> Option<&Frame> {
        self.position(frame_id).map(|i| &self.frames[i])
    }

    pub fn get_mut(&mut self, frame_id: &str) -> Option<&mut Frame> {
        self.position(frame_id).map(move |i| &mut self.frames[i])
    }

    pub fn at(&self, i: usize) -> Option<&Frame> {
        self.frames.get(i)
    }

    pub fn at_mut(&mut self, i: usize) -> Option<&mut Frame> {
        self.frames.get_mut(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Frame> {
        self.frames.iter_mut()
    }

    pub fn snapshot(&self) -> Vec<FrameAnnotations> {
        self.frames.iter().map(|f| f.data().clone()).collect()
    }
}
