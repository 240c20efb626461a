use std::collections::VecDeque;

use super::frame::Annotation;

/// Default undo depth per frame.
pub const DEFAULT_JOURNAL_CAPACITY: usize = 256;

/// A reversible change to a frame's annotation list.
///
/// Index-based variants are only valid against the exact list state they were
/// recorded on; the journal's stack discipline guarantees that.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    Insert { index: usize, annotation: Annotation },
    Remove { index: usize, annotation: Annotation },
    Update { index: usize, before: Annotation, after: Annotation },
    /// Whole-list swap used by bulk operations (propagation, auto-label, PUT).
    Replace { before: Vec<Annotation>, after: Vec<Annotation> },
}

impl Edit {
    pub(crate) fn apply(&self, list: &mut Vec<Annotation>) {
        match self {
            Edit::Insert { index, annotation } => list.insert(*index, annotation.clone()),
            Edit::Remove { index, .. } => {
                list.remove(*index);
            }
            Edit::Update { index, after, .. } => list[*index] = after.clone(),
            Edit::Replace { after, .. } => *list = after.clone(),
        }
    }

    pub(crate) fn revert(&self, list: &mut Vec<Annotation>) {
        match self {
            Edit::Insert { index, .. } => {
                list.remove(*index);
            }
            Edit::Remove { index, annotation } => list.insert(*index, annotation.clone()),
            Edit::Update { index, before, .. } => list[*index] = before.clone(),
            Edit::Replace { before, .. } => *list = before.clone(),
        }
    }
}

/// Bounded undo/redo stacks for one frame.
#[derive(Debug, Clone)]
pub struct EditJournal {
    undo: VecDeque<Edit>,
    redo: Vec<Edit>,
    capacity: usize,
}

impl Default for EditJournal {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_JOURNAL_CAPACITY)
    }
}

impl EditJournal {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            undo: VecDeque::new(),
            redo: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn redo_depth(&self) -> usize {
        self.redo.len()
    }

    /// Records a freshly applied edit. Clears the redo stack; the oldest entry
    /// is evicted once the journal is full.
    pub(crate) fn record(&mut self, edit: Edit) {
        self.redo.clear();
        if self.undo.len() == self.capacity {
            self.undo.pop_front();
        }
        self.undo.push_back(edit);
    }

    pub(crate) fn pop_undo(&mut self) -> Option<Edit> {
        self.undo.pop_back()
    }

    pub(crate) fn push_redo(&mut self, edit: Edit) {
        self.redo.push(edit);
    }

    pub(crate) fn pop_redo(&mut self) -> Option<Edit> {
        self.redo.pop()
    }

    /// Pushes an edit back on the undo stack without touching redo.
    pub(crate) fn push_undo(&mut self, edit: Edit) {
        if self.undo.len() == self.capacity {
            self.undo.pop_front();
        }
        self.undo.push_back(edit);
    }

    pub fn clear(&mut self) {
        self.undo.clear();
        self.redo.clear();
    }
}
