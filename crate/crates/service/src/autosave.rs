//! Debounced write-behind of dirty frames and the project document.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutosaveTiming {
    /// Quiet period after the last change before writing.
    pub debounce: Duration,
    /// Upper bound on how long a change may wait while edits keep coming.
    pub max_delay: Duration,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for AutosaveTiming {
    fn default() -> Self {
        Self {
            debounce: Duration::from_millis(300),
            max_delay: Duration::from_millis(1000),
            initial_backoff: Duration::from_millis(250),
            max_backoff: Duration::from_secs(4),
        }
    }
}

/// Work handed to the writer: frames by index plus the project document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Batch {
    pub frames: BTreeSet<usize>,
    pub document: bool,
}

impl Batch {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty() && !self.document
    }

    fn merge(&mut self, other: Batch) {
        self.frames.extend(other.frames);
        self.document |= other.document;
    }
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct AutosaveStatus {
    pub pending_frames: usize,
    pub document_pending: bool,
    /// Set while writes are failing; cleared by the next successful write.
    pub error: Option<String>,
    pub batches_written: u64,
    pub failures: u64,
}

#[derive(Debug, Default)]
struct State {
    pending: Batch,
    first_change: Option<Instant>,
    last_change: Option<Instant>,
    retry_at: Option<Instant>,
    backoff: Option<Duration>,
    in_flight: bool,
    closed: bool,
    status: AutosaveStatus,
}

/// Shared queue between mutating callers and the writer thread.
#[derive(Debug, Default)]
pub struct AutosaveQueue {
    timing: AutosaveTiming,
    state: Mutex<State>,
    changed: Condvar,
}

impl AutosaveQueue {
    pub fn new(timing: AutosaveTiming) -> Self {
        Self {
            timing,
            ..Default::default()
        }
    }

    pub fn timing(&self) -> AutosaveTiming {
        self.timing
    }

    fn touch(state: &mut State) {
        let now = Instant::now();
        state.first_change.get_or_insert(now);
        state.last_change = Some(now);
    }

    pub fn mark_frame(&self, index: usize) {
        let mut s = self.state.lock();
        s.pending.frames.insert(index);
        Self::touch(&mut s);
        self.changed.notify_all();
    }

    pub fn mark_document(&self) {
        let mut s = self.state.lock();
        s.pending.document = true;
        Self::touch(&mut s);
        self.changed.notify_all();
    }

    /// Blocks until a batch is due, then hands it out. Returns `None` once
    /// the queue is closed; remaining work is then left for [`Self::drain`].
    pub fn next_batch(&self) -> Option<Batch> {
        let mut s = self.state.lock();
        loop {
            if s.closed {
                return None;
            }
            if s.pending.is_empty() {
                self.changed.wait(&mut s);
                continue;
            }
            let mut due = (s.last_change.unwrap() + self.timing.debounce)
                .min(s.first_change.unwrap() + self.timing.max_delay);
            if let Some(retry) = s.retry_at {
                due = due.max(retry);
            }
            let now = Instant::now();
            if now >= due {
                s.in_flight = true;
                s.first_change = None;
                s.last_change = None;
                return Some(std::mem::take(&mut s.pending));
            }
            self.changed.wait_for(&mut s, due - now);
        }
    }

    /// Takes everything pending right away (shutdown and explicit saves).
    pub fn drain(&self) -> Batch {
        let mut s = self.state.lock();
        s.first_change = None;
        s.last_change = None;
        s.in_flight = true;
        std::mem::take(&mut s.pending)
    }

    pub fn succeeded(&self) {
        let mut s = self.state.lock();
        s.in_flight = false;
        s.retry_at = None;
        s.backoff = None;
        s.status.error = None;
        s.status.batches_written += 1;
        self.changed.notify_all();
    }

    /// Puts the unwritten part of a batch back and schedules a retry.
    pub fn failed(&self, unwritten: Batch, error: String) {
        let mut s = self.state.lock();
        s.in_flight = false;
        s.pending.merge(unwritten);
        let backoff = s
            .backoff
            .map_or(self.timing.initial_backoff, |b| (b * 2).min(self.timing.max_backoff));
        s.backoff = Some(backoff);
        let now = Instant::now();
        s.retry_at = Some(now + backoff);
        s.first_change.get_or_insert(now);
        s.last_change.get_or_insert(now);
        s.status.error = Some(error);
        s.status.failures += 1;
        self.changed.notify_all();
    }

    /// Stops [`Self::next_batch`] from handing out further work.
    pub fn close(&self) {
        let mut s = self.state.lock();
        s.closed = true;
        self.changed.notify_all();
    }

    pub fn is_idle(&self) -> bool {
        let s = self.state.lock();
        s.pending.is_empty() && !s.in_flight
    }

    pub fn status(&self) -> AutosaveStatus {
        let s = self.state.lock();
        AutosaveStatus {
            pending_frames: s.pending.frames.len(),
            document_pending: s.pending.document,
            ..s.status.clone()
        }
    }
}
