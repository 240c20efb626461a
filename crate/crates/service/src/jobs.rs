//! Background jobs (augmentation, auto-labeling) on a small worker pool.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;

use parking_lot::Mutex;
use serde::Serialize;
use serde_json::Value;

use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_finished(self) -> bool {
        matches!(self, Self::Done | Self::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// Snapshot of a job as reported to clients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobStatus {
    pub job_id: String,
    pub kind: String,
    pub project_id: String,
    pub state: JobState,
    pub progress: Progress,
    pub cancelled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Handle passed to running work.
pub struct JobContext {
    cancel: Arc<AtomicBool>,
    done: Arc<AtomicUsize>,
    total: Arc<AtomicUsize>,
}

impl JobContext {
    pub fn is_cancelled(&self) -> bool {
        self.cancel.load(Ordering::SeqCst)
    }

    pub fn progress(&self, done: usize, total: usize) {
        self.total.store(total, Ordering::SeqCst);
        self.done.store(done, Ordering::SeqCst);
    }
}

type Work = Box<dyn FnOnce(&JobContext) -> Result<Value, ServiceError> + Send>;

struct JobEntry {
    job_id: String,
    kind: String,
    project_id: String,
    state: Mutex<JobState>,
    outcome: Mutex<(Option<Value>, Option<String>)>,
    cancel: Arc<AtomicBool>,
    done: Arc<AtomicUsize>,
    total: Arc<AtomicUsize>,
}

impl JobEntry {
    fn status(&self) -> JobStatus {
        let (result, error) = self.outcome.lock().clone();
        JobStatus {
            job_id: self.job_id.clone(),
            kind: self.kind.clone(),
            project_id: self.project_id.clone(),
            state: *self.state.lock(),
            progress: Progress {
                done: self.done.load(Ordering::SeqCst),
                total: self.total.load(Ordering::SeqCst),
            },
            cancelled: self.cancel.load(Ordering::SeqCst),
            result,
            error,
        }
    }

    fn finish(&self, outcome: Result<Value, ServiceError>) {
        let mut out = self.outcome.lock();
        match outcome {
            Ok(v) => {
                *out = (Some(v), None);
                *self.state.lock() = JobState::Done;
            }
            Err(e) => {
                *out = (None, Some(e.to_string()));
                *self.state.lock() = JobState::Failed;
            }
        }
    }
}

pub struct JobManager {
    jobs: Mutex<HashMap<String, Arc<JobEntry>>>,
    sender: Mutex<Option<Sender<(Arc<JobEntry>, Work)>>>,
    workers: Mutex<Vec<JoinHandle<()>>>,
    next_id: AtomicU64,
}

impl std::fmt::Debug for JobManager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JobManager").field("jobs", &self.jobs.lock().len()).finish()
    }
}

fn worker_loop(receiver: Arc<Mutex<Receiver<(Arc<JobEntry>, Work)>>>) {
    loop {
        let next = receiver.lock().recv();
        let Ok((entry, work)) = next else { return };
        {
            let mut state = entry.state.lock();
            if *state != JobState::Queued {
                continue;
            }
            *state = JobState::Running;
        }
        let ctx = JobContext {
            cancel: Arc::clone(&entry.cancel),
            done: Arc::clone(&entry.done),
            total: Arc::clone(&entry.total),
        };
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| work(&ctx)))
            .unwrap_or_else(|_| Err(ServiceError::Internal("job panicked".into())));
        entry.finish(outcome);
    }
}

impl JobManager {
    /// Starts `workers` threads (at least one). Jobs run in submission order.
    pub fn new(workers: usize) -> Self {
        let (tx, rx) = channel();
        let rx = Arc::new(Mutex::new(rx));
        let handles = (0..workers.max(1))
            .map(|i| {
                let rx = Arc::clone(&rx);
                std::thread::Builder::new()
                    .name(format!("job-worker-{i}"))
                    .spawn(move || worker_loop(rx))
                    .expect("spawn job worker")
            })
            .collect();
        Self {
            jobs: Mutex::new(HashMap::new()),
            sender: Mutex::new(Some(tx)),
            workers: Mutex::new(handles),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn submit(
        &self,
        kind: &str,
        project_id: &str,
        work: impl FnOnce(&JobContext) -> Result<Value, ServiceError> + Send + 'static,
    ) -> Result<JobStatus, ServiceError> {
        let job_id = format!("j{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let entry = Arc::new(JobEntry {
            job_id: job_id.clone(),
            kind: kind.to_string(),
            project_id: project_id.to_string(),
            state: Mutex::new(JobState::Queued),
            outcome: Mutex::new((None, None)),
            cancel: Arc::new(AtomicBool::new(false)),
            done: Arc::new(AtomicUsize::new(0)),
            total: Arc::new(AtomicUsize::new(0)),
        });
        let status = entry.status();
        self.jobs.lock().insert(job_id, Arc::clone(&entry));
        let sender = self.sender.lock();
        let sender = sender
            .as_ref()
            .ok_or_else(|| ServiceError::InvalidState("job manager is shut down".into()))?;
        sender
            .send((entry, Box::new(work)))
            .map_err(|_| ServiceError::Internal("job workers stopped".into()))?;
        Ok(status)
    }

    pub fn status(&self, job_id: &str) -> Result<JobStatus, ServiceError> {
        self.jobs
            .lock()
            .get(job_id)
            .map(|j| j.status())
            .ok_or_else(|| ServiceError::not_found("job", job_id))
    }

    pub fn list(&self) -> Vec<JobStatus> {
        let mut out: Vec<JobStatus> = self.jobs.lock().values().map(|j| j.status()).collect();
        out.sort_by_key(|s| s.job_id[1..].parse::<u64>().unwrap_or(0));
        out
    }

    /// Cancels a queued job at once, or asks a running one to stop at its
    /// next frame boundary. Finished jobs cannot be cancelled.
    pub fn cancel(&self, job_id: &str) -> Result<JobStatus, ServiceError> {
        let entry = self
            .jobs
            .lock()
            .get(job_id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found("job", job_id))?;
        {
            let mut state = entry.state.lock();
            if state.is_finished() {
                return Err(ServiceError::InvalidState(format!("job {job_id} already finished")));
            }
            entry.cancel.store(true, Ordering::SeqCst);
            if *state == JobState::Queued {
                *state = JobState::Failed;
                entry.outcome.lock().1 = Some(ServiceError::Cancelled.to_string());
            }
        }
        Ok(entry.status())
    }

    /// Blocks until the job is finished.
    pub fn wait(&self, job_id: &str) -> Result<JobStatus, ServiceError> {
        loop {
            let s = self.status(job_id)?;
            if s.state.is_finished() {
                return Ok(s);
            }
            std::thread::sleep(std::time::Duration::from_millis(5));
        }
    }

    /// Cancels outstanding jobs and joins the workers.
    pub fn shutdown(&self) {
        for entry in self.jobs.lock().values() {
            if !entry.state.lock().is_finished() {
                entry.cancel.store(true, Ordering::SeqCst);
            }
        }
        self.sender.lock().take();
        for h in self.workers.lock().drain(..) {
            let _ = h.join();
        }
    }
}

impl Drop for JobManager {
    fn drop(&mut self) {
        self.shutdown();
    }
}
