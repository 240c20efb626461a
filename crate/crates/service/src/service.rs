//! Registry of open projects and the shared job pool.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use framelabel_core::annotation::DEFAULT_JOURNAL_CAPACITY;
use framelabel_core::formats::ExportFormat;
use parking_lot::RwLock;

use crate::autosave::AutosaveTiming;
use crate::error::ServiceError;
use crate::i18n::MessageCatalog;
use crate::jobs::JobManager;
use crate::project::{OpenOptions, Project};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub default_format: Option<ExportFormat>,
    pub voc_zero_based: bool,
    pub journal_capacity: usize,
    pub autosave: AutosaveTiming,
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            default_format: None,
            voc_zero_based: false,
            journal_capacity: DEFAULT_JOURNAL_CAPACITY,
            autosave: AutosaveTiming::default(),
            workers: 1,
        }
    }
}

pub struct Service {
    config: ServiceConfig,
    projects: RwLock<BTreeMap<String, Arc<Project>>>,
    next_project: AtomicU64,
    jobs: JobManager,
    catalog: MessageCatalog,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service")
            .field("projects", &self.projects.read().len())
            .finish()
    }
}

/// Splits an API frame id `"<project>-<index>"`.
pub fn split_fid(fid: &str) -> Option<(&str, usize)> {
    let (project, index) = fid.rsplit_once('-')?;
    Some((project, index.parse().ok()?))
}

pub fn make_fid(project_id: &str, index: usize) -> String {
    format!("{project_id}-{index}")
}

impl Service {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            jobs: JobManager::new(config.workers),
            config,
            projects: RwLock::new(BTreeMap::new()),
            next_project: AtomicU64::new(1),
            catalog: MessageCatalog::builtin(),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn jobs(&self) -> &JobManager {
        &self.jobs
    }

    pub fn catalog(&self) -> &MessageCatalog {
        &self.catalog
    }

    /// Opens a dataset, or returns the project already open on that root.
    pub fn open(
        &self,
        root: &Path,
        format: Option<ExportFormat>,
        voc_zero_based: Option<bool>,
    ) -> Result<Arc<Project>, ServiceError> {
        let canonical = root.canonicalize().map_err(|e| ServiceError::io(root, e))?;
        if let Some(p) = self.projects.read().values().find(|p| p.root() == canonical) {
            return Ok(Arc::clone(p));
        }
        let id = format!("p{}", self.next_project.fetch_add(1, Ordering::SeqCst));
        let project = Project::open(
            id.clone(),
            &canonical,
            OpenOptions {
                format: format.or(self.config.default_format),
                voc_zero_based: voc_zero_based.unwrap_or(self.config.voc_zero_based),
                journal_capacity: self.config.journal_capacity,
                autosave: Some(self.config.autosave),
            },
        )?;
        let mut projects = self.projects.write();
        if let Some(p) = projects.values().find(|p| p.root() == canonical) {
            let existing = Arc::clone(p);
            drop(projects);
            project.close()?;
            return Ok(existing);
        }
        projects.insert(id, Arc::clone(&project));
        Ok(project)
    }

    pub fn project(&self, id: &str) -> Result<Arc<Project>, ServiceError> {
        self.projects
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found("project", id))
    }

    pub fn projects(&self) -> Vec<Arc<Project>> {
        self.projects.read().values().cloned().collect()
    }

    /// Resolves an API frame id to its project and frame index.
    pub fn frame(&self, fid: &str) -> Result<(Arc<Project>, usize), ServiceError> {
        let (pid, index) = split_fid(fid).ok_or_else(|| ServiceError::not_found("frame", fid))?;
        let project = self
            .project(pid)
            .map_err(|_| ServiceError::not_found("frame", fid))?;
        if index >= project.frame_count() {
            return Err(ServiceError::not_found("frame", fid));
        }
        Ok((project, index))
    }

    /// Flushes and forgets a project.
    pub fn close(&self, id: &str) -> Result<(), ServiceError> {
        let project = self
            .projects
            .write()
            .remove(id)
            .ok_or_else(|| ServiceError::not_found("project", id))?;
        project.close()
    }

    /// Stops jobs and flushes every project.
    pub fn shutdown(&self) -> Result<(), ServiceError> {
        self.jobs.shutdown();
        let projects: Vec<_> = std::mem::take(&mut *self.projects.write()).into_values().collect();
        let mut first_error = None;
        for p in projects {
            if let Err(e) = p.close() {
                tracing::error!(project = %p.id(), error = %e, "flush on shutdown failed");
                first_error.get_or_insert(e);
            }
        }
        first_error.map_or(Ok(()), Err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fid_round_trip() {
        assert_eq!(split_fid(&make_fid("p3", 17)), Some(("p3", 17)));
        assert_eq!(split_fid("p3"), None);
        assert_eq!(split_fid("p3-x"), None);
    }
}
