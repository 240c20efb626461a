//! Project state, background jobs, autosave and the HTTP API of the
//! framelabel annotation tool.

pub mod api;
pub mod autosave;
pub mod backend;
pub mod error;
pub mod i18n;
pub mod jobs;
pub mod project;
pub mod service;
