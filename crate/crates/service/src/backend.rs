use std::sync::Arc;

use framelabel_core::autolabel::model::BackendSpec;
use framelabel_core::autolabel::{MockBackend, ModelBackend};

use crate::error::ServiceError;

/// Network input side used for model backends.
pub const MODEL_INPUT_SIZE: u32 = 640;

/// Instantiates the backend named by `spec`.
pub fn create_backend(spec: &BackendSpec) -> Result<Arc<dyn ModelBackend>, ServiceError> {
    match spec {
        BackendSpec::Mock => Ok(Arc::new(MockBackend::new())),
        BackendSpec::Model(path) => load_model(path),
    }
}

#[cfg(feature = "onnx")]
fn load_model(path: &std::path::Path) -> Result<Arc<dyn ModelBackend>, ServiceError> {
    let backend = framelabel_core::autolabel::model::OnnxBackend::load(path, MODEL_INPUT_SIZE)
        .map_err(|e| ServiceError::Backend(e.to_string()))?;
    Ok(Arc::new(backend))
}

#[cfg(not(feature = "onnx"))]
fn load_model(path: &std::path::Path) -> Result<Arc<dyn ModelBackend>, ServiceError> {
    Err(ServiceError::Config(format!(
        "cannot load {}: this build has no model support (enable the `onnx` feature)",
        path.display()
    )))
}
