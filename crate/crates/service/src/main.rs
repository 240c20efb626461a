use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use framelabel_core::augment::AugmentationConfig;
use framelabel_core::autolabel::model::BackendSpec;
use framelabel_core::autolabel::AutoLabelConfig;
use framelabel_core::formats::ExportFormat;
use framelabel_core::propagation::PropagationPolicy;
use framelabel_service::api::router;
use framelabel_service::error::ServiceError;
use framelabel_service::project::{OpenOptions, Project};
use framelabel_service::service::{Service, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "framelabel", version, about = "Bounding-box annotation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dataset directory.
    #[arg(long)]
    root: PathBuf,
    /// Annotation format of the dataset (yolo, voc, coco).
    #[arg(long)]
    format: Option<ExportFormat>,
    /// Read VOC corners as 0-based pixel indices.
    #[arg(long)]
    voc_zero_based: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the dataset's annotations in another format.
    Convert {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        to: ExportFormat,
        /// Output directory; defaults to the dataset root.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate augmented copies under <root>/augmented/.
    Augment {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// JSON file with the augmentation parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label frames using the visual prompts stored in the project.
    Autolabel {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// `mock` or `model:<path.onnx>`.
        #[arg(long)]
        backend: Option<BackendSpec>,
        /// JSON file with the auto-label thresholds.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Image paths (relative to the root) to label; all when omitted.
        #[arg(long, value_delimiter = ',')]
        frames: Option<Vec<String>>,
    },
    /// Copy boxes from one frame to others.
    Propagate {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Source image path relative to the root.
        #[arg(long)]
        source: String,
        /// Number of following frames to fill.
        #[arg(long, conflicts_with = "targets")]
        count: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        boxes: Option<Vec<u64>>,
        #[arg(long, default_value = "append")]
        policy: Policy,
    },
    /// Run the HTTP service.
    Serve {
        /// Dataset to open at startup.
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(long)]
        format: Option<ExportFormat>,
        #[arg(long)]
        voc_zero_based: bool,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Detection backend for projects opened without one configured.
        #[arg(long)]
        backend: Option<BackendSpec>,
        /// Background job workers.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Undo history kept per frame.
        #[arg(long)]
        journal_capacity: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Policy {
    Append,
    Replace,
}

impl From<Policy> for PropagationPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Append => PropagationPolicy::Append,
            Policy::Replace => PropagationPolicy::Replace,
        }
    }
}

fn open(dataset: &DatasetArgs) -> Result<Arc<Project>, ServiceError> {
    let project = Project::open(
        "cli",
        &dataset.root,
        OpenOptions {
            format: dataset.format,
            voc_zero_based: dataset.voc_zero_based,
            autosave: None,
            ..OpenOptions::default()
        },
    )?;
    for w in project.warnings() {
        eprintln!("warning: {}: {}", w.path, w.message);
    }
    Ok(project)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn never() -> bool {
    false
}

fn run(command: Command) -> Result<(), ServiceError> {
    match command {
        Command::Convert { dataset, to, out } => {
            let project = open(&dataset)?;
            let out = out.unwrap_or_else(|| dataset.root.clone());
            let files = project.export(to, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Augment { dataset, config, seed } => {
            let project = open(&dataset)?;
            let mut cfg: AugmentationConfig = match &config {
                Some(path) => read_json(path)?,
                None => project.settings().augmentation,
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = project.augment(&cfg, &never, &|done, total| {
                eprint!("\raugmenting {done}/{total}");
            })?;
            eprintln!();
            println!("{} samples from {} images", report.samples, report.images);
        }
        Command::Autolabel {
            dataset,
            backend,
            config,
            frames,
        } => {
            let project = open(&dataset)?;
            if let Some(backend) = backend {
                let mut settings = project.settings();
                settings.backend = backend;
                project.set_settings(settings)?;
            }
            let cfg: AutoLabelConfig = match &config {
                Some(path) => read_json(path)?,
                None => project.settings().autolabel,
            };
            let indices = project.resolve_indices(frames.as_deref())?;
            let summaries = project.autolabel(&indices, &cfg, &never, &|_, _| {})?;
            project.save()?;
            print_json(&summaries);
            if summaries.iter().any(|s| !s.is_ok()) {
                return Err(ServiceError::Backend("some frames failed".into()));
            }
        }
        Command::Propagate {
            dataset,
            source,
            count,
            targets,
            boxes,
            policy,
        } => {
            let project = open(&dataset)?;
            let box_ids = boxes.map(|b| b.into_iter().map(framelabel_core::annotation::BoxId).collect());
            let summaries = match (count, targets) {
                (Some(count), None) => project.propagate_range(&source, count, box_ids, policy.into())?,
                (None, Some(targets)) => project.propagate(&framelabel_core::propagation::PropagationRequest {
                    source_frame_id: source,
                    target_frame_ids: targets,
                    box_ids,
                    policy: policy.into(),
                })?,
                _ => return Err(ServiceError::Validation("give --count or --targets".into())),
            };
            project.save()?;
            print_json(&summaries);
        }
        Command::Serve {
            root,
            format,
            voc_zero_based,
            host,
            port,
            backend,
            workers,
            journal_capacity,
        } => {
            let mut config = ServiceConfig {
                default_format: format,
                voc_zero_based,
                workers,
                ..ServiceConfig::default()
            };
            if let Some(c) = journal_capacity {
                config.journal_capacity = c;
            }
            let service = Arc::new(Service::new(config));
            if let Some(root) = root {
                let project = service.open(&root, format, Some(voc_zero_based))?;
                if let Some(backend) = backend {
                    let mut settings = project.settings();
                    settings.backend = backend;
                    project.set_settings(settings)?;
                }
                println!("project {} opened at {}", project.id(), project.root().display());
            }
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| ServiceError::Internal(e.to_string()))?;
            runtime.block_on(serve(Arc::clone(&service), &host, port))?;
            service.shutdown()?;
        }
    }
    Ok(())
}

async fn serve(service: Arc<Service>, host: &str, port: u16) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| ServiceError::Internal(format!("bind {host}:{port}: {e}")))?;
    let addr: SocketAddr = listener
        .local_addr()
        .map_err(|e| ServiceError::Internal(e.to_string()))?;
    println!("listening on http://{addr}");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown_signal())
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
    tracing::info!("shutting down");
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
