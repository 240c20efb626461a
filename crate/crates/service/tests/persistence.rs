mod support;

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use framelabel_core::annotation::{BBox, FrameAnnotations};
use framelabel_core::formats::ExportFormat;
use framelabel_service::autosave::AutosaveTiming;
use framelabel_service::error::ServiceError;
use framelabel_service::project::{OpenOptions, Project, PROJECT_FILE};
use support::write_frames;
use tempfile::TempDir;

fn manual(format: Option<ExportFormat>) -> OpenOptions {
    OpenOptions {
        format,
        autosave: None,
        ..OpenOptions::default()
    }
}

fn dataset(frames: usize, classes: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    write_frames(dir.path(), frames);
    if !classes.is_empty() {
        std::fs::write(dir.path().join("classes.txt"), classes).unwrap();
    }
    dir
}

fn add_box(p: &Project, index: usize, class_id: u32, bbox: BBox) -> FrameAnnotations {
    p.edit_frame(index, None, |f, r| Ok(f.create_box(r, class_id, bbox)?)).unwrap().1
}

/// Class and geometry equality up to the precision of the label format.
fn same_boxes(a: &FrameAnnotations, b: &FrameAnnotations) -> bool {
    a.annotations.len() == b.annotations.len()
        && a.annotations.iter().zip(&b.annotations).all(|(x, y)| {
            x.class_id == y.class_id
                && [(x.bbox.x, y.bbox.x), (x.bbox.y, y.bbox.y), (x.bbox.w, y.bbox.w), (x.bbox.h, y.bbox.h)]
                    .iter()
                    .all(|(u, v)| (u - v).abs() < 1e-3)
        })
}

fn reopen(root: &Path, format: Option<ExportFormat>) -> Arc<Project> {
    Project::open("check", root, manual(format)).unwrap()
}

#[test]
fn opens_existing_yolo_annotations() {
    let dir = dataset(2, "red\ngreen\n");
    std::fs::write(dir.path().join("frame_000.txt"), "1 0.5 0.5 0.25 0.5\n").unwrap();
    let p = reopen(dir.path(), None);
    assert_eq!(p.frame_count(), 2);
    let f = p.frame(0).unwrap();
    assert_eq!(f.annotations.len(), 1);
    assert_eq!(f.annotations[0].bbox, BBox::new(24.0, 12.0, 16.0, 24.0));
    assert!(p.frame(1).unwrap().annotations.is_empty());
    assert!(p.warnings().is_empty());
}

#[test]
fn empty_directory_fails() {
    let dir = TempDir::new().unwrap();
    assert!(matches!(
        Project::open("x", dir.path(), manual(None)),
        Err(ServiceError::EmptyDataset(_))
    ));
}

#[test]
fn corrupt_file_is_flagged_and_backed_up() {
    let dir = dataset(2, "red\n");
    std::fs::write(dir.path().join("frame_001.txt"), "0 not numbers\n").unwrap();
    let p = reopen(dir.path(), None);
    assert_eq!(p.warnings().len(), 1);
    assert!(p.warnings()[0].path.ends_with("frame_001.txt"));
    let info = p.frame_info(1).unwrap();
    assert!(info.warning.is_some());
    assert_eq!(info.box_count, 0);

    add_box(&p, 1, 0, BBox::new(1.0, 1.0, 4.0, 4.0));
    p.save().unwrap();
    assert_eq!(
        std::fs::read_to_string(dir.path().join("frame_001.txt.bak")).unwrap(),
        "0 not numbers\n"
    );
    assert!(p.frame_info(1).unwrap().warning.is_none());
    let again = reopen(dir.path(), None);
    assert_eq!(again.frame(1).unwrap().annotations.len(), 1);
    assert!(again.warnings().is_empty());
}

#[test]
fn autosave_makes_edits_durable_within_two_seconds() {
    let dir = dataset(2, "red\n");
    let p = Project::open("a", dir.path(), OpenOptions::default()).unwrap();
    let edited = add_box(&p, 0, 0, BBox::new(3.0, 4.0, 10.0, 8.0));
    let start = Instant::now();
    let path = dir.path().join("frame_000.txt");
    while !path.is_file() && start.elapsed() < Duration::from_secs(2) {
        std::thread::sleep(Duration::from_millis(10));
    }
    assert!(start.elapsed() < Duration::from_secs(2));
    // reading while the service keeps running, like a crash would leave it
    let on_disk = reopen(dir.path(), None);
    assert!(same_boxes(&on_disk.frame(0).unwrap(), &edited));
    p.close().unwrap();
}

#[test]
fn rapid_edits_are_debounced() {
    let dir = dataset(1, "red\n");
    let p = Project::open("a", dir.path(), OpenOptions::default()).unwrap();
    let mut last = None;
    for i in 0..100 {
        let x = f64::from(i % 50);
        last = Some(add_box(&p, 0, 0, BBox::new(x, 1.0, 5.0, 5.0)));
    }
    let start = Instant::now();
    while p.autosave_status().batches_written == 0 && start.elapsed() < Duration::from_secs(3) {
        std::thread::sleep(Duration::from_millis(10));
    }
    std::thread::sleep(Duration::from_millis(500));
    let status = p.autosave_status();
    assert!((1..=5).contains(&status.batches_written), "{status:?}");
    assert!(same_boxes(&reopen(dir.path(), None).frame(0).unwrap(), &last.unwrap()));
    p.close().unwrap();
}

#[test]
fn write_failures_surface_and_keep_memory() {
    let dir = dataset(1, "red\n");
    let timing = AutosaveTiming {
        debounce: Duration::from_millis(10),
        max_delay: Duration::from_millis(50),
        initial_backoff: Duration::from_millis(20),
        max_backoff: Duration::from_millis(100),
    };
    let p = Project::open(
        "a",
        dir.path(),
        OpenOptions {
            autosave: Some(timing),
            ..OpenOptions::default()
        },
    )
    .unwrap();
    // a directory where the label file belongs makes every write fail
    std::fs::create_dir(dir.path().join("frame_000.txt")).unwrap();
    let edited = add_box(&p, 0, 0, BBox::new(1.0, 1.0, 4.0, 4.0));
    let start = Instant::now();
    while p.autosave_status().failures < 2 && start.elapsed() < Duration::from_secs(3) {
        std::thread::sleep(Duration::from_millis(10));
    }
    let status = p.autosave_status();
    assert!(status.failures >= 2, "{status:?}");
    assert!(status.error.is_some());
    assert!(status.pending_frames >= 1);
    assert!(same_boxes(&p.frame(0).unwrap(), &edited));

    std::fs::remove_dir(dir.path().join("frame_000.txt")).unwrap();
    let start = Instant::now();
    while p.autosave_status().error.is_some() && start.elapsed() < Duration::from_secs(3) {
        std::thread::sleep(Duration::from_millis(10));
    }
    assert!(p.autosave_status().error.is_none());
    p.close().unwrap();
    assert!(same_boxes(&reopen(dir.path(), None).frame(0).unwrap(), &edited));
}

#[test]
fn close_flushes_everything() {
    let dir = dataset(3, "red\ngreen\n");
    let p = Project::open("a", dir.path(), OpenOptions::default()).unwrap();
    let frames: Vec<_> = (0..3).map(|i| add_box(&p, i, (i % 2) as u32, BBox::new(2.0, 2.0, 6.0, 6.0))).collect();
    p.add_class("blue").unwrap();
    p.close().unwrap();
    let again = reopen(dir.path(), None);
    for (i, f) in frames.iter().enumerate() {
        assert!(same_boxes(&again.frame(i).unwrap(), f));
    }
    assert_eq!(again.classes().names(), ["red", "green", "blue"]);
    assert_eq!(std::fs::read_to_string(dir.path().join("classes.txt")).unwrap(), "red\ngreen\nblue\n");
}

#[test]
fn project_document_holds_settings_and_prompts() {
    let dir = dataset(2, "red\ngreen\n");
    let p = reopen(dir.path(), None);
    let mut settings = p.settings();
    settings.autolabel.score_threshold = 0.42;
    settings.augmentation.seed = 99;
    settings.locale = Some("ja".into());
    p.set_settings(settings.clone()).unwrap();
    let prompt = p.add_prompt(1, 0, BBox::new(36.0, 24.0, 10.0, 16.0)).unwrap();
    p.save().unwrap();
    assert!(dir.path().join(PROJECT_FILE).is_file());

    let again = reopen(dir.path(), None);
    assert_eq!(again.settings(), settings);
    assert_eq!(again.prompts().get(prompt.prompt_id), Some(&prompt));
    assert_eq!(again.format(), ExportFormat::Yolo);
}

#[test]
fn voc_and_coco_projects_round_trip() {
    for format in [ExportFormat::Voc, ExportFormat::Coco] {
        let dir = dataset(2, "");
        let p = reopen(dir.path(), Some(format));
        p.add_class("red").unwrap();
        p.add_class("green").unwrap();
        let a = add_box(&p, 0, 1, BBox::new(36.0, 24.0, 10.0, 16.0));
        let b = add_box(&p, 1, 0, BBox::new(4.0, 6.0, 14.0, 10.0));
        p.save().unwrap();
        match format {
            ExportFormat::Voc => assert!(dir.path().join("frame_000.xml").is_file()),
            _ => assert!(dir.path().join("annotations.json").is_file()),
        }
        // the format is remembered by the project document
        let again = reopen(dir.path(), None);
        assert_eq!(again.format(), format);
        assert_eq!(again.classes().names(), ["red", "green"]);
        assert!(same_boxes(&again.frame(0).unwrap(), &a), "{format:?}");
        assert!(same_boxes(&again.frame(1).unwrap(), &b), "{format:?}");
    }
}

#[test]
fn coco_categories_are_merged_by_name() {
    let dir = dataset(1, "");
    let coco = r#"{"images":[{"id":1,"file_name":"frame_000.png","width":64,"height":48}],
        "annotations":[{"id":1,"image_id":1,"category_id":7,"bbox":[4,6,14,10]}],
        "categories":[{"id":7,"name":"green"}]}"#;
    std::fs::write(dir.path().join("annotations.json"), coco).unwrap();
    let p = reopen(dir.path(), Some(ExportFormat::Coco));
    assert_eq!(p.classes().names(), ["green"]);
    let f = p.frame(0).unwrap();
    assert_eq!(f.annotations[0].class_id, 0);
    assert_eq!(f.annotations[0].bbox, BBox::new(4.0, 6.0, 14.0, 10.0));
}

#[test]
fn cli_style_autolabel_and_cancel() {
    let dir = dataset(3, "red\ngreen\n");
    let p = reopen(dir.path(), None);
    p.add_prompt(0, 0, BBox::new(4.0, 6.0, 14.0, 10.0)).unwrap();
    p.add_prompt(1, 0, BBox::new(36.0, 24.0, 10.0, 16.0)).unwrap();
    let config = p.settings().autolabel;
    let out = p.autolabel(&[1, 2], &config, &|| false, &|_, _| {}).unwrap();
    assert!(out.iter().all(|s| s.is_ok() && s.added() == 2));
    // cancellation is checked before each frame
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let cancelled = || calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) >= 1;
    let before = p.frame(2).unwrap().revision;
    assert!(matches!(
        p.autolabel(&[1, 2], &config, &cancelled, &|_, _| {}),
        Err(ServiceError::Cancelled)
    ));
    assert_eq!(p.frame(1).unwrap().annotations.len(), 4);
    assert_eq!(p.frame(2).unwrap().revision, before);
}
