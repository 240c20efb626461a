#![cfg(feature = "onnx")]

use std::path::Path;

use framelabel_core::annotation::BBox;
use framelabel_core::autolabel::model::{OnnxBackend, PAD_VALUE};
use framelabel_core::autolabel::ModelBackend;
use image::{Rgb, RgbImage};

fn model() -> OnnxBackend {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny_detector.onnx");
    OnnxBackend::load(&path, 64).unwrap()
}

#[test]
fn proposals_are_mapped_back_to_image_space() {
    let backend = model();
    assert_eq!(backend.dimension(), 3);
    let img = RgbImage::from_pixel(128, 64, Rgb([255, 0, 0]));
    let c = backend.propose(&img).unwrap();
    assert_eq!(c.len(), 1);
    // canvas (24, 24)-(40, 40), scale 0.5, 16 px of top padding
    let b = c[0].bbox;
    assert!((b.x - 48.0).abs() < 1e-4 && (b.y - 16.0).abs() < 1e-4);
    assert!((b.w - 32.0).abs() < 1e-4 && (b.h - 32.0).abs() < 1e-4);
    assert!((c[0].objectness - 0.9).abs() < 1e-6);
    // half the canvas is red, half is padding
    let pad = f64::from(PAD_VALUE);
    let raw = [0.5 + 0.5 * pad, 0.5 * pad, 0.5 * pad];
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (got, want) in c[0].embedding.as_slice().iter().zip(raw) {
        assert!((got - want / norm).abs() < 1e-5);
    }
}

#[test]
fn embedding_uses_the_crop() {
    let backend = model();
    let mut img = RgbImage::from_pixel(128, 64, Rgb([0, 0, 255]));
    for y in 10..30 {
        for x in 10..30 {
            img.put_pixel(x, y, Rgb([0, 255, 0]));
        }
    }
    let e = backend.embed(&img, &BBox::new(10.0, 10.0, 20.0, 20.0)).unwrap();
    assert!((e.as_slice()[1] - 1.0).abs() < 1e-6);
    let again = backend.embed(&img, &BBox::new(10.0, 10.0, 20.0, 20.0)).unwrap();
    assert_eq!(e, again);
}
