//! Random fixture generators.
#![allow(dead_code)]

use framelabel_core::annotation::{BBox, FrameAnnotations, ImageSize, LabeledBox};
use rand::Rng;

/// A frame of up to `max_boxes` boxes on an image up to `max_side` square.
/// Integer frames have integer-valued geometry.
pub fn random_frame<R: Rng>(rng: &mut R, id: &str, max_side: u32, max_boxes: usize, classes: u32, integer: bool) -> FrameAnnotations {
    let size = ImageSize::new(rng.gen_range(1..=max_side), rng.gen_range(1..=max_side));
    let n = rng.gen_range(0..=max_boxes);
    let boxes = (0..n).map(|_| {
        let (w, h) = (size.w(), size.h());
        let bw = rng.gen_range(1.0..=w);
        let bh = rng.gen_range(1.0..=h);
        let x = rng.gen_range(0.0..=w - bw);
        let y = rng.gen_range(0.0..=h - bh);
        let bbox = if integer {
            let bw = bw.floor().max(1.0);
            let bh = bh.floor().max(1.0);
            BBox::new(x.floor().min(w - bw), y.floor().min(h - bh), bw, bh)
        } else {
            BBox::new(x, y, bw, bh)
        };
        LabeledBox { class_id: rng.gen_range(0..classes), bbox }
    });
    let frame = FrameAnnotations::with_boxes(id, format!("{id}.png"), size, boxes.collect::<Vec<_>>());
    assert_eq!(frame.annotations.len(), n);
    frame
}
