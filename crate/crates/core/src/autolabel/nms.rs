use std::cmp::Ordering;

use super::classify::Detection;

/// Greedy-NMS priority: higher score first, then smaller box, then lower
/// class id.
pub fn priority(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.bbox.area().total_cmp(&b.bbox.area()))
        .then_with(|| a.class_id.cmp(&b.class_id))
}

/// Greedy non-maximum suppression.
///
/// Detections are visited in [`priority`] order (input order breaks full
/// ties); one is kept iff its IoU with every kept detection is below
/// `iou_threshold`. Unless `class_agnostic`, only same-class detections
/// suppress each other. Output is in priority order.
pub fn nms(detections: &[Detection], iou_threshold: f64, class_agnostic: bool) -> Vec<Detection> {
    let mut order: Vec<&Detection> = detections.iter().collect();
    order.sort_by(|a, b| priority(a, b));
    let mut kept: Vec<Detection> = Vec::with_capacity(order.len());
    for d in order {
        let suppressed = kept.iter().any(|k| {
            (class_agnostic || k.class_id == d.class_id) && k.bbox.iou(&d.bbox) >= iou_threshold
        });
        if !suppressed {
            kept.push(d.clone());
        }
    }
    kept
}
