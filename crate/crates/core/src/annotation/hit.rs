use serde::{Deserialize, Serialize};

use super::frame::{BoxId, FrameAnnotations, Handle};

/// Which part of a box a point touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Inside,
    Handle(Handle),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub box_id: BoxId,
    pub region: Region,
}

/// Boxes under `(px, py)`, smallest area first.
///
/// A point within `tolerance` of an outline reports the nearest handle (a
/// corner when it is near two edges); otherwise a containing box reports
/// [`Region::Inside`]. Equal areas keep frame order.
pub fn hit_test(frame: &FrameAnnotations, px: f64, py: f64, tolerance: f64) -> Vec<Hit> {
    let tol = tolerance.max(0.0);
    let mut hits: Vec<(f64, usize, Hit)> = frame
        .annotations
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            region_at(a.bbox.x, a.bbox.y, a.bbox.right(), a.bbox.bottom(), px, py, tol)
                .map(|region| (a.bbox.area(), i, Hit { box_id: a.box_id, region }))
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, _, h)| h).collect()
}

fn region_at(l: f64, t: f64, r: f64, b: f64, px: f64, py: f64, tol: f64) -> Option<Region> {
    let in_x = px >= l - tol && px <= r + tol;
    let in_y = py >= t - tol && py <= b + tol;
    if !(in_x && in_y) {
        return None;
    }
    let (dl, dr, dt, db) = ((px - l).abs(), (px - r).abs(), (py - t).abs(), (py - b).abs());
    // true = left/top edge
    let horizontal = nearest_edge(dl, dr, tol);
    let vertical = nearest_edge(dt, db, tol);
    let handle = match (horizontal, vertical) {
        (Some(true), Some(true)) => Some(Handle::NW),
        (Some(false), Some(true)) => Some(Handle::NE),
        (Some(true), Some(false)) => Some(Handle::SW),
        (Some(false), Some(false)) => Some(Handle::SE),
        (Some(true), None) => Some(Handle::W),
        (Some(false), None) => Some(Handle::E),
        (None, Some(true)) => Some(Handle::N),
        (None, Some(false)) => Some(Handle::S),
        (None, None) => None,
    };
    match handle {
        Some(h) => Some(Region::Handle(h)),
        None if px >= l && px <= r && py >= t && py <= b => Some(Region::Inside),
        None => None,
    }
}

fn nearest_edge(d_first: f64, d_second: f64, tol: f64) -> Option<bool> {
    match (d_first <= tol, d_second <= tol) {
        (true, true) => Some(d_first <= d_second),
        (true, false) => Some(true),
        (false, true) => Some(false),
        (false, false) => None,
    }
}
