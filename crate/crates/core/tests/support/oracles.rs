//! Reference implementations used as independent checks. They share no code
//! with the library beyond plain data types.
#![allow(dead_code)]

/// IoU from corner coordinates.
pub fn iou_corners(a: [f64; 4], b: [f64; 4]) -> f64 {
    let (ax0, ay0, ax1, ay1) = (a[0], a[1], a[0] + a[2], a[1] + a[3]);
    let (bx0, by0, bx1, by1) = (b[0], b[1], b[0] + b[2], b[1] + b[3]);
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    let union = a[2] * a[3] + b[2] * b[3] - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RefDet {
    pub bbox: [f64; 4],
    pub class_id: u32,
    pub score: f64,
}

/// Suppression output by exhaustive search: the unique subset S where an
/// item belongs to S iff no earlier-ranked member of S overlaps it at or
/// above the threshold. Returns input indices in rank order.
pub fn nms_brute_force(dets: &[RefDet], thr: f64, agnostic: bool) -> Vec<usize> {
    let n = dets.len();
    assert!(n <= 16);
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by(|&i, &j| {
        let (a, b) = (&dets[i], &dets[j]);
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then((a.bbox[2] * a.bbox[3]).partial_cmp(&(b.bbox[2] * b.bbox[3])).unwrap())
            .then(a.class_id.cmp(&b.class_id))
            .then(i.cmp(&j))
    });
    let conflicts = |i: usize, j: usize| {
        (agnostic || dets[i].class_id == dets[j].class_id) && iou_corners(dets[i].bbox, dets[j].bbox) >= thr
    };
    let mut found: Option<u32> = None;
    for mask in 0u32..(1 << n) {
        let stable = (0..n).all(|p| {
            let i = rank[p];
            let blocked = (0..p).any(|q| mask & (1 << q) != 0 && conflicts(rank[q], i));
            (mask & (1 << p) != 0) == !blocked
        });
        if stable {
            assert!(found.is_none(), "stable set must be unique");
            found = Some(mask);
        }
    }
    let mask = found.expect("a stable set exists");
    (0..n).filter(|p| mask & (1 << p) != 0).map(|p| rank[p]).collect()
}

/// Bounding box (pixel-aligned) of an axis-aligned rectangle rotated about
/// `(cx, cy)` by `theta_deg` (counter-clockwise as displayed, y down),
/// rasterized on an unbounded grid with `sub`×`sub` samples per pixel.
pub fn rotated_mask_bbox(rect: [f64; 4], cx: f64, cy: f64, theta_deg: f64, sub: u32) -> Option<[f64; 4]> {
    let t = theta_deg.to_radians();
    let (c, s) = (t.cos(), t.sin());
    let [x, y, w, h] = rect;
    let fwd = |px: f64, py: f64| {
        let (dx, dy) = (px - cx, py - cy);
        (cx + dx * c + dy * s, cy - dx * s + dy * c)
    };
    let corners = [fwd(x, y), fwd(x + w, y), fwd(x, y + h), fwd(x + w, y + h)];
    let lo_x = corners.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let hi_x = corners.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
    let lo_y = corners.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let hi_y = corners.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
    let step = 1.0 / f64::from(sub);
    let (mut l, mut tp, mut r, mut b) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for py in lo_y..hi_y {
        for px in lo_x..hi_x {
            let covered = (0..sub * sub).any(|k| {
                let sx = px as f64 + (f64::from(k % sub) + 0.5) * step;
                let sy = py as f64 + (f64::from(k / sub) + 0.5) * step;
                // inverse rotation back into the rectangle's frame
                let (dx, dy) = (sx - cx, sy - cy);
                let ox = cx + dx * c - dy * s;
                let oy = cy + dx * s + dy * c;
                ox >= x && ox < x + w && oy >= y && oy < y + h
            });
            if covered {
                l = l.min(px);
                tp = tp.min(py);
                r = r.max(px + 1);
                b = b.max(py + 1);
            }
        }
    }
    (l <= r).then(|| [l as f64, tp as f64, (r - l) as f64, (b - tp) as f64])
}

/// Clamped, half-up rounding to a byte.
pub fn byte(v: f64) -> u8 {
    v.max(0.0).min(255.0).round() as u8
}

/// New position of one dragged edge with the opposite edge fixed at `anchor`:
/// `sign = +1` when the edge must stay at least 1 above the anchor, `-1` below.
/// The edge is also held inside `[0, limit]`.
pub fn drag_edge(edge: f64, delta: f64, anchor: f64, sign: f64, limit: f64) -> f64 {
    let moved = edge + delta;
    let pinned = if sign > 0.0 { moved.max(anchor + 1.0) } else { moved.min(anchor - 1.0) };
    pinned.max(0.0).min(limit)
}
