//! Flips and rotation with matching box remapping.
//!
//! Rotation turns the image about its center onto a canvas of the same size.
//! Positive angles rotate counter-clockwise as displayed (y grows downward).

use image::{imageops, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::annotation::{BBox, FrameAnnotations, ImageSize};

/// Fraction of a rotated box's hull that must remain on the canvas.
pub const MIN_VISIBLE_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipAxis {
    /// Left to right.
    Horizontal,
    /// Top to bottom.
    Vertical,
}

pub fn flip_box(bbox: &BBox, size: ImageSize, axis: FlipAxis) -> BBox {
    match axis {
        FlipAxis::Horizontal => BBox::new(size.w() - bbox.x - bbox.w, bbox.y, bbox.w, bbox.h),
        FlipAxis::Vertical => BBox::new(bbox.x, size.h() - bbox.y - bbox.h, bbox.w, bbox.h),
    }
}

pub fn flip(image: &RgbImage, frame: &FrameAnnotations, axis: FlipAxis) -> (RgbImage, FrameAnnotations) {
    let pixels = match axis {
        FlipAxis::Horizontal => imageops::flip_horizontal(image),
        FlipAxis::Vertical => imageops::flip_vertical(image),
    };
    let mut out = frame.clone();
    for a in &mut out.annotations {
        a.bbox = flip_box(&a.bbox, frame.image_size, axis);
    }
    (pixels, out)
}

/// Cosine and sine of an angle in degrees, exact at multiples of 90°.
pub fn cos_sin_deg(theta_deg: f64) -> (f64, f64) {
    let quarter = theta_deg / 90.0;
    if quarter.fract() == 0.0 {
        match (quarter as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = theta_deg.to_radians();
        (r.cos(), r.sin())
    }
}

/// Where image point `(x, y)` lands after rotating the image by `theta_deg`.
pub fn rotate_point(x: f64, y: f64, size: ImageSize, theta_deg: f64) -> (f64, f64) {
    let (c, s) = cos_sin_deg(theta_deg);
    let (cx, cy) = (size.w() / 2.0, size.h() / 2.0);
    let (dx, dy) = (x - cx, y - cy);
    (cx + dx * c + dy * s, cy - dx * s + dy * c)
}

/// Axis-aligned hull of the rotated box, unclipped.
pub fn rotated_hull(bbox: &BBox, size: ImageSize, theta_deg: f64) -> BBox {
    let corners = [
        (bbox.x, bbox.y),
        (bbox.right(), bbox.y),
        (bbox.x, bbox.bottom()),
        (bbox.right(), bbox.bottom()),
    ]
    .map(|(x, y)| rotate_point(x, y, size, theta_deg));
    let (mut l, mut t, mut r, mut b) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in corners {
        l = l.min(x);
        t = t.min(y);
        r = r.max(x);
        b = b.max(y);
    }
    BBox::new(l, t, r - l, b - t)
}

/// Hull of the rotated box clipped to the canvas, or `None` when it leaves
/// the canvas entirely.
pub fn rotated_hull_clipped(bbox: &BBox, size: ImageSize, theta_deg: f64) -> Option<BBox> {
    rotated_hull(bbox, size, theta_deg).intersection(&size.bounds())
}

/// Remapped box after rotation, or `None` when less than
/// [`MIN_VISIBLE_FRACTION`] of its hull stays on the canvas.
pub fn rotate_box(bbox: &BBox, size: ImageSize, theta_deg: f64) -> Option<BBox> {
    let hull = rotated_hull(bbox, size, theta_deg);
    let clipped = hull.intersection(&size.bounds())?;
    if clipped.area() < MIN_VISIBLE_FRACTION * hull.area() {
        return None;
    }
    clipped.clip_to(size)
}

/// Rotates pixels about the image center with nearest-neighbor sampling;
/// uncovered canvas is black.
pub fn rotate_image(image: &RgbImage, theta_deg: f64) -> RgbImage {
    if theta_deg == 0.0 {
        return image.clone();
    }
    let (w, h) = image.dimensions();
    let size = ImageSize::new(w, h);
    let (c, s) = cos_sin_deg(theta_deg);
    let (cx, cy) = (size.w() / 2.0, size.h() / 2.0);
    let mut out = RgbImage::from_pixel(w, h, Rgb([0, 0, 0]));
    for (u, v, px) in out.enumerate_pixels_mut() {
        let dx = f64::from(u) + 0.5 - cx;
        let dy = f64::from(v) + 0.5 - cy;
        // inverse of rotate_point
        let sx = cx + dx * c - dy * s;
        let sy = cy + dx * s + dy * c;
        if sx >= 0.0 && sy >= 0.0 && sx < size.w() && sy < size.h() {
            *px = *image.get_pixel(sx as u32, sy as u32);
        }
    }
    out
}

pub fn rotate(image: &RgbImage, frame: &FrameAnnotations, theta_deg: f64) -> (RgbImage, FrameAnnotations) {
    let size = frame.image_size;
    let mut out = frame.clone();
    if theta_deg != 0.0 {
        out.annotations = frame
            .annotations
            .iter()
            .filter_map(|a| {
                rotate_box(&a.bbox, size, theta_deg).map(|bbox| {
                    let mut a = a.clone();
                    a.bbox = bbox;
                    a
                })
            })
            .collect();
    }
    (rotate_image(image, theta_deg), out)
}
