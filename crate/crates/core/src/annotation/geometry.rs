//! Pixel-space rectangles and the clamping rules shared by every editing path.

use serde::{Deserialize, Serialize};

/// Smallest width or height a stored box may have, in pixels.
pub const MIN_BOX_SIDE: f64 = 1.0;

/// Slack for floating-point round-off in bound and size checks, in pixels.
pub const GEOMETRY_EPSILON: f64 = 1e-9;

/// Image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn w(&self) -> f64 {
        f64::from(self.width)
    }

    pub fn h(&self) -> f64 {
        f64::from(self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= self.w() && y <= self.h()
    }

    /// The whole image as a box.
    pub fn bounds(&self) -> BBox {
        BBox::new(0.0, 0.0, self.w(), self.h())
    }
}

/// Axis-aligned rectangle in pixel coordinates: top-left corner plus extent.
///
/// Coordinates are continuous; pixel `i` covers `[i, i + 1)`. Values stay
/// real-valued through every edit and are only rounded by exporters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Builds a box from two corners given in any order.
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let (l, r) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
        let (t, b) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
        Self::new(l, t, r - l, b - t)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    pub fn has_positive_area(&self) -> bool {
        self.is_finite() && self.w > 0.0 && self.h > 0.0
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x && px <= self.right() && py >= self.y && py <= self.bottom()
    }

    /// True when the box lies inside `size` and meets the minimum side length.
    pub fn is_within(&self, size: ImageSize) -> bool {
        self.is_finite()
            && self.x >= -GEOMETRY_EPSILON
            && self.y >= -GEOMETRY_EPSILON
            && self.w >= MIN_BOX_SIDE - GEOMETRY_EPSILON
            && self.h >= MIN_BOX_SIDE - GEOMETRY_EPSILON
            && self.right() <= size.w() + GEOMETRY_EPSILON
            && self.bottom() <= size.h() + GEOMETRY_EPSILON
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Overlap with `other`, or `None` when the two do not share positive area.
    /// Overlap of two boxes. An axis on which `self` is not cut keeps its
    /// origin and side exactly, so clipping an inside box is a no-op.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let span = |a0: f64, alen: f64, b0: f64, blen: f64| {
            if a0 >= b0 && a0 + alen <= b0 + blen {
                return (alen > 0.0).then_some((a0, alen));
            }
            let lo = a0.max(b0);
            let hi = (a0 + alen).min(b0 + blen);
            (hi > lo).then(|| (lo, hi - lo))
        };
        let (x, w) = span(self.x, self.w, other.x, other.w)?;
        let (y, h) = span(self.y, self.h, other.y, other.h)?;
        Some(BBox::new(x, y, w, h))
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection(other).map_or(0.0, |i| i.area());
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Clips the box to the image. Returns `None` when nothing of it is inside.
    ///
    /// Slivers thinner than [`MIN_BOX_SIDE`] are widened back to the minimum,
    /// staying inside the image.
    pub fn clip_to(&self, size: ImageSize) -> Option<BBox> {
        let clipped = self.intersection(&size.bounds())?;
        Some(clipped.with_min_side(size))
    }

    /// Shifts the box (keeping its size) so it lies inside the image. Sides
    /// larger than the image are shrunk to the image extent.
    pub fn shift_into(&self, size: ImageSize) -> BBox {
        let w = self.w.min(size.w()).max(MIN_BOX_SIDE.min(size.w()));
        let h = self.h.min(size.h()).max(MIN_BOX_SIDE.min(size.h()));
        let x = self.x.clamp(0.0, size.w() - w);
        let y = self.y.clamp(0.0, size.h() - h);
        BBox::new(x, y, w, h)
    }

    fn with_min_side(mut self, size: ImageSize) -> BBox {
        if self.w < MIN_BOX_SIDE {
            self.w = MIN_BOX_SIDE.min(size.w());
            self.x = self.x.min(size.w() - self.w);
        }
        if self.h < MIN_BOX_SIDE {
            self.h = MIN_BOX_SIDE.min(size.h());
            self.y = self.y.min(size.h() - self.h);
        }
        self
    }

    /// Rounds every field to the nearest integer, keeping each side ≥ 1.
    pub fn rounded(&self) -> BBox {
        BBox::new(
            self.x.round(),
            self.y.round(),
            self.w.round().max(1.0),
            self.h.round().max(1.0),
        )
    }
}
