use serde::{Deserialize, Serialize};

use super::geometry::{BBox, ImageSize};
use super::AnnotationError;

/// Smallest allowed magnifier side, in display pixels.
pub const MIN_DISPLAY_SIZE: u32 = 8;

/// The image crop shown by the cursor-following magnifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnifierView {
    pub source_rect: BBox,
    pub zoom: f64,
    pub display_size: u32,
}

/// Square crop of side `display_size / zoom` centered on the cursor, shifted
/// (never shrunk) to stay inside the image.
pub fn magnifier_view(
    cursor: (f64, f64),
    image_size: ImageSize,
    zoom: f64,
    display_size: u32,
) -> Result<MagnifierView, AnnotationError> {
    if !zoom.is_finite() || zoom <= 1.0 {
        return Err(AnnotationError::InvalidZoom(zoom));
    }
    if display_size < MIN_DISPLAY_SIZE {
        return Err(AnnotationError::InvalidDisplaySize(display_size));
    }
    let (cx, cy) = cursor;
    if !image_size.contains_point(cx, cy) {
        return Err(AnnotationError::CursorOutsideImage { x: cx, y: cy });
    }
    let side = f64::from(display_size) / zoom;
    if side > image_size.w() || side > image_size.h() {
        return Err(AnnotationError::MagnifierLargerThanImage { side });
    }
    let x = (cx - side / 2.0).clamp(0.0, image_size.w() - side);
    let y = (cy - side / 2.0).clamp(0.0, image_size.h() - side);
    Ok(MagnifierView {
        source_rect: BBox::new(x, y, side, side),
        zoom,
        display_size,
    })
}
