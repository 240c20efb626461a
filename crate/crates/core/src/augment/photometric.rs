//! Per-pixel color adjustments. None of these touch box geometry.

use image::RgbImage;

/// Rounds half-up and clamps to the 8-bit range.
fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 255.0) + 0.5).floor().min(255.0) as u8
}

/// `c' = c · (1 + b)` per channel.
pub fn adjust_brightness(image: &mut RgbImage, b: f64) {
    if b == 0.0 {
        return;
    }
    let factor = 1.0 + b;
    for p in image.pixels_mut() {
        for c in p.0.iter_mut() {
            *c = to_u8(f64::from(*c) * factor);
        }
    }
}

/// `c' = (c − 128) · (1 + k) + 128` per channel.
pub fn adjust_contrast(image: &mut RgbImage, k: f64) {
    if k == 0.0 {
        return;
    }
    let factor = 1.0 + k;
    for p in image.pixels_mut() {
        for c in p.0.iter_mut() {
            *c = to_u8((f64::from(*c) - 128.0) * factor + 128.0);
        }
    }
}

/// Rec.601 luma of an RGB triple.
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Scales each channel's distance from the pixel's luma by `1 + s`;
/// `s = −1` yields grayscale.
pub fn adjust_saturation(image: &mut RgbImage, s: f64) {
    if s == 0.0 {
        return;
    }
    let factor = 1.0 + s;
    for p in image.pixels_mut() {
        let [r, g, b] = p.0;
        let y = luma(r, g, b);
        for c in p.0.iter_mut() {
            *c = to_u8(y + (f64::from(*c) - y) * factor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn px(r: u8, g: u8, b: u8) -> RgbImage {
        RgbImage::from_pixel(1, 1, Rgb([r, g, b]))
    }

    #[test]
    fn brightness() {
        let mut i = px(100, 200, 0);
        adjust_brightness(&mut i, 0.0);
        assert_eq!(i.get_pixel(0, 0).0, [100, 200, 0]);
        adjust_brightness(&mut i, 0.5);
        assert_eq!(i.get_pixel(0, 0).0, [150, 255, 0]);
        let mut i = px(1, 3, 255);
        adjust_brightness(&mut i, -0.5);
        // 0.5 and 1.5 round half-up
        assert_eq!(i.get_pixel(0, 0).0, [1, 2, 128]);
    }

    #[test]
    fn contrast() {
        let mut i = px(128, 228, 28);
        adjust_contrast(&mut i, 1.0);
        assert_eq!(i.get_pixel(0, 0).0, [128, 255, 0]);
        let mut i = px(10, 128, 250);
        adjust_contrast(&mut i, -1.0);
        assert_eq!(i.get_pixel(0, 0).0, [128, 128, 128]);
    }

    #[test]
    fn saturation() {
        let mut i = px(200, 100, 50);
        adjust_saturation(&mut i, -1.0);
        let y = (0.299 * 200.0 + 0.587 * 100.0 + 0.114 * 50.0_f64 + 0.5).floor() as u8;
        assert_eq!(i.get_pixel(0, 0).0, [y, y, y]);
        for g in [0u8, 17, 128, 255] {
            let mut i = px(g, g, g);
            adjust_saturation(&mut i, 0.8);
            assert_eq!(i.get_pixel(0, 0).0, [g, g, g]);
        }
    }
}
