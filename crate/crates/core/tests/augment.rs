mod support;

use framelabel_core::annotation::{BBox, FrameAnnotations, ImageSize, LabeledBox};
use framelabel_core::augment::{flip, flip_box, rotate_box, rotated_hull, FlipAxis};
use framelabel_core::augment::{adjust_brightness, adjust_contrast, adjust_saturation};
use framelabel_core::augment::{generate, AugmentationConfig, ParamRange};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use support::oracles::{byte, rotated_mask_bbox};

fn mask(size: ImageSize, b: &BBox) -> RgbImage {
    RgbImage::from_fn(size.width, size.height, |x, y| {
        let (x, y) = (f64::from(x), f64::from(y));
        if x >= b.x && x < b.right() && y >= b.y && y < b.bottom() { Rgb([255, 255, 255]) } else { Rgb([0, 0, 0]) }
    })
}

fn lit_bbox(img: &RgbImage) -> Option<BBox> {
    let (mut l, mut t, mut r, mut b) = (u32::MAX, u32::MAX, 0, 0);
    for (x, y, p) in img.enumerate_pixels() {
        if p.0 != [0, 0, 0] {
            l = l.min(x);
            t = t.min(y);
            r = r.max(x + 1);
            b = b.max(y + 1);
        }
    }
    (l != u32::MAX).then(|| BBox::new(f64::from(l), f64::from(t), f64::from(r - l), f64::from(b - t)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn rotated_hull_matches_mask(
        w in 16u32..200, h in 16u32..200,
        fx in 0.0..1.0f64, fy in 0.0..1.0f64, fw in 0.02..0.6f64, fh in 0.02..0.6f64,
        theta in -180.0..180.0f64,
    ) {
        let size = ImageSize::new(w, h);
        let bw = (fw * size.w()).max(1.0);
        let bh = (fh * size.h()).max(1.0);
        let b = BBox::new(fx * (size.w() - bw), fy * (size.h() - bh), bw, bh);
        let hull = rotated_hull(&b, size, theta);
        let m = rotated_mask_bbox([b.x, b.y, b.w, b.h], size.w() / 2.0, size.h() / 2.0, theta, 4).unwrap();
        prop_assert!((hull.x - m[0]).abs() <= 1.0, "left {} vs {}", hull.x, m[0]);
        prop_assert!((hull.y - m[1]).abs() <= 1.0, "top {} vs {}", hull.y, m[1]);
        prop_assert!((hull.right() - (m[0] + m[2])).abs() <= 1.0);
        prop_assert!((hull.bottom() - (m[1] + m[3])).abs() <= 1.0);
        if let Some(r) = rotate_box(&b, size, theta) {
            prop_assert!(r.is_within(size));
            let back = rotated_hull(&r, size, -theta);
            // hulls only grow
            let unclipped = hull == r;
            if unclipped {
                prop_assert!(back.x <= b.x + 1e-9 && back.y <= b.y + 1e-9);
                prop_assert!(back.right() >= b.right() - 1e-9 && back.bottom() >= b.bottom() - 1e-9);
            }
        }
    }

    #[test]
    fn flips_are_exact_and_involutive(
        w in 2u32..120, h in 2u32..120,
        x in 0u32..119, y in 0u32..119, bw in 1u32..120, bh in 1u32..120,
    ) {
        let size = ImageSize::new(w, h);
        let x = x % w;
        let y = y % h;
        let b = BBox::new(f64::from(x), f64::from(y), f64::from(bw.min(w - x)), f64::from(bh.min(h - y)));
        let frame = FrameAnnotations::with_boxes("f", "f.png", size, [LabeledBox { class_id: 0, bbox: b }]);
        for axis in [FlipAxis::Horizontal, FlipAxis::Vertical] {
            let (img, out) = flip(&mask(size, &b), &frame, axis);
            prop_assert_eq!(lit_bbox(&img).unwrap(), out.annotations[0].bbox);
            prop_assert_eq!(flip_box(&flip_box(&b, size, axis), size, axis), b);
        }
    }
}

#[test]
fn photometric_closed_forms_on_full_sweep() {
    let ramp = RgbImage::from_fn(256, 1, |x, _| Rgb([x as u8, 255 - x as u8, (x * 7 % 256) as u8]));
    for p in [-0.9, -0.5, -0.1, 0.1, 0.37, 1.0] {
        let mut b = ramp.clone();
        adjust_brightness(&mut b, p);
        let mut c = ramp.clone();
        adjust_contrast(&mut c, p);
        let mut s = ramp.clone();
        adjust_saturation(&mut s, p);
        for (x, _, px) in ramp.enumerate_pixels() {
            let [r, g, bl] = px.0.map(f64::from);
            let y = 0.299 * r + 0.587 * g + 0.114 * bl;
            let i = x;
            for k in 0..3 {
                let v = f64::from(px.0[k]);
                assert_eq!(b.get_pixel(i, 0).0[k], byte(v * (1.0 + p)));
                assert_eq!(c.get_pixel(i, 0).0[k], byte((v - 128.0) * (1.0 + p) + 128.0));
                assert_eq!(s.get_pixel(i, 0).0[k], byte(y + (v - y) * (1.0 + p)));
            }
        }
    }
}

#[test]
fn photometric_never_moves_boxes_and_output_is_deterministic() {
    let size = ImageSize::new(64, 48);
    let frame = FrameAnnotations::with_boxes(
        "f",
        "seq/f.png",
        size,
        [LabeledBox { class_id: 1, bbox: BBox::new(3.5, 4.25, 20.0, 10.0) }],
    );
    let img = RgbImage::from_fn(64, 48, |x, y| Rgb([(x * 4) as u8, (y * 5) as u8, 90]));
    let config = AugmentationConfig {
        brightness: ParamRange(-0.4, 0.4),
        contrast: ParamRange(-0.4, 0.4),
        saturation: ParamRange(-0.4, 0.4),
        samples_per_image: 6,
        seed: 11,
        ..AugmentationConfig::identity(6)
    };
    let a = generate(&img, &frame, &config).unwrap();
    let b = generate(&img, &frame, &config).unwrap();
    assert_eq!(a.len(), 6);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.image, y.image);
        assert_eq!(x.annotations.labeled_boxes(), frame.labeled_boxes());
    }
}
