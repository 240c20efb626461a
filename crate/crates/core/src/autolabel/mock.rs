//! Deterministic backend for tests and model-free runs.
//!
//! Embeddings are the normalized 8-vector
//! `[mean R, mean G, mean B, std R, std G, std B, w/W, h/H]` over the crop,
//! with color statistics scaled to `[0, 1]`. Proposals are either supplied
//! up front or found as connected regions of non-background pixels.

use std::collections::VecDeque;

use image::RgbImage;

use crate::annotation::BBox;

use super::backend::{BackendError, CandidateDetection, ModelBackend};
use super::embedding::Embedding;

pub const MOCK_DIMENSION: usize = 8;

#[derive(Debug, Clone)]
enum Proposals {
    /// Connected components of pixels that differ from the background.
    Components {
        background: [u8; 3],
        tolerance: u8,
        min_area: usize,
    },
    /// Fixed boxes with objectness.
    Fixed(Vec<(BBox, f64)>),
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    proposals: Proposals,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl MockBackend {
    /// Proposes regions that differ from a black background.
    pub fn new() -> Self {
        Self {
            proposals: Proposals::Components {
                background: [0, 0, 0],
                tolerance: 16,
                min_area: 9,
            },
        }
    }

    pub fn with_background(background: [u8; 3], tolerance: u8, min_area: usize) -> Self {
        Self {
            proposals: Proposals::Components {
                background,
                tolerance,
                min_area,
            },
        }
    }

    /// Proposes exactly these boxes on every image.
    pub fn with_candidates(candidates: Vec<(BBox, f64)>) -> Self {
        Self {
            proposals: Proposals::Fixed(candidates),
        }
    }
}

/// Integer pixel span covered by `bbox`, clipped to the image.
fn pixel_span(bbox: &BBox, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
    let x0 = bbox.x.floor().max(0.0) as u32;
    let y0 = bbox.y.floor().max(0.0) as u32;
    let x1 = (bbox.right().ceil().max(0.0) as u32).min(width);
    let y1 = (bbox.bottom().ceil().max(0.0) as u32).min(height);
    (x1 > x0 && y1 > y0).then_some((x0, y0, x1, y1))
}

/// Raw (unnormalized) mock feature vector for a crop.
pub fn crop_features(image: &RgbImage, bbox: &BBox) -> Option<[f64; MOCK_DIMENSION]> {
    let (w, h) = image.dimensions();
    let (x0, y0, x1, y1) = pixel_span(bbox, w, h)?;
    let n = f64::from((x1 - x0) * (y1 - y0));
    let mut sum = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for y in y0..y1 {
        for x in x0..x1 {
            let p = image.get_pixel(x, y).0;
            for c in 0..3 {
                let v = f64::from(p[c]) / 255.0;
                sum[c] += v;
                sq[c] += v * v;
            }
        }
    }
    let mean = sum.map(|s| s / n);
    let std = [0, 1, 2].map(|c| (sq[c] / n - mean[c] * mean[c]).max(0.0).sqrt());
    Some([
        mean[0],
        mean[1],
        mean[2],
        std[0],
        std[1],
        std[2],
        bbox.w / f64::from(w),
        bbox.h / f64::from(h),
    ])
}

fn components(image: &RgbImage, background: [u8; 3], tolerance: u8, min_area: usize) -> Vec<(BBox, f64)> {
    let (w, h) = image.dimensions();
    let is_fg = |x: u32, y: u32| {
        let p = image.get_pixel(x, y).0;
        (0..3).any(|c| p[c].abs_diff(background[c]) > tolerance)
    };
    let mut seen = vec![false; (w * h) as usize];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for sy in 0..h {
        for sx in 0..w {
            let idx = (sy * w + sx) as usize;
            if seen[idx] || !is_fg(sx, sy) {
                continue;
            }
            seen[idx] = true;
            queue.push_back((sx, sy));
            let (mut l, mut t, mut r, mut b) = (sx, sy, sx, sy);
            let mut count = 0usize;
            while let Some((x, y)) = queue.pop_front() {
                count += 1;
                l = l.min(x);
                r = r.max(x);
                t = t.min(y);
                b = b.max(y);
                let neighbors = [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ];
                for (nx, ny) in neighbors {
                    if nx < w && ny < h {
                        let nidx = (ny * w + nx) as usize;
                        if !seen[nidx] && is_fg(nx, ny) {
                            seen[nidx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
            if count >= min_area {
                let bbox = BBox::new(f64::from(l), f64::from(t), f64::from(r - l + 1), f64::from(b - t + 1));
                out.push((bbox, count as f64 / bbox.area()));
            }
        }
    }
    out
}

impl ModelBackend for MockBackend {
    fn dimension(&self) -> usize {
        MOCK_DIMENSION
    }

    fn propose(&self, image: &RgbImage) -> Result<Vec<CandidateDetection>, BackendError> {
        let boxes = match &self.proposals {
            Proposals::Components {
                background,
                tolerance,
                min_area,
            } => components(image, *background, *tolerance, *min_area),
            Proposals::Fixed(list) => list.clone(),
        };
        let (w, h) = image.dimensions();
        let size = crate::annotation::ImageSize::new(w, h);
        boxes
            .into_iter()
            .filter_map(|(bbox, objectness)| bbox.clip_to(size).map(|b| (b, objectness)))
            .map(|(bbox, objectness)| {
                Ok(CandidateDetection {
                    embedding: self.embed(image, &bbox)?,
                    bbox,
                    objectness: objectness.clamp(0.0, 1.0),
                })
            })
            .collect()
    }

    fn embed(&self, image: &RgbImage, bbox: &BBox) -> Result<Embedding, BackendError> {
        let features = crop_features(image, bbox)
            .ok_or_else(|| BackendError(format!("crop {bbox:?} is outside the image")))?;
        Embedding::new(features.to_vec()).map_err(|e| BackendError(e.to_string()))
    }

    fn supports_concurrency(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn canvas() -> RgbImage {
        let mut img = RgbImage::new(60, 40);
        for y in 5..15 {
            for x in 5..25 {
                img.put_pixel(x, y, Rgb([255, 0, 0]));
            }
        }
        for y in 20..35 {
            for x in 40..50 {
                img.put_pixel(x, y, Rgb([0, 0, 200]));
            }
        }
        img
    }

    #[test]
    fn finds_planted_rectangles() {
        let img = canvas();
        let c = MockBackend::new().propose(&img).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].bbox, BBox::new(5.0, 5.0, 20.0, 10.0));
        assert_eq!(c[1].bbox, BBox::new(40.0, 20.0, 10.0, 15.0));
        assert!(c.iter().all(|d| d.objectness == 1.0));
    }

    #[test]
    fn embedding_features() {
        let img = canvas();
        let f = crop_features(&img, &BBox::new(5.0, 5.0, 20.0, 10.0)).unwrap();
        assert_eq!(&f[..6], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((f[6] - 20.0 / 60.0).abs() < 1e-12);
        assert!((f[7] - 10.0 / 40.0).abs() < 1e-12);
        let backend = MockBackend::new();
        let a = backend.embed(&img, &BBox::new(5.0, 5.0, 20.0, 10.0)).unwrap();
        let b = backend.embed(&img, &BBox::new(5.0, 5.0, 20.0, 10.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), MOCK_DIMENSION);
        assert!(backend.embed(&img, &BBox::new(100.0, 0.0, 5.0, 5.0)).is_err());
    }

    #[test]
    fn fixed_candidates() {
        let img = canvas();
        let b = MockBackend::with_candidates(vec![(BBox::new(5.0, 5.0, 20.0, 10.0), 0.7)]);
        let c = b.propose(&img).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].objectness, 0.7);
    }
}
