//! Adapter contract for a real detection/embedding network.
//!
//! The network takes one `[1, 3, S, S]` float tensor (RGB in `[0, 1]`, the
//! image letterboxed onto a square canvas filled with [`PAD_VALUE`]) and
//! yields two outputs:
//!
//! * `detections`: `[1, N, 5 + D]` rows of `cx, cy, w, h, objectness,
//!   embedding...` in canvas pixels;
//! * `global`: `[1, D]`, the pooled embedding of the whole input.
//!
//! Exemplar regions are embedded by running the network on the crop and
//! taking `global`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use image::imageops::{self, FilterType};
use image::RgbImage;

use crate::annotation::{BBox, ImageSize};

use super::backend::{BackendError, CandidateDetection};
use super::embedding::Embedding;

/// Canvas fill used for letterboxing (114 / 255).
pub const PAD_VALUE: f32 = 114.0 / 255.0;

/// Proposals below this objectness are discarded before matching.
pub const MIN_OBJECTNESS: f64 = 0.05;

/// Backend choice as written in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Mock,
    Model(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mock" => Ok(Self::Mock),
            other => match other.strip_prefix("model:") {
                Some(path) if !path.is_empty() => Ok(Self::Model(PathBuf::from(path))),
                _ => Err(format!("unknown backend {other:?}, expected \"mock\" or \"model:<path>\"")),
            },
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mock => f.write_str("mock"),
            Self::Model(p) => write!(f, "model:{}", p.display()),
        }
    }
}

impl Default for BackendSpec {
    fn default() -> Self {
        Self::Mock
    }
}

impl serde::Serialize for BackendSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BackendSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Placement of an image on the square network canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Letterbox {
    pub input_size: u32,
    pub scale: f64,
    pub pad_x: f64,
    pub pad_y: f64,
}

impl Letterbox {
    pub fn for_image(width: u32, height: u32, input_size: u32) -> Self {
        let scale = f64::from(input_size) / f64::from(width.max(height));
        let new_w = (f64::from(width) * scale).round();
        let new_h = (f64::from(height) * scale).round();
        Self {
            input_size,
            scale,
            pad_x: ((f64::from(input_size) - new_w) / 2.0).floor(),
            pad_y: ((f64::from(input_size) - new_h) / 2.0).floor(),
        }
    }

    /// Maps a canvas-space center/size box back to image coordinates.
    pub fn to_image(&self, cx: f64, cy: f64, w: f64, h: f64) -> BBox {
        BBox::new(
            (cx - w / 2.0 - self.pad_x) / self.scale,
            (cy - h / 2.0 - self.pad_y) / self.scale,
            w / self.scale,
            h / self.scale,
        )
    }
}

/// Letterboxes `image` into a CHW float tensor of side `input_size`.
pub fn letterbox(image: &RgbImage, input_size: u32) -> (Vec<f32>, Letterbox) {
    let lb = Letterbox::for_image(image.width(), image.height(), input_size);
    let new_w = ((f64::from(image.width()) * lb.scale).round() as u32).clamp(1, input_size);
    let new_h = ((f64::from(image.height()) * lb.scale).round() as u32).clamp(1, input_size);
    let resized = imageops::resize(image, new_w, new_h, FilterType::Triangle);
    let side = input_size as usize;
    let mut tensor = vec![PAD_VALUE; 3 * side * side];
    let (ox, oy) = (lb.pad_x as usize, lb.pad_y as usize);
    for (x, y, p) in resized.enumerate_pixels() {
        let (cx, cy) = (ox + x as usize, oy + y as usize);
        for c in 0..3 {
            tensor[c * side * side + cy * side + cx] = f32::from(p[c]) / 255.0;
        }
    }
    (tensor, lb)
}

/// Turns raw `detections` rows into candidates in image coordinates.
///
/// Rows below [`MIN_OBJECTNESS`] or falling outside the image are dropped;
/// the rest are clipped to it.
pub fn decode_detections(
    rows: &[f32],
    dimension: usize,
    lb: &Letterbox,
    size: ImageSize,
) -> Result<Vec<CandidateDetection>, BackendError> {
    let row_len = 5 + dimension;
    if rows.len() % row_len != 0 {
        return Err(BackendError(format!(
            "detections output has {} values, not a multiple of {row_len}",
            rows.len()
        )));
    }
    let mut out = Vec::new();
    for row in rows.chunks_exact(row_len) {
        let [cx, cy, w, h, obj] = [row[0], row[1], row[2], row[3], row[4]].map(f64::from);
        if !(obj >= MIN_OBJECTNESS) || !(w > 0.0 && h > 0.0) {
            continue;
        }
        let Some(bbox) = lb.to_image(cx, cy, w, h).clip_to(size) else {
            continue;
        };
        let embedding = Embedding::from_f32(&row[5..]).map_err(|e| BackendError(e.to_string()))?;
        out.push(CandidateDetection {
            bbox,
            embedding,
            objectness: obj.min(1.0),
        });
    }
    Ok(out)
}

/// Pixel crop of `bbox`, at least 1x1.
pub fn crop(image: &RgbImage, bbox: &BBox) -> Option<RgbImage> {
    let size = ImageSize::new(image.width(), image.height());
    let b = bbox.clip_to(size)?;
    let x0 = b.x.floor() as u32;
    let y0 = b.y.floor() as u32;
    let x1 = (b.right().ceil() as u32).clamp(x0 + 1, image.width());
    let y1 = (b.bottom().ceil() as u32).clamp(y0 + 1, image.height());
    Some(imageops::crop_imm(image, x0, y0, x1 - x0, y1 - y0).to_image())
}

#[cfg(feature = "onnx")]
pub use onnx::OnnxBackend;

#[cfg(feature = "onnx")]
mod onnx {
    use std::path::Path;

    use image::RgbImage;
    use tract_onnx::prelude::*;

    use super::*;
    use crate::autolabel::backend::ModelBackend;

    type Plan = SimplePlan<TypedFact, Box<dyn TypedOp>, Graph<TypedFact, Box<dyn TypedOp>>>;

    /// ONNX network run on the CPU.
    pub struct OnnxBackend {
        plan: Plan,
        input_size: u32,
        dimension: usize,
    }

    impl OnnxBackend {
        pub fn load(path: &Path, input_size: u32) -> Result<Self, BackendError> {
            let err = |e: TractError| BackendError(format!("{}: {e:#}", path.display()));
            let side = input_size as usize;
            let model = tract_onnx::onnx()
                .model_for_path(path)
                .map_err(err)?
                .with_input_fact(0, f32::fact([1, 3, side, side]).into())
                .map_err(err)?
                .into_optimized()
                .map_err(err)?;
            let global = model.output_fact(1).map_err(err)?.shape.as_concrete().map(<[usize]>::to_vec);
            let dimension = match global.as_deref() {
                Some([1, d]) => *d,
                other => return Err(BackendError(format!("global output has shape {other:?}, expected [1, D]"))),
            };
            let plan = model.into_runnable().map_err(err)?;
            Ok(Self { plan, input_size, dimension })
        }

        fn run(&self, image: &RgbImage) -> Result<(Vec<f32>, Vec<f32>, Letterbox), BackendError> {
            let side = self.input_size as usize;
            let (data, lb) = letterbox(image, self.input_size);
            let input = tract_ndarray::Array4::from_shape_vec((1, 3, side, side), data)
                .map_err(|e| BackendError(e.to_string()))?;
            let outputs = self
                .plan
                .run(tvec!(Tensor::from(input).into()))
                .map_err(|e| BackendError(format!("{e:#}")))?;
            let view = |i: usize| -> Result<Vec<f32>, BackendError> {
                Ok(outputs[i]
                    .to_array_view::<f32>()
                    .map_err(|e| BackendError(format!("{e:#}")))?
                    .iter()
                    .copied()
                    .collect())
            };
            Ok((view(0)?, view(1)?, lb))
        }
    }

    impl ModelBackend for OnnxBackend {
        fn dimension(&self) -> usize {
            self.dimension
        }

        fn propose(&self, image: &RgbImage) -> Result<Vec<CandidateDetection>, BackendError> {
            let (rows, _, lb) = self.run(image)?;
            decode_detections(&rows, self.dimension, &lb, ImageSize::new(image.width(), image.height()))
        }

        fn embed(&self, image: &RgbImage, bbox: &BBox) -> Result<Embedding, BackendError> {
            let region = crop(image, bbox).ok_or_else(|| BackendError(format!("crop {bbox:?} is outside the image")))?;
            let (_, global, _) = self.run(&region)?;
            Embedding::from_f32(&global).map_err(|e| BackendError(e.to_string()))
        }

        fn supports_concurrency(&self) -> bool {
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_spec_parsing() {
        assert_eq!("mock".parse::<BackendSpec>().unwrap(), BackendSpec::Mock);
        assert_eq!(
            "model:/m/yoloe.onnx".parse::<BackendSpec>().unwrap(),
            BackendSpec::Model("/m/yoloe.onnx".into())
        );
        assert!("model:".parse::<BackendSpec>().is_err());
        assert!("gpu".parse::<BackendSpec>().is_err());
        assert_eq!(BackendSpec::Model("a.onnx".into()).to_string(), "model:a.onnx");
    }

    #[test]
    fn letterbox_geometry() {
        // 200x100 onto 64: scale 0.32, content 64x32, padded 16 top and bottom
        let lb = Letterbox::for_image(200, 100, 64);
        assert!((lb.scale - 0.32).abs() < 1e-12);
        assert_eq!((lb.pad_x, lb.pad_y), (0.0, 16.0));
        let b = lb.to_image(32.0, 32.0, 32.0, 16.0);
        assert!((b.x - 50.0).abs() < 1e-9 && (b.y - 25.0).abs() < 1e-9);
        assert!((b.w - 100.0).abs() < 1e-9 && (b.h - 50.0).abs() < 1e-9);
    }

    #[test]
    fn letterbox_tensor_layout() {
        let img = RgbImage::from_pixel(4, 2, image::Rgb([255, 0, 0]));
        let (t, lb) = letterbox(&img, 4);
        assert_eq!(t.len(), 48);
        assert_eq!((lb.pad_x, lb.pad_y), (0.0, 1.0));
        // row 0 padded, row 1 red
        assert_eq!(t[0], PAD_VALUE);
        assert_eq!(t[4], 1.0);
        assert_eq!(t[16 + 4], 0.0);
    }

    #[test]
    fn decode_rows() {
        let lb = Letterbox::for_image(200, 100, 64);
        let size = ImageSize::new(200, 100);
        let rows = [
            32.0, 32.0, 32.0, 16.0, 0.9, 1.0, 0.0, // kept
            32.0, 32.0, 32.0, 16.0, 0.01, 1.0, 0.0, // low objectness
            32.0, 2.0, 8.0, 2.0, 0.9, 0.0, 1.0, // inside the padding
        ];
        let out = decode_detections(&rows, 2, &lb, size).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].bbox.x - 50.0).abs() < 1e-6);
        assert_eq!(out[0].embedding.as_slice(), &[1.0, 0.0]);
        assert!(decode_detections(&rows[..6], 2, &lb, size).is_err());
    }

    #[test]
    fn crop_clips() {
        let img = RgbImage::new(10, 10);
        assert_eq!(crop(&img, &BBox::new(8.0, 8.0, 5.0, 5.0)).unwrap().dimensions(), (2, 2));
        assert!(crop(&img, &BBox::new(20.0, 0.0, 5.0, 5.0)).is_none());
    }
}
