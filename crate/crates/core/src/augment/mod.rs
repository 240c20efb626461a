//! Augmented copies of annotated images with remapped boxes.
//!
//! Each sample draws its parameters from a ChaCha stream keyed by
//! `(seed, image path, sample index)` and applies, in order: rotation,
//! horizontal flip, vertical flip, brightness, contrast, saturation.

mod geometric;
mod output;
mod photometric;

pub use geometric::{
    cos_sin_deg, flip, flip_box, rotate, rotate_box, rotate_image, rotate_point, rotated_hull,
    rotated_hull_clipped, FlipAxis, MIN_VISIBLE_FRACTION,
};
pub use output::{augmented_rel_path, write_dataset_files, write_sample_files, write_samples};
pub use photometric::{adjust_brightness, adjust_contrast, adjust_saturation, luma};

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::{FrameAnnotations, Source};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("invalid augmentation config: {0}")]
    Config(String),
    #[error("image is {actual:?} but annotations expect {expected:?}")]
    SizeMismatch { expected: (u32, u32), actual: (u32, u32) },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Closed interval `[lo, hi]`, written as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange(pub f64, pub f64);

impl ParamRange {
    pub const ZERO: ParamRange = ParamRange(0.0, 0.0);

    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    fn check(&self, name: &str, min: f64, max: f64) -> Result<(), AugmentError> {
        let ParamRange(lo, hi) = *self;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < min || hi > max {
            return Err(AugmentError::Config(format!(
                "{name} range [{lo}, {hi}] must be ordered and within [{min}, {max}]"
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(self.0..=self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationConfig {
    pub rotation_deg: ParamRange,
    pub brightness: ParamRange,
    pub contrast: ParamRange,
    pub saturation: ParamRange,
    /// Probability of a left-right flip.
    pub flip_horizontal: f64,
    /// Probability of a top-bottom flip.
    pub flip_vertical: f64,
    pub samples_per_image: u32,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            rotation_deg: ParamRange(-10.0, 10.0),
            brightness: ParamRange(-0.2, 0.2),
            contrast: ParamRange(-0.2, 0.2),
            saturation: ParamRange(-0.2, 0.2),
            flip_horizontal: 0.5,
            flip_vertical: 0.0,
            samples_per_image: 3,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    /// A config whose samples equal the source image.
    pub fn identity(samples_per_image: u32) -> Self {
        Self {
            rotation_deg: ParamRange::ZERO,
            brightness: ParamRange::ZERO,
            contrast: ParamRange::ZERO,
            saturation: ParamRange::ZERO,
            flip_horizontal: 0.0,
            flip_vertical: 0.0,
            samples_per_image,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        self.rotation_deg.check("rotation_deg", -180.0, 180.0)?;
        self.brightness.check("brightness", -1.0, 1.0)?;
        self.contrast.check("contrast", -1.0, 1.0)?;
        self.saturation.check("saturation", -1.0, 1.0)?;
        for (name, p) in [("flip_horizontal", self.flip_horizontal), ("flip_vertical", self.flip_vertical)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AugmentError::Config(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        if self.samples_per_image < 1 {
            return Err(AugmentError::Config("samples_per_image must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parameter values drawn for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub rotation_deg: f64,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_image: String,
    pub sample_index: u32,
    pub params: SampleParams,
}

#[derive(Debug, Clone)]
pub struct AugmentedSample {
    pub image: RgbImage,
    pub annotations: FrameAnnotations,
    pub provenance: Provenance,
}

/// Deterministic RNG for one sample.
pub fn sample_rng(seed: u64, image_path: &str, sample_index: u32) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((image_path.len() as u64).to_le_bytes());
    hasher.update(image_path.as_bytes());
    hasher.update(sample_index.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Draws every parameter in a fixed order so each value depends only on the
/// key, not on which transforms end up applied.
pub fn draw_params(config: &AugmentationConfig, image_path: &str, sample_index: u32) -> SampleParams {
    let mut rng = sample_rng(config.seed, image_path, sample_index);
    let rotation_deg = config.rotation_deg.draw(&mut rng);
    let flip_horizontal = rng.gen::<f64>() < config.flip_horizontal;
    let flip_vertical = rng.gen::<f64>() < config.flip_vertical;
    let brightness = config.brightness.draw(&mut rng);
    let contrast = config.contrast.draw(&mut rng);
    let saturation = config.saturation.draw(&mut rng);
    SampleParams {
        rotation_deg,
        flip_horizontal,
        flip_vertical,
        brightness,
        contrast,
        saturation,
    }
}

/// Applies one parameter set. Boxes follow the geometric transforms only.
pub fn apply_params(image: &RgbImage, frame: &FrameAnnotations, params: &SampleParams) -> (RgbImage, FrameAnnotations) {
    let (mut img, mut ann) = rotate(image, frame, params.rotation_deg);
    if params.flip_horizontal {
        (img, ann) = flip(&img, &ann, FlipAxis::Horizontal);
    }
    if params.flip_vertical {
        (img, ann) = flip(&img, &ann, FlipAxis::Vertical);
    }
    adjust_brightness(&mut img, params.brightness);
    adjust_contrast(&mut img, params.contrast);
    adjust_saturation(&mut img, params.saturation);
    (img, ann)
}

/// `samples_per_image` augmented variants of one annotated image.
pub fn generate(
    image: &RgbImage,
    frame: &FrameAnnotations,
    config: &AugmentationConfig,
) -> Result<Vec<AugmentedSample>, AugmentError> {
    config.validate()?;
    let expected = (frame.image_size.width, frame.image_size.height);
    if image.dimensions() != expected {
        return Err(AugmentError::SizeMismatch {
            expected,
            actual: image.dimensions(),
        });
    }
    Ok((0..config.samples_per_image)
        .map(|i| {
            let params = draw_params(config, &frame.image_path, i);
            let (img, mut ann) = apply_params(image, frame, &params);
            let rel = augmented_rel_path(&frame.image_path, i);
            ann.frame_id = rel.clone();
            ann.image_path = rel;
            ann.revision = 0;
            for a in &mut ann.annotations {
                a.source = Source::Augmented;
                a.score = None;
            }
            AugmentedSample {
                image: img,
                annotations: ann,
                provenance: Provenance {
                    source_image: frame.image_path.clone(),
                    sample_index: i,
                    params,
                },
            }
        })
        .collect())
}
