use serde::{Deserialize, Serialize};

use super::AnnotationError;

/// Hue step between consecutive class ids, in degrees.
pub const GOLDEN_ANGLE_DEG: f64 = 137.508;
const COLOR_SATURATION: f64 = 0.85;
const COLOR_VALUE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

/// Ordered class names. A class id is the index of its name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassRegistry {
    names: Vec<String>,
}

impl ClassRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut reg = Self::new();
        for name in names {
            reg.add(name)?;
        }
        Ok(reg)
    }

    /// Appends a class and returns its id. Names must be non-empty and unique.
    pub fn add(&mut self, name: impl Into<String>) -> Result<u32, AnnotationError> {
        let name = name.into();
        let trimmed = name.trim();
        if trimmed.is_empty() {
            return Err(AnnotationError::InvalidClassName(name));
        }
        if self.id_of(trimmed).is_some() {
            return Err(AnnotationError::DuplicateClass(trimmed.to_string()));
        }
        self.names.push(trimmed.to_string());
        Ok((self.names.len() - 1) as u32)
    }

    /// Id of `name`, appending it when unknown. The flag is true when the
    /// class was newly added.
    pub fn get_or_add(&mut self, name: &str) -> Result<(u32, bool), AnnotationError> {
        match self.id_of(name) {
            Some(id) => Ok((id, false)),
            None => self.add(name).map(|id| (id, true)),
        }
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        let name = name.trim();
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn name(&self, class_id: u32) -> Option<&str> {
        self.names.get(class_id as usize).map(String::as_str)
    }

    pub fn contains(&self, class_id: u32) -> bool {
        (class_id as usize) < self.names.len()
    }

    pub fn ensure(&self, class_id: u32) -> Result<(), AnnotationError> {
        if self.contains(class_id) {
            Ok(())
        } else {
            Err(AnnotationError::ClassNotFound(class_id))
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (i as u32, n.as_str()))
    }

    pub fn color(&self, class_id: u32) -> Result<Rgb, AnnotationError> {
        self.ensure(class_id)?;
        Ok(class_color(class_id))
    }
}

/// Display hue for a class id, in degrees.
pub fn class_hue(class_id: u32) -> f64 {
    (f64::from(class_id) * GOLDEN_ANGLE_DEG).rem_euclid(360.0)
}

/// Display color for a class id: golden-angle hue walk at fixed saturation
/// and value.
pub fn class_color(class_id: u32) -> Rgb {
    hsv_to_rgb(class_hue(class_id), COLOR_SATURATION, COLOR_VALUE)
}

/// HSV (hue in degrees, s and v in [0,1]) to 8-bit RGB.
pub fn hsv_to_rgb(hue: f64, s: f64, v: f64) -> Rgb {
    let c = v * s;
    let hp = hue.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to8 = |f: f64| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb(to8(r), to8(g), to8(b))
}
