//! Materials, lights and the local illumination model.

use serde::{Deserialize, Serialize};

use crate::{RenderError, Vector3};

pub type Rgb = [f64; 3];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    #[default]
    None,
    /// Sinusoidal banding along an object-local axis, e.g. 3D-printing layer lines.
    /// Brightness varies between `1 - contrast` and 1.
    Wave { axis: Vector3, period: f64, contrast: f64 },
    /// Alternating full and half brightness cubes of edge `cell`.
    Checker { cell: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub base_color: Rgb,
    #[serde(default)]
    pub texture: Texture,
    #[serde(default)]
    pub specular_strength: f64,
    /// Metals tint the highlight with the base colour and keep little diffuse.
    #[serde(default)]
    pub metallic: bool,
}

const METAL_DIFFUSE: f64 = 0.3;

impl Material {
    pub fn matte(base_color: Rgb) -> Self {
        Self { base_color, texture: Texture::None, specular_strength: 0.0, metallic: false }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.base_color.iter().all(|&c| unit(c)) {
            return Err(RenderError::InvalidMaterial(format!("base_color {:?} outside [0,1]", self.base_color)));
        }
        if !unit(self.specular_strength) {
            return Err(RenderError::InvalidMaterial("specular_strength outside [0,1]".into()));
        }
        match &self.texture {
            Texture::None => {}
            Texture::Wave { axis, period, contrast } => {
                if axis.try_normalize().is_none() || !(*period > 0.0) || !unit(*contrast) {
                    return Err(RenderError::InvalidMaterial(
                        "wave texture needs a non-zero axis, positive period and contrast in [0,1]".into(),
                    ));
                }
            }
            Texture::Checker { cell } => {
                if !(*cell > 0.0) {
                    return Err(RenderError::InvalidMaterial("checker cell must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Base colour after texturing at an object-local point.
    pub fn albedo_at(&self, local: Vector3) -> Rgb {
        let factor = match &self.texture {
            Texture::None => 1.0,
            Texture::Wave { axis, period, contrast } => {
                let axis = axis.try_normalize().unwrap_or(Vector3::new(0.0, 0.0, 1.0));
                let phase = std::f64::consts::TAU * local.dot(axis) / period;
                1.0 - contrast * 0.5 * (1.0 - phase.cos())
            }
            Texture::Checker { cell } => {
                let k = (local.x / cell).floor() + (local.y / cell).floor() + (local.z / cell).floor();
                if (k as i64).rem_euclid(2) == 0 {
                    1.0
                } else {
                    0.5
                }
            }
        };
        self.base_color.map(|c| c * factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Light {
    /// `direction` is the direction the light travels (sun-style).
    Directional {
        direction: Vector3,
        intensity: f64,
        #[serde(default = "white")]
        color: Rgb,
    },
    /// Unattenuated point light.
    Point {
        position: Vector3,
        intensity: f64,
        #[serde(default = "white")]
        color: Rgb,
    },
}

fn white() -> Rgb {
    [1.0; 3]
}

impl Light {
    pub fn validate(&self) -> Result<(), RenderError> {
        let (intensity, color) = match self {
            Light::Directional { direction, intensity, color } => {
                if direction.try_normalize().is_none() {
                    return Err(RenderError::InvalidLight("directional light needs a non-zero direction".into()));
                }
                (intensity, color)
            }
            Light::Point { position, intensity, color } => {
                if !position.is_finite() {
                    return Err(RenderError::InvalidLight("non-finite point light position".into()));
                }
                (intensity, color)
            }
        };
        if !(*intensity >= 0.0) || !intensity.is_finite() {
            return Err(RenderError::InvalidLight(format!("intensity {intensity} must be >= 0")));
        }
        if !color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(RenderError::InvalidLight("color outside [0,1]".into()));
        }
        Ok(())
    }

    /// Unit vector from `point` towards the light plus intensity and colour.
    fn incidence(&self, point: Vector3) -> Option<(Vector3, f64, Rgb)> {
        match self {
            Light::Directional { direction, intensity, color } => {
                Some(((-*direction).try_normalize()?, *intensity, *color))
            }
            Light::Point { position, intensity, color } => {
                Some(((*position - point).try_normalize()?, *intensity, *color))
            }
        }
    }
}

/// Shading inputs at one surface sample.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    /// Object-local position, drives procedural textures.
    pub local: Vector3,
    pub world: Vector3,
    /// Unit normal in world space.
    pub normal: Vector3,
}

const SHININESS: f64 = 32.0;
const METAL_SHININESS: f64 = 64.0;

/// Lambert diffuse plus a Blinn-Phong highlight, clamped per channel to [0,1].
pub fn shade_at(material: &Material, surface: &SurfacePoint, view: Vector3, lights: &[Light], ambient: f64) -> Rgb {
    let albedo = material.albedo_at(surface.local);
    let n = surface.normal;
    let diffuse_scale = if material.metallic { METAL_DIFFUSE } else { 1.0 };
    let shininess = if material.metallic { METAL_SHININESS } else { SHININESS };

    let mut out = albedo.map(|c| ambient * c);
    for light in lights {
        let Some((l, intensity, color)) = light.incidence(surface.world) else { continue };
        let ndotl = n.dot(l);
        if ndotl <= 0.0 {
            continue;
        }
        let mut spec = 0.0;
        if material.specular_strength > 0.0 {
            if let Some(h) = (l + view).try_normalize() {
                spec = material.specular_strength * intensity * n.dot(h).max(0.0).powf(shininess);
            }
        }
        for c in 0..3 {
            let tint = if material.metallic { albedo[c] } else { 1.0 };
            out[c] += diffuse_scale * intensity * ndotl * color[c] * albedo[c] + spec * color[c] * tint;
        }
    }
    out.map(|c| c.clamp(0.0, 1.0))
}

/// Untextured shading of a surface sample at the world origin.
pub fn shade(material: &Material, normal: Vector3, view: Vector3, lights: &[Light], ambient: f64) -> Rgb {
    let surface = SurfacePoint { local: Vector3::zero(), world: Vector3::zero(), normal };
    shade_at(material, &surface, view, lights, ambient)
}

pub fn to_rgb8(c: Rgb) -> [u8; 3] {
    c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}
