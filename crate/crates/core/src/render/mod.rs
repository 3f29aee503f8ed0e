//! Software rendering of scenes into colour, depth and instance-id buffers.

mod camera;
mod raster;
mod shading;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use camera::{Camera, Projected};
pub use shading::{shade, shade_at, to_rgb8, Light, Material, Rgb, SurfacePoint, Texture};

use crate::geometry::RigidTransform;
use crate::image::{GrayImage16, RgbImage};
use crate::scene::{Scene, SceneObject};
use crate::Vector3;
use raster::{clip_near, cover_triangle, ClipVertex, ScreenVertex};

/// Instance id written where no active object is visible (background or plane).
pub const NO_INSTANCE: u32 = 0;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid light: {0}")]
    InvalidLight(String),
    #[error("object {0} is not part of the scene")]
    UnknownObject(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    /// Colour of pixels not covered by any geometry.
    #[serde(default = "default_background")]
    pub background: Rgb,
    #[serde(default)]
    pub cull_backfaces: bool,
    /// Near clipping distance (m).
    #[serde(default = "default_near")]
    pub near: f64,
}

fn default_background() -> Rgb {
    [0.0; 3]
}

fn default_near() -> f64 {
    1e-3
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self { background: default_background(), cull_backfaces: false, near: default_near() }
    }
}

/// Colour image plus per-pixel depth and instance id, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
    /// Distance along the view axis; `+inf` where nothing was drawn.
    pub depth: Vec<f64>,
    pub instance_ids: Vec<u32>,
}

impl RenderOutput {
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn id_at(&self, x: u32, y: u32) -> u32 {
        self.instance_ids[(y * self.width + x) as usize]
    }

    /// Visible pixel count per instance id, excluding `NO_INSTANCE`.
    pub fn instance_pixel_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for &id in self.instance_ids.iter().filter(|&&id| id != NO_INSTANCE) {
            *counts.entry(id).or_insert(0) += 1;
        }
        counts
    }

    pub fn image(&self) -> RgbImage {
        RgbImage { width: self.width, height: self.height, data: self.rgb.clone() }
    }

    /// Instance ids as a 16-bit greyscale image (ids above 65535 saturate).
    pub fn id_image(&self) -> GrayImage16 {
        GrayImage16 {
            width: self.width,
            height: self.height,
            data: self.instance_ids.iter().map(|&i| i.min(u16::MAX as u32) as u16).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Fragment {
    object: u32,
    part: u32,
    triangle: u32,
    bary: Vector3,
}

/// Runs coverage for every triangle of `object`, reporting
/// `(x, y, depth, part, triangle, barycentrics)`.
fn cover_object(
    object: &SceneObject,
    camera: &Camera,
    settings: &RenderSettings,
    mut emit: impl FnMut(u32, u32, f64, u32, u32, Vector3),
) {
    let cam_from_object: RigidTransform<f64> = camera.camera_from_world().compose(&object.transform());
    let (w, h) = (camera.width(), camera.height());
    let units = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 0.0, 1.0)];
    for (p, part) in object.model.parts.iter().enumerate() {
        let mesh = &part.mesh;
        let cam_verts: Vec<Vector3> = mesh.vertices().iter().map(|&v| cam_from_object.apply_point(v)).collect();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            if mesh.normals()[t] == Vector3::zero() {
                continue;
            }
            let corners = tri.map(|i| cam_verts[i as usize]);
            if settings.cull_backfaces {
                let n = (corners[1] - corners[0]).cross(corners[2] - corners[0]);
                // Eye sits at the camera-space origin.
                if n.dot(-corners[0]) <= 0.0 {
                    continue;
                }
            }
            let clip = [0, 1, 2].map(|k| ClipVertex { cam: corners[k], bary: units[k] });
            let (poly, n) = clip_near(clip, settings.near);
            if n < 3 {
                continue;
            }
            let screen: Vec<ScreenVertex> = poly[..n]
                .iter()
                .filter_map(|c| {
                    let pr = camera.project_camera_space(c.cam)?;
                    let inv_depth = 1.0 / pr.depth;
                    Some(ScreenVertex { x: pr.x, y: pr.y, inv_depth, bary_over_depth: c.bary * inv_depth })
                })
                .collect();
            if screen.len() != n {
                continue;
            }
            for k in 1..n - 1 {
                cover_triangle([screen[0], screen[k], screen[k + 1]], w, h, |x, y, d, b| {
                    emit(x, y, d, p as u32, t as u32, b)
                });
            }
        }
    }
}

/// Z-buffered render with default settings.
pub fn rasterize(scene: &Scene, camera: &Camera, lights: &[Light], ambient: f64) -> RenderOutput {
    rasterize_with(scene, camera, lights, ambient, &RenderSettings::default())
}

/// Active objects are drawn before passive ones and the depth test is strict,
/// so an object touching the plane wins depth ties against it.
pub fn rasterize_with(
    scene: &Scene,
    camera: &Camera,
    lights: &[Light],
    ambient: f64,
    settings: &RenderSettings,
) -> RenderOutput {
    let (w, h) = (camera.width(), camera.height());
    let n = w as usize * h as usize;
    let mut depth = vec![f64::INFINITY; n];
    let mut frags: Vec<Option<Fragment>> = vec![None; n];

    let order = scene
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.active)
        .chain(scene.objects.iter().enumerate().filter(|(_, o)| !o.active));
    for (oi, object) in order {
        cover_object(object, camera, settings, |x, y, d, part, triangle, bary| {
            let idx = (y * w + x) as usize;
            if d < depth[idx] {
                depth[idx] = d;
                frags[idx] = Some(Fragment { object: oi as u32, part, triangle, bary });
            }
        });
    }

    let background = to_rgb8(settings.background);
    let cam_pos = camera.position;
    let mut rgb = Vec::with_capacity(3 * n);
    let mut instance_ids = Vec::with_capacity(n);
    for frag in &frags {
        let Some(f) = frag else {
            rgb.extend_from_slice(&background);
            instance_ids.push(NO_INSTANCE);
            continue;
        };
        let object = &scene.objects[f.object as usize];
        let part = &object.model.parts[f.part as usize];
        let corners = part.mesh.triangle(f.triangle as usize);
        let local = corners[0] * f.bary.x + corners[1] * f.bary.y + corners[2] * f.bary.z;
        let xf = object.transform();
        let world = xf.apply_point(local);
        let view = (cam_pos - world).try_normalize().unwrap_or(Vector3::new(0.0, 0.0, 1.0));
        let mut normal = xf.apply_vector(part.mesh.normals()[f.triangle as usize]).try_normalize().unwrap_or(view);
        if normal.dot(view) < 0.0 {
            normal = -normal;
        }
        let surface = SurfacePoint { local, world, normal };
        rgb.extend_from_slice(&to_rgb8(shade_at(&part.material, &surface, view, lights, ambient)));
        instance_ids.push(if object.active { object.id } else { NO_INSTANCE });
    }

    RenderOutput { width: w, height: h, rgb, depth, instance_ids }
}

/// Pixels `id` covers when drawn alone, with the plane and all other objects removed.
pub fn solo_pixel_count(scene: &Scene, camera: &Camera, id: u32) -> Result<usize, RenderError> {
    solo_pixel_count_with(scene, camera, id, &RenderSettings::default())
}

pub fn solo_pixel_count_with(
    scene: &Scene,
    camera: &Camera,
    id: u32,
    settings: &RenderSettings,
) -> Result<usize, RenderError> {
    let object = scene.object(id).ok_or(RenderError::UnknownObject(id))?;
    let w = camera.width();
    let mut covered = vec![false; w as usize * camera.height() as usize];
    cover_object(object, camera, settings, |x, y, _, _, _, _| covered[(y * w + x) as usize] = true);
    Ok(covered.iter().filter(|&&c| c).count())
}

/// Solo pixel counts for every active object.
pub fn solo_pixel_counts(scene: &Scene, camera: &Camera, settings: &RenderSettings) -> BTreeMap<u32, usize> {
    scene
        .active_objects()
        .map(|o| (o.id, solo_pixel_count_with(scene, camera, o.id, settings).expect("id taken from scene")))
        .collect()
}
