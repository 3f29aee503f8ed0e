use serde::{Deserialize, Serialize};

use crate::geometry::{Mat3, RigidTransform};
use crate::{RenderError, Vector3};

/// Pinhole camera. Camera-local axes: +X right, +Y up, looking down -Z; the
/// Euler rotation (extrinsic X-Y-Z, as for object poses) maps local to world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vector3,
    #[serde(default)]
    pub rotation: Vector3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    #[serde(default = "default_resolution")]
    pub resolution: [u32; 2],
}

fn default_resolution() -> [u32; 2] {
    [640, 640]
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            position: Vector3::zero(),
            rotation: Vector3::zero(),
            fov_y: std::f64::consts::FRAC_PI_3,
            resolution: default_resolution(),
        }
    }
}

/// Screen-space result of a projection. `x`, `y` are continuous pixel
/// coordinates (origin top-left, y down); `depth` is distance along the view axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

impl Camera {
    pub fn width(&self) -> u32 {
        self.resolution[0]
    }

    pub fn height(&self) -> u32 {
        self.resolution[1]
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let fov_ok = self.fov_y > 0.0 && self.fov_y < std::f64::consts::PI;
        if !fov_ok {
            return Err(RenderError::InvalidCamera(format!("fov_y {} outside (0, pi)", self.fov_y)));
        }
        if self.width() == 0 || self.height() == 0 {
            return Err(RenderError::InvalidCamera("resolution must be at least 1x1".into()));
        }
        if !self.position.is_finite() || !self.rotation.is_finite() {
            return Err(RenderError::InvalidCamera("non-finite pose".into()));
        }
        Ok(())
    }

    pub fn world_from_camera(&self) -> RigidTransform<f64> {
        RigidTransform { rotation: Mat3::from_euler_xyz(self.rotation), translation: self.position }
    }

    pub fn camera_from_world(&self) -> RigidTransform<f64> {
        self.world_from_camera().inverse()
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.height() as f64 / (0.5 * self.fov_y).tan()
    }

    pub fn center_px(&self) -> (f64, f64) {
        (0.5 * self.width() as f64, 0.5 * self.height() as f64)
    }

    /// Projects a camera-space point; `None` when it is not in front of the camera.
    pub fn project_camera_space(&self, p: Vector3) -> Option<Projected> {
        let depth = -p.z;
        if !(depth > 0.0) {
            return None;
        }
        let f = self.focal_px();
        let (cx, cy) = self.center_px();
        Some(Projected { x: cx + f * p.x / depth, y: cy - f * p.y / depth, depth })
    }

    pub fn project(&self, world: Vector3) -> Option<Projected> {
        self.project_camera_space(self.camera_from_world().apply_point(world))
    }
}
