//! Pipeline configuration file (JSON). Relative paths resolve against the
//! directory containing the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::FilterThresholds;
use crate::mesh::parse_stl;
use crate::pipeline::CliError;
use crate::render::{Camera, Light, Material, RenderSettings};
use crate::scene::{
    CategorySpec, PartSpec, PlaneSpec, RandomizationRange, SceneConfig, DEFAULT_COLLISION_EPSILON, DEFAULT_MAX_ATTEMPTS,
};
use crate::{Mesh, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    /// STL file, relative to the config file.
    pub mesh: PathBuf,
    /// Multiplier from file units to metres.
    pub scale: f64,
    /// Default material for parts using this asset.
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartConfig {
    pub asset: String,
    #[serde(default)]
    pub material: Option<String>,
    #[serde(default)]
    pub offset: Pose,
}

/// A class. Several parts form one rigid composite instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryConfig {
    pub name: String,
    pub parts: Vec<PartConfig>,
    pub range: RandomizationRange,
    #[serde(default = "one")]
    pub instances: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Also dump instance-id buffers as 16-bit PGM.
    #[serde(default = "yes")]
    pub write_id_buffers: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), write_id_buffers: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub assets: BTreeMap<String, AssetConfig>,
    pub materials: BTreeMap<String, Material>,
    pub categories: Vec<CategoryConfig>,
    pub plane: PlaneSpec,
    pub camera: Camera,
    #[serde(default)]
    pub lights: Vec<Light>,
    #[serde(default)]
    pub ambient: f64,
    #[serde(default)]
    pub render: RenderSettings,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
    #[serde(default = "default_epsilon")]
    pub collision_epsilon: f64,
    #[serde(default)]
    pub postprocess: FilterThresholds,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

fn default_epsilon() -> f64 {
    DEFAULT_COLLISION_EPSILON
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation(format!("{}: {}", path.into(), message.into()))
}

/// A parsed config together with its location, raw-bytes hash and loaded meshes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    /// SHA-256 of each asset's mesh file.
    pub asset_hashes: BTreeMap<String, String>,
    pub meshes: BTreeMap<String, Arc<Mesh>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl PipelineConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, CliError> {
        serde_json::from_slice(bytes).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Structural checks that do not touch the filesystem. Errors name the field path.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.count == 0 {
            return Err(invalid("count", "must be at least 1"));
        }
        if self.categories.is_empty() {
            return Err(invalid("categories", "at least one category is required"));
        }
        for (name, m) in &self.materials {
            m.validate().map_err(|e| invalid(format!("materials.{name}"), e.to_string()))?;
        }
        let material_known = |path: String, name: &str| {
            if self.materials.contains_key(name) {
                Ok(())
            } else {
                Err(invalid(path, format!("unknown material `{name}`")))
            }
        };
        for (name, a) in &self.assets {
            if !(a.scale > 0.0 && a.scale.is_finite()) {
                return Err(invalid(format!("assets.{name}.scale"), "must be positive"));
            }
            material_known(format!("assets.{name}.material"), &a.material)?;
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, c) in self.categories.iter().enumerate() {
            let at = format!("categories[{i}]");
            if !names.insert(c.name.as_str()) {
                return Err(invalid(format!("{at}.name"), format!("duplicate category `{}`", c.name)));
            }
            if c.parts.is_empty() {
                return Err(invalid(format!("{at}.parts"), "at least one part is required"));
            }
            c.range.validate().map_err(|e| invalid(format!("{at}.range"), e.to_string()))?;
            for (j, p) in c.parts.iter().enumerate() {
                if !self.assets.contains_key(&p.asset) {
                    return Err(invalid(format!("{at}.parts[{j}].asset"), format!("unknown asset `{}`", p.asset)));
                }
                if let Some(m) = &p.material {
                    material_known(format!("{at}.parts[{j}].material"), m)?;
                }
            }
        }
        if !(self.plane.size[0] > 0.0 && self.plane.size[1] > 0.0) {
            return Err(invalid("plane.size", "must be positive"));
        }
        material_known("plane.material".into(), &self.plane.material)?;
        self.camera.validate().map_err(|e| invalid("camera", e.to_string()))?;
        for (i, l) in self.lights.iter().enumerate() {
            l.validate().map_err(|e| invalid(format!("lights[{i}]"), e.to_string()))?;
        }
        if !(self.ambient >= 0.0 && self.ambient.is_finite()) {
            return Err(invalid("ambient", "must be non-negative"));
        }
        if !(self.render.near > 0.0) {
            return Err(invalid("render.near", "must be positive"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("max_attempts", "must be at least 1"));
        }
        let t = &self.postprocess;
        if !(0.0..=1.0).contains(&t.min_visibility) {
            return Err(invalid("postprocess.min_visibility", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn scene_config(&self, meshes: &BTreeMap<String, Arc<Mesh>>) -> SceneConfig {
        let categories = self
            .categories
            .iter()
            .map(|c| CategorySpec {
                name: c.name.clone(),
                parts: c
                    .parts
                    .iter()
                    .map(|p| PartSpec {
                        mesh: p.asset.clone(),
                        material: p.material.clone().unwrap_or_else(|| self.assets[&p.asset].material.clone()),
                        offset: p.offset,
                    })
                    .collect(),
                range: c.range.clone(),
                instances: c.instances,
            })
            .collect();
        let mut sc = SceneConfig::new(meshes.clone(), self.materials.clone(), categories, self.plane.clone());
        sc.max_attempts = self.max_attempts;
        sc.collision_epsilon = self.collision_epsilon;
        sc
    }

    pub fn category_names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }
}

impl LoadedConfig {
    /// Reads, validates and loads every referenced mesh.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let config = PipelineConfig::from_json(&bytes)?;
        config.validate()?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut meshes = BTreeMap::new();
        let mut asset_hashes = BTreeMap::new();
        for (name, asset) in &config.assets {
            let mesh_path = base_dir.join(&asset.mesh);
            let data = fs::read(&mesh_path)
                .map_err(|e| invalid(format!("assets.{name}.mesh"), format!("{}: {e}", mesh_path.display())))?;
            let mesh = parse_stl::<f64>(&data, asset.scale)
                .map_err(|e| invalid(format!("assets.{name}.mesh"), format!("{}: {e}", mesh_path.display())))?;
            asset_hashes.insert(name.clone(), sha256_hex(&data));
            meshes.insert(name.clone(), Arc::new(mesh));
        }
        Ok(Self { config, base_dir, config_hash: sha256_hex(&bytes), asset_hashes, meshes })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.output.dir)
    }
}
