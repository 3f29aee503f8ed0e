//! A small planetary-gear demo: procedurally built STL assets plus a matching
//! pipeline config, so the full workflow runs without external CAD files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::annotate::FilterThresholds;
use crate::config::{AssetConfig, CategoryConfig, OutputConfig, PartConfig, PipelineConfig};
use crate::mesh::{gear_prism, ring, write_stl_ascii, write_stl_binary};
use crate::render::{Camera, Light, Material, RenderSettings, Texture};
use crate::scene::{PlaneSpec, RandomizationRange};
use crate::{Mesh, Pose, Vector3};

/// Asset name and mesh in millimetres.
fn demo_meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("holder", ring(30.0, 12.0, 10.0, 48)),
        ("bearing", ring(12.0, 6.0, 7.0, 32)),
        ("sun_gear", gear_prism(16.0, 13.0, 8.0, 14)),
        ("planet_gear", gear_prism(22.0, 19.0, 8.0, 20)),
    ]
}

fn pla(rgb: [f64; 3]) -> Material {
    Material {
        base_color: rgb,
        texture: Texture::Wave { axis: Vector3::new(0.0, 0.0, 1.0), period: 0.0004, contrast: 0.25 },
        specular_strength: 0.15,
        metallic: false,
    }
}

pub fn demo_config(count: usize, seed: u64) -> PipelineConfig {
    let asset = |name: &str, material: &str| AssetConfig {
        mesh: PathBuf::from(format!("meshes/{name}.stl")),
        scale: 0.001,
        material: material.into(),
    };
    let assets = BTreeMap::from([
        ("holder".to_string(), asset("holder", "pla_grey")),
        ("bearing".to_string(), asset("bearing", "steel")),
        ("sun_gear".to_string(), asset("sun_gear", "pla_orange")),
        ("planet_gear".to_string(), asset("planet_gear", "pla_blue")),
    ]);
    let materials = BTreeMap::from([
        ("pla_grey".to_string(), pla([0.55, 0.55, 0.58])),
        ("pla_orange".to_string(), pla([0.95, 0.45, 0.1])),
        ("pla_blue".to_string(), pla([0.15, 0.35, 0.85])),
        (
            "steel".to_string(),
            Material { base_color: [0.8, 0.8, 0.82], texture: Texture::None, specular_strength: 0.8, metallic: true },
        ),
        (
            "table".to_string(),
            Material {
                base_color: [0.35, 0.3, 0.25],
                texture: Texture::Checker { cell: 0.05 },
                specular_strength: 0.0,
                metallic: false,
            },
        ),
    ]);
    let range = RandomizationRange {
        x: [-0.06, 0.06],
        y: [-0.06, 0.06],
        z: [0.01, 0.05],
        rx: [-0.2, 0.2],
        ry: [-0.2, 0.2],
        rz: [0.0, std::f64::consts::TAU],
    };
    let part = |asset: &str| PartConfig { asset: asset.into(), material: None, offset: Pose::identity() };
    let categories = vec![
        CategoryConfig {
            name: "Holder".into(),
            parts: vec![
                part("holder"),
                PartConfig {
                    asset: "bearing".into(),
                    material: None,
                    offset: Pose::from_translation(Vector3::new(0.0, 0.0, 0.002)),
                },
            ],
            range: range.clone(),
            instances: 1,
        },
        CategoryConfig { name: "SunGear".into(), parts: vec![part("sun_gear")], range: range.clone(), instances: 1 },
        CategoryConfig { name: "PlanetGear".into(), parts: vec![part("planet_gear")], range, instances: 2 },
    ];
    PipelineConfig {
        assets,
        materials,
        categories,
        plane: PlaneSpec { size: [0.6, 0.6], z: 0.0, material: "table".into() },
        camera: Camera {
            position: Vector3::new(0.0, -0.12, 0.34),
            rotation: Vector3::new(0.33, 0.0, 0.0),
            fov_y: 0.87,
            resolution: [640, 640],
        },
        lights: vec![
            Light::Directional { direction: Vector3::new(0.3, 0.5, -1.0), intensity: 0.8, color: [1.0, 0.98, 0.95] },
            Light::Point { position: Vector3::new(-0.2, -0.2, 0.5), intensity: 0.25, color: [1.0; 3] },
        ],
        ambient: 0.2,
        render: RenderSettings::default(),
        count,
        seed,
        max_attempts: 20,
        collision_epsilon: 1e-9,
        postprocess: FilterThresholds::default(),
        output: OutputConfig::default(),
    }
}

/// Writes `meshes/*.stl` (binary, except the bearing in ASCII) and
/// `config.json` into `dir`; returns the config path.
pub fn write_demo(dir: &Path, count: usize, seed: u64) -> io::Result<PathBuf> {
    fs::create_dir_all(dir.join("meshes"))?;
    for (name, mesh) in demo_meshes() {
        let path = dir.join("meshes").join(format!("{name}.stl"));
        if name == "bearing" {
            fs::write(path, write_stl_ascii(&mesh, name))?;
        } else {
            fs::write(path, write_stl_binary(&mesh))?;
        }
    }
    let mut json = serde_json::to_vec_pretty(&demo_config(count, seed)).map_err(io::Error::other)?;
    json.push(b'\n');
    let path = dir.join("config.json");
    fs::write(&path, json)?;
    Ok(path)
}
