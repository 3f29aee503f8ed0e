//! Randomized scene construction: pose sampling, drop-to-plane settling and
//! AABB collision flagging.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::RigidTransform;
use crate::mesh::{quad_xy, Aabb};
use crate::render::Material;
use crate::{Mesh, Pose, Vector3};

pub const DEFAULT_MAX_ATTEMPTS: usize = 20;
pub const DEFAULT_COLLISION_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("category `{category}` references unknown mesh `{mesh}`")]
    UnknownMesh { category: String, mesh: String },
    #[error("`{owner}` references unknown material `{material}`")]
    UnknownMaterial { owner: String, material: String },
    #[error("category `{0}` has no parts")]
    EmptyCategory(String),
    #[error("duplicate category name `{0}`")]
    DuplicateCategory(String),
    #[error("invalid range for `{field}`: lower bound {lo} exceeds upper bound {hi}")]
    InvalidRange { field: &'static str, lo: f64, hi: f64 },
    #[error("plane size must be positive")]
    InvalidPlane,
}

/// Closed sampling interval; `[a, a]` always yields exactly `a`.
pub type Interval = [f64; 2];

/// Per-component sampling intervals for an active object's pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationRange {
    pub x: Interval,
    pub y: Interval,
    /// Drop height before settling.
    pub z: Interval,
    #[serde(default)]
    pub rx: Interval,
    #[serde(default)]
    pub ry: Interval,
    #[serde(default)]
    pub rz: Interval,
}

impl RandomizationRange {
    pub fn fixed(pose: &Pose) -> Self {
        let (t, r) = (pose.translation, pose.rotation);
        Self { x: [t.x; 2], y: [t.y; 2], z: [t.z; 2], rx: [r.x; 2], ry: [r.y; 2], rz: [r.z; 2] }
    }

    fn intervals(&self) -> [(&'static str, Interval); 6] {
        [("x", self.x), ("y", self.y), ("z", self.z), ("rx", self.rx), ("ry", self.ry), ("rz", self.rz)]
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for (field, [lo, hi]) in self.intervals() {
            if !(lo <= hi) {
                return Err(SceneError::InvalidRange { field, lo, hi });
            }
        }
        Ok(())
    }
}

/// Draws translation x, y, z then rotation x, y, z: exactly six uniform draws.
pub fn sample_pose<R: Rng + ?Sized>(range: &RandomizationRange, rng: &mut R) -> Pose {
    let mut draw = |[lo, hi]: Interval| {
        let u: f64 = rng.gen();
        lo + (hi - lo) * u
    };
    let translation = Vector3::new(draw(range.x), draw(range.y), draw(range.z));
    let rotation = Vector3::new(draw(range.rx), draw(range.ry), draw(range.rz));
    Pose { translation, rotation }
}

/// One mesh of a rigid model, already in model-local coordinates.
#[derive(Debug, Clone)]
pub struct ModelPart {
    pub mesh: Arc<Mesh>,
    pub material: Arc<Material>,
}

/// Rigid set of parts that moves and is annotated as one instance.
#[derive(Debug, Clone)]
pub struct Model {
    pub parts: Vec<ModelPart>,
}

impl Model {
    pub fn single(mesh: Arc<Mesh>, material: Arc<Material>) -> Self {
        Self { parts: vec![ModelPart { mesh, material }] }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vector3> + '_ {
        self.parts.iter().flat_map(|p| p.mesh.vertices().iter().copied())
    }

    pub fn triangle_count(&self) -> usize {
        self.parts.iter().map(|p| p.mesh.triangle_count()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SceneObject {
    pub id: u32,
    /// Category index; `None` for the passive plane.
    pub class_id: Option<usize>,
    pub model: Arc<Model>,
    pub pose: Pose,
    pub active: bool,
    pub collided: bool,
}

impl SceneObject {
    pub fn transform(&self) -> RigidTransform<f64> {
        self.pose.to_transform()
    }

    /// Bounds of the posed model.
    pub fn aabb(&self) -> Aabb<f64> {
        let xf = self.transform();
        let mut it = self.model.vertices().map(|v| xf.apply_point(v));
        let first = it.next().unwrap_or(xf.translation);
        it.fold(Aabb { min: first, max: first }, |b, p| Aabb { min: b.min.min(p), max: b.max.max(p) })
    }

    pub fn min_z(&self) -> f64 {
        let xf = self.transform();
        self.model.vertices().map(|v| xf.apply_point(v).z).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub plane_z: f64,
    /// Seed of this scene's own PRNG stream.
    pub rng_seed: u64,
    pub scene_index: u64,
}

impl Scene {
    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn active_objects(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.iter().filter(|o| o.active)
    }
}

/// Moves the object along z so its lowest vertex rests on `plane_z`.
pub fn settle(object: &SceneObject, plane_z: f64) -> Pose {
    let mut pose = object.pose;
    let min_z = object.min_z();
    if min_z.is_finite() && min_z != plane_z {
        pose.translation.z -= min_z - plane_z;
    }
    pose
}

/// Ids of active objects whose bounds overlap another active object's bounds
/// by more than `DEFAULT_COLLISION_EPSILON` cubic metres.
pub fn detect_collisions(objects: &[SceneObject]) -> BTreeSet<u32> {
    detect_collisions_with(objects, DEFAULT_COLLISION_EPSILON)
}

pub fn detect_collisions_with(objects: &[SceneObject], epsilon: f64) -> BTreeSet<u32> {
    let boxes: Vec<(u32, Aabb<f64>)> = objects.iter().filter(|o| o.active).map(|o| (o.id, o.aabb())).collect();
    let mut hit = BTreeSet::new();
    for (i, (a, ba)) in boxes.iter().enumerate() {
        for (b, bb) in &boxes[i + 1..] {
            if ba.intersection_volume(bb) > epsilon {
                hit.insert(*a);
                hit.insert(*b);
            }
        }
    }
    hit
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for one scene: `mix64(mix64(seed) ^ scene_index)` with the
/// SplitMix64 finalizer. The stream itself is ChaCha8 seeded from this value.
pub fn scene_seed(seed: u64, scene_index: u64) -> u64 {
    mix64(mix64(seed) ^ scene_index)
}

pub fn scene_rng(seed: u64, scene_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(scene_seed(seed, scene_index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub mesh: String,
    pub material: String,
    /// Placement of this part inside the composite model.
    #[serde(default)]
    pub offset: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub parts: Vec<PartSpec>,
    pub range: RandomizationRange,
    /// Number of instances of this category per scene.
    #[serde(default = "one")]
    pub instances: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    /// Edge lengths along x and y (m).
    pub size: [f64; 2],
    #[serde(default)]
    pub z: f64,
    pub material: String,
}

/// Scene description with meshes and materials referenced by name.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub meshes: BTreeMap<String, Arc<Mesh>>,
    pub materials: BTreeMap<String, Material>,
    pub categories: Vec<CategorySpec>,
    pub plane: PlaneSpec,
    pub max_attempts: usize,
    pub collision_epsilon: f64,
}

impl SceneConfig {
    pub fn new(
        meshes: BTreeMap<String, Arc<Mesh>>,
        materials: BTreeMap<String, Material>,
        categories: Vec<CategorySpec>,
        plane: PlaneSpec,
    ) -> Self {
        Self {
            meshes,
            materials,
            categories,
            plane,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            collision_epsilon: DEFAULT_COLLISION_EPSILON,
        }
    }
}

#[derive(Debug, Clone)]
struct CategoryTemplate {
    model: Arc<Model>,
    range: RandomizationRange,
    instances: usize,
}

/// A `SceneConfig` with every name resolved; builds any number of scenes.
#[derive(Debug, Clone)]
pub struct SceneTemplate {
    categories: Vec<CategoryTemplate>,
    plane: Arc<Model>,
    plane_z: f64,
    max_attempts: usize,
    collision_epsilon: f64,
}

impl SceneTemplate {
    pub fn new(config: &SceneConfig) -> Result<Self, SceneError> {
        let materials: BTreeMap<&str, Arc<Material>> =
            config.materials.iter().map(|(k, v)| (k.as_str(), Arc::new(v.clone()))).collect();
        let material = |owner: &str, name: &str| {
            materials
                .get(name)
                .cloned()
                .ok_or_else(|| SceneError::UnknownMaterial { owner: owner.to_string(), material: name.to_string() })
        };

        let mut seen = BTreeSet::new();
        let mut categories = Vec::with_capacity(config.categories.len());
        for cat in &config.categories {
            if !seen.insert(cat.name.as_str()) {
                return Err(SceneError::DuplicateCategory(cat.name.clone()));
            }
            if cat.parts.is_empty() {
                return Err(SceneError::EmptyCategory(cat.name.clone()));
            }
            cat.range.validate()?;
            let mut parts = Vec::with_capacity(cat.parts.len());
            for part in &cat.parts {
                let mesh = config
                    .meshes
                    .get(&part.mesh)
                    .ok_or_else(|| SceneError::UnknownMesh { category: cat.name.clone(), mesh: part.mesh.clone() })?;
                let mesh = if part.offset == Pose::identity() {
                    mesh.clone()
                } else {
                    Arc::new(mesh.apply(&part.offset.to_transform()))
                };
                parts.push(ModelPart { mesh, material: material(&cat.name, &part.material)? });
            }
            categories.push(CategoryTemplate {
                model: Arc::new(Model { parts }),
                range: cat.range.clone(),
                instances: cat.instances,
            });
        }

        let [w, h] = config.plane.size;
        if !(w > 0.0 && h > 0.0) {
            return Err(SceneError::InvalidPlane);
        }
        let plane = Arc::new(Model::single(Arc::new(quad_xy(w, h)), material("plane", &config.plane.material)?));
        Ok(Self {
            categories,
            plane,
            plane_z: config.plane.z,
            max_attempts: config.max_attempts.max(1),
            collision_epsilon: config.collision_epsilon,
        })
    }

    pub fn plane_z(&self) -> f64 {
        self.plane_z
    }

    /// Deterministic in `(seed, scene_index)`. Every active object is sampled,
    /// settled and re-sampled while it overlaps an already placed object, up to
    /// the attempt budget; leftovers keep their last pose and are flagged.
    pub fn build(&self, seed: u64, scene_index: u64) -> Scene {
        let mut rng = scene_rng(seed, scene_index);
        let mut objects = vec![SceneObject {
            id: 0,
            class_id: None,
            model: self.plane.clone(),
            pose: Pose::from_translation(Vector3::new(0.0, 0.0, self.plane_z)),
            active: false,
            collided: false,
        }];
        let mut placed: Vec<Aabb<f64>> = Vec::new();
        let mut next_id = 1;

        for (class_id, cat) in self.categories.iter().enumerate() {
            for _ in 0..cat.instances {
                let mut obj = SceneObject {
                    id: next_id,
                    class_id: Some(class_id),
                    model: cat.model.clone(),
                    pose: Pose::identity(),
                    active: true,
                    collided: false,
                };
                next_id += 1;
                for _ in 0..self.max_attempts {
                    obj.pose = sample_pose(&cat.range, &mut rng);
                    obj.pose = settle(&obj, self.plane_z);
                    let bounds = obj.aabb();
                    if placed.iter().all(|b| b.intersection_volume(&bounds) <= self.collision_epsilon) {
                        break;
                    }
                }
                placed.push(obj.aabb());
                objects.push(obj);
            }
        }

        let hits = detect_collisions_with(&objects, self.collision_epsilon);
        for o in &mut objects {
            o.collided = hits.contains(&o.id);
        }
        Scene { objects, plane_z: self.plane_z, rng_seed: scene_seed(seed, scene_index), scene_index }
    }
}

pub fn build_scene(config: &SceneConfig, seed: u64, scene_index: u64) -> Result<Scene, SceneError> {
    Ok(SceneTemplate::new(config)?.build(seed, scene_index))
}
