//! Synthetic object-detection datasets from CAD meshes.
//!
//! The pipeline builds randomized scenes of triangle meshes resting on a
//! background plane, renders them with a software rasterizer, derives box
//! annotations from the per-pixel instance buffer, and scores detector output
//! with precision, recall and COCO-style mAP.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotate;
pub mod config;
pub mod demo;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod mesh;
pub mod pipeline;
pub mod render;
pub mod scalar;
pub mod scene;

pub use render::RenderError;

pub type Vector3 = geometry::Vec3<f64>;
pub type Mesh = mesh::TriangleMesh<f64>;
pub type Pose = mesh::Pose<f64>;
pub type Aabb = mesh::Aabb<f64>;

pub type Vector3f = geometry::Vec3<f32>;
pub type Meshf = mesh::TriangleMesh<f32>;
