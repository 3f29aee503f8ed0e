//! Triangle meshes, rigid poses and axis-aligned bounds.

mod primitives;
mod stl;

pub use primitives::{cuboid, cylinder, gear_prism, quad_xy, ring};
pub use stl::{parse_stl, write_stl_ascii, write_stl_binary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Mat3, RigidTransform, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("binary STL truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("ASCII STL line {line}: {message}")]
    Ascii { line: usize, message: String },
    #[error("mesh has no triangles")]
    NoTriangles,
    #[error("mesh has no vertices")]
    Empty,
    #[error("triangle {triangle} references vertex {index} but only {count} vertices exist")]
    IndexOutOfRange { triangle: usize, index: u32, count: usize },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("{0} normals given for {1} triangles")]
    NormalCount(usize, usize),
}

/// Indexed triangle geometry. Vertices are never welded; every triangle keeps
/// its own normal.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3<T>>,
}

impl<T: Real> TriangleMesh<T> {
    /// Validates indices and coordinates. Normals that are absent, non-finite or
    /// not unit length are recomputed from the winding; degenerate triangles
    /// get a zero normal.
    pub fn new(
        vertices: Vec<Vec3<T>>,
        triangles: Vec<[u32; 3]>,
        normals: Option<Vec<Vec3<T>>>,
    ) -> Result<Self, MeshError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index, count: vertices.len() });
            }
        }
        if let Some(n) = &normals {
            if n.len() != triangles.len() {
                return Err(MeshError::NormalCount(n.len(), triangles.len()));
            }
        }
        let tol = T::of(1e-4);
        let normals = triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let given =
                    normals.as_ref().map(|n| n[t]).filter(|n| n.is_finite() && (n.norm() - T::one()).abs() < tol);
                match given {
                    Some(n) => n,
                    None => face_normal(&vertices, tri).unwrap_or_else(Vec3::zero),
                }
            })
            .collect();
        Ok(Self { vertices, triangles, normals })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn apply(&self, xf: &RigidTransform<T>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| xf.apply_point(v)).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.iter().map(|&n| xf.apply_vector(n)).collect(),
        }
    }

    /// Concatenates meshes into one, re-basing indices.
    pub fn merge<'a>(parts: impl IntoIterator<Item = &'a Self>) -> Self {
        let mut out = Self { vertices: Vec::new(), triangles: Vec::new(), normals: Vec::new() };
        for m in parts {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&m.vertices);
            out.triangles.extend(m.triangles.iter().map(|t| t.map(|i| i + base)));
            out.normals.extend_from_slice(&m.normals);
        }
        out
    }

    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.iter().map(|v| v.cast()).collect(),
        }
    }
}

/// Unit normal from counter-clockwise winding, `None` for zero-area triangles.
pub fn face_normal<T: Real>(vertices: &[Vec3<T>], tri: &[u32; 3]) -> Option<Vec3<T>> {
    let [a, b, c] = tri.map(|i| vertices[i as usize]);
    (b - a).cross(c - a).try_normalize()
}

/// Translation plus extrinsic X-Y-Z Euler rotation (radians).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>"))]
pub struct Pose<T> {
    pub translation: Vec3<T>,
    pub rotation: Vec3<T>,
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Self { translation: Vec3::zero(), rotation: Vec3::zero() }
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self { translation: t, rotation: Vec3::zero() }
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        Mat3::from_euler_xyz(self.rotation)
    }

    pub fn to_transform(&self) -> RigidTransform<T> {
        RigidTransform { rotation: self.rotation_matrix(), translation: self.translation }
    }
}

/// Applies `pose` to every vertex; normals are rotated only.
pub fn transform<T: Real>(mesh: &TriangleMesh<T>, pose: &Pose<T>) -> TriangleMesh<T> {
    mesh.apply(&pose.to_transform())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn from_points(points: &[Vec3<T>]) -> Option<Self> {
        let first = *points.first()?;
        Some(points.iter().fold(Self { min: first, max: first }, |b, &p| Self { min: b.min.min(p), max: b.max.max(p) }))
    }

    pub fn union(&self, o: &Self) -> Self {
        Self { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn translated(&self, t: Vec3<T>) -> Self {
        Self { min: self.min + t, max: self.max + t }
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    /// Volume of the overlap region, zero when the boxes are disjoint or only touch.
    pub fn intersection_volume(&self, o: &Self) -> T {
        let lo = self.min.max(o.min);
        let hi = self.max.min(o.max);
        let d = hi - lo;
        if d.x <= T::zero() || d.y <= T::zero() || d.z <= T::zero() {
            T::zero()
        } else {
            d.x * d.y * d.z
        }
    }

    pub fn corners(&self) -> [Vec3<T>; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }
}

pub fn aabb<T: Real>(mesh: &TriangleMesh<T>) -> Result<Aabb<T>, MeshError> {
    Aabb::from_points(mesh.vertices()).ok_or(MeshError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn single_vertex_mesh(p: Vec3<f64>) -> TriangleMesh<f64> {
        TriangleMesh::new(vec![p], vec![[0, 0, 0]], None).unwrap()
    }

    #[test]
    fn identity_pose_keeps_vertices() {
        let m = cuboid(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(transform(&m, &Pose::identity()).vertices(), m.vertices());
    }

    #[test]
    fn quarter_turn_about_z() {
        let m = single_vertex_mesh(Vec3::new(1.0, 0.0, 0.0));
        let pose = Pose { translation: Vec3::zero(), rotation: Vec3::new(0.0, 0.0, FRAC_PI_2) };
        let v = transform(&m, &pose).vertices()[0];
        assert!((v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn pure_translation() {
        let m = single_vertex_mesh(Vec3::zero());
        let v = transform(&m, &Pose::from_translation(Vec3::new(0.0, 0.0, 2.0))).vertices()[0];
        assert_eq!(v, Vec3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn aabb_cases() {
        let unit = cuboid(Vec3::splat(1.0))
            .apply(&RigidTransform { rotation: Mat3::identity(), translation: Vec3::splat(0.5) });
        let b = aabb(&unit).unwrap();
        assert_eq!((b.min, b.max), (Vec3::zero(), Vec3::splat(1.0)));

        let b = aabb(&single_vertex_mesh(Vec3::new(2.0, 3.0, 4.0))).unwrap();
        assert_eq!(b.min, Vec3::new(2.0, 3.0, 4.0));
        assert_eq!(b.max, b.min);

        let lifted = transform(&unit, &Pose::from_translation(Vec3::new(0.0, 0.0, 1.0)));
        let b = aabb(&lifted).unwrap();
        assert_eq!((b.min, b.max), (Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 1.0, 2.0)));
    }

    #[test]
    fn empty_mesh_has_no_aabb() {
        let m = TriangleMesh::<f64>::new(vec![], vec![], None).unwrap();
        assert_eq!(aabb(&m), Err(MeshError::Empty));
    }

    #[test]
    fn rejects_bad_indices_and_nan() {
        let v = vec![Vec3::zero(), Vec3::new(1.0, 0.0, 0.0)];
        assert!(matches!(
            TriangleMesh::new(v.clone(), vec![[0, 1, 2]], None),
            Err(MeshError::IndexOutOfRange { index: 2, .. })
        ));
        let v = vec![Vec3::new(f64::NAN, 0.0, 0.0)];
        assert_eq!(TriangleMesh::new(v, vec![], None), Err(MeshError::NonFinite(0)));
    }

    #[test]
    fn recomputes_degenerate_normals() {
        let v = vec![Vec3::zero(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 3.0, 0.0)];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 0, 1]], Some(vec![Vec3::zero(); 2])).unwrap();
        assert!((m.normals()[0] - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        assert_eq!(m.normals()[1], Vec3::zero());
    }

    fn vec3() -> impl Strategy<Value = Vec3<f64>> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn angles() -> impl Strategy<Value = Vec3<f64>> {
        let a = -std::f64::consts::PI..std::f64::consts::PI;
        (a.clone(), a.clone(), a).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn rotation_is_orthonormal(e in angles()) {
            let r = Mat3::from_euler_xyz(e);
            let p = r.transpose() * r;
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((p.rows[i][j] - want).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn transform_then_inverse_restores(t in vec3(), e in angles()) {
            let m = gear_prism(0.5, 0.4, 0.2, 8);
            let pose = Pose { translation: t, rotation: e };
            let xf = pose.to_transform();
            let back = m.apply(&xf).apply(&xf.inverse());
            for (a, b) in back.vertices().iter().zip(m.vertices()) {
                prop_assert!((*a - *b).norm() < 1e-9);
            }
        }

        #[test]
        fn aabb_shifts_exactly_under_translation(
            t in (-8.0..8.0f64, -8.0..8.0f64, -8.0..8.0f64),
        ) {
            let t = Vec3::new(t.0, t.1, t.2);
            let m = cuboid(Vec3::new(0.5, 1.25, 2.0));
            let moved = aabb(&transform(&m, &Pose::from_translation(t))).unwrap();
            let expected = aabb(&m).unwrap().translated(t);
            prop_assert_eq!(moved, expected);
        }

        #[test]
        fn normals_are_unit(e in angles()) {
            let m = cylinder(0.3, 0.1, 16).apply(&Pose { translation: Vec3::zero(), rotation: e }.to_transform());
            let rebuilt = TriangleMesh::new(m.vertices().to_vec(), m.triangles().to_vec(), None).unwrap();
            for n in rebuilt.normals() {
                prop_assert!((n.norm() - 1.0).abs() < 1e-6);
            }
        }
    }
}
