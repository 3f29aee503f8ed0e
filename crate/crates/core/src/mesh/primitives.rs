//! Procedural solids used for demo assets and tests. All are centred on the
//! origin with outward counter-clockwise winding.

use crate::geometry::Vec3;
use crate::scalar::Real;

use super::TriangleMesh;

struct Builder<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
}

impl<T: Real> Builder<T> {
    fn new() -> Self {
        Self { vertices: Vec::new(), triangles: Vec::new() }
    }

    fn vertex(&mut self, v: Vec3<T>) -> u32 {
        self.vertices.push(v);
        (self.vertices.len() - 1) as u32
    }

    fn quad(&mut self, a: u32, b: u32, c: u32, d: u32) {
        self.triangles.push([a, b, c]);
        self.triangles.push([a, c, d]);
    }

    fn finish(self) -> TriangleMesh<T> {
        TriangleMesh::new(self.vertices, self.triangles, None).expect("primitive meshes are valid")
    }

    /// Extrudes a star-shaped (about the origin) CCW polygon between z = ±h/2.
    fn extrude_star(mut self, profile: &[(T, T)], height: T) -> Self {
        let h = height / T::of(2.0);
        let n = profile.len() as u32;
        let bottom: Vec<u32> = profile.iter().map(|&(x, y)| self.vertex(Vec3::new(x, y, -h))).collect();
        let top: Vec<u32> = profile.iter().map(|&(x, y)| self.vertex(Vec3::new(x, y, h))).collect();
        let cb = self.vertex(Vec3::new(T::zero(), T::zero(), -h));
        let ct = self.vertex(Vec3::new(T::zero(), T::zero(), h));
        for i in 0..n as usize {
            let j = (i + 1) % n as usize;
            self.quad(bottom[i], bottom[j], top[j], top[i]);
            self.triangles.push([ct, top[i], top[j]]);
            self.triangles.push([cb, bottom[j], bottom[i]]);
        }
        self
    }
}

/// Axis-aligned box with the given edge lengths.
pub fn cuboid<T: Real>(size: Vec3<T>) -> TriangleMesh<T> {
    let h = size * T::of(0.5);
    let mut b = Builder::new();
    let v: Vec<u32> = (0..8)
        .map(|i| {
            let pick = |bit: u32, e: T| if i & bit != 0 { e } else { -e };
            b.vertex(Vec3::new(pick(1, h.x), pick(2, h.y), pick(4, h.z)))
        })
        .collect();
    // Faces listed CCW seen from outside.
    b.quad(v[0], v[2], v[3], v[1]); // -z
    b.quad(v[4], v[5], v[7], v[6]); // +z
    b.quad(v[0], v[1], v[5], v[4]); // -y
    b.quad(v[2], v[6], v[7], v[3]); // +y
    b.quad(v[0], v[4], v[6], v[2]); // -x
    b.quad(v[1], v[3], v[7], v[5]); // +x
    b.finish()
}

pub fn cylinder<T: Real>(radius: T, height: T, segments: usize) -> TriangleMesh<T> {
    let profile = circle(radius, segments.max(3), T::zero());
    Builder::new().extrude_star(&profile, height).finish()
}

/// Spur-gear-like prism: `teeth` trapezoidal teeth between `root_radius` and `tip_radius`.
pub fn gear_prism<T: Real>(tip_radius: T, root_radius: T, thickness: T, teeth: usize) -> TriangleMesh<T> {
    let teeth = teeth.max(3);
    let step = T::TAU() / T::of(teeth as f64);
    let frac = |f: f64| step * T::of(f);
    let at = |r: T, a: T| (r * a.cos(), r * a.sin());
    let mut profile = Vec::with_capacity(4 * teeth);
    for k in 0..teeth {
        let a0 = step * T::of(k as f64);
        profile.push(at(root_radius, a0));
        profile.push(at(tip_radius, a0 + frac(0.15)));
        profile.push(at(tip_radius, a0 + frac(0.4)));
        profile.push(at(root_radius, a0 + frac(0.55)));
    }
    Builder::new().extrude_star(&profile, thickness).finish()
}

/// Annulus extruded along z (bearing race, holder ring).
pub fn ring<T: Real>(outer: T, inner: T, height: T, segments: usize) -> TriangleMesh<T> {
    let segments = segments.max(3);
    let h = height / T::of(2.0);
    let mut b = Builder::new();
    let outer_pts = circle(outer, segments, T::zero());
    let inner_pts = circle(inner, segments, T::zero());
    let mut ring_at =
        |pts: &[(T, T)], z: T| -> Vec<u32> { pts.iter().map(|&(x, y)| b.vertex(Vec3::new(x, y, z))).collect() };
    let ob = ring_at(&outer_pts, -h);
    let ot = ring_at(&outer_pts, h);
    let ib = ring_at(&inner_pts, -h);
    let it = ring_at(&inner_pts, h);
    for i in 0..segments {
        let j = (i + 1) % segments;
        b.quad(ob[i], ob[j], ot[j], ot[i]);
        b.quad(ib[j], ib[i], it[i], it[j]);
        b.quad(ot[i], ot[j], it[j], it[i]);
        b.quad(ob[j], ob[i], ib[i], ib[j]);
    }
    b.finish()
}

/// Flat rectangle in the z = 0 plane facing +z.
pub fn quad_xy<T: Real>(width: T, height: T) -> TriangleMesh<T> {
    let (w, h) = (width / T::of(2.0), height / T::of(2.0));
    let mut b = Builder::new();
    let a = b.vertex(Vec3::new(-w, -h, T::zero()));
    let c = b.vertex(Vec3::new(w, -h, T::zero()));
    let d = b.vertex(Vec3::new(w, h, T::zero()));
    let e = b.vertex(Vec3::new(-w, h, T::zero()));
    b.quad(a, c, d, e);
    b.finish()
}

fn circle<T: Real>(r: T, n: usize, phase: T) -> Vec<(T, T)> {
    (0..n)
        .map(|i| {
            let a = phase + T::TAU() * T::of(i as f64) / T::of(n as f64);
            (r * a.cos(), r * a.sin())
        })
        .collect()
}
