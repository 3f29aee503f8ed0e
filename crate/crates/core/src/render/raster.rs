//! Triangle setup, near-plane clipping and pixel coverage.

use crate::Vector3;

/// Camera-space vertex carrying barycentrics relative to its source triangle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ClipVertex {
    pub cam: Vector3,
    pub bary: Vector3,
}

impl ClipVertex {
    fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        Self { cam: a.cam + (b.cam - a.cam) * t, bary: a.bary + (b.bary - a.bary) * t }
    }

    fn depth(&self) -> f64 {
        -self.cam.z
    }
}

/// Clips a triangle against the plane `depth = near`. Returns up to four vertices.
pub(crate) fn clip_near(tri: [ClipVertex; 3], near: f64) -> ([ClipVertex; 4], usize) {
    let mut out = [tri[0]; 4];
    let mut n = 0;
    for i in 0..3 {
        let a = &tri[i];
        let b = &tri[(i + 1) % 3];
        let (da, db) = (a.depth() - near, b.depth() - near);
        if da >= 0.0 {
            out[n] = *a;
            n += 1;
        }
        if (da >= 0.0) != (db >= 0.0) {
            out[n] = ClipVertex::lerp(a, b, da / (da - db));
            n += 1;
        }
    }
    (out, n)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ScreenVertex {
    pub x: f64,
    pub y: f64,
    pub inv_depth: f64,
    /// Source barycentrics divided by depth, for perspective-correct interpolation.
    pub bary_over_depth: Vector3,
}

fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Shared-edge tie break: with positive orientation, exactly one of the two
/// triangles sharing an edge owns the samples lying on it.
fn owns_edge(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    dy > 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Calls `emit(x, y, depth, barycentrics)` for every pixel whose centre lies
/// inside the triangle. Degenerate or non-finite triangles emit nothing.
pub(crate) fn cover_triangle(
    mut v: [ScreenVertex; 3],
    width: u32,
    height: u32,
    mut emit: impl FnMut(u32, u32, f64, Vector3),
) {
    let mut area = edge(v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y);
    if !area.is_finite() || area == 0.0 {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
        area = -area;
    }
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let x0 = (min_x - 0.5).ceil().max(0.0);
    let x1 = (max_x - 0.5).floor().min(width as f64 - 1.0);
    let y0 = (min_y - 0.5).ceil().max(0.0);
    let y1 = (max_y - 0.5).floor().min(height as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }

    let owns = [owns_edge(&v[1], &v[2]), owns_edge(&v[2], &v[0]), owns_edge(&v[0], &v[1])];
    let inside = |w: f64, own: bool| w > 0.0 || (w == 0.0 && own);
    for py in y0 as u32..=y1 as u32 {
        let cy = py as f64 + 0.5;
        for px in x0 as u32..=x1 as u32 {
            let cx = px as f64 + 0.5;
            let w0 = edge(v[1].x, v[1].y, v[2].x, v[2].y, cx, cy);
            let w1 = edge(v[2].x, v[2].y, v[0].x, v[0].y, cx, cy);
            let w2 = edge(v[0].x, v[0].y, v[1].x, v[1].y, cx, cy);
            if !(inside(w0, owns[0]) && inside(w1, owns[1]) && inside(w2, owns[2])) {
                continue;
            }
            let (l0, l1, l2) = (w0 / area, w1 / area, w2 / area);
            let inv = l0 * v[0].inv_depth + l1 * v[1].inv_depth + l2 * v[2].inv_depth;
            if !(inv > 0.0) {
                continue;
            }
            let depth = 1.0 / inv;
            let bary = (v[0].bary_over_depth * l0 + v[1].bary_over_depth * l1 + v[2].bary_over_depth * l2) * depth;
            emit(px, py, depth, bary);
        }
    }
}
