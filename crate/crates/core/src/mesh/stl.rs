//! STL import and export (binary and ASCII).
//!
//! Binary layout: 80-byte header, little-endian `u32` triangle count, then per
//! triangle twelve little-endian `f32` (normal, three vertices) and a `u16`
//! attribute word. Headers and attribute words are ignored on read.

use std::fmt::Write as _;

use crate::geometry::Vec3;
use crate::scalar::Real;

use super::{MeshError, TriangleMesh};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

/// Parses an ASCII or binary STL payload, multiplying every coordinate by `scale`.
pub fn parse_stl<T: Real>(bytes: &[u8], scale: T) -> Result<TriangleMesh<T>, MeshError> {
    if !(scale > T::zero() && scale.is_finite()) {
        return Err(MeshError::InvalidScale(scale.to_f64_lossy()));
    }
    if looks_ascii(bytes) {
        // Checked by looks_ascii.
        let text = std::str::from_utf8(bytes).expect("ascii payload");
        parse_ascii(text, scale)
    } else {
        parse_binary(bytes, scale)
    }
}

fn declared_count(bytes: &[u8]) -> Option<usize> {
    let raw = bytes.get(HEADER_LEN..HEADER_LEN + 4)?;
    Some(u32::from_le_bytes(raw.try_into().ok()?) as usize)
}

fn looks_ascii(bytes: &[u8]) -> bool {
    // Binary headers may also begin with "solid"; an exact size match wins.
    if let Some(n) = declared_count(bytes) {
        if n > 0 && HEADER_LEN + 4 + n * RECORD_LEN == bytes.len() {
            return false;
        }
    }
    let trimmed = bytes.trim_ascii_start();
    trimmed.starts_with(b"solid") && std::str::from_utf8(bytes).is_ok()
}

fn parse_binary<T: Real>(bytes: &[u8], scale: T) -> Result<TriangleMesh<T>, MeshError> {
    let count = declared_count(bytes).ok_or(MeshError::Truncated { expected: HEADER_LEN + 4, found: bytes.len() })?;
    if count == 0 {
        return Err(MeshError::NoTriangles);
    }
    let expected = count.checked_mul(RECORD_LEN).and_then(|n| n.checked_add(HEADER_LEN + 4)).unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(MeshError::Truncated { expected, found: bytes.len() });
    }

    let read_vec = |rec: &[u8], at: usize| -> Vec3<T> {
        let f = |k: usize| {
            let o = at + 4 * k;
            f32::from_le_bytes(rec[o..o + 4].try_into().unwrap()) as f64
        };
        Vec3::new(T::of(f(0)), T::of(f(1)), T::of(f(2)))
    };

    let mut vertices = Vec::with_capacity(count * 3);
    let mut normals = Vec::with_capacity(count);
    for rec in bytes[HEADER_LEN + 4..expected].chunks_exact(RECORD_LEN) {
        normals.push(read_vec(rec, 0));
        for k in 0..3 {
            vertices.push(read_vec(rec, 12 + 12 * k) * scale);
        }
    }
    let triangles = (0..count as u32).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
    TriangleMesh::new(vertices, triangles, Some(normals))
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect::<Vec<_>>();
        let last_line = text.lines().count().max(1);
        Self { items, pos: 0, last_line }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.peek();
        self.pos += t.is_some() as usize;
        t
    }

    fn skip_rest_of_line(&mut self, line: usize) {
        while matches!(self.peek(), Some((l, _)) if l == line) {
            self.pos += 1;
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> MeshError {
        MeshError::Ascii { line, message: message.into() }
    }

    fn expect(&mut self, keyword: &str) -> Result<usize, MeshError> {
        match self.next() {
            Some((line, t)) if t.eq_ignore_ascii_case(keyword) => Ok(line),
            Some((line, t)) => Err(self.error(line, format!("expected `{keyword}`, found `{t}`"))),
            None => Err(self.error(self.last_line, format!("expected `{keyword}`, found end of file"))),
        }
    }

    fn number(&mut self) -> Result<f64, MeshError> {
        match self.next() {
            Some((line, t)) => {
                t.parse::<f64>().map_err(|_| self.error(line, format!("expected a number, found `{t}`")))
            }
            None => Err(self.error(self.last_line, "expected a number, found end of file")),
        }
    }

    fn vec3<T: Real>(&mut self) -> Result<Vec3<T>, MeshError> {
        Ok(Vec3::new(T::of(self.number()?), T::of(self.number()?), T::of(self.number()?)))
    }
}

fn parse_ascii<T: Real>(text: &str, scale: T) -> Result<TriangleMesh<T>, MeshError> {
    let mut tok = Tokens::new(text);
    let mut vertices = Vec::new();
    let mut normals = Vec::new();

    let line = tok.expect("solid")?;
    tok.skip_rest_of_line(line);
    loop {
        match tok.next() {
            Some((_, t)) if t.eq_ignore_ascii_case("facet") => {
                tok.expect("normal")?;
                normals.push(tok.vec3::<T>()?);
                tok.expect("outer")?;
                tok.expect("loop")?;
                for _ in 0..3 {
                    tok.expect("vertex")?;
                    vertices.push(tok.vec3::<T>()? * scale);
                }
                tok.expect("endloop")?;
                tok.expect("endfacet")?;
            }
            Some((line, t)) if t.eq_ignore_ascii_case("endsolid") => {
                tok.skip_rest_of_line(line);
                // Multi-solid files: keep reading if another solid follows.
                match tok.next() {
                    None => break,
                    Some((line, t)) if t.eq_ignore_ascii_case("solid") => tok.skip_rest_of_line(line),
                    Some((line, t)) => return Err(tok.error(line, format!("unexpected `{t}` after endsolid"))),
                }
            }
            Some((line, t)) => return Err(tok.error(line, format!("expected `facet` or `endsolid`, found `{t}`"))),
            None => return Err(tok.error(tok.last_line, "missing `endsolid`")),
        }
    }

    if normals.is_empty() {
        return Err(MeshError::NoTriangles);
    }
    let triangles = (0..normals.len() as u32).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
    TriangleMesh::new(vertices, triangles, Some(normals))
}

pub fn write_stl_binary<T: Real>(mesh: &TriangleMesh<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.triangle_count());
    let mut header = [0u8; HEADER_LEN];
    let tag = b"cadsynth binary stl";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    let put = |out: &mut Vec<u8>, v: Vec3<T>| {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&(c.to_f64_lossy() as f32).to_le_bytes());
        }
    };
    for t in 0..mesh.triangle_count() {
        put(&mut out, mesh.normals()[t]);
        for v in mesh.triangle(t) {
            put(&mut out, v);
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

pub fn write_stl_ascii<T: Real>(mesh: &TriangleMesh<T>, name: &str) -> String {
    let mut s = format!("solid {name}\n");
    for t in 0..mesh.triangle_count() {
        let n = mesh.normals()[t];
        let _ = writeln!(s, "  facet normal {} {} {}", n.x, n.y, n.z);
        s.push_str("    outer loop\n");
        for v in mesh.triangle(t) {
            let _ = writeln!(s, "      vertex {} {} {}", v.x, v.y, v.z);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}
