//! Indexed triangle meshes with per-corner texture coordinates.

mod color;
mod dihedral;
mod obj;

use std::collections::HashMap;

use image::RgbImage;
use serde::Serialize;

use crate::error::{Error, Result};

pub use color::{colorfulness, colorfulness_of_lab, srgb_to_lab};
pub use dihedral::{geometry_information, mean_scaled_dihedral, scaled_dihedral_angles, EdgeAngleSet};
pub use obj::{load_mesh, save_mesh, LoadReport};

/// One triangle: three position indices and, when the source carried
/// texture coordinates, three UV indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub v: [u32; 3],
    pub uv: Option<[u32; 3]>,
}

impl Face {
    pub fn new(v: [u32; 3], uv: Option<[u32; 3]>) -> Self {
        Face { v, uv }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub uvs: Vec<[f64; 2]>,
    pub faces: Vec<Face>,
    pub texture: Option<RgbImage>,
}

/// Geometry-information and colorfulness measures of a reference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Characterization {
    pub gi: f64,
    pub cf: f64,
}

/// Incidence of one undirected edge, in first-seen order of face traversal.
#[derive(Debug, Clone)]
pub struct EdgeIncidence {
    pub a: u32,
    pub b: u32,
    pub faces: Vec<u32>,
}

impl Mesh {
    /// Builds a mesh, checking that every index is in range.
    pub fn new(
        vertices: Vec<[f64; 3]>,
        uvs: Vec<[f64; 2]>,
        faces: Vec<Face>,
        texture: Option<RgbImage>,
    ) -> Result<Self> {
        let mesh = Mesh {
            vertices,
            uvs,
            faces,
            texture,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let nt = self.uvs.len();
        for (i, f) in self.faces.iter().enumerate() {
            if let Some(&bad) = f.v.iter().find(|&&v| v as usize >= nv) {
                return Err(Error::InvalidArgument(format!(
                    "face {i} references vertex {bad} of {nv}"
                )));
            }
            if let Some(uv) = f.uv {
                if let Some(&bad) = uv.iter().find(|&&t| t as usize >= nt) {
                    return Err(Error::InvalidArgument(format!(
                        "face {i} references uv {bad} of {nt}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty() || self.vertices.is_empty()
    }

    /// Axis-aligned bounds `(min, max)` over the vertices referenced by faces.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        bounds_of(self.vertices.iter())
    }

    pub fn face_positions(&self, face: &Face) -> [[f64; 3]; 3] {
        face.v.map(|i| self.vertices[i as usize])
    }

    /// Groups faces by undirected edge. Edge order follows face traversal,
    /// so it does not depend on vertex numbering.
    pub fn edge_incidence(&self) -> Vec<EdgeIncidence> {
        edge_incidence_of(self.faces.iter().enumerate().map(|(i, f)| (i as u32, f.v)))
    }

    /// Counts edges not shared by exactly two faces, and interior edges whose
    /// two faces traverse them in the same direction.
    pub fn manifold_summary(&self) -> ManifoldSummary {
        let mut summary = ManifoldSummary::default();
        for edge in self.edge_incidence() {
            match edge.faces.len() {
                1 => summary.boundary_edges += 1,
                2 => {
                    let dir = |f: u32| directed(&self.faces[f as usize].v, edge.a, edge.b);
                    if dir(edge.faces[0]) == dir(edge.faces[1]) {
                        summary.inconsistent_winding_edges += 1;
                    }
                }
                _ => summary.non_manifold_edges += 1,
            }
        }
        summary
    }

    pub fn characterize(&self) -> Result<Characterization> {
        let gi = geometry_information(self)?;
        let texture = self
            .texture
            .as_ref()
            .ok_or(Error::Empty("mesh has no texture"))?;
        let cf = colorfulness(texture)?;
        Ok(Characterization { gi, cf })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ManifoldSummary {
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub inconsistent_winding_edges: usize,
}

/// true if the triangle walks a -> b, false if b -> a.
fn directed(tri: &[u32; 3], a: u32, b: u32) -> bool {
    (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
}

pub(crate) fn edge_incidence_of(
    faces: impl Iterator<Item = (u32, [u32; 3])>,
) -> Vec<EdgeIncidence> {
    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut edges: Vec<EdgeIncidence> = Vec::new();
    for (fi, tri) in faces {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            let slot = *index.entry(key).or_insert_with(|| {
                edges.push(EdgeIncidence {
                    a: key.0,
                    b: key.1,
                    faces: Vec::with_capacity(2),
                });
                edges.len() - 1
            });
            edges[slot].faces.push(fi);
        }
    }
    edges
}

pub(crate) fn bounds_of<'a>(
    points: impl Iterator<Item = &'a [f64; 3]>,
) -> Option<([f64; 3], [f64; 3])> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for p in points {
        any = true;
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    any.then_some((lo, hi))
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Unnormalized normal of a triangle from its counter-clockwise winding, or
/// `None` when the triangle has (numerically) zero area.
pub(crate) fn face_normal(p: [[f64; 3]; 3]) -> Option<[f64; 3]> {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let n = cross(e1, e2);
    let len = norm(n);
    let scale = norm(e1) * norm(e2);
    if len <= 1e-12 * scale || len == 0.0 || !len.is_finite() {
        None
    } else {
        Some(n)
    }
}
