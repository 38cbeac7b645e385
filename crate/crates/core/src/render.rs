//! Six-view orthographic software rasterizer.
//!
//! The model is centered on its bounding box and scaled uniformly so the
//! largest extent spans `fit` of the canvas. Each view looks at the origin
//! from one axis direction; shading is unlit albedo with nearest-neighbour
//! texture lookup, triangles are double-sided, and visibility is resolved
//! with a depth buffer.

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::raster::{crop_background, square_resize};

const UNTEXTURED_ALBEDO: [u8; 3] = [128, 128, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::PosX,
        Axis::NegX,
        Axis::PosY,
        Axis::NegY,
        Axis::PosZ,
        Axis::NegZ,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Axis::PosX => "px",
            Axis::NegX => "nx",
            Axis::PosY => "py",
            Axis::NegY => "ny",
            Axis::PosZ => "pz",
            Axis::NegZ => "nz",
        }
    }

    /// World point to (image right, image up, depth towards the camera).
    #[inline]
    fn project(self, p: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = p;
        match self {
            Axis::PosZ => [x, y, z],
            Axis::NegZ => [-x, y, -z],
            Axis::PosX => [-z, y, x],
            Axis::NegX => [z, y, -x],
            Axis::PosY => [x, -z, y],
            Axis::NegY => [x, z, -y],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Square canvas side in pixels, before cropping.
    pub canvas: u32,
    pub background: [u8; 3],
    /// Optional final square size (letterboxed on the background, box filtered).
    pub downsample_to: Option<u32>,
    /// Fraction of the canvas the largest bounding-box extent occupies.
    pub fit: f64,
    /// Per-channel difference above which a pixel counts as content.
    pub crop_tolerance: u8,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            canvas: 1080,
            background: [255, 255, 255],
            downsample_to: None,
            fit: 0.95,
            crop_tolerance: 2,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.canvas < 64 {
            return Err(Error::InvalidArgument(format!(
                "canvas {} is below the 64 pixel minimum",
                self.canvas
            )));
        }
        if let Some(d) = self.downsample_to {
            if d == 0 || d > self.canvas {
                return Err(Error::InvalidArgument(format!(
                    "downsample_to {d} must be in 1..={}",
                    self.canvas
                )));
            }
        }
        if !(self.fit > 0.0 && self.fit <= 1.0) {
            return Err(Error::InvalidArgument(format!("fit {} outside (0, 1]", self.fit)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub axis: Axis,
    pub image: RgbImage,
    /// Nothing but background was rasterized; the image is uncropped.
    pub empty_content: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub views: Vec<View>,
    pub config: RenderConfig,
    /// Rendered with a flat mid-gray albedo because no texture was present.
    pub untextured: bool,
}

impl ProjectionSet {
    pub fn images(&self) -> impl Iterator<Item = &RgbImage> {
        self.views.iter().map(|v| &v.image)
    }

    pub fn view(&self, axis: Axis) -> &View {
        self.views.iter().find(|v| v.axis == axis).expect("all six axes present")
    }

    /// Builds a set from six already-rendered images, in [`Axis::ALL`] order.
    pub fn from_images(images: Vec<RgbImage>, config: RenderConfig) -> Result<Self> {
        if images.len() != 6 {
            return Err(Error::InvalidArgument(format!(
                "a projection set has 6 views, got {}",
                images.len()
            )));
        }
        let views = Axis::ALL
            .iter()
            .zip(images)
            .map(|(&axis, image)| View {
                axis,
                image,
                empty_content: false,
            })
            .collect();
        Ok(ProjectionSet {
            views,
            config,
            untextured: false,
        })
    }
}

/// Renders, crops and optionally downsamples the six axis views.
pub fn render_cube_projections(mesh: &Mesh, config: &RenderConfig) -> Result<ProjectionSet> {
    config.validate()?;
    if mesh.is_empty() {
        return Err(Error::Empty("mesh has no faces"));
    }
    let (lo, hi) = mesh.bounds().ok_or(Error::Empty("mesh has no vertices"))?;
    let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::Degenerate("mesh bounding box has zero extent".into()));
    }
    let center = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]));
    let scale = config.fit * config.canvas as f64 / extent;
    let untextured = mesh.texture.is_none();

    let views = Axis::ALL
        .par_iter()
        .map(|&axis| {
            let raw = rasterize(mesh, axis, center, scale, config);
            let cropped = crop_background(&raw, config.background, config.crop_tolerance);
            let image = match config.downsample_to {
                Some(side) => square_resize(&cropped.image, side, config.background),
                None => cropped.image,
            };
            View {
                axis,
                image,
                empty_content: cropped.empty_content,
            }
        })
        .collect();

    Ok(ProjectionSet {
        views,
        config: config.clone(),
        untextured,
    })
}

/// Uncropped render of one view.
pub fn rasterize(
    mesh: &Mesh,
    axis: Axis,
    center: [f64; 3],
    scale: f64,
    config: &RenderConfig,
) -> RgbImage {
    let side = config.canvas as usize;
    let half = config.canvas as f64 * 0.5;
    let mut color = RgbImage::from_pixel(config.canvas, config.canvas, Rgb(config.background));
    let mut depth = vec![f64::NEG_INFINITY; side * side];

    // screen-space vertices: (px, py, depth)
    let screen: Vec<[f64; 3]> = mesh
        .vertices
        .iter()
        .map(|v| {
            let [u, w, d] = axis.project([v[0] - center[0], v[1] - center[1], v[2] - center[2]]);
            [half + u * scale, half - w * scale, d]
        })
        .collect();

    let texture = mesh.texture.as_ref();
    for face in &mesh.faces {
        let [a, mut b, mut c] = face.v.map(|i| screen[i as usize]);
        let mut uvs = match (face.uv, texture) {
            (Some(t), Some(_)) => Some(t.map(|i| mesh.uvs[i as usize])),
            _ => None,
        };
        let mut area = edge(a, b, c);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        // double-sided: bring back faces to the same orientation
        if area < 0.0 {
            std::mem::swap(&mut b, &mut c);
            if let Some(t) = uvs.as_mut() {
                t.swap(1, 2);
            }
            area = -area;
        }
        let owns = [owns_edge(b, c), owns_edge(c, a), owns_edge(a, b)];

        let min_x = a[0].min(b[0]).min(c[0]).floor().max(0.0) as usize;
        let max_x = (a[0].max(b[0]).max(c[0]).ceil() as isize).min(side as isize - 1);
        let min_y = a[1].min(b[1]).min(c[1]).floor().max(0.0) as usize;
        let max_y = (a[1].max(b[1]).max(c[1]).ceil() as isize).min(side as isize - 1);
        if max_x < 0 || max_y < 0 {
            continue;
        }
        let inv_area = 1.0 / area;

        for py in min_y..=max_y as usize {
            let sy = py as f64 + 0.5;
            for px in min_x..=max_x as usize {
                let p = [px as f64 + 0.5, sy, 0.0];
                let e = [edge(b, c, p), edge(c, a, p), edge(a, b, p)];
                let inside = (0..3).all(|k| e[k] > 0.0 || (e[k] == 0.0 && owns[k]));
                if !inside {
                    continue;
                }
                let [w0, w1, w2] = e.map(|v| v * inv_area);
                let z = w0 * a[2] + w1 * b[2] + w2 * c[2];
                let slot = py * side + px;
                if z <= depth[slot] {
                    continue;
                }
                depth[slot] = z;
                let rgb = match (uvs, texture) {
                    (Some(t), Some(tex)) => {
                        let u = w0 * t[0][0] + w1 * t[1][0] + w2 * t[2][0];
                        let v = w0 * t[0][1] + w1 * t[1][1] + w2 * t[2][1];
                        sample_nearest(tex, u, v)
                    }
                    _ => UNTEXTURED_ALBEDO,
                };
                color.put_pixel(px as u32, py as u32, Rgb(rgb));
            }
        }
    }
    color
}

/// Tie-break for pixel centers exactly on an edge: of the two triangles
/// sharing an edge, exactly one walks it in the owning direction.
#[inline]
fn owns_edge(from: [f64; 3], to: [f64; 3]) -> bool {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    dy > 0.0 || (dy == 0.0 && dx > 0.0)
}

#[inline]
fn edge(a: [f64; 3], b: [f64; 3], p: [f64; 3]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Nearest texel; `v` points up, as in OBJ.
#[inline]
pub fn sample_nearest(tex: &RgbImage, u: f64, v: f64) -> [u8; 3] {
    let (w, h) = tex.dimensions();
    let x = (u * w as f64).floor().clamp(0.0, (w - 1) as f64) as u32;
    let y = ((1.0 - v) * h as f64).floor().clamp(0.0, (h - 1) as f64) as u32;
    tex.get_pixel(x, y).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::*;

    fn black_bg(canvas: u32) -> RenderConfig {
        RenderConfig {
            canvas,
            background: [0, 0, 0],
            ..RenderConfig::default()
        }
    }

    #[test]
    fn six_views() {
        let set = render_cube_projections(&unit_cube(), &RenderConfig::default()).unwrap();
        assert_eq!(set.views.len(), 6);
        assert!(set.untextured);
    }

    #[test]
    fn white_square_front_and_back() {
        let mut m = flat_square();
        m.texture = Some(RgbImage::from_pixel(4, 4, Rgb([255, 255, 255])));
        let cfg = black_bg(100);
        let set = render_cube_projections(&m, &cfg).unwrap();
        for axis in [Axis::PosZ, Axis::NegZ] {
            let v = set.view(axis);
            assert!(!v.empty_content);
            // 0.95 * 100 = 95 pixels, centered
            assert_eq!(v.image.dimensions(), (95, 95));
            assert!(v.image.pixels().all(|p| p.0 == [255, 255, 255]));
        }
        // edge-on views see nothing
        assert!(set.view(Axis::PosX).empty_content);
    }

    #[test]
    fn empty_mesh_errors() {
        let m = Mesh::new(vec![], vec![], vec![], None).unwrap();
        assert!(render_cube_projections(&m, &RenderConfig::default()).is_err());
    }

    #[test]
    fn config_bounds() {
        let mut cfg = RenderConfig {
            canvas: 32,
            ..RenderConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.canvas = 128;
        cfg.downsample_to = Some(256);
        assert!(cfg.validate().is_err());
        cfg.downsample_to = Some(64);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn downsample_gives_square() {
        let cfg = RenderConfig {
            canvas: 200,
            downsample_to: Some(64),
            ..RenderConfig::default()
        };
        let set = render_cube_projections(&unit_cube(), &cfg).unwrap();
        assert!(set.images().all(|i| i.dimensions() == (64, 64)));
    }

    #[test]
    fn render_is_deterministic() {
        let cfg = black_bg(128);
        let a = render_cube_projections(&tetrahedron(), &cfg).unwrap();
        let b = render_cube_projections(&tetrahedron(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn texel_lookup_flips_v() {
        let mut tex = RgbImage::new(2, 2);
        tex.put_pixel(0, 0, Rgb([1, 0, 0]));
        tex.put_pixel(0, 1, Rgb([2, 0, 0]));
        assert_eq!(sample_nearest(&tex, 0.1, 0.9), [1, 0, 0]);
        assert_eq!(sample_nearest(&tex, 0.1, 0.1), [2, 0, 0]);
        assert_eq!(sample_nearest(&tex, -3.0, 7.0), [1, 0, 0]);
    }
}
