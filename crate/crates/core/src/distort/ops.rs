//! Noise, quantization and texture degradations.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::raster::resize_box;

/// Scale the geometry-noise σ is multiplied by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseUnits {
    /// σ is a fraction of each axis' bounding-box extent.
    #[default]
    AxisExtent,
    /// σ is in model units.
    Absolute,
}

/// Adds independent `N(0, (σ·s_d)²)` noise to every coordinate, `s_d` set by
/// `units`. Connectivity, UVs and texture are untouched.
pub fn apply_geometry_noise(mesh: &Mesh, sigma: f64, seed: u64, units: NoiseUnits) -> Result<Mesh> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    if sigma == 0.0 {
        return Ok(mesh.clone());
    }
    let scale = match units {
        NoiseUnits::Absolute => [1.0; 3],
        NoiseUnits::AxisExtent => match mesh.bounds() {
            Some((lo, hi)) => [0, 1, 2].map(|d| hi[d] - lo[d]),
            None => return Ok(mesh.clone()),
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = mesh.clone();
    for v in out.vertices.iter_mut() {
        for d in 0..3 {
            let z: f64 = normal.sample(&mut rng);
            v[d] += z * sigma * scale[d];
        }
    }
    Ok(out)
}

/// Per-channel additive `N(0, σ²)` noise, rounded and clamped.
pub fn apply_color_noise(texture: &RgbImage, sigma: f64, seed: u64) -> Result<RgbImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    if sigma == 0.0 {
        return Ok(texture.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut out = texture.clone();
    for p in out.pixels_mut() {
        for c in 0..3 {
            let v = p[c] as f64 + normal.sample(&mut rng);
            p[c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

/// Snaps `x` to `lo + k·ext/2^bits`, `k ∈ 0..=2^bits`.
#[inline]
fn snap(x: f64, lo: f64, step: f64, levels: f64) -> f64 {
    let k = ((x - lo) / step).round().clamp(0.0, levels);
    lo + k * step
}

/// The extent `e` with `(lo + e) - lo == e` reached from `ext`, so that a
/// snapped axis reproduces its own bounding interval.
fn stable_extent(lo: f64, ext: f64) -> f64 {
    let mut e = ext;
    for _ in 0..8 {
        let next = (lo + e) - lo;
        if next == e {
            break;
        }
        e = next;
    }
    e
}

/// Uniform quantization of positions with `2^qp` steps per axis over the
/// per-axis bounding interval. Both interval ends are grid points, so the
/// worst-case error is `extent / 2^(qp+1)` and a second pass is a no-op.
pub fn quantize_positions(mesh: &Mesh, qp: u32) -> Result<Mesh> {
    if !(1..=52).contains(&qp) {
        return Err(Error::InvalidArgument(format!("position bits {qp} outside 1..=52")));
    }
    let Some((lo, hi)) = mesh.bounds() else {
        return Ok(mesh.clone());
    };
    let levels = (1u64 << qp) as f64;
    let steps: [Option<f64>; 3] = [0, 1, 2].map(|d| {
        let ext = hi[d] - lo[d];
        (ext > 0.0).then(|| stable_extent(lo[d], ext) / levels)
    });
    let mut out = mesh.clone();
    for v in out.vertices.iter_mut() {
        for d in 0..3 {
            if let Some(step) = steps[d] {
                v[d] = snap(v[d], lo[d], step, levels);
            }
        }
    }
    Ok(out)
}

/// Uniform quantization of texture coordinates to multiples of `2^-qt`.
/// Coordinates outside `[0, 1]` (wrapping UVs) stay on the same lattice.
pub fn quantize_uvs(mesh: &Mesh, qt: u32) -> Result<Mesh> {
    if !(1..=52).contains(&qt) {
        return Err(Error::InvalidArgument(format!("uv bits {qt} outside 1..=52")));
    }
    let levels = (1u64 << qt) as f64;
    let mut out = mesh.clone();
    for t in out.uvs.iter_mut() {
        *t = t.map(|c| (c * levels).round() / levels);
    }
    Ok(out)
}

/// Box-filter reduction by an integer factor per side.
pub fn downsample_texture(texture: &RgbImage, rate: u32) -> Result<RgbImage> {
    let (w, h) = texture.dimensions();
    if rate == 0 || w % rate != 0 || h % rate != 0 {
        return Err(Error::InvalidArgument(format!(
            "texture {w}x{h} is not divisible by rate {rate}"
        )));
    }
    Ok(resize_box(texture, w / rate, h / rate))
}

/// Baseline JPEG encode at `quality` then decode.
pub fn compress_texture(texture: &RgbImage, quality: u8) -> Result<RgbImage> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidArgument(format!("jpeg quality {quality} outside 1..=100")));
    }
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality).encode_image(texture)?;
    let decoded = image::load(Cursor::new(&buf), image::ImageFormat::Jpeg)?.to_rgb8();
    debug_assert_eq!(decoded.dimensions(), texture.dimensions());
    Ok(decoded)
}
