//! Patch-level natural scene statistics at two scales.

use super::fit::{fit_aggd, fit_ggd};
use super::mscn::{mscn_transform, MscnField};
use crate::error::{Error, Result};
use crate::raster::Plane;

pub const PATCH: usize = 96;
pub const FEATURES_PER_SCALE: usize = 18;
pub const FEATURE_DIM: usize = 2 * FEATURES_PER_SCALE;
/// Patches sharper than this fraction of the sharpest patch are kept when
/// selection is on.
pub const SHARPNESS_THRESHOLD: f64 = 0.75;

/// Neighbour offsets `(dx, dy)` for the horizontal, vertical and two
/// diagonal pairwise products.
const SHIFTS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

/// Per scale: GGD `(α, σ²)` of the MSCN coefficients, then for each of the
/// four directional products the AGGD `(η, α, σ_l², σ_r²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NssFeatureVector(pub [f64; FEATURE_DIM]);

impl NssFeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Features of one scale (0 = full, 1 = half).
    pub fn scale(&self, s: usize) -> &[f64] {
        &self.0[s * FEATURES_PER_SCALE..(s + 1) * FEATURES_PER_SCALE]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchSelection {
    /// Every patch whose statistics can be fitted.
    All,
    /// Only patches whose mean local deviation exceeds the threshold
    /// fraction of the sharpest patch.
    Sharpest,
}

fn scale_features(field: &Plane, x0: usize, y0: usize, size: usize, out: &mut [f64]) -> Result<()> {
    let block = field.sub_plane(x0, y0, size, size);
    let ggd = fit_ggd(&block.data)?;
    out[0] = ggd.alpha;
    out[1] = ggd.sigma * ggd.sigma;
    for (k, &(dx, dy)) in SHIFTS.iter().enumerate() {
        let mut products = Vec::with_capacity(size * size);
        for y in 0..size as isize {
            let yy = y + dy;
            if yy < 0 || yy >= size as isize {
                continue;
            }
            for x in 0..size as isize {
                let xx = x + dx;
                if xx < 0 || xx >= size as isize {
                    continue;
                }
                products.push(block.at(x as usize, y as usize) * block.at(xx as usize, yy as usize));
            }
        }
        let a = fit_aggd(&products)?;
        let o = &mut out[2 + 4 * k..6 + 4 * k];
        o.copy_from_slice(&[a.eta, a.alpha, a.sigma_l * a.sigma_l, a.sigma_r * a.sigma_r]);
    }
    Ok(())
}

/// 2×2 box average; odd trailing rows/columns are dropped.
pub(crate) fn half_scale(p: &Plane) -> Plane {
    let (w, h) = (p.width / 2, p.height / 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let s = p.at(2 * x, 2 * y)
                + p.at(2 * x + 1, 2 * y)
                + p.at(2 * x, 2 * y + 1)
                + p.at(2 * x + 1, 2 * y + 1);
            data.push(0.25 * s);
        }
    }
    Plane::new(w, h, data)
}

struct Scales {
    full: MscnField,
    half: MscnField,
    cols: usize,
    rows: usize,
}

fn prepare(gray: &Plane) -> Result<Scales> {
    if gray.width < PATCH || gray.height < PATCH {
        return Err(Error::TooSmall {
            width: gray.width,
            height: gray.height,
            min: PATCH,
        });
    }
    let cols = gray.width / PATCH;
    let rows = gray.height / PATCH;
    let cropped = gray.sub_plane(0, 0, cols * PATCH, rows * PATCH);
    let full = mscn_transform(&cropped)?;
    let half = mscn_transform(&half_scale(&cropped))?;
    Ok(Scales {
        full,
        half,
        cols,
        rows,
    })
}

/// Feature vectors of the image's 96×96 patches, in row-major patch order.
/// Patches whose statistics are degenerate (flat regions) are skipped.
pub fn patch_features(gray: &Plane, selection: PatchSelection) -> Result<Vec<NssFeatureVector>> {
    let s = prepare(gray)?;
    let mut sharpness = Vec::with_capacity(s.rows * s.cols);
    for r in 0..s.rows {
        for c in 0..s.cols {
            let block = s.full.sigma.sub_plane(c * PATCH, r * PATCH, PATCH, PATCH);
            sharpness.push(block.data.iter().sum::<f64>() / block.data.len() as f64);
        }
    }
    let max_sharp = sharpness.iter().copied().fold(0.0, f64::max);

    let mut out = Vec::new();
    for r in 0..s.rows {
        for c in 0..s.cols {
            if selection == PatchSelection::Sharpest
                && !(sharpness[r * s.cols + c] > SHARPNESS_THRESHOLD * max_sharp)
            {
                continue;
            }
            let mut v = [0.0; FEATURE_DIM];
            let ok = scale_features(
                &s.full.coefficients,
                c * PATCH,
                r * PATCH,
                PATCH,
                &mut v[..FEATURES_PER_SCALE],
            )
            .and_then(|_| {
                scale_features(
                    &s.half.coefficients,
                    c * PATCH / 2,
                    r * PATCH / 2,
                    PATCH / 2,
                    &mut v[FEATURES_PER_SCALE..],
                )
            });
            match ok {
                Ok(()) => out.push(NssFeatureVector(v)),
                Err(Error::Degenerate(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Mean feature vector over the sharpest patches.
pub fn niqe_features(gray: &Plane) -> Result<NssFeatureVector> {
    let patches = patch_features(gray, PatchSelection::Sharpest)?;
    if patches.is_empty() {
        return Err(Error::Degenerate("no patch with usable statistics".into()));
    }
    let mut mean = [0.0; FEATURE_DIM];
    for p in &patches {
        for (m, v) in mean.iter_mut().zip(p.0) {
            *m += v;
        }
    }
    let n = patches.len() as f64;
    Ok(NssFeatureVector(mean.map(|m| m / n)))
}
