//! NIQE (natural image quality evaluator) and the spatial naturalness
//! measure built on it.

mod features;
mod fit;
mod model;
mod mscn;

use image::RgbImage;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::raster::resize_bilinear;
use crate::render::{Axis, ProjectionSet};

pub use features::{
    niqe_features, patch_features, NssFeatureVector, PatchSelection, FEATURE_DIM, PATCH,
    SHARPNESS_THRESHOLD,
};
pub use fit::{fit_aggd, fit_ggd, ggd_moment_ratio, AggdParams, GgdParams};
pub use model::{fit_mvg, fit_pristine_model, mvg_distance, niqe_score, MvgModel, MIN_CORPUS};
pub use mscn::{mscn_transform, MscnField};

/// NIQE scaling constant used for full-body digital humans.
pub const DEFAULT_C1: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaturalnessScore {
    /// Mean NIQE over the six views.
    pub niqe: f64,
    pub q_n: f64,
    pub c1: f64,
    pub per_view: Vec<f64>,
    /// Views enlarged to the minimum patch size before scoring.
    pub upsampled: Vec<Axis>,
}

/// Anything that maps an image to a NIQE-style distance (lower is more
/// natural).
pub trait NiqeEstimator: Sync {
    fn niqe(&self, image: &RgbImage) -> Result<f64>;
    /// Identifier recorded in report provenance.
    fn id(&self) -> String;
}

impl NiqeEstimator for MvgModel {
    fn niqe(&self, image: &RgbImage) -> Result<f64> {
        niqe_score(image, self)
    }
    fn id(&self) -> String {
        MvgModel::id(self)
    }
}

/// `1 / (1 + e^(N / c1))`: one half at zero, decreasing in `N`.
pub fn naturalness_from_niqe(niqe: f64, c1: f64) -> f64 {
    1.0 / (1.0 + (niqe / c1).exp())
}

/// Enlarges an image so its shorter side reaches one NIQE patch.
fn ensure_patch_size(img: &RgbImage) -> Option<RgbImage> {
    let (w, h) = img.dimensions();
    let min_side = w.min(h) as usize;
    if min_side >= PATCH {
        return None;
    }
    let scale = PATCH as f64 / min_side as f64;
    let nw = ((w as f64 * scale).ceil() as u32).max(PATCH as u32);
    let nh = ((h as f64 * scale).ceil() as u32).max(PATCH as u32);
    Some(resize_bilinear(img, nw, nh))
}

pub fn spatial_naturalness_quality(
    projections: &ProjectionSet,
    model: &dyn NiqeEstimator,
    c1: f64,
) -> Result<NaturalnessScore> {
    let scored: Vec<(f64, bool)> = projections
        .views
        .par_iter()
        .map(|view| match ensure_patch_size(&view.image) {
            Some(big) => model.niqe(&big).map(|s| (s, true)),
            None => model.niqe(&view.image).map(|s| (s, false)),
        })
        .collect::<Result<_>>()?;
    let per_view: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let upsampled = projections
        .views
        .iter()
        .zip(&scored)
        .filter(|(_, s)| s.1)
        .map(|(v, _)| v.axis)
        .collect();
    let niqe = per_view.iter().sum::<f64>() / per_view.len() as f64;
    Ok(NaturalnessScore {
        niqe,
        q_n: naturalness_from_niqe(niqe, c1),
        c1,
        per_view,
        upsampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::RenderConfig;
    use crate::synth::natural_image;

    #[test]
    fn sigmoid_values() {
        assert_eq!(naturalness_from_niqe(0.0, 100.0), 0.5);
        let q = naturalness_from_niqe(100.0, 100.0);
        assert!((q - 1.0 / (1.0 + std::f64::consts::E)).abs() < 1e-15);
        assert!((q - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn strictly_decreasing() {
        let mut prev = naturalness_from_niqe(0.0, 100.0);
        for k in 1..200 {
            let q = naturalness_from_niqe(k as f64 * 0.7, 100.0);
            assert!(q < prev && q > 0.0);
            prev = q;
        }
    }

    #[test]
    fn six_identical_views_average_to_one() {
        let corpus: Vec<RgbImage> = (0..20).map(|i| natural_image(192, 192, 40 + i)).collect();
        let model = fit_pristine_model(&corpus).unwrap();
        let img = natural_image(200, 180, 999);
        let single = niqe_score(&img, &model).unwrap();
        let set = ProjectionSet::from_images(vec![img; 6], RenderConfig::default()).unwrap();
        let score = spatial_naturalness_quality(&set, &model, DEFAULT_C1).unwrap();
        assert!((score.niqe - single).abs() < 1e-12 * single.max(1.0));
        assert!(score.upsampled.is_empty());
    }

    #[test]
    fn small_views_are_enlarged() {
        let img = natural_image(60, 150, 3);
        let big = ensure_patch_size(&img).unwrap();
        assert!(big.width() >= 96 && big.height() >= 96);
        assert!(ensure_patch_size(&natural_image(96, 100, 3)).is_none());
    }
}
