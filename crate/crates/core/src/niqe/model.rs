//! Multivariate Gaussian model of pristine NSS features and the NIQE
//! distance to it.

use std::fmt::Write as _;
use std::path::Path;

use image::RgbImage;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::features::{patch_features, NssFeatureVector, PatchSelection, FEATURE_DIM, PATCH};
use crate::error::{Error, Result};
use crate::raster::luminance;

pub const MIN_CORPUS: usize = 20;

const SHIPPED: &str = include_str!("../../assets/niqe_pristine.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct MvgModel {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Sample mean and (n - 1) covariance of feature vectors. A single vector
/// yields a zero covariance.
pub fn fit_mvg(features: &[NssFeatureVector]) -> Result<MvgModel> {
    if features.is_empty() {
        return Err(Error::InsufficientData("no feature vectors".into()));
    }
    let n = features.len();
    let mut mean = DVector::zeros(FEATURE_DIM);
    for f in features {
        mean += DVector::from_column_slice(f.values());
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(FEATURE_DIM, FEATURE_DIM);
    if n > 1 {
        for f in features {
            let d = DVector::from_column_slice(f.values()) - &mean;
            cov.ger(1.0, &d, &d, 1.0);
        }
        cov /= (n - 1) as f64;
    }
    Ok(MvgModel {
        mean,
        covariance: cov,
    })
}

/// Fits the pristine model on the sharpest patches of every corpus image.
pub fn fit_pristine_model(corpus: &[RgbImage]) -> Result<MvgModel> {
    if corpus.len() < MIN_CORPUS {
        return Err(Error::InsufficientData(format!(
            "pristine corpus has {} images, need at least {MIN_CORPUS}",
            corpus.len()
        )));
    }
    let per_image: Vec<Vec<NssFeatureVector>> = corpus
        .par_iter()
        .map(|img| {
            let gray = luminance(img);
            if gray.width < PATCH || gray.height < PATCH {
                return Err(Error::TooSmall {
                    width: gray.width,
                    height: gray.height,
                    min: PATCH,
                });
            }
            patch_features(&gray, PatchSelection::Sharpest)
        })
        .collect::<Result<_>>()?;
    let all: Vec<NssFeatureVector> = per_image.into_iter().flatten().collect();
    fit_mvg(&all)
}

/// `sqrt(dᵀ ((Σ₁ + Σ₂)/2 + εI)⁻¹ d)` with `ε = 1e-6 · trace / dim`.
pub fn mvg_distance(a: &MvgModel, b: &MvgModel) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: a.mean.len(),
            got: b.mean.len(),
        });
    }
    let diff = &a.mean - &b.mean;
    if diff.iter().all(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let dim = diff.len();
    let mut pooled = (&a.covariance + &b.covariance) * 0.5;
    let eps = 1e-6 * pooled.trace() / dim as f64;
    for i in 0..dim {
        pooled[(i, i)] += eps;
    }
    let solved = pooled
        .clone()
        .cholesky()
        .map(|c| c.solve(&diff))
        .or_else(|| pooled.lu().solve(&diff))
        .ok_or_else(|| Error::Singular("pooled covariance is not invertible".into()))?;
    let q = diff.dot(&solved);
    if !q.is_finite() {
        return Err(Error::Singular("pooled covariance is not invertible".into()));
    }
    Ok(q.max(0.0).sqrt())
}

/// NIQE of an image against a pristine model. The test image's MVG is fit
/// over all of its usable patches.
pub fn niqe_score(image: &RgbImage, model: &MvgModel) -> Result<f64> {
    let gray = luminance(image);
    let patches = patch_features(&gray, PatchSelection::All)?;
    if patches.is_empty() {
        return Err(Error::Degenerate("no patch with usable statistics".into()));
    }
    mvg_distance(model, &fit_mvg(&patches)?)
}

impl MvgModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Text form: `dim N`, the mean on one line, then N covariance rows.
    /// Values use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {}", self.dim());
        let row = |it: &mut dyn Iterator<Item = f64>| {
            it.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "{}", row(&mut self.mean.iter().copied()));
        for r in 0..self.dim() {
            let _ = writeln!(s, "{}", row(&mut self.covariance.row(r).iter().copied()));
        }
        s
    }

    /// Parses [`MvgModel::to_text`] output. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse {
            path: "<niqe model>".into(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| bad(1, "empty model".into()))?;
        let dim: usize = header
            .strip_prefix("dim")
            .and_then(|d| d.trim().parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| bad(ln, format!("expected 'dim N', got '{header}'")))?;
        let mut parse_row = |what: &str| -> Result<Vec<f64>> {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| bad(0, format!("missing {what}")))?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(ln, format!("{what}: {e}")))?;
            if vals.len() != dim {
                return Err(bad(ln, format!("{what} has {} values, expected {dim}", vals.len())));
            }
            Ok(vals)
        };
        let mean = DVector::from_vec(parse_row("mean")?);
        let mut cov = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let row = parse_row(&format!("covariance row {}", r + 1))?;
            for (c, v) in row.into_iter().enumerate() {
                cov[(r, c)] = v;
            }
        }
        Ok(MvgModel {
            mean,
            covariance: cov,
        })
    }

    /// Pristine model bundled with the crate, fitted on natural photographs.
    pub fn shipped() -> Self {
        MvgModel::from_text(SHIPPED).expect("bundled NIQE model parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MvgModel::from_text(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }

    /// Short content hash used as the model identifier in reports.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..6])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let c = &self.covariance;
        (0..c.nrows()).all(|i| (0..c.ncols()).all(|j| (c[(i, j)] - c[(j, i)]).abs() <= tol))
    }
}
