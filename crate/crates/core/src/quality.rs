//! Geometry loss and the summed quality index.

use serde::Serialize;

use crate::error::{Component, Error, Result};
use crate::mesh::{mean_scaled_dihedral, Mesh};
use crate::niqe::{spatial_naturalness_quality, NaturalnessScore, NiqeEstimator, DEFAULT_C1};
use crate::provenance::{config_hash, Provenance};
use crate::render::{render_cube_projections, RenderConfig};
use crate::semantic::{
    semantic_affinity_quality, AffinityScore, EmbeddingProvider, PromptPairSet,
};

/// `1 / (1 + e^Θ̄)` for the mean scaled dihedral angle `Θ̄`.
pub fn geometry_loss_from_mean(theta_mean: f64) -> f64 {
    1.0 / (1.0 + theta_mean.exp())
}

pub fn geometry_loss_quality(mesh: &Mesh) -> Result<f64> {
    Ok(geometry_loss_from_mean(mean_scaled_dihedral(mesh)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreConfig {
    pub render: RenderConfig,
    pub prompts: PromptPairSet,
    pub c1: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            render: RenderConfig::default(),
            prompts: PromptPairSet::default(),
            c1: DEFAULT_C1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub model: String,
    /// `None` when scored without an embedding provider.
    pub q_a: Option<f64>,
    pub q_n: f64,
    pub q_g: f64,
    /// Sum of the components present.
    pub q_dhqi: f64,
    pub affinity: Option<AffinityScore>,
    pub naturalness: NaturalnessScore,
    pub theta_mean: f64,
    pub provenance: Provenance,
}

impl QualityReport {
    pub fn affinity_excluded(&self) -> bool {
        self.q_a.is_none()
    }
}

/// Scores a mesh: renders the six views once, then evaluates the three
/// measures concurrently. Passing no provider leaves `q_a` out of the sum.
pub fn score_mesh(
    model: &str,
    mesh: &Mesh,
    config: &ScoreConfig,
    provider: Option<&dyn EmbeddingProvider>,
    niqe: &dyn NiqeEstimator,
) -> Result<QualityReport> {
    let projections =
        render_cube_projections(mesh, &config.render).map_err(|e| e.in_component(Component::Render))?;
    let ((affinity, naturalness), theta) = rayon::join(
        || {
            rayon::join(
                || {
                    provider
                        .map(|p| semantic_affinity_quality(&projections, &config.prompts, p))
                        .transpose()
                        .map_err(|e| e.in_component(Component::Affinity))
                },
                || {
                    spatial_naturalness_quality(&projections, niqe, config.c1)
                        .map_err(|e| e.in_component(Component::Naturalness))
                },
            )
        },
        || mean_scaled_dihedral(mesh).map_err(|e| e.in_component(Component::Geometry)),
    );
    let (affinity, naturalness, theta_mean) = (affinity?, naturalness?, theta?);
    let q_a = affinity.as_ref().map(|a| a.q_a);
    let q_g = geometry_loss_from_mean(theta_mean);
    let q_n = naturalness.q_n;
    let mut provenance = Provenance::new(config_hash(config));
    provenance.provider = provider.map(|p| p.id());
    provenance.niqe_model = Some(niqe.id());
    Ok(QualityReport {
        model: model.to_string(),
        q_a,
        q_n,
        q_g,
        q_dhqi: q_a.unwrap_or(0.0) + q_n + q_g,
        affinity,
        naturalness,
        theta_mean,
        provenance,
    })
}

/// Full index with all three components.
pub fn dhqi_score(
    model: &str,
    mesh: &Mesh,
    config: &ScoreConfig,
    provider: &dyn EmbeddingProvider,
    niqe: &dyn NiqeEstimator,
) -> Result<QualityReport> {
    score_mesh(model, mesh, config, Some(provider), niqe)
}

impl Error {
    /// The component a scoring failure was attributed to, if any.
    pub fn component(&self) -> Option<Component> {
        match self {
            Error::Component { component, .. } => Some(*component),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::{tetrahedron, unit_cube};

    #[test]
    fn sigmoid_cases() {
        assert_eq!(geometry_loss_from_mean(0.0), 0.5);
        let tet = geometry_loss_quality(&tetrahedron()).unwrap();
        let expected = 1.0 / (1.0 + ((-1.0f64 / 3.0).acos() / std::f64::consts::PI).exp());
        assert!((tet - expected).abs() < 1e-12);
        assert!((tet - 0.3525).abs() < 1e-4);
        let cube = geometry_loss_quality(&unit_cube()).unwrap();
        assert!((cube - 0.4174).abs() < 1e-4);
    }

    #[test]
    fn strictly_decreasing() {
        let mut prev = geometry_loss_from_mean(0.0);
        for k in 1..=100 {
            let q = geometry_loss_from_mean(k as f64 / 100.0);
            assert!(q < prev);
            prev = q;
        }
    }
}
