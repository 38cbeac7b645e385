//! Semantic affinity: how much closer the rendered views sit to positive
//! quality prompts than to their antonyms in a joint embedding space.

pub mod provider;

use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::square_resize;
use crate::render::ProjectionSet;

pub use provider::{normalize, EmbeddingProvider, HttpProvider, MockProvider, Serialized, ENDPOINT_ENV};

/// Subject noun phrase closing every prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subject {
    #[default]
    Body,
    Face,
}

impl Subject {
    pub fn suffix(self) -> &'static str {
        match self {
            Subject::Body => "projection of 3d human model",
            Subject::Face => "projection of 3d human face",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TextPrompt {
    pub description: String,
    pub rendered: String,
}

pub fn build_prompt(description: &str, subject: Subject) -> Result<TextPrompt> {
    let description = description.trim();
    if description.is_empty() {
        return Err(Error::InvalidArgument("empty prompt description".into()));
    }
    Ok(TextPrompt {
        description: description.to_string(),
        rendered: format!("a {description} {}", subject.suffix()),
    })
}

/// Positive/negative prompt pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptPairSet {
    pairs: Vec<(TextPrompt, TextPrompt)>,
}

pub const DEFAULT_PAIRS: [(&str, &str); 3] = [
    ("high quality", "low quality"),
    ("good", "bad"),
    ("perfect", "distorted"),
];

impl PromptPairSet {
    pub fn new(pairs: Vec<(TextPrompt, TextPrompt)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("prompt pair set is empty".into()));
        }
        Ok(PromptPairSet { pairs })
    }

    pub fn from_descriptions(pairs: &[(&str, &str)], subject: Subject) -> Result<Self> {
        let built = pairs
            .iter()
            .map(|(p, n)| Ok((build_prompt(p, subject)?, build_prompt(n, subject)?)))
            .collect::<Result<Vec<_>>>()?;
        PromptPairSet::new(built)
    }

    pub fn default_for(subject: Subject) -> Self {
        PromptPairSet::from_descriptions(&DEFAULT_PAIRS, subject).expect("default prompts are valid")
    }

    /// One `positive|negative` pair per line; blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str, subject: Subject, origin: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: msg.to_string(),
            };
            let (p, n) = line
                .split_once('|')
                .ok_or_else(|| parse_err("expected `positive|negative`"))?;
            if n.contains('|') {
                return Err(parse_err("more than one `|`"));
            }
            let p = build_prompt(p, subject).map_err(|_| parse_err("empty positive prompt"))?;
            let n = build_prompt(n, subject).map_err(|_| parse_err("empty negative prompt"))?;
            pairs.push((p, n));
        }
        PromptPairSet::new(pairs)
    }

    pub fn load(path: &Path, subject: Subject) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PromptPairSet::parse(&text, subject, path)
    }

    pub fn pairs(&self) -> &[(TextPrompt, TextPrompt)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Positive and negative exchanged in every pair.
    pub fn swapped(&self) -> Self {
        PromptPairSet {
            pairs: self.pairs.iter().map(|(p, n)| (n.clone(), p.clone())).collect(),
        }
    }
}

impl Default for PromptPairSet {
    fn default() -> Self {
        PromptPairSet::default_for(Subject::Body)
    }
}

pub fn cosine_affinity(f_i: &[f64], f_t: &[f64]) -> Result<f64> {
    if f_i.len() != f_t.len() {
        return Err(Error::DimensionMismatch {
            expected: f_i.len(),
            got: f_t.len(),
        });
    }
    let dot: f64 = f_i.iter().zip(f_t).map(|(a, b)| a * b).sum();
    let ni = f_i.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nt = f_t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if ni == 0.0 || nt == 0.0 {
        return Err(Error::Degenerate("zero-norm embedding".into()));
    }
    Ok((dot / (ni * nt)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAffinity {
    pub positive: String,
    pub negative: String,
    /// Mean cosine over the views.
    pub positive_affinity: f64,
    pub negative_affinity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinityScore {
    pub a_diff: f64,
    pub q_a: f64,
    pub pairs: Vec<PairAffinity>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// View as handed to the encoder: letterboxed on the render background and
/// box-resampled to the provider's input side.
pub fn prepare_view(image: &RgbImage, side: u32, background: [u8; 3]) -> RgbImage {
    square_resize(image, side, background)
}

fn check_embedding(v: Vec<f64>, dim: usize) -> Result<Vec<f64>> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite embedding component".into()));
    }
    Ok(v)
}

/// Per-pair mean view affinities; the average of their differences is
/// `a_diff`.
pub fn pair_affinities(
    projections: &ProjectionSet,
    pairs: &PromptPairSet,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<PairAffinity>> {
    let dim = provider.dimension();
    let side = provider.input_size();
    let bg = projections.config.background;
    let embed_view = |view: &crate::render::View| {
        let img = prepare_view(&view.image, side, bg);
        provider
            .embed_image(&img)
            .and_then(|v| check_embedding(v, dim))
            .map_err(|e| Error::Provider {
                view: Some(view.axis.label().to_string()),
                msg: e.to_string(),
            })
    };
    let images: Vec<Vec<f64>> = if provider.single_flight() {
        projections.views.iter().map(embed_view).collect::<Result<_>>()?
    } else {
        projections.views.par_iter().map(embed_view).collect::<Result<_>>()?
    };
    if images.is_empty() {
        return Err(Error::Empty("no projections"));
    }
    let embed_text = |t: &TextPrompt| {
        provider
            .embed_text(&t.rendered)
            .and_then(|v| check_embedding(v, dim))
            .map_err(|e| Error::Provider {
                view: None,
                msg: format!("prompt {:?}: {e}", t.rendered),
            })
    };
    let mean_affinity = |text: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for img in &images {
            total += cosine_affinity(img, text)?;
        }
        Ok(total / images.len() as f64)
    };
    pairs
        .pairs()
        .iter()
        .map(|(p, n)| {
            Ok(PairAffinity {
                positive: p.rendered.clone(),
                negative: n.rendered.clone(),
                positive_affinity: mean_affinity(&embed_text(p)?)?,
                negative_affinity: mean_affinity(&embed_text(n)?)?,
            })
        })
        .collect()
}

pub fn affinity_from_pairs(pairs: Vec<PairAffinity>) -> AffinityScore {
    let a_diff = pairs
        .iter()
        .map(|p| p.positive_affinity - p.negative_affinity)
        .sum::<f64>()
        / pairs.len() as f64;
    AffinityScore {
        a_diff,
        q_a: sigmoid(a_diff),
        pairs,
    }
}

pub fn affinity_difference(
    projections: &ProjectionSet,
    pairs: &PromptPairSet,
    provider: &dyn EmbeddingProvider,
) -> Result<f64> {
    Ok(affinity_from_pairs(pair_affinities(projections, pairs, provider)?).a_diff)
}

pub fn semantic_affinity_quality(
    projections: &ProjectionSet,
    pairs: &PromptPairSet,
    provider: &dyn EmbeddingProvider,
) -> Result<AffinityScore> {
    Ok(affinity_from_pairs(pair_affinities(projections, pairs, provider)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::RenderConfig;

    #[test]
    fn prompt_templates() {
        assert_eq!(
            build_prompt("high quality", Subject::Body).unwrap().rendered,
            "a high quality projection of 3d human model"
        );
        assert_eq!(
            build_prompt("distorted", Subject::Face).unwrap().rendered,
            "a distorted projection of 3d human face"
        );
        assert!(build_prompt("", Subject::Body).is_err());
        assert!(build_prompt("   ", Subject::Body).is_err());
    }

    #[test]
    fn default_set_has_three_pairs() {
        let s = PromptPairSet::default();
        assert_eq!(s.len(), 3);
        assert_eq!(s.pairs()[2].1.description, "distorted");
    }

    #[test]
    fn prompt_file_parsing() {
        let p = Path::new("p.txt");
        let s = PromptPairSet::parse("# c\nsharp | blurry\n\nclean|noisy\n", Subject::Body, p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.pairs()[0].0.rendered, "a sharp projection of 3d human model");
        let err = PromptPairSet::parse("ok|fine\nbroken\n", Subject::Body, p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(PromptPairSet::parse("a|\n", Subject::Body, p).is_err());
        assert!(PromptPairSet::parse("# nothing\n", Subject::Body, p).is_err());
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_affinity(&[0.6, 0.8], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_affinity(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
        assert_eq!(cosine_affinity(&[1.0, 0.0], &[-3.0, 0.0]).unwrap(), -1.0);
        assert!(cosine_affinity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_affinity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn swapping_prompts_negates() {
        let views = (0..6).map(|i| crate::synth::natural_image(40, 50, i)).collect();
        let set = ProjectionSet::from_images(views, RenderConfig::default()).unwrap();
        let pairs = PromptPairSet::default();
        let mock = MockProvider::new(1, 32);
        let a = affinity_difference(&set, &pairs, &mock).unwrap();
        let b = affinity_difference(&set, &pairs.swapped(), &mock).unwrap();
        assert_eq!(a, -b);
        let q = semantic_affinity_quality(&set, &pairs, &mock).unwrap();
        assert!(q.q_a > 0.0 && q.q_a < 1.0);
    }
}
