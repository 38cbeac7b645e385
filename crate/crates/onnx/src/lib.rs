//! Embedding provider backed by exported ONNX image and text encoders.
//!
//! A model directory holds:
//!
//! - `image.onnx`: `f32[1, 3, S, S]` normalized pixels to `[1, D]`
//! - `text.onnx`: `i64[1, L]` token ids (and optionally an attention mask) to `[1, D]`
//! - `tokenizer.json`: a Hugging Face tokenizer
//! - `embedder.json` (optional): input size, normalization and context length
//!
//! Defaults follow the CLIP ViT-B/32 preprocessing.

use std::path::{Path, PathBuf};

use dhqi_core::semantic::provider::{normalize, EmbeddingProvider};
use dhqi_core::{Error, Result};
use image::RgbImage;
use serde::Deserialize;
use tokenizers::Tokenizer;
use tract_onnx::prelude::*;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub input_size: u32,
    pub mean: [f32; 3],
    pub std: [f32; 3],
    pub context_length: usize,
    pub pad_id: i64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            input_size: 224,
            mean: [0.481_454_66, 0.457_827_5, 0.408_210_73],
            std: [0.268_629_54, 0.261_302_58, 0.275_777_1],
            context_length: 77,
            pad_id: 0,
        }
    }
}

type Plan = TypedRunnableModel<TypedModel>;

pub struct OnnxProvider {
    dir: PathBuf,
    config: EncoderConfig,
    image: Plan,
    text: Plan,
    text_wants_mask: bool,
    tokenizer: Tokenizer,
    dimension: usize,
}

fn fail(msg: impl std::fmt::Display) -> Error {
    Error::Provider {
        view: None,
        msg: msg.to_string(),
    }
}

impl OnnxProvider {
    pub fn load(dir: &Path) -> Result<Self> {
        let config = match std::fs::read_to_string(dir.join("embedder.json")) {
            Ok(s) => serde_json::from_str(&s)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => EncoderConfig::default(),
            Err(e) => return Err(Error::io(dir.join("embedder.json"), e)),
        };
        let s = config.input_size as usize;
        let image = tract_onnx::onnx()
            .model_for_path(dir.join("image.onnx"))
            .and_then(|m| m.with_input_fact(0, f32::fact([1, 3, s, s]).into()))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| fail(format!("image encoder: {e:#}")))?;
        let text_model = tract_onnx::onnx()
            .model_for_path(dir.join("text.onnx"))
            .map_err(|e| fail(format!("text encoder: {e:#}")))?;
        let text_wants_mask = text_model.inputs.len() > 1;
        let l = config.context_length;
        let text = (0..text_model.inputs.len())
            .try_fold(text_model, |m, i| m.with_input_fact(i, i64::fact([1, l]).into()))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| fail(format!("text encoder: {e:#}")))?;
        let tokenizer = Tokenizer::from_file(dir.join("tokenizer.json"))
            .map_err(|e| fail(format!("tokenizer: {e}")))?;
        let mut p = OnnxProvider {
            dir: dir.to_path_buf(),
            config,
            image,
            text,
            text_wants_mask,
            tokenizer,
            dimension: 0,
        };
        p.dimension = p.run_text("a photo")?.len();
        let probe = RgbImage::new(p.config.input_size, p.config.input_size);
        let d_img = p.run_image(&probe)?.len();
        if d_img != p.dimension {
            return Err(fail(format!(
                "image encoder dimension {d_img} differs from text encoder {}",
                p.dimension
            )));
        }
        Ok(p)
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    fn run_image(&self, img: &RgbImage) -> Result<Vec<f64>> {
        let s = self.config.input_size;
        if img.dimensions() != (s, s) {
            return Err(fail(format!(
                "image is {}x{}, encoder expects {s}x{s}",
                img.width(),
                img.height()
            )));
        }
        let (mean, std) = (self.config.mean, self.config.std);
        let s = s as usize;
        let input: Tensor = tract_ndarray::Array4::from_shape_fn((1, 3, s, s), |(_, c, y, x)| {
            let v = img.get_pixel(x as u32, y as u32)[c] as f32 / 255.0;
            (v - mean[c]) / std[c]
        })
        .into();
        let out = self.image.run(tvec!(input.into())).map_err(|e| fail(format!("{e:#}")))?;
        flatten(&out[0])
    }

    fn run_text(&self, text: &str) -> Result<Vec<f64>> {
        let enc = self
            .tokenizer
            .encode(text, true)
            .map_err(|e| fail(format!("tokenizer: {e}")))?;
        let l = self.config.context_length;
        let mut ids: Vec<i64> = enc.get_ids().iter().map(|&i| i as i64).collect();
        if ids.len() > l {
            // keep the end-of-text token the encoder pools on
            let last = *ids.last().unwrap();
            ids.truncate(l);
            ids[l - 1] = last;
        }
        let used = ids.len();
        ids.resize(l, self.config.pad_id);
        let mut inputs: TVec<TValue> =
            tvec!(Tensor::from_shape(&[1, l], &ids).map_err(|e| fail(e))?.into());
        if self.text_wants_mask {
            let mask: Vec<i64> = (0..l).map(|i| i64::from(i < used)).collect();
            inputs.push(Tensor::from_shape(&[1, l], &mask).map_err(|e| fail(e))?.into());
        }
        let out = self.text.run(inputs).map_err(|e| fail(format!("{e:#}")))?;
        flatten(&out[0])
    }
}

fn flatten(t: &TValue) -> Result<Vec<f64>> {
    let view = t.to_array_view::<f32>().map_err(|e| fail(e))?;
    if view.len() == 0 {
        return Err(fail("encoder produced an empty output"));
    }
    Ok(view.iter().map(|&v| v as f64).collect())
}

impl EmbeddingProvider for OnnxProvider {
    fn id(&self) -> String {
        format!("model:{}", self.dir.display())
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn input_size(&self) -> u32 {
        self.config.input_size
    }

    fn embed_image(&self, image: &RgbImage) -> Result<Vec<f64>> {
        normalize(self.run_image(image)?)
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        normalize(self.run_text(text)?)
    }
}
