use std::collections::BTreeMap;
use std::path::PathBuf;

use dhqi_core::semantic::provider::EmbeddingProvider;
use dhqi_onnx::OnnxProvider;
use image::{Rgb, RgbImage};
use serde::Deserialize;

#[derive(Deserialize)]
struct Expected {
    images: BTreeMap<String, Vec<f64>>,
    texts: BTreeMap<String, Vec<f64>>,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn expected() -> Expected {
    serde_json::from_str(&std::fs::read_to_string(fixtures().join("expected.json")).unwrap()).unwrap()
}

// same pattern as make_fixtures.py
fn pattern(seed: u32) -> RgbImage {
    RgbImage::from_fn(32, 32, |x, y| {
        let r = (x * 7 + y * 3 + seed * 11) % 256;
        let g = (x * y + seed * 5) % 256;
        let b = (255 + 256 * 4 - x * 4 - seed) % 256;
        Rgb([r as u8, g as u8, b as u8])
    })
}

fn close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < 1e-5, "{x} vs {y}");
    }
}

#[test]
fn loads_and_reports_shape() {
    let p = OnnxProvider::load(&fixtures()).unwrap();
    assert_eq!(p.dimension(), 16);
    assert_eq!(p.input_size(), 32);
    assert!(p.id().starts_with("model:"));
}

#[test]
fn image_embeddings_match_reference_runtime() {
    let p = OnnxProvider::load(&fixtures()).unwrap();
    for (seed, want) in expected().images {
        close(&p.embed_image(&pattern(seed.parse().unwrap())).unwrap(), &want);
    }
}

#[test]
fn text_embeddings_match_reference_runtime() {
    let p = OnnxProvider::load(&fixtures()).unwrap();
    for (text, want) in expected().texts {
        close(&p.embed_text(&text).unwrap(), &want);
    }
}

#[test]
fn wrong_image_size_and_missing_dir_fail() {
    let p = OnnxProvider::load(&fixtures()).unwrap();
    assert!(p.embed_image(&RgbImage::new(8, 8)).is_err());
    assert!(OnnxProvider::load(&fixtures().join("nope")).is_err());
}
