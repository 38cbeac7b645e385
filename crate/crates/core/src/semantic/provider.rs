//! Image/text embedding backends.

use std::io::Cursor;
use std::sync::Mutex;
use std::time::Duration;

use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A joint image/text encoder producing unit vectors of a fixed dimension.
///
/// Implementations must be deterministic per input. If a backend cannot
/// serve concurrent calls it returns `true` from [`single_flight`], and
/// callers route requests through [`Serialized`].
///
/// [`single_flight`]: EmbeddingProvider::single_flight
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier recorded in report provenance.
    fn id(&self) -> String;
    fn dimension(&self) -> usize;
    /// Square side images are resampled to before [`embed_image`](Self::embed_image).
    fn input_size(&self) -> u32 {
        224
    }
    fn single_flight(&self) -> bool {
        false
    }
    fn embed_image(&self, image: &RgbImage) -> Result<Vec<f64>>;
    fn embed_text(&self, text: &str) -> Result<Vec<f64>>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn input_size(&self) -> u32 {
        (**self).input_size()
    }
    fn single_flight(&self) -> bool {
        (**self).single_flight()
    }
    fn embed_image(&self, image: &RgbImage) -> Result<Vec<f64>> {
        (**self).embed_image(image)
    }
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        (**self).embed_text(text)
    }
}

/// Queues calls to a provider behind a mutex.
pub struct Serialized<P> {
    inner: P,
    gate: Mutex<()>,
}

impl<P: EmbeddingProvider> Serialized<P> {
    pub fn new(inner: P) -> Self {
        Serialized {
            inner,
            gate: Mutex::new(()),
        }
    }

    fn locked<T>(&self, f: impl FnOnce(&P) -> T) -> T {
        let _guard = self.gate.lock().unwrap_or_else(|e| e.into_inner());
        f(&self.inner)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for Serialized<P> {
    fn id(&self) -> String {
        self.inner.id()
    }
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn input_size(&self) -> u32 {
        self.inner.input_size()
    }
    fn single_flight(&self) -> bool {
        false
    }
    fn embed_image(&self, image: &RgbImage) -> Result<Vec<f64>> {
        self.locked(|p| p.embed_image(image))
    }
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        self.locked(|p| p.embed_text(text))
    }
}

/// Scales to unit Euclidean norm; fails on zero or non-finite input.
pub fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Degenerate("embedding has zero or non-finite norm".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// Deterministic stand-in encoder: the SHA-256 of the input seeds a
/// Gaussian draw, normalized. Carries no semantic signal.
#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
    dimension: usize,
    input_size: u32,
}

impl MockProvider {
    pub fn new(seed: u64, dimension: usize) -> Self {
        MockProvider {
            seed,
            dimension,
            input_size: 224,
        }
    }

    pub fn with_input_size(mut self, side: u32) -> Self {
        self.input_size = side;
        self
    }

    fn draw(&self, domain: &[u8], payload: &[&[u8]]) -> Vec<f64> {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(domain);
        for p in payload {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(key);
        let v: Vec<f64> = (0..self.dimension).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(v).expect("gaussian draw is nonzero")
    }
}

impl Default for MockProvider {
    fn default() -> Self {
        MockProvider::new(0, 512)
    }
}

impl EmbeddingProvider for MockProvider {
    fn id(&self) -> String {
        format!("mock:{}:{}", self.seed, self.dimension)
    }
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn input_size(&self) -> u32 {
        self.input_size
    }
    fn embed_image(&self, image: &RgbImage) -> Result<Vec<f64>> {
        let dims = [image.width().to_le_bytes(), image.height().to_le_bytes()].concat();
        Ok(self.draw(b"image", &[&dims, image.as_raw()]))
    }
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.draw(b"text", &[text.as_bytes()]))
    }
}

/// Environment variable holding the default HTTP embedder base URL.
pub const ENDPOINT_ENV: &str = "DHQI_EMBEDDER_URL";

/// Remote encoder: `POST {base}/embed/image` with a PNG body and
/// `POST {base}/embed/text` with a UTF-8 body, each answering a JSON array
/// of floats.
pub struct HttpProvider {
    base: String,
    dimension: usize,
    input_size: u32,
    agent: ureq::Agent,
}

impl HttpProvider {
    /// Connects and learns the embedding dimension from a probe request.
    pub fn connect(base: &str) -> Result<Self> {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        let mut p = HttpProvider {
            base: base.trim_end_matches('/').to_string(),
            dimension: 0,
            input_size: 224,
            agent,
        };
        p.dimension = p.request("text", "text/plain; charset=utf-8", b"probe")?.len();
        if p.dimension == 0 {
            return Err(Error::Provider {
                view: None,
                msg: "endpoint returned an empty embedding".into(),
            });
        }
        Ok(p)
    }

    pub fn with_input_size(mut self, side: u32) -> Self {
        self.input_size = side;
        self
    }

    fn request(&self, kind: &str, content_type: &str, body: &[u8]) -> Result<Vec<f64>> {
        let url = format!("{}/embed/{kind}", self.base);
        let fail = |msg: String| Error::Provider {
            view: None,
            msg: format!("{url}: {msg}"),
        };
        let mut resp = self
            .agent
            .post(&url)
            .header("Content-Type", content_type)
            .send(body)
            .map_err(|e| fail(e.to_string()))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| fail(e.to_string()))?;
        let v: Vec<f64> = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        if self.dimension != 0 && v.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: v.len(),
            });
        }
        Ok(v)
    }
}

impl EmbeddingProvider for HttpProvider {
    fn id(&self) -> String {
        format!("http:{}", self.base)
    }
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn input_size(&self) -> u32 {
        self.input_size
    }
    fn embed_image(&self, image: &RgbImage) -> Result<Vec<f64>> {
        let mut png = Vec::new();
        image.write_to(&mut Cursor::new(&mut png), image::ImageFormat::Png)?;
        self.request("image", "image/png", &png)
    }
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        self.request("text", "text/plain; charset=utf-8", text.as_bytes())
    }
}
