//! `--embedder` selection.

use std::path::PathBuf;
use std::str::FromStr;

use dhqi_core::semantic::{EmbeddingProvider, HttpProvider, MockProvider, ENDPOINT_ENV};
use dhqi_core::{Error, Result};
use dhqi_onnx::OnnxProvider;

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderSpec {
    None,
    Mock { seed: u64 },
    Model(PathBuf),
    Http(String),
}

impl FromStr for EmbedderSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "none" {
            return Ok(EmbedderSpec::None);
        }
        if s == "mock" {
            return Ok(EmbedderSpec::Mock { seed: 0 });
        }
        if let Some(seed) = s.strip_prefix("mock:") {
            return seed
                .parse()
                .map(|seed| EmbedderSpec::Mock { seed })
                .map_err(|_| format!("bad mock seed in {s:?}"));
        }
        if let Some(p) = s.strip_prefix("model:") {
            return Ok(EmbedderSpec::Model(PathBuf::from(p)));
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(EmbedderSpec::Http(s.to_string()));
        }
        if let Some(u) = s.strip_prefix("http:") {
            return Ok(EmbedderSpec::Http(u.to_string()));
        }
        Err(format!(
            "unknown embedder {s:?}; expected none, mock[:seed], model:<dir> or http:<url>"
        ))
    }
}

impl EmbedderSpec {
    /// The explicit flag, else the endpoint environment variable, else none.
    pub fn resolve(flag: Option<EmbedderSpec>) -> EmbedderSpec {
        flag.unwrap_or_else(|| match std::env::var(ENDPOINT_ENV) {
            Ok(url) if !url.trim().is_empty() => EmbedderSpec::Http(url.trim().to_string()),
            _ => EmbedderSpec::None,
        })
    }

    pub fn build(&self) -> Result<Option<Box<dyn EmbeddingProvider>>> {
        Ok(match self {
            EmbedderSpec::None => None,
            EmbedderSpec::Mock { seed } => Some(Box::new(MockProvider::new(*seed, 512))),
            EmbedderSpec::Model(dir) => {
                if !dir.is_dir() {
                    return Err(Error::InvalidArgument(format!(
                        "embedder model directory {} does not exist",
                        dir.display()
                    )));
                }
                Some(Box::new(OnnxProvider::load(dir)?))
            }
            EmbedderSpec::Http(url) => Some(Box::new(HttpProvider::connect(url)?)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!("none".parse(), Ok(EmbedderSpec::None));
        assert_eq!("mock".parse(), Ok(EmbedderSpec::Mock { seed: 0 }));
        assert_eq!("mock:9".parse(), Ok(EmbedderSpec::Mock { seed: 9 }));
        assert_eq!(
            "model:/m/clip".parse(),
            Ok(EmbedderSpec::Model(PathBuf::from("/m/clip")))
        );
        assert_eq!(
            "http://h:1".parse(),
            Ok(EmbedderSpec::Http("http://h:1".into()))
        );
        assert_eq!(
            "http:http://h:1".parse(),
            Ok(EmbedderSpec::Http("http://h:1".into()))
        );
        assert!("clip".parse::<EmbedderSpec>().is_err());
    }
}
