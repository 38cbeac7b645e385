//! Configuration hashing stamped into every written artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the compact JSON serialization of `config`.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub niqe_model: Option<String>,
}

impl Provenance {
    pub fn new(config_hash: String) -> Self {
        Provenance {
            config_hash,
            version: VERSION.to_string(),
            provider: None,
            niqe_model: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"seed": 7, "k": 5}));
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(&serde_json::json!({"seed": 7, "k": 5})));
        assert_ne!(a, config_hash(&serde_json::json!({"seed": 8, "k": 5})));
    }
}
