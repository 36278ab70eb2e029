//! Provenance records written next to run outputs.
//!
//! Data payloads never contain timestamps; only the record does, so reruns
//! with identical inputs produce byte-identical result files.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sim::SimOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub verb: String,
    /// SHA-256 of the canonical scenario document.
    pub scenario_hash: String,
    pub options: Option<SimOptions>,
    /// Paths of the files this run produced.
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub version: String,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunRecord {
    pub fn new(verb: &str, canonical_scenario: &str, options: Option<SimOptions>, started_unix: f64) -> Self {
        RunRecord {
            verb: verb.to_string(),
            scenario_hash: sha256_hex(canonical_scenario),
            options,
            outputs: Vec::new(),
            started_unix,
            finished_unix: started_unix,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn finish(mut self, outputs: Vec<String>) -> Self {
        self.outputs = outputs;
        self.finished_unix = unix_now();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_binds_content() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let a = RunRecord::new("simulate", "x", None, 0.0);
        let b = RunRecord::new("simulate", "y", None, 0.0);
        assert_ne!(a.scenario_hash, b.scenario_hash);
    }
}
