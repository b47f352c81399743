use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub config_hashes: BTreeMap<String, String>,
    pub tool_version: String,
    pub output_paths: Vec<String>,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        let mut config_hashes = BTreeMap::new();
        config_hashes.insert("parameters".to_string(), sha256_hex(parameters.to_string().as_bytes()));
        Self {
            command: command.to_string(),
            parameters,
            config_hashes,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_paths: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn add_config_file(&mut self, path: &Path, text: &str) {
        self.config_hashes.insert(path.display().to_string(), sha256_hex(text.as_bytes()));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
