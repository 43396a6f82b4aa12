//! Versioned JSON reports that carry content digests of their inputs.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "sampler-audit";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        Self { path: path.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }

    pub fn of_file(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Self::of_bytes(path.display().to_string(), &bytes))
    }
}

/// Report envelope. Contains no timestamps, so identical inputs and flags give identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub schema_version: u32,
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub results: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: Vec<String>, inputs: Vec<InputDigest>, results: T) -> Self {
        Self {
            tool: TOOL_NAME,
            tool_version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            command,
            inputs,
            results,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report payloads serialize");
        s.push('\n');
        s
    }
}
