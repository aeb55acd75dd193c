use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything that determines a run's output, plus the digest of that output.
///
/// The thread count is left out on purpose: parallel sections combine their
/// partial results in a fixed order, so it cannot change the bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<FileDigest>,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub version: String,
    pub output_sha256: String,
    pub emitted: Vec<FileDigest>,
}
