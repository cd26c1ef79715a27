//! Provenance stamps shared by every output file.
//!
//! CSV outputs start with one comment line
//!
//! ```text
//! # tool=catpush version=<semver> seed=<u64> config_hash=<64 hex digits>
//! ```
//!
//! and JSON outputs carry the same fields under a `provenance` key.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_NAME: &str = "catpush";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: &[u8; 32]) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            seed,
            config_hash: hex::encode(config_hash),
        }
    }

    pub fn csv_comment(&self) -> String {
        format!(
            "# tool={} version={} seed={} config_hash={}",
            self.tool, self.version, self.seed, self.config_hash
        )
    }

    /// Parses a line produced by [`Provenance::csv_comment`].
    pub fn parse_csv_comment(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# ")?;
        let mut tool = None;
        let mut version = None;
        let mut seed = None;
        let mut hash = None;
        for field in rest.split_whitespace() {
            let (k, v) = field.split_once('=')?;
            match k {
                "tool" => tool = Some(v.to_string()),
                "version" => version = Some(v.to_string()),
                "seed" => seed = v.parse().ok(),
                "config_hash" => hash = Some(v.to_string()),
                _ => return None,
            }
        }
        Some(Self {
            tool: tool?,
            version: version?,
            seed: seed?,
            config_hash: hash?,
        })
    }
}

/// Hash of several configuration hashes, for reports spanning several runs.
pub fn combine_hashes<S: AsRef<str>>(hashes: &[S]) -> [u8; 32] {
    let mut h = Sha256::new();
    for part in hashes {
        h.update(part.as_ref().as_bytes());
        h.update(b"\n");
    }
    h.finalize().into()
}

/// CSV text without leading `#` comment lines.
pub fn csv_body(text: &str) -> impl Iterator<Item = &str> {
    text.lines().skip_while(|l| l.starts_with('#'))
}
