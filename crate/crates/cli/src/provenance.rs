use std::fs;
use std::path::Path;

use rulebox::{Error, Result};
use sha2::{Digest, Sha256};

pub const GENERATOR: &str = concat!("rulebox ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of an input file, so provenance does not depend on where the
/// file lives.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}
