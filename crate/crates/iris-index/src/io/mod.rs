//! File formats: CSV manifests, PGM normalized irises, binary key
//! portions and maps, and the enrollment database CSV. Every writer/reader
//! pair round-trips losslessly at its stated precision, with fixed
//! endianness and locale-independent formatting.

mod db;
mod key;
mod manifest;
mod map;
mod pgm;

pub use db::{read_db, read_db_checked, write_db};
pub use key::{read_key_portion, write_key_portion};
pub use manifest::{read_manifest, write_manifest, Manifest, ManifestRow};
pub use map::{map_fingerprint, read_map, write_map};
pub use pgm::{read_normalized_iris, read_pgm_gray, write_normalized_iris, write_pgm_gray};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_owned(),
        msg: msg.into(),
    }
}

pub(crate) fn format_err_at(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::FormatAt {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

/// 64-bit FNV-1a over a byte stream.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
