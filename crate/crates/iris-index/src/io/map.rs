//! Binary intrinsic-map files: magic `IICM`, u32 dimension, the 4096 f64
//! mean, d x 4096 f64 components, and d f64 variances, all little-endian.
//! The 64-bit FNV-1a hash of the serialized payload fingerprints the map
//! so enrollment databases cannot be replayed against a different map.

use std::path::Path;

use super::{fnv1a64, format_err, read_bytes, write_bytes};
use crate::embed::IntrinsicMap;
use crate::error::Result;
use crate::model::KEY_LEN;

const MAGIC: &[u8; 4] = b"IICM";
const MAX_DIM: usize = 4096;

fn serialize_map(map: &IntrinsicMap) -> Vec<u8> {
    let d = map.d();
    let mut bytes = Vec::with_capacity(8 + 8 * (KEY_LEN + d * KEY_LEN + d));
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    for &v in map.mean() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for component in map.components() {
        for &v in component {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    for &v in map.explained_variance() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Content digest of a map: FNV-1a over its serialized file payload.
pub fn map_fingerprint(map: &IntrinsicMap) -> u64 {
    fnv1a64(&serialize_map(map))
}

pub fn write_map(path: &Path, map: &IntrinsicMap) -> Result<()> {
    write_bytes(path, &serialize_map(map))
}

pub fn read_map(path: &Path) -> Result<IntrinsicMap> {
    let bytes = read_bytes(path)?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(format_err(path, "bad magic, expected IICM"));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if d == 0 || d > MAX_DIM {
        return Err(format_err(path, format!("implausible dimension {d}")));
    }
    let expected = 8 + 8 * (KEY_LEN + d * KEY_LEN + d);
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!(
                "file holds {} bytes, expected {expected} for dimension {d}",
                bytes.len()
            ),
        ));
    }
    let mut pos = 8usize;
    let mut next = || {
        let v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
        pos += 8;
        v
    };
    let mean: Vec<f64> = (0..KEY_LEN).map(|_| next()).collect();
    let components: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..KEY_LEN).map(|_| next()).collect())
        .collect();
    let variances: Vec<f64> = (0..d).map(|_| next()).collect();
    IntrinsicMap::from_parts(mean, components, variances)
        .map_err(|e| format_err(path, format!("invalid map payload: {e}")))
}
