//! Binary key-portion files: magic `IKP1`, u32 rows, u32 cols, a stage
//! byte, 4096 little-endian f32 values row-major, then the label and
//! sample id as length-prefixed UTF-8.

use std::path::Path;

use super::{format_err, read_bytes, write_bytes};
use crate::error::Result;
use crate::model::{parse_label, KeyPortion, Stage, KEY_COLS, KEY_LEN, KEY_ROWS};

const MAGIC: &[u8; 4] = b"IKP1";
const MAX_STRING: usize = 1 << 16;

fn stage_code(stage: Stage) -> u8 {
    match stage {
        Stage::Raw => 0,
        Stage::Preprocessed => 1,
        Stage::Averaged => 2,
    }
}

fn stage_from_code(code: u8) -> Option<Stage> {
    match code {
        0 => Some(Stage::Raw),
        1 => Some(Stage::Preprocessed),
        2 => Some(Stage::Averaged),
        _ => None,
    }
}

pub fn write_key_portion(path: &Path, key: &KeyPortion) -> Result<()> {
    let label = key.label().to_string();
    let sample_id = key.sample_id();
    let mut bytes = Vec::with_capacity(17 + 4 * KEY_LEN + label.len() + sample_id.len() + 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(KEY_ROWS as u32).to_le_bytes());
    bytes.extend_from_slice(&(KEY_COLS as u32).to_le_bytes());
    bytes.push(stage_code(key.stage()));
    for &v in key.values() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for text in [label.as_str(), sample_id] {
        if text.len() > MAX_STRING {
            return Err(format_err(path, "string field too long"));
        }
        bytes.extend_from_slice(&(text.len() as u32).to_le_bytes());
        bytes.extend_from_slice(text.as_bytes());
    }
    write_bytes(path, &bytes)
}

fn take<'a>(path: &Path, bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    if *pos + n > bytes.len() {
        return Err(format_err(path, "truncated file"));
    }
    let slice = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(slice)
}

pub fn read_key_portion(path: &Path) -> Result<KeyPortion> {
    let bytes = read_bytes(path)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| take(path, &bytes, pos, n);

    let magic = take(&mut pos, 4)?;
    if magic != MAGIC {
        return Err(format_err(
            path,
            format!("bad magic {:?}, expected IKP1", String::from_utf8_lossy(magic)),
        ));
    }
    let rows = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let cols = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if rows as usize != KEY_ROWS || cols as usize != KEY_COLS {
        return Err(format_err(
            path,
            format!("expected {KEY_ROWS}x{KEY_COLS} key portion, got {rows}x{cols}"),
        ));
    }
    let stage = stage_from_code(take(&mut pos, 1)?[0])
        .ok_or_else(|| format_err(path, "unknown stage code"))?;
    let mut values = Vec::with_capacity(KEY_LEN);
    for i in 0..KEY_LEN {
        let v = f32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(format_err(path, format!("non-finite value at index {i}")));
        }
        values.push(v as f64);
    }
    let mut strings = Vec::with_capacity(2);
    for what in ["label", "sample id"] {
        let len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        if len > MAX_STRING {
            return Err(format_err(path, format!("{what} length {len} is implausible")));
        }
        let raw = take(&mut pos, len)?;
        let text = std::str::from_utf8(raw)
            .map_err(|_| format_err(path, format!("{what} is not valid UTF-8")))?;
        strings.push(text.to_owned());
    }
    if pos != bytes.len() {
        return Err(format_err(
            path,
            format!("{} trailing bytes after the payload", bytes.len() - pos),
        ));
    }
    let label = parse_label(&strings[0])
        .map_err(|e| format_err(path, format!("bad label field: {e}")))?;
    KeyPortion::new(values, label, strings[1].clone(), stage)
}
