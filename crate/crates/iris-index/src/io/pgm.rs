//! Binary PGM (P5) images. Normalized irises are written as 512x64
//! maxval-255 PGMs with the sample id and label carried in a header
//! comment, so files stay self-contained and viewable.

use std::path::Path;

use super::{format_err, read_bytes, write_bytes};
use crate::error::Result;
use crate::model::{parse_label, NormalizedIris, NORMALIZED_COLS, NORMALIZED_ROWS};

pub fn write_normalized_iris(path: &Path, norm: &NormalizedIris) -> Result<()> {
    let sample_id = norm.sample_id();
    if sample_id.is_empty() || sample_id.chars().any(char::is_whitespace) {
        return Err(format_err(
            path,
            format!("sample id `{sample_id}` cannot be stored in a PGM comment"),
        ));
    }
    let mut bytes = Vec::with_capacity(64 + NORMALIZED_ROWS * NORMALIZED_COLS);
    bytes.extend_from_slice(
        format!(
            "P5\n# sample={} label={}\n{} {}\n255\n",
            sample_id,
            norm.label(),
            NORMALIZED_COLS,
            NORMALIZED_ROWS
        )
        .as_bytes(),
    );
    bytes.extend(norm.pixels().iter().map(|&v| (v * 255.0).round() as u8));
    write_bytes(path, &bytes)
}

pub fn read_normalized_iris(path: &Path) -> Result<NormalizedIris> {
    let (width, height, pixels, meta) = read_pgm(path)?;
    if width != NORMALIZED_COLS || height != NORMALIZED_ROWS {
        return Err(format_err(
            path,
            format!("expected a {NORMALIZED_COLS}x{NORMALIZED_ROWS} normalized iris, got {width}x{height}"),
        ));
    }
    let (sample_id, label_text) = meta.ok_or_else(|| {
        format_err(path, "missing `# sample=... label=...` metadata comment")
    })?;
    let label = parse_label(&label_text)
        .map_err(|e| format_err(path, format!("bad label in metadata comment: {e}")))?;
    NormalizedIris::new(pixels, label, sample_id)
}

/// Reads any maxval-255 binary PGM as intensities in [0,1].
pub fn read_pgm_gray(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let (width, height, pixels, _) = read_pgm(path)?;
    Ok((width, height, pixels))
}

/// Writes a plain [0,1] intensity grid as a maxval-255 binary PGM.
pub fn write_pgm_gray(path: &Path, width: usize, height: usize, pixels: &[f64]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(format_err(
            path,
            format!(
                "pixel count {} does not match {width}x{height}",
                pixels.len()
            ),
        ));
    }
    let mut bytes = Vec::with_capacity(32 + pixels.len());
    bytes.extend_from_slice(format!("P5\n{width} {height}\n255\n").as_bytes());
    bytes.extend(pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    write_bytes(path, &bytes)
}

type PgmContent = (usize, usize, Vec<f64>, Option<(String, String)>);

fn read_pgm(path: &Path) -> Result<PgmContent> {
    let bytes = read_bytes(path)?;
    let mut pos = 0usize;
    let mut meta: Option<(String, String)> = None;

    let mut next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                let start = *pos;
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                let comment = String::from_utf8_lossy(&bytes[start..*pos]).into_owned();
                if let Some(m) = parse_meta_comment(&comment) {
                    meta = Some(m);
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(format_err(path, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P5" {
        return Err(format_err(path, format!("bad magic `{magic}`, expected P5")));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| format_err(path, "bad width"))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| format_err(path, "bad height"))?;
    let maxval: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| format_err(path, "bad maxval"))?;
    if maxval != 255 {
        return Err(format_err(path, format!("maxval must be 255, got {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(format_err(path, "zero image dimension"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(format_err(path, "missing raster separator"));
    }
    pos += 1;
    let expected = width * height;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(format_err(
            path,
            format!("raster holds {} bytes, expected {expected}", raster.len()),
        ));
    }
    let pixels = raster.iter().map(|&b| b as f64 / 255.0).collect();
    Ok((width, height, pixels, meta))
}

fn parse_meta_comment(comment: &str) -> Option<(String, String)> {
    let body = comment.strip_prefix('#')?.trim();
    let mut sample = None;
    let mut label = None;
    for token in body.split_whitespace() {
        if let Some(v) = token.strip_prefix("sample=") {
            sample = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("label=") {
            label = Some(v.to_string());
        }
    }
    Some((sample?, label?))
}
