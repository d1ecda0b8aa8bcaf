//! Enrollment database CSV: a `# map=<fingerprint>` comment line, a
//! `label,c1..cd` header, then one row per enrolled eye with coordinates
//! printed at 17 significant digits so f64 values round-trip exactly.

use std::path::Path;

use super::map::map_fingerprint;
use super::{format_err, format_err_at, read_text, write_bytes};
use crate::embed::IntrinsicMap;
use crate::error::{Error, Result};
use crate::index::{EnrollmentDB, Entry};
use crate::model::parse_label;

pub fn write_db(path: &Path, db: &EnrollmentDB) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# map={:016x}\n", db.map_fingerprint()));
    out.push_str("label");
    for i in 1..=db.d() {
        out.push_str(&format!(",c{i}"));
    }
    out.push('\n');
    for entry in db.entries() {
        out.push_str(&entry.label.to_string());
        for v in &entry.coords {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_db(path: &Path) -> Result<EnrollmentDB> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();

    let (_, fp_line) = lines
        .next()
        .ok_or_else(|| format_err(path, "empty database file"))?;
    let fp_hex = fp_line
        .strip_prefix("# map=")
        .ok_or_else(|| format_err_at(path, 1, "expected a `# map=<fingerprint>` line"))?;
    let fingerprint = u64::from_str_radix(fp_hex.trim(), 16)
        .map_err(|_| format_err_at(path, 1, format!("bad fingerprint `{fp_hex}`")))?;

    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, "missing header line"))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 2 || columns[0] != "label" {
        return Err(format_err_at(path, 2, "header must be `label,c1,...`"));
    }
    let d = columns.len() - 1;
    for (i, name) in columns[1..].iter().enumerate() {
        if *name != format!("c{}", i + 1) {
            return Err(format_err_at(
                path,
                2,
                format!("coordinate column {} must be `c{}`", i + 1, i + 1),
            ));
        }
    }

    let mut entries = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(format_err_at(
                path,
                line_no,
                format!("expected {} fields, got {}", d + 1, fields.len()),
            ));
        }
        let label = parse_label(fields[0])
            .map_err(|e| format_err_at(path, line_no, format!("bad label: {e}")))?;
        let coords = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format_err_at(path, line_no, format!("bad number `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        entries.push(Entry { label, coords });
    }
    EnrollmentDB::from_parts(entries, d, fingerprint)
}

/// Reads a database and verifies it was produced by `map`.
pub fn read_db_checked(path: &Path, map: &IntrinsicMap) -> Result<EnrollmentDB> {
    let db = read_db(path)?;
    let expected = map_fingerprint(map);
    if db.map_fingerprint() != expected {
        return Err(Error::FingerprintMismatch {
            db: db.map_fingerprint(),
            map: expected,
        });
    }
    Ok(db)
}
