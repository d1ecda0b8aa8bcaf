//! Dataset manifests: CSV rows of sample id, subject id, side, and a file
//! path, optionally followed by the six fitted circle parameters
//! (`pcx,pcy,pr,icx,icy,ir`). Circle fields are all present or all absent
//! per row.

use std::path::Path;

use super::{format_err, format_err_at, read_text, write_bytes};
use crate::error::{Error, Result};
use crate::model::{EyeLabel, Side};
use crate::normalize::Circle;

const BASE_HEADER: &str = "sample_id,subject_id,side,path";
const CIRCLE_HEADER: &str = "sample_id,subject_id,side,path,pcx,pcy,pr,icx,icy,ir";

/// One dataset row. `circles` is `(pupil, iris)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub sample_id: String,
    pub label: EyeLabel,
    pub path: String,
    pub circles: Option<(Circle, Circle)>,
}

/// An ordered dataset listing with unique sample ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    rows: Vec<ManifestRow>,
    has_circle_columns: bool,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>, has_circle_columns: bool) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for row in &rows {
            if row.sample_id.is_empty() {
                return Err(Error::InvalidArgument("empty sample id".into()));
            }
            if row.path.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "row `{}` has an empty path",
                    row.sample_id
                )));
            }
            if !seen.insert(row.sample_id.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sample id `{}`",
                    row.sample_id
                )));
            }
            if row.circles.is_some() && !has_circle_columns {
                return Err(Error::InvalidArgument(format!(
                    "row `{}` carries circles but the manifest has no circle columns",
                    row.sample_id
                )));
            }
        }
        Ok(Manifest {
            rows,
            has_circle_columns,
        })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn has_circle_columns(&self) -> bool {
        self.has_circle_columns
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut out = String::new();
    let header = if manifest.has_circle_columns() {
        CIRCLE_HEADER
    } else {
        BASE_HEADER
    };
    out.push_str(header);
    out.push('\n');
    for row in manifest.rows() {
        for field in [row.sample_id.as_str(), row.path.as_str()] {
            if field.contains(',') || field.contains('\n') {
                return Err(format_err(
                    path,
                    format!("field `{field}` contains a comma or newline"),
                ));
            }
        }
        out.push_str(&format!(
            "{},{},{},{}",
            row.sample_id,
            row.label.subject_id(),
            row.label.side().letter(),
            row.path
        ));
        if manifest.has_circle_columns() {
            match &row.circles {
                Some((pupil, iris)) => out.push_str(&format!(
                    ",{},{},{},{},{},{}",
                    pupil.cx, pupil.cy, pupil.r, iris.cx, iris.cy, iris.r
                )),
                None => out.push_str(",,,,,,"),
            }
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, "empty manifest"))?;
    let has_circles = match header {
        BASE_HEADER => false,
        CIRCLE_HEADER => true,
        other => {
            return Err(format_err_at(
                path,
                1,
                format!("unrecognized header `{other}`"),
            ))
        }
    };
    let expected_fields = if has_circles { 10 } else { 4 };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_fields {
            return Err(format_err_at(
                path,
                line_no,
                format!("expected {expected_fields} fields, got {}", fields.len()),
            ));
        }
        let side = match fields[2] {
            "L" => Side::Left,
            "R" => Side::Right,
            other => {
                return Err(format_err_at(
                    path,
                    line_no,
                    format!("side must be L or R, got `{other}`"),
                ))
            }
        };
        let label = EyeLabel::new(fields[1], side)
            .map_err(|e| format_err_at(path, line_no, format!("bad subject id: {e}")))?;
        if fields[0].is_empty() {
            return Err(format_err_at(path, line_no, "empty sample id"));
        }
        if fields[3].is_empty() {
            return Err(format_err_at(path, line_no, "empty path"));
        }
        let circles = if has_circles {
            let circle_fields = &fields[4..10];
            let empty = circle_fields.iter().filter(|f| f.is_empty()).count();
            match empty {
                6 => None,
                0 => {
                    let nums = circle_fields
                        .iter()
                        .map(|f| {
                            f.parse::<f64>().map_err(|_| {
                                format_err_at(path, line_no, format!("bad number `{f}`"))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    let pupil = Circle::new(nums[0], nums[1], nums[2])
                        .map_err(|e| format_err_at(path, line_no, e.to_string()))?;
                    let iris = Circle::new(nums[3], nums[4], nums[5])
                        .map_err(|e| format_err_at(path, line_no, e.to_string()))?;
                    Some((pupil, iris))
                }
                _ => {
                    return Err(format_err_at(
                        path,
                        line_no,
                        "circle columns must be all present or all absent",
                    ))
                }
            }
        } else {
            None
        };
        rows.push(ManifestRow {
            sample_id: fields[0].to_string(),
            label,
            path: fields[3].to_string(),
            circles,
        });
        // duplicate detection with a line number
        let this = rows.last().unwrap();
        if rows[..rows.len() - 1]
            .iter()
            .any(|r| r.sample_id == this.sample_id)
        {
            return Err(format_err_at(
                path,
                line_no,
                format!("duplicate sample id `{}`", this.sample_id),
            ));
        }
    }
    Manifest::new(rows, has_circles)
}
