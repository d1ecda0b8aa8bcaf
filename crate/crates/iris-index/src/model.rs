//! Domain types shared by the whole pipeline.

use crate::error::{Error, Result};

/// Rows in a normalized iris (radial direction, row 0 innermost).
pub const NORMALIZED_ROWS: usize = 64;
/// Columns in a normalized iris (angular direction).
pub const NORMALIZED_COLS: usize = 512;
/// Rows in a key portion.
pub const KEY_ROWS: usize = 16;
/// Columns in a key portion.
pub const KEY_COLS: usize = 256;
/// Flat length of a key portion vector.
pub const KEY_LEN: usize = KEY_ROWS * KEY_COLS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn letter(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Right => 'R',
        }
    }

    pub fn from_letter(c: char) -> Option<Side> {
        match c {
            'L' => Some(Side::Left),
            'R' => Some(Side::Right),
            _ => None,
        }
    }
}

/// Identity of one eye: subject plus left/right indicator.
///
/// Two samples of the same eye compare equal. The wire format is
/// `<subject_id>_<L|R>`; see [`parse_label`] and [`format_label`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EyeLabel {
    subject_id: String,
    side: Side,
}

impl EyeLabel {
    pub fn new(subject_id: impl Into<String>, side: Side) -> Result<Self> {
        let subject_id = subject_id.into();
        if subject_id.is_empty() {
            return Err(Error::LabelParse {
                text: subject_id,
                reason: "subject id is empty",
            });
        }
        if subject_id.contains(',') || subject_id.chars().any(char::is_whitespace) {
            return Err(Error::LabelParse {
                text: subject_id,
                reason: "subject id contains a comma or whitespace",
            });
        }
        Ok(EyeLabel { subject_id, side })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

impl std::fmt::Display for EyeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}", self.subject_id, self.side.letter())
    }
}

/// Parses `<subject_id>_<L|R>`. Subject ids may themselves contain
/// underscores; the side indicator is the text after the last one.
pub fn parse_label(text: &str) -> Result<EyeLabel> {
    let (subject, side) = text.rsplit_once('_').ok_or(Error::LabelParse {
        text: text.to_owned(),
        reason: "missing `_<L|R>` side suffix",
    })?;
    let side = match side {
        "L" => Side::Left,
        "R" => Side::Right,
        _ => {
            return Err(Error::LabelParse {
                text: text.to_owned(),
                reason: "side must be `L` or `R`",
            })
        }
    };
    EyeLabel::new(subject, side)
}

/// Inverse of [`parse_label`].
pub fn format_label(label: &EyeLabel) -> String {
    label.to_string()
}

/// A 64x512 polar unwrapping of the iris annulus. Row 0 is the innermost
/// (trimmed pupil boundary) radius; row 63 the outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIris {
    pixels: Vec<f64>,
    label: EyeLabel,
    sample_id: String,
}

impl NormalizedIris {
    pub fn new(pixels: Vec<f64>, label: EyeLabel, sample_id: impl Into<String>) -> Result<Self> {
        let expected = NORMALIZED_ROWS * NORMALIZED_COLS;
        if pixels.len() != expected {
            return Err(Error::WrongSize {
                expected,
                got: pixels.len(),
            });
        }
        check_unit_interval(&pixels)?;
        Ok(NormalizedIris {
            pixels,
            label,
            sample_id: sample_id.into(),
        })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < NORMALIZED_ROWS && col < NORMALIZED_COLS);
        self.pixels[row * NORMALIZED_COLS + col]
    }

    pub fn label(&self) -> &EyeLabel {
        &self.label
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }
}

/// Processing stage of a key portion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Raw,
    Preprocessed,
    Averaged,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Raw => "raw",
            Stage::Preprocessed => "preprocessed",
            Stage::Averaged => "averaged",
        };
        f.write_str(s)
    }
}

/// The 16x256 sub-block of a normalized iris used as the indexing signal,
/// stored row-major as 4096 values.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPortion {
    values: Vec<f64>,
    label: EyeLabel,
    sample_id: String,
    stage: Stage,
}

impl KeyPortion {
    pub fn new(
        values: Vec<f64>,
        label: EyeLabel,
        sample_id: impl Into<String>,
        stage: Stage,
    ) -> Result<Self> {
        if values.len() != KEY_LEN {
            return Err(Error::WrongSize {
                expected: KEY_LEN,
                got: values.len(),
            });
        }
        if stage == Stage::Preprocessed {
            check_unit_interval(&values)?;
        } else if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(KeyPortion {
            values,
            label,
            sample_id: sample_id.into(),
            stage,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < KEY_ROWS && col < KEY_COLS);
        self.values[row * KEY_COLS + col]
    }

    pub fn label(&self) -> &EyeLabel {
        &self.label
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }
}

/// A point in the low-dimensional intrinsic space identifying one eye.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicIrisCode {
    coords: Vec<f64>,
    label: EyeLabel,
}

impl IntrinsicIrisCode {
    pub fn new(coords: Vec<f64>, label: EyeLabel) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("intrinsic code needs at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(IntrinsicIrisCode { coords, label })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn label(&self) -> &EyeLabel {
        &self.label
    }
}

/// Why a raw key portion was accepted or rejected by the quality filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    Ok,
    SaturationExceeded,
    MadOutOfRange,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::Ok => "ok",
            RejectReason::SaturationExceeded => "saturation_exceeded",
            RejectReason::MadOutOfRange => "mad_out_of_range",
        };
        f.write_str(s)
    }
}

/// Outcome of the quality filter on one raw key portion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub accepted: bool,
    pub reason: RejectReason,
    pub saturated_count: usize,
    pub mad: f64,
}

impl QualityReport {
    pub fn ok(saturated_count: usize, mad: f64) -> Self {
        QualityReport {
            accepted: true,
            reason: RejectReason::Ok,
            saturated_count,
            mad,
        }
    }

    pub fn rejected(reason: RejectReason, saturated_count: usize, mad: f64) -> Self {
        debug_assert!(reason != RejectReason::Ok);
        QualityReport {
            accepted: false,
            reason,
            saturated_count,
            mad,
        }
    }
}

fn check_unit_interval(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ValueOutOfRange { index: i, value: v });
        }
    }
    Ok(())
}
