//! Key-portion selection and preprocessing: slice the 16x256 block of
//! innermost radii out of a normalized iris, range-normalize around the
//! median, reject low-quality samples, smooth, and average per eye.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    KeyPortion, NormalizedIris, QualityReport, RejectReason, Stage, KEY_COLS, KEY_LEN, KEY_ROWS,
    NORMALIZED_COLS,
};

/// Tunables for the preprocessing chain. The spread and saturation
/// thresholds apply to raw intensities in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Half-width of the range normalization, in MADs around the median.
    pub mad_span: f64,
    /// Reject when more than this many pixels are at or above
    /// `saturation_level`.
    pub saturation_threshold_count: usize,
    /// Raw intensity at or above which a pixel counts as saturated.
    pub saturation_level: f64,
    /// Reject when the raw MAD falls below this.
    pub mad_min: f64,
    /// Reject when the raw MAD exceeds this.
    pub mad_max: f64,
    /// Side length of the averaging kernel; odd, at most 15.
    pub kernel_size: usize,
    /// Column where the key portion starts, wrapping modulo 512.
    pub angular_offset_cols: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            mad_span: 3.5,
            saturation_threshold_count: 5,
            saturation_level: 0.98,
            mad_min: 0.01,
            mad_max: 0.25,
            kernel_size: 5,
            angular_offset_cols: 0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mad_span.is_finite() && self.mad_span > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mad_span must be positive, got {}",
                self.mad_span
            )));
        }
        if !(self.saturation_level.is_finite()
            && self.saturation_level > 0.0
            && self.saturation_level <= 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "saturation_level must be in (0,1], got {}",
                self.saturation_level
            )));
        }
        if !(self.mad_min.is_finite() && self.mad_min >= 0.0) || !self.mad_max.is_finite() {
            return Err(Error::InvalidArgument(
                "mad_min/mad_max must be finite and non-negative".into(),
            ));
        }
        if self.mad_min >= self.mad_max {
            return Err(Error::InvalidArgument(format!(
                "mad_min ({}) must be below mad_max ({})",
                self.mad_min, self.mad_max
            )));
        }
        check_kernel_size(self.kernel_size)?;
        if self.angular_offset_cols >= NORMALIZED_COLS {
            return Err(Error::InvalidArgument(format!(
                "angular_offset_cols must be below {NORMALIZED_COLS}, got {}",
                self.angular_offset_cols
            )));
        }
        Ok(())
    }
}

fn check_kernel_size(kernel_size: usize) -> Result<()> {
    if kernel_size == 0 || kernel_size.is_multiple_of(2) || kernel_size > 15 {
        return Err(Error::InvalidArgument(format!(
            "kernel size must be odd and in 1..=15, got {kernel_size}"
        )));
    }
    Ok(())
}

/// Slices the key portion: rows 0..16 (innermost radii) and 256 columns
/// starting at `offset_cols`, wrapping modulo 512.
pub fn extract_key(norm: &NormalizedIris, offset_cols: usize) -> Result<KeyPortion> {
    if offset_cols >= NORMALIZED_COLS {
        return Err(Error::InvalidArgument(format!(
            "angular offset must be below {NORMALIZED_COLS}, got {offset_cols}"
        )));
    }
    let mut values = Vec::with_capacity(KEY_LEN);
    for row in 0..KEY_ROWS {
        for col in 0..KEY_COLS {
            values.push(norm.at(row, (offset_cols + col) % NORMALIZED_COLS));
        }
    }
    KeyPortion::new(values, norm.label().clone(), norm.sample_id(), Stage::Raw)
}

/// Median and median absolute deviation. The median of an even-length
/// vector is the mean of the two middle order statistics.
pub fn mad_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mad_stats needs at least one value"));
    }
    let median = median_of(values.to_vec());
    let deviations: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
    let mad = median_of(deviations);
    Ok((median, mad))
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Checks a raw key portion for saturation and spread, in that order.
/// Rejection is a report, not an error.
pub fn quality_filter(key: &KeyPortion, cfg: &PreprocessConfig) -> Result<QualityReport> {
    expect_stage(key, Stage::Raw)?;
    cfg.validate()?;
    let saturated_count = key
        .values()
        .iter()
        .filter(|&&v| v >= cfg.saturation_level)
        .count();
    let (_, mad) = mad_stats(key.values())?;
    if saturated_count > cfg.saturation_threshold_count {
        return Ok(QualityReport::rejected(
            RejectReason::SaturationExceeded,
            saturated_count,
            mad,
        ));
    }
    if mad < cfg.mad_min || mad > cfg.mad_max {
        return Ok(QualityReport::rejected(
            RejectReason::MadOutOfRange,
            saturated_count,
            mad,
        ));
    }
    Ok(QualityReport::ok(saturated_count, mad))
}

/// Centers values on the median and rescales so `median +/- mad_span*mad`
/// maps to [0,1], clamping anything outside the span. The median itself
/// maps to exactly 0.5.
pub fn normalize_range(key: &KeyPortion, mad_span: f64) -> Result<KeyPortion> {
    expect_stage(key, Stage::Raw)?;
    if !(mad_span.is_finite() && mad_span > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mad_span must be positive, got {mad_span}"
        )));
    }
    let (median, mad) = mad_stats(key.values())?;
    if mad == 0.0 {
        return Err(Error::DegenerateSpread);
    }
    let scale = mad_span * mad;
    let values = key
        .values()
        .iter()
        .map(|v| (((v - median) / scale).clamp(-1.0, 1.0) + 1.0) / 2.0)
        .collect();
    KeyPortion::new(
        values,
        key.label().clone(),
        key.sample_id(),
        Stage::Preprocessed,
    )
}

/// Box-filters the 16x256 grid. Rows replicate at the top and bottom
/// edges; columns wrap (the angular direction is periodic).
pub fn smooth(key: &KeyPortion, kernel_size: usize) -> Result<KeyPortion> {
    expect_stage(key, Stage::Preprocessed)?;
    check_kernel_size(kernel_size)?;
    let half = (kernel_size / 2) as isize;
    let weight = 1.0 / (kernel_size * kernel_size) as f64;
    let mut values = Vec::with_capacity(KEY_LEN);
    for row in 0..KEY_ROWS as isize {
        for col in 0..KEY_COLS as isize {
            let mut sum = 0.0;
            for dr in -half..=half {
                let r = (row + dr).clamp(0, KEY_ROWS as isize - 1) as usize;
                for dc in -half..=half {
                    let c = (col + dc).rem_euclid(KEY_COLS as isize) as usize;
                    sum += key.at(r, c);
                }
            }
            values.push((sum * weight).clamp(0.0, 1.0));
        }
    }
    KeyPortion::new(
        values,
        key.label().clone(),
        key.sample_id(),
        Stage::Preprocessed,
    )
}

/// Result of preprocessing one raw key portion.
#[derive(Debug, Clone)]
pub enum PreprocessOutcome {
    Kept(KeyPortion),
    Rejected(QualityReport),
}

impl PreprocessOutcome {
    pub fn kept(&self) -> Option<&KeyPortion> {
        match self {
            PreprocessOutcome::Kept(k) => Some(k),
            PreprocessOutcome::Rejected(_) => None,
        }
    }
}

/// Full preprocessing chain: quality filter on raw values, then range
/// normalization, then smoothing. A rejected key yields its report and no
/// output vector.
pub fn preprocess(key: &KeyPortion, cfg: &PreprocessConfig) -> Result<PreprocessOutcome> {
    let report = quality_filter(key, cfg)?;
    if !report.accepted {
        return Ok(PreprocessOutcome::Rejected(report));
    }
    let normalized = normalize_range(key, cfg.mad_span)?;
    let smoothed = smooth(&normalized, cfg.kernel_size)?;
    Ok(PreprocessOutcome::Kept(smoothed))
}

/// Averages preprocessed key portions per eye. One output per distinct
/// label, elementwise mean, ordered by formatted label.
pub fn average_per_eye(keys: &[KeyPortion]) -> Result<Vec<KeyPortion>> {
    if keys.is_empty() {
        return Err(Error::EmptyInput("average_per_eye needs at least one key"));
    }
    let mut groups: BTreeMap<String, (Vec<f64>, usize, &KeyPortion)> = BTreeMap::new();
    for key in keys {
        expect_stage(key, Stage::Preprocessed)?;
        let entry = groups
            .entry(key.label().to_string())
            .or_insert_with(|| (vec![0.0; KEY_LEN], 0, key));
        for (acc, v) in entry.0.iter_mut().zip(key.values()) {
            *acc += v;
        }
        entry.1 += 1;
    }
    groups
        .into_iter()
        .map(|(formatted, (mut sum, count, exemplar))| {
            for v in &mut sum {
                *v /= count as f64;
            }
            KeyPortion::new(sum, exemplar.label().clone(), formatted, Stage::Averaged)
        })
        .collect()
}

fn expect_stage(key: &KeyPortion, expected: Stage) -> Result<()> {
    if key.stage() != expected {
        return Err(Error::WrongStage {
            expected,
            got: key.stage(),
        });
    }
    Ok(())
}
