//! Rubber-sheet normalization: maps the annulus between the fitted pupil
//! and iris circles onto a fixed 64x512 polar grid, after trimming both
//! radii to keep stray pupil and sclera pixels out of the output.

use crate::error::{Error, Result};
use crate::model::{EyeLabel, NormalizedIris, NORMALIZED_COLS, NORMALIZED_ROWS};

/// Fraction of the iris-pupil radius difference added to the pupil radius.
pub const PUPIL_TRIM_FRACTION: f64 = 0.10;
/// Fraction of the iris-pupil radius difference removed from the iris radius.
pub const IRIS_TRIM_FRACTION: f64 = 0.05;

/// A circle fitted to an iris boundary, in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Result<Self> {
        if !cx.is_finite() || !cy.is_finite() || !r.is_finite() || r <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "circle must have finite center and positive radius, got ({cx}, {cy}, r={r})"
            )));
        }
        Ok(Circle { cx, cy, r })
    }
}

/// A grayscale eye image with intensities in [0,1], row-major.
#[derive(Debug, Clone)]
pub struct EyeImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    label: EyeLabel,
    sample_id: String,
}

impl EyeImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        label: EyeLabel,
        sample_id: impl Into<String>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "image dimensions must be positive".into(),
            ));
        }
        if pixels.len() != width * height {
            return Err(Error::WrongSize {
                expected: width * height,
                got: pixels.len(),
            });
        }
        for (i, &v) in pixels.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ValueOutOfRange { index: i, value: v });
            }
        }
        Ok(EyeImage {
            width,
            height,
            pixels,
            label,
            sample_id: sample_id.into(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn label(&self) -> &EyeLabel {
        &self.label
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// Bilinear interpolation at fractional pixel coordinates, `None`
    /// outside the pixel-center grid. Written as nested lerps so constant
    /// regions interpolate exactly.
    fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !self.contains(x, y) {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let top = lerp(self.pixel(x0, y0), self.pixel(x1, y0), fx);
        let bottom = lerp(self.pixel(x0, y1), self.pixel(x1, y1), fx);
        Some(lerp(top, bottom, fy))
    }

    fn pixel(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Trims the fitted radii: the pupil radius grows by 10% of the
/// iris-pupil difference and the iris radius shrinks by 5% of it.
pub fn trim_radii(r_pupil: f64, r_iris: f64) -> Result<(f64, f64)> {
    if !r_pupil.is_finite() || !r_iris.is_finite() || r_pupil <= 0.0 || r_pupil >= r_iris {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < pupil radius < iris radius, got pupil={r_pupil}, iris={r_iris}"
        )));
    }
    let diff = r_iris - r_pupil;
    Ok((
        r_pupil + PUPIL_TRIM_FRACTION * diff,
        r_iris - IRIS_TRIM_FRACTION * diff,
    ))
}

/// Unwraps the annulus between the trimmed boundary circles into a 64x512
/// normalized iris.
///
/// Column `j` corresponds to angle `2*pi*j/512` with the angle origin along
/// +x and increasing toward +y (image-down). Row `k` samples the radial
/// position `(k+0.5)/64` of the way from the trimmed inner boundary to the
/// trimmed outer boundary, so row 0 is innermost. Any sample or boundary
/// point falling outside the image is a hard error; nothing is clamped.
pub fn unwrap(image: &EyeImage, pupil: &Circle, iris: &Circle) -> Result<NormalizedIris> {
    unwrap_with_origin(image, pupil, iris, 0)
}

/// `unwrap` with the angle origin rotated to column `origin_col`; used to
/// check angular periodicity. `unwrap` is the `origin_col = 0` case.
pub(crate) fn unwrap_with_origin(
    image: &EyeImage,
    pupil: &Circle,
    iris: &Circle,
    origin_col: usize,
) -> Result<NormalizedIris> {
    let (r_inner, r_outer) = trim_radii(pupil.r, iris.r)?;
    let mut pixels = vec![0.0; NORMALIZED_ROWS * NORMALIZED_COLS];
    for col in 0..NORMALIZED_COLS {
        let theta = std::f64::consts::TAU * (((col + origin_col) % NORMALIZED_COLS) as f64)
            / NORMALIZED_COLS as f64;
        let (sin, cos) = theta.sin_cos();
        let inner = (pupil.cx + r_inner * cos, pupil.cy + r_inner * sin);
        let outer = (iris.cx + r_outer * cos, iris.cy + r_outer * sin);
        if !image.contains(inner.0, inner.1) {
            return Err(Error::OutOfBounds { row: 0, col });
        }
        if !image.contains(outer.0, outer.1) {
            return Err(Error::OutOfBounds {
                row: NORMALIZED_ROWS - 1,
                col,
            });
        }
        for row in 0..NORMALIZED_ROWS {
            let t = (row as f64 + 0.5) / NORMALIZED_ROWS as f64;
            let x = inner.0 + t * (outer.0 - inner.0);
            let y = inner.1 + t * (outer.1 - inner.1);
            let v = image
                .bilinear(x, y)
                .ok_or(Error::OutOfBounds { row, col })?;
            pixels[row * NORMALIZED_COLS + col] = v.clamp(0.0, 1.0);
        }
    }
    NormalizedIris::new(pixels, image.label().clone(), image.sample_id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_label;

    fn label() -> EyeLabel {
        parse_label("t_L").unwrap()
    }

    fn radial_image(size: usize, cx: f64, cy: f64) -> EyeImage {
        let pixels = (0..size * size)
            .map(|i| {
                let x = (i % size) as f64;
                let y = (i / size) as f64;
                let rho = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                0.5 + 0.35 * (std::f64::consts::TAU * rho / 140.0).sin()
            })
            .collect();
        EyeImage::new(size, size, pixels, label(), "radial").unwrap()
    }

    #[test]
    fn trim_radii_examples() {
        assert_eq!(trim_radii(50.0, 150.0).unwrap(), (60.0, 145.0));
        assert_eq!(trim_radii(10.0, 110.0).unwrap(), (20.0, 105.0));
        assert!(matches!(
            trim_radii(100.0, 100.0),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(trim_radii(150.0, 50.0).is_err());
        assert!(trim_radii(0.0, 50.0).is_err());
    }

    #[test]
    fn trim_radii_preserves_ordering() {
        let mut r = 1.0_f64;
        for _ in 0..200 {
            r = (r * 1.07) % 97.0 + 1.0;
            let r_iris = r + (r * 13.7) % 50.0 + 0.5;
            let (a, b) = trim_radii(r, r_iris).unwrap();
            assert!(a < b, "trimmed {a} !< {b} for input ({r}, {r_iris})");
            assert!(a > r && b < r_iris);
        }
    }

    #[test]
    fn unwrap_of_uniform_image_is_constant() {
        let image = EyeImage::new(400, 400, vec![0.5; 160000], label(), "u").unwrap();
        let pupil = Circle::new(200.0, 200.0, 50.0).unwrap();
        let iris = Circle::new(200.0, 200.0, 150.0).unwrap();
        let norm = unwrap(&image, &pupil, &iris).unwrap();
        assert!(norm.pixels().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn unwrap_of_radial_image_gives_constant_rows() {
        let image = radial_image(400, 200.0, 200.0);
        let pupil = Circle::new(200.0, 200.0, 50.0).unwrap();
        let iris = Circle::new(200.0, 200.0, 150.0).unwrap();
        let norm = unwrap(&image, &pupil, &iris).unwrap();
        for row in 0..NORMALIZED_ROWS {
            let vals: Vec<f64> = (0..NORMALIZED_COLS).map(|c| norm.at(row, c)).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo <= 1e-3, "row {row} spread {}", hi - lo);
        }
    }

    #[test]
    fn unwrap_errors_when_outer_boundary_exits_image() {
        let image = EyeImage::new(200, 200, vec![0.5; 40000], label(), "u").unwrap();
        let pupil = Circle::new(100.0, 100.0, 40.0).unwrap();
        let iris = Circle::new(100.0, 100.0, 120.0).unwrap();
        match unwrap(&image, &pupil, &iris) {
            Err(Error::OutOfBounds { row, .. }) => assert_eq!(row, NORMALIZED_ROWS - 1),
            other => panic!("expected out-of-bounds error, got {other:?}"),
        }
    }

    #[test]
    fn unwrap_rejects_invalid_circles() {
        let image = EyeImage::new(200, 200, vec![0.5; 40000], label(), "u").unwrap();
        let pupil = Circle::new(100.0, 100.0, 80.0).unwrap();
        let iris = Circle::new(100.0, 100.0, 60.0).unwrap();
        assert!(matches!(
            unwrap(&image, &pupil, &iris),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn angular_periodicity_is_a_column_shift() {
        let image = radial_image(300, 150.0, 150.0);
        // off-center texture so columns actually differ
        let mut pixels = image.pixels().to_vec();
        for (i, p) in pixels.iter_mut().enumerate() {
            let x = (i % 300) as f64;
            *p = (*p + 0.1 * (x / 300.0)).clamp(0.0, 1.0);
        }
        let image = EyeImage::new(300, 300, pixels, label(), "tex").unwrap();
        let pupil = Circle::new(150.0, 150.0, 30.0).unwrap();
        let iris = Circle::new(150.0, 150.0, 100.0).unwrap();
        let base = unwrap(&image, &pupil, &iris).unwrap();
        for m in [1usize, 17, 300] {
            let rotated = unwrap_with_origin(&image, &pupil, &iris, m).unwrap();
            for row in 0..NORMALIZED_ROWS {
                for col in 0..NORMALIZED_COLS {
                    let expect = base.at(row, (col + m) % NORMALIZED_COLS);
                    assert_eq!(rotated.at(row, col), expect, "m={m} row={row} col={col}");
                }
            }
        }
    }

    #[test]
    fn non_concentric_circles_interpolate_between_boundaries() {
        let image = EyeImage::new(400, 400, vec![0.5; 160000], label(), "u").unwrap();
        let pupil = Circle::new(195.0, 202.0, 40.0).unwrap();
        let iris = Circle::new(200.0, 200.0, 140.0).unwrap();
        let norm = unwrap(&image, &pupil, &iris).unwrap();
        assert!(norm.pixels().iter().all(|&v| v == 0.5));
    }
}
