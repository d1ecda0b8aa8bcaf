//! Synthetic datasets with known ground truth: eyes as points on a
//! manifold of chosen dimension in key-portion space, per-sample
//! observation noise, and synthetic eye images for the normalizer.
//!
//! Everything is a pure function of its configuration. Randomness comes
//! from ChaCha8 streams derived from the seed and a counter, so parallel
//! callers can partition work by index without sharing a generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{EyeLabel, KeyPortion, Side, Stage, KEY_LEN};
use crate::normalize::{Circle, EyeImage};

/// Scale applied to the orthonormal embedding columns.
const EMBED_SCALE: f64 = 0.4;

const STREAM_EMBEDDING: u64 = 1 << 60;
const STREAM_EYE: u64 = 2 << 60;
const STREAM_SAMPLE: u64 = 3 << 60;
const STREAM_IMAGE: u64 = 4 << 60;

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How latent coordinates turn into 4096-dimensional key portions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    /// Isometric: a seeded 4096 x d matrix with orthonormal columns
    /// scaled by 0.4, applied to the centered latent point.
    Linear,
    /// Componentwise sinusoidal mixing of the latent coordinates with
    /// seeded frequencies and phases.
    Smooth,
}

/// Configuration for the synthetic-eye generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_eyes: usize,
    pub d_true: usize,
    pub samples_per_eye: usize,
    pub noise_sigma: f64,
    pub embedding: Embedding,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_eyes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 eyes, got {}",
                self.n_eyes
            )));
        }
        if self.d_true == 0 || self.d_true > KEY_LEN {
            return Err(Error::InvalidArgument(format!(
                "true dimension must be in 1..={KEY_LEN}, got {}",
                self.d_true
            )));
        }
        if self.samples_per_eye == 0 {
            return Err(Error::InvalidArgument(
                "need at least one sample per eye".into(),
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

fn eye_label(index: usize) -> EyeLabel {
    EyeLabel::new(format!("synth_{:04}", index + 1), Side::Left).expect("generated id is valid")
}

/// Generates one averaged key portion per eye, lying exactly on the
/// configured manifold. Labels run `synth_0001_L`, `synth_0002_L`, ...
pub fn gen_eyes(cfg: &SynthConfig) -> Result<Vec<KeyPortion>> {
    cfg.validate()?;
    let embedding = EmbeddingParams::generate(cfg);
    (0..cfg.n_eyes)
        .map(|e| {
            let mut rng = substream(cfg.seed, STREAM_EYE + e as u64);
            let latent: Vec<f64> = (0..cfg.d_true).map(|_| rng.gen::<f64>()).collect();
            let values = embedding.embed(&latent);
            KeyPortion::new(values, eye_label(e), eye_label(e).to_string(), Stage::Averaged)
        })
        .collect()
}

enum EmbeddingParams {
    /// Column-major 4096 x d matrix with orthonormal columns scaled by 0.4.
    Linear(Vec<Vec<f64>>),
    /// Per-output phase and per-output latent frequencies.
    Smooth {
        phases: Vec<f64>,
        frequencies: Vec<Vec<f64>>,
    },
}

impl EmbeddingParams {
    fn generate(cfg: &SynthConfig) -> Self {
        let mut rng = substream(cfg.seed, STREAM_EMBEDDING);
        match cfg.embedding {
            Embedding::Linear => {
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cfg.d_true);
                for _ in 0..cfg.d_true {
                    let mut col: Vec<f64> =
                        (0..KEY_LEN).map(|_| normal.sample(&mut rng)).collect();
                    // modified Gram-Schmidt against the accepted columns
                    for prev in &columns {
                        let dot: f64 = col.iter().zip(prev).map(|(a, b)| a * b).sum();
                        for (c, p) in col.iter_mut().zip(prev) {
                            *c -= dot * p;
                        }
                    }
                    let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for c in &mut col {
                        *c /= norm;
                    }
                    columns.push(col);
                }
                for col in &mut columns {
                    for v in col.iter_mut() {
                        *v *= EMBED_SCALE;
                    }
                }
                EmbeddingParams::Linear(columns)
            }
            Embedding::Smooth => {
                let mut phases = Vec::with_capacity(KEY_LEN);
                let mut frequencies = Vec::with_capacity(KEY_LEN);
                for _ in 0..KEY_LEN {
                    phases.push(rng.gen::<f64>() * std::f64::consts::TAU);
                    frequencies.push(
                        (0..cfg.d_true)
                            .map(|_| (rng.gen::<f64>() * 4.0 - 2.0) * std::f64::consts::PI)
                            .collect(),
                    );
                }
                EmbeddingParams::Smooth {
                    phases,
                    frequencies,
                }
            }
        }
    }

    fn embed(&self, latent: &[f64]) -> Vec<f64> {
        match self {
            EmbeddingParams::Linear(columns) => {
                let mut values = vec![0.5f64; KEY_LEN];
                for (col, z) in columns.iter().zip(latent) {
                    let offset = z - 0.5;
                    for (v, c) in values.iter_mut().zip(col) {
                        *v += offset * c;
                    }
                }
                for v in &mut values {
                    *v = v.clamp(0.0, 1.0);
                }
                values
            }
            EmbeddingParams::Smooth {
                phases,
                frequencies,
            } => phases
                .iter()
                .zip(frequencies)
                .map(|(phase, freq)| {
                    let arg: f64 =
                        phase + freq.iter().zip(latent).map(|(w, z)| w * z).sum::<f64>();
                    (0.5 + 0.35 * arg.sin()).clamp(0.0, 1.0)
                })
                .collect(),
        }
    }
}

/// Draws noisy raw samples of each eye: the eye key plus i.i.d. Gaussian
/// noise, clamped to [0,1]. Sample ids append `_s<index>` to the label.
pub fn gen_samples(
    eyes: &[KeyPortion],
    samples_per_eye: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<KeyPortion>> {
    if eyes.is_empty() {
        return Err(Error::EmptyInput("gen_samples needs at least one eye"));
    }
    if samples_per_eye == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample per eye".into(),
        ));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }
    for eye in eyes {
        if eye.stage() != Stage::Averaged {
            return Err(Error::WrongStage {
                expected: Stage::Averaged,
                got: eye.stage(),
            });
        }
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| {
        Error::InvalidArgument(format!("invalid noise distribution: {e}"))
    })?;
    let mut out = Vec::with_capacity(eyes.len() * samples_per_eye);
    for (e, eye) in eyes.iter().enumerate() {
        for s in 0..samples_per_eye {
            let counter = (e * samples_per_eye + s) as u64;
            let mut rng = substream(seed, STREAM_SAMPLE + counter);
            let values: Vec<f64> = eye
                .values()
                .iter()
                .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            out.push(KeyPortion::new(
                values,
                eye.label().clone(),
                format!("{}_s{s:03}", eye.label()),
                Stage::Raw,
            )?);
        }
    }
    Ok(out)
}

/// Fixture pattern for synthetic eye images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImagePattern {
    /// Intensity is a smooth sinusoid of the distance to `center`, so a
    /// concentric unwrap produces constant rows.
    Radial,
    /// Constant 0.5 everywhere.
    Uniform,
}

/// Renders a square synthetic eye image together with the exact circles
/// used, for exercising the rubber-sheet normalizer.
pub fn gen_eye_image(
    size: usize,
    pattern: ImagePattern,
    center: (f64, f64),
    r_pupil: f64,
    r_iris: f64,
    seed: u64,
) -> Result<(EyeImage, Circle, Circle)> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!(
            "image size must be at least 2, got {size}"
        )));
    }
    let pupil = Circle::new(center.0, center.1, r_pupil)?;
    let iris = Circle::new(center.0, center.1, r_iris)?;
    if r_pupil >= r_iris {
        return Err(Error::InvalidGeometry(format!(
            "pupil radius {r_pupil} must be below iris radius {r_iris}"
        )));
    }
    let max = (size - 1) as f64;
    if center.0 - r_iris < 0.0
        || center.1 - r_iris < 0.0
        || center.0 + r_iris > max
        || center.1 + r_iris > max
    {
        return Err(Error::InvalidGeometry(
            "iris circle extends outside the image".into(),
        ));
    }
    let phase = match pattern {
        ImagePattern::Radial => substream(seed, STREAM_IMAGE).gen::<f64>() * std::f64::consts::TAU,
        ImagePattern::Uniform => 0.0,
    };
    let pixels: Vec<f64> = (0..size * size)
        .map(|i| match pattern {
            ImagePattern::Uniform => 0.5,
            ImagePattern::Radial => {
                let x = (i % size) as f64;
                let y = (i / size) as f64;
                let rho = ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt();
                0.5 + 0.35 * (std::f64::consts::TAU * rho / 140.0 + phase).sin()
            }
        })
        .collect();
    let name = match pattern {
        ImagePattern::Radial => format!("radial_{seed}"),
        ImagePattern::Uniform => format!("uniform_{seed}"),
    };
    let label = EyeLabel::new("synth", Side::Left)?;
    let image = EyeImage::new(size, size, pixels, label, name)?;
    Ok((image, pupil, iris))
}
