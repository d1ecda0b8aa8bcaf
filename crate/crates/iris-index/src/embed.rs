//! Linear PCA mapping from 4096-dimensional key portions into the
//! low-dimensional intrinsic code space.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{IntrinsicIrisCode, KeyPortion, Stage, KEY_LEN};

/// Default intrinsic dimension.
pub const DEFAULT_DIM: usize = 4;

/// Relative eigenvalue threshold below which a direction counts as rank
/// deficient rather than signal.
const RANK_TOLERANCE: f64 = 1e-10;

/// A fitted PCA map: mean vector plus `d` orthonormal component vectors
/// over the 4096 key-portion dimensions, ordered by explained variance.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicMap {
    d: usize,
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl IntrinsicMap {
    /// Assembles a map from parts, checking the invariants: component
    /// orthonormality to 1e-9 and non-increasing, non-negative variances.
    pub fn from_parts(
        mean: Vec<f64>,
        components: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("a map needs at least one component"));
        }
        if mean.len() != KEY_LEN {
            return Err(Error::WrongSize {
                expected: KEY_LEN,
                got: mean.len(),
            });
        }
        if let Some(i) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let d = components.len();
        if explained_variance.len() != d {
            return Err(Error::WrongSize {
                expected: d,
                got: explained_variance.len(),
            });
        }
        for c in &components {
            if c.len() != KEY_LEN {
                return Err(Error::WrongSize {
                    expected: KEY_LEN,
                    got: c.len(),
                });
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        for i in 0..d {
            for j in i..d {
                let dot: f64 = components[i]
                    .iter()
                    .zip(&components[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "components {i} and {j} are not orthonormal: <c{i},c{j}> = {dot}"
                    )));
                }
            }
        }
        for w in explained_variance.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidArgument(
                    "explained variance must be non-increasing".into(),
                ));
            }
        }
        if explained_variance.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidArgument(
                "explained variance must be finite and non-negative".into(),
            ));
        }
        Ok(IntrinsicMap {
            d,
            mean,
            components,
            explained_variance,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }
}

/// Fits a `d`-dimensional PCA map on averaged key portions.
///
/// The components are the top right singular directions of the
/// mean-centered data matrix, computed through the n-by-n Gram matrix
/// (the sample count is far below the 4096 ambient dimensions).
/// Explained variances use the sample (n-1) normalization. Component
/// signs follow a deterministic convention: the entry of largest
/// magnitude is positive, ties broken by lowest index.
pub fn fit_map(averages: &[KeyPortion], d: usize) -> Result<IntrinsicMap> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "the map dimension must be at least 1".into(),
        ));
    }
    let n = averages.len();
    if n <= d {
        return Err(Error::InsufficientSamples { need: d + 1, got: n });
    }
    for key in averages {
        if key.stage() != Stage::Averaged {
            return Err(Error::WrongStage {
                expected: Stage::Averaged,
                got: key.stage(),
            });
        }
    }

    let mut mean = vec![0.0f64; KEY_LEN];
    for key in averages {
        for (m, v) in mean.iter_mut().zip(key.values()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = averages
        .par_iter()
        .map(|key| key.values().iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    // Gram matrix of the centered rows; each entry is an independent dot
    // product, so parallel filling stays bit-deterministic.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for j in i..n {
                let mut s = 0.0;
                for (a, b) in centered[i].iter().zip(&centered[j]) {
                    s += a * b;
                }
                row[j] = s;
            }
            row
        })
        .collect();
    let mut gram = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for j in i..n {
            gram[(i, j)] = row[j];
            gram[(j, i)] = row[j];
        }
    }

    let eigen = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let top = eigen.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .take_while(|&&k| eigen.eigenvalues[k] > top * RANK_TOLERANCE && eigen.eigenvalues[k] > 0.0)
        .count();
    if rank < d {
        return Err(Error::RankDeficient { rank, need: d });
    }

    let mut components = Vec::with_capacity(d);
    let mut explained_variance = Vec::with_capacity(d);
    for &k in order.iter().take(d) {
        let u = eigen.eigenvectors.column(k);
        let mut direction = vec![0.0f64; KEY_LEN];
        for (i, row) in centered.iter().enumerate() {
            let w = u[i];
            for (dst, v) in direction.iter_mut().zip(row) {
                *dst += w * v;
            }
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut direction {
            *v /= norm;
        }
        fix_sign(&mut direction);
        components.push(direction);
        explained_variance.push(eigen.eigenvalues[k] / (n as f64 - 1.0));
    }
    IntrinsicMap::from_parts(mean, components, explained_variance)
}

/// Makes the component's largest-magnitude entry positive, ties broken by
/// lowest index.
fn fix_sign(component: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in component.iter().enumerate() {
        if v.abs() > component[best].abs() {
            best = i;
        }
    }
    if component[best] < 0.0 {
        for v in component.iter_mut() {
            *v = -*v;
        }
    }
}

/// Projects a key portion into intrinsic space: the coordinates are the
/// dot products of the mean-centered key with each component. The output
/// carries the key's label.
pub fn project(map: &IntrinsicMap, key: &KeyPortion) -> Result<IntrinsicIrisCode> {
    let coords = project_values(map, key.values());
    IntrinsicIrisCode::new(coords, key.label().clone())
}

pub(crate) fn project_values(map: &IntrinsicMap, values: &[f64]) -> Vec<f64> {
    debug_assert_eq!(values.len(), map.mean.len());
    map.components
        .iter()
        .map(|c| {
            values
                .iter()
                .zip(&map.mean)
                .zip(c)
                .map(|((v, m), w)| (v - m) * w)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_label;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn averaged(values: Vec<f64>, name: &str) -> KeyPortion {
        KeyPortion::new(values, parse_label(name).unwrap(), name, Stage::Averaged).unwrap()
    }

    /// Orthonormal direction vectors built from shifted unit blocks.
    fn directions(count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|k| {
                let mut v = vec![0.0; KEY_LEN];
                // two entries so the largest-magnitude sign rule is exercised
                v[100 * k] = 0.8;
                v[100 * k + 7] = -0.6;
                v
            })
            .collect()
    }

    /// Zero-mean, exactly orthogonal coefficient series (discrete cosine
    /// basis), scaled to the requested sample variance.
    fn coefficients(n: usize, order: usize, variance: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                (std::f64::consts::PI * (order as f64 + 1.0) * (i as f64 + 0.5) / n as f64).cos()
            })
            .collect();
        let sq: f64 = raw.iter().map(|v| v * v).sum();
        let scale = (variance * (n as f64 - 1.0) / sq).sqrt();
        raw.iter().map(|v| v * scale).collect()
    }

    fn spectrum_fixture(n: usize, variances: &[f64]) -> Vec<KeyPortion> {
        let dirs = directions(variances.len());
        (0..n)
            .map(|i| {
                let mut values = vec![0.5; KEY_LEN];
                for (k, var) in variances.iter().enumerate() {
                    let coef = coefficients(n, k, *var);
                    for (v, d) in values.iter_mut().zip(&dirs[k]) {
                        *v += coef[i] * d * 0.05;
                    }
                }
                averaged(values, &format!("s{i:03}_L"))
            })
            .collect()
    }

    #[test]
    fn line_data_recovers_the_line_direction() {
        let mut dir = vec![0.0; KEY_LEN];
        for (i, v) in dir.iter_mut().enumerate() {
            *v = ((i % 13) as f64 - 6.0) / 20.0;
        }
        let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        let keys: Vec<KeyPortion> = (0..12)
            .map(|i| {
                let t = (i as f64 - 5.5) / 40.0;
                let values = dir.iter().map(|d| 0.5 + t * d).collect();
                averaged(values, &format!("p{i}_L"))
            })
            .collect();
        let map = fit_map(&keys, 1).unwrap();
        let cosine: f64 = map.components()[0]
            .iter()
            .zip(&dir)
            .map(|(a, b)| a * b)
            .sum();
        assert!(cosine.abs() >= 1.0 - 1e-9, "cosine {cosine}");
    }

    #[test]
    fn constructed_spectrum_is_recovered_in_order() {
        let variances = [4.0, 3.0, 2.0, 1.0];
        let keys = spectrum_fixture(16, &variances);
        let map = fit_map(&keys, 4).unwrap();
        let dirs = directions(4);
        for (k, (component, dir)) in map.components().iter().zip(&dirs).enumerate() {
            let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cosine: f64 =
                component.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>() / norm;
            assert!(
                cosine.abs() >= 1.0 - 1e-6,
                "component {k} cosine {cosine}"
            );
        }
        let ev = map.explained_variance();
        for k in 1..4 {
            assert!(ev[k] <= ev[k - 1]);
        }
        // variances scale with the 0.05 amplitude used in the fixture
        for (k, var) in variances.iter().enumerate() {
            let expected = var * 0.05 * 0.05;
            assert!(
                (ev[k] - expected).abs() <= 1e-9,
                "variance {k}: {} vs {expected}",
                ev[k]
            );
        }
    }

    #[test]
    fn insufficient_samples_error() {
        let keys = spectrum_fixture(4, &[4.0, 3.0, 2.0, 1.0]);
        assert!(matches!(
            fit_map(&keys, 4),
            Err(Error::InsufficientSamples { need: 5, got: 4 })
        ));
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        // rank-2 data, ask for 3 components
        let keys = spectrum_fixture(10, &[4.0, 2.0]);
        assert!(matches!(
            fit_map(&keys, 3),
            Err(Error::RankDeficient { rank: 2, need: 3 })
        ));
    }

    #[test]
    fn projection_examples() {
        let keys = spectrum_fixture(16, &[4.0, 3.0, 2.0, 1.0]);
        let map = fit_map(&keys, 4).unwrap();
        let mean_key = KeyPortion::new(
            map.mean().to_vec(),
            parse_label("m_L").unwrap(),
            "mean",
            Stage::Averaged,
        )
        .unwrap();
        let code = project(&map, &mean_key).unwrap();
        for c in code.coords() {
            assert!(c.abs() <= 1e-12);
        }
        let shifted: Vec<f64> = map
            .mean()
            .iter()
            .zip(&map.components()[0])
            .map(|(m, c)| m + 2.0 * c)
            .collect();
        let key = KeyPortion::new(shifted, parse_label("m_L").unwrap(), "m2", Stage::Averaged)
            .unwrap();
        let code = project(&map, &key).unwrap();
        assert!((code.coords()[0] - 2.0).abs() <= 1e-9);
        for c in &code.coords()[1..] {
            assert!(c.abs() <= 1e-9);
        }
        assert_eq!(code.label(), key.label());
    }

    #[test]
    fn projection_matches_naive_dot_products() {
        let keys = spectrum_fixture(16, &[4.0, 3.0, 2.0, 1.0]);
        let map = fit_map(&keys, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let values: Vec<f64> = (0..KEY_LEN).map(|_| rng.gen::<f64>()).collect();
            let key = KeyPortion::new(values, parse_label("q_L").unwrap(), "q", Stage::Raw)
                .unwrap();
            let code = project(&map, &key).unwrap();
            for k in 0..4 {
                let mut dot = 0.0;
                for j in 0..KEY_LEN {
                    dot += (key.values()[j] - map.mean()[j]) * map.components()[k][j];
                }
                assert!((code.coords()[k] - dot).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn projection_is_non_expansive() {
        let keys = spectrum_fixture(16, &[4.0, 3.0, 2.0, 1.0]);
        let map = fit_map(&keys, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for _ in 0..20 {
            let a: Vec<f64> = (0..KEY_LEN).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..KEY_LEN).map(|_| rng.gen::<f64>()).collect();
            let key_a =
                KeyPortion::new(a.clone(), parse_label("a_L").unwrap(), "a", Stage::Raw).unwrap();
            let key_b =
                KeyPortion::new(b.clone(), parse_label("b_L").unwrap(), "b", Stage::Raw).unwrap();
            let ca = project(&map, &key_a).unwrap();
            let cb = project(&map, &key_b).unwrap();
            let code_dist: f64 = ca
                .coords()
                .iter()
                .zip(cb.coords())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let key_dist: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            assert!(code_dist <= key_dist + 1e-9);
        }
    }

    #[test]
    fn training_projections_have_zero_mean() {
        let keys = spectrum_fixture(20, &[4.0, 3.0, 2.0, 1.0]);
        let map = fit_map(&keys, 4).unwrap();
        let mut acc = vec![0.0f64; 4];
        for key in &keys {
            let code = project(&map, key).unwrap();
            for (a, c) in acc.iter_mut().zip(code.coords()) {
                *a += c;
            }
        }
        for a in &acc {
            assert!((a / 20.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn variance_capture_is_bounded_by_total() {
        let keys = spectrum_fixture(16, &[4.0, 3.0, 2.0, 1.0]);
        let n = keys.len();
        let map = fit_map(&keys, 4).unwrap();
        let mut total = 0.0;
        for key in &keys {
            for (v, m) in key.values().iter().zip(map.mean()) {
                total += (v - m) * (v - m);
            }
        }
        total /= n as f64 - 1.0;
        let captured: f64 = map.explained_variance().iter().sum();
        assert!(captured <= total + 1e-9);
        // rank is exactly 4 here, so equality holds
        assert!((captured - total).abs() <= 1e-9);
    }

    #[test]
    fn fit_is_deterministic_and_order_insensitive() {
        let keys = spectrum_fixture(16, &[4.0, 3.0, 2.0, 1.0]);
        let map1 = fit_map(&keys, 4).unwrap();
        let map2 = fit_map(&keys, 4).unwrap();
        assert_eq!(map1.components(), map2.components());
        let mut shuffled = keys.clone();
        shuffled.reverse();
        shuffled.swap(0, 7);
        let map3 = fit_map(&shuffled, 4).unwrap();
        for k in 0..4 {
            for (a, b) in map1.components()[k].iter().zip(&map3.components()[k]) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn orthonormality_holds_within_tolerance() {
        let keys = spectrum_fixture(24, &[4.0, 3.0, 2.0, 1.0]);
        let map = fit_map(&keys, 4).unwrap();
        for i in 0..4 {
            for j in i..4 {
                let dot: f64 = map.components()[i]
                    .iter()
                    .zip(&map.components()[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() <= 1e-9, "<c{i},c{j}> = {dot}");
            }
        }
    }

    #[test]
    fn wrong_stage_is_rejected() {
        let raw = KeyPortion::new(
            vec![0.5; KEY_LEN],
            parse_label("r_L").unwrap(),
            "r",
            Stage::Raw,
        )
        .unwrap();
        let keys = vec![raw; 8];
        assert!(matches!(
            fit_map(&keys, 1),
            Err(Error::WrongStage { .. })
        ));
    }
}
