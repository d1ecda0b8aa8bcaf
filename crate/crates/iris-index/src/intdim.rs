//! Intrinsic dimension estimation via the correlation dimension: the
//! slope of the log-log correlation integral over a radius range chosen
//! by quantiles of the pairwise-distance distribution.
//!
//! Neighborhood sizes are given as percentages of the sample count; a
//! percentage `p` maps to the radius at which the correlation integral
//! reaches `p/100`, equivalently an average of `p/100 * (n-1)` neighbors
//! per point.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// The twelve neighborhood ranges of the standard results table: eight
/// narrow 10%-wide bands followed by four wide bands centered on 50%.
pub const DEFAULT_TABLE_RANGES: [(f64, f64); 12] = [
    (10.0, 20.0),
    (20.0, 30.0),
    (30.0, 40.0),
    (40.0, 50.0),
    (50.0, 60.0),
    (60.0, 70.0),
    (70.0, 80.0),
    (80.0, 90.0),
    (10.0, 90.0),
    (20.0, 80.0),
    (30.0, 70.0),
    (40.0, 60.0),
];

/// Default number of log-spaced radii used for the slope fit.
pub const DEFAULT_FIT_POINTS: usize = 16;

/// All `n*(n-1)/2` pairwise Euclidean distances of a point set, sorted
/// ascending.
#[derive(Debug, Clone)]
pub struct DistanceSet {
    n_points: usize,
    distances: Vec<f64>,
}

impl DistanceSet {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn n_pairs(&self) -> usize {
        self.distances.len()
    }

    /// Correlation integral `C(r)`: the fraction of pair distances below
    /// `r`. A valid CDF in `r`: non-decreasing with limits 0 and 1.
    pub fn correlation_integral(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {r}"
            )));
        }
        let below = self.distances.partition_point(|&d| d < r);
        Ok(below as f64 / self.distances.len() as f64)
    }

    /// The `q`-quantile of the pair distances (linear interpolation
    /// between order statistics): the radius at which the correlation
    /// integral reaches `q`.
    pub fn radius_at_fraction(&self, q: f64) -> Result<f64> {
        if !(q.is_finite() && q > 0.0 && q < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fraction must be in (0,1), got {q}"
            )));
        }
        let m = self.distances.len();
        let pos = q * (m - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(m - 1);
        let frac = pos - lo as f64;
        Ok(self.distances[lo] + frac * (self.distances[hi] - self.distances[lo]))
    }
}

/// Computes the sorted pairwise Euclidean distances of `points`.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Result<DistanceSet> {
    if points.len() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: points.len(),
        });
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let n = points.len();
    let mut distances: Vec<f64> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let a = &points[i];
            let mut row = Vec::with_capacity(n - 1 - i);
            for b in &points[i + 1..] {
                let mut sum = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let diff = x - y;
                    sum += diff * diff;
                }
                row.push(sum.sqrt());
            }
            row
        })
        .flatten()
        .collect();
    distances.sort_unstable_by(f64::total_cmp);
    Ok(DistanceSet {
        n_points: n,
        distances,
    })
}

/// One row of the correlation-dimension table.
#[derive(Debug, Clone, PartialEq)]
pub struct DimEstimate {
    /// Smallest neighborhood size, percent of samples.
    pub lo_pct: f64,
    /// Largest neighborhood size, percent of samples.
    pub hi_pct: f64,
    /// Fitted log-log slope: the dimension estimate.
    pub slope: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_rmse: f64,
    /// Number of radii that entered the fit.
    pub n_fit_points: usize,
}

/// Estimates the correlation dimension over one neighborhood range from a
/// precomputed distance set.
///
/// Evaluates `C(r)` at `n_fit_points` log-spaced radii between the
/// `lo_pct` and `hi_pct` distance quantiles and fits `log C` against
/// `log r` by ordinary least squares. Radii where `C` is still zero are
/// excluded from the fit.
pub fn estimate_from_distances(
    dset: &DistanceSet,
    lo_pct: f64,
    hi_pct: f64,
    n_fit_points: usize,
) -> Result<DimEstimate> {
    if !(lo_pct.is_finite() && hi_pct.is_finite() && 0.0 < lo_pct && lo_pct < hi_pct && hi_pct < 100.0)
    {
        return Err(Error::InvalidArgument(format!(
            "need 0 < lo_pct < hi_pct < 100, got {lo_pct}..{hi_pct}"
        )));
    }
    if n_fit_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 fit points, got {n_fit_points}"
        )));
    }
    let zero_pairs = dset.distances.partition_point(|&d| d <= 0.0);
    if zero_pairs as f64 > 0.01 * dset.n_pairs() as f64 {
        return Err(Error::DegenerateGeometry(format!(
            "{zero_pairs} of {} pair distances are zero (duplicate points)",
            dset.n_pairs()
        )));
    }
    let r_lo = dset.radius_at_fraction(lo_pct / 100.0)?;
    let r_hi = dset.radius_at_fraction(hi_pct / 100.0)?;
    if r_lo <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "the {lo_pct}% neighborhood radius is zero"
        )));
    }
    if r_hi <= r_lo {
        return Err(Error::DegenerateGeometry(format!(
            "degenerate radius range: [{r_lo}, {r_hi}]"
        )));
    }
    let ln_lo = r_lo.ln();
    let step = (r_hi.ln() - ln_lo) / (n_fit_points - 1) as f64;
    let mut xs = Vec::with_capacity(n_fit_points);
    let mut ys = Vec::with_capacity(n_fit_points);
    for i in 0..n_fit_points {
        let r = (ln_lo + step * i as f64).exp();
        let c = dset.correlation_integral(r)?;
        if c > 0.0 {
            xs.push(r.ln());
            ys.push(c.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateGeometry(
            "fewer than two radii carry a non-zero correlation integral".into(),
        ));
    }
    let (slope, intercept) = ols(&xs, &ys)?;
    let rmse = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let resid = y - (intercept + slope * x);
            resid * resid
        })
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(DimEstimate {
        lo_pct,
        hi_pct,
        slope: slope.max(0.0),
        fit_rmse: rmse,
        n_fit_points: xs.len(),
    })
}

/// Convenience wrapper computing the distances first.
pub fn estimate_dimension(
    points: &[Vec<f64>],
    lo_pct: f64,
    hi_pct: f64,
    n_fit_points: usize,
) -> Result<DimEstimate> {
    let dset = pairwise_distances(points)?;
    estimate_from_distances(&dset, lo_pct, hi_pct, n_fit_points)
}

/// Estimates over several ranges, sharing one distance set.
pub fn dimension_table(points: &[Vec<f64>], ranges: &[(f64, f64)]) -> Result<Vec<DimEstimate>> {
    let dset = pairwise_distances(points)?;
    ranges
        .iter()
        .map(|&(lo, hi)| estimate_from_distances(&dset, lo, hi, DEFAULT_FIT_POINTS))
        .collect()
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateGeometry(
            "all fit radii coincide; cannot fit a slope".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, mean_y - slope * mean_x))
}
