//! Enrollment, identification search, and the penetration-rate statistic.
//!
//! Identification is modeled exactly: distances from a query code to every
//! enrolled code are sorted ascending (ties broken by formatted label) and
//! the search stops at the first entry whose label matches the query's.
//! The rank of that entry, divided by the database size, is one
//! penetration sample.

use rayon::prelude::*;

use crate::embed::{project, IntrinsicMap};
use crate::error::{Error, Result};
use crate::io::map_fingerprint;
use crate::model::{EyeLabel, IntrinsicIrisCode, KeyPortion};

/// Default number of histogram bins over [0,1].
pub const DEFAULT_HISTOGRAM_BINS: usize = 100;

/// One enrolled eye: its label and intrinsic-space coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub label: EyeLabel,
    pub coords: Vec<f64>,
}

/// The enrolled database: one entry per eye, sorted by formatted label,
/// tagged with the fingerprint of the map that produced the codes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrollmentDB {
    entries: Vec<Entry>,
    d: usize,
    map_fingerprint: u64,
}

impl EnrollmentDB {
    /// Builds a database from parts, enforcing unique labels, uniform
    /// dimension, and label-sorted order.
    pub fn from_parts(mut entries: Vec<Entry>, d: usize, map_fingerprint: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("an enrollment database needs entries"));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        for e in &entries {
            if e.coords.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.coords.len(),
                });
            }
            if let Some(i) = e.coords.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        entries.sort_by_key(|a| a.label.to_string());
        for w in entries.windows(2) {
            if w[0].label == w[1].label {
                return Err(Error::DuplicateLabel(w[0].label.to_string()));
            }
        }
        Ok(EnrollmentDB {
            entries,
            d,
            map_fingerprint,
        })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn map_fingerprint(&self) -> u64 {
        self.map_fingerprint
    }

    pub fn contains(&self, label: &EyeLabel) -> bool {
        self.entries.iter().any(|e| &e.label == label)
    }
}

/// Projects one averaged key portion per eye and enrolls the codes.
pub fn enroll(map: &IntrinsicMap, averages: &[KeyPortion]) -> Result<EnrollmentDB> {
    let entries = averages
        .iter()
        .map(|key| {
            let code = project(map, key)?;
            Ok(Entry {
                label: key.label().clone(),
                coords: code.coords().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EnrollmentDB::from_parts(entries, map.d(), map_fingerprint(map))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The number of enrolled entries that must be examined, in ascending
/// distance order, before reaching the query's own eye (1-based).
pub fn query_rank(db: &EnrollmentDB, query: &IntrinsicIrisCode) -> Result<usize> {
    if query.d() != db.d {
        return Err(Error::DimensionMismatch {
            expected: db.d,
            got: query.d(),
        });
    }
    let own = db
        .entries
        .iter()
        .find(|e| &e.label == query.label())
        .ok_or_else(|| Error::UnknownLabel(query.label().to_string()))?;
    let own_dist = euclidean(&own.coords, query.coords());
    let own_fmt = own.label.to_string();
    // rank = 1 + number of entries strictly ahead in (distance, label) order
    let ahead = db
        .entries
        .iter()
        .filter(|e| {
            let d = euclidean(&e.coords, query.coords());
            match d.total_cmp(&own_dist) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => e.label.to_string() < own_fmt,
                std::cmp::Ordering::Greater => false,
            }
        })
        .count();
    Ok(ahead + 1)
}

/// One candidate produced by the expanding search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub label: EyeLabel,
    pub distance: f64,
}

/// Iterator over enrolled entries in non-decreasing distance order,
/// yielded in batches; concatenating all batches gives the full sorted
/// candidate list.
pub struct ExpandingSearch {
    sorted: Vec<SearchHit>,
    batch: usize,
    pos: usize,
}

/// Begins an expanding-neighborhood search around `coords`.
///
/// The search order is the exact sorted order (distance ascending, ties
/// by formatted label); `batch` controls how many candidates each step
/// yields and must be at least 1.
pub fn expanding_search(db: &EnrollmentDB, coords: &[f64], batch: usize) -> ExpandingSearch {
    assert!(batch >= 1, "batch size must be at least 1");
    let mut sorted: Vec<(f64, String, usize)> = db
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (euclidean(&e.coords, coords), e.label.to_string(), i))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    ExpandingSearch {
        sorted: sorted
            .into_iter()
            .map(|(distance, _, i)| SearchHit {
                label: db.entries[i].label.clone(),
                distance,
            })
            .collect(),
        batch,
        pos: 0,
    }
}

impl Iterator for ExpandingSearch {
    type Item = Vec<SearchHit>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.sorted.len() {
            return None;
        }
        let end = (self.pos + self.batch).min(self.sorted.len());
        let batch = self.sorted[self.pos..end].to_vec();
        self.pos = end;
        Some(batch)
    }
}

/// The penetration-rate statistic over a set of query codes.
#[derive(Debug, Clone, PartialEq)]
pub struct PenetrationResult {
    /// Mean penetration: the average fraction of the database examined.
    pub p: f64,
    /// Per-query penetration samples `C_i / N`, in query order.
    pub samples: Vec<f64>,
    /// Number of queries.
    pub q: usize,
    /// Number of enrolled eyes.
    pub n: usize,
    /// Equal-width bin counts of the samples over [0,1]; the last bin is
    /// right-inclusive.
    pub histogram: Vec<u64>,
}

/// Computes the penetration rate `P = (1/Q) * sum(C_i / N)`.
pub fn penetration(
    db: &EnrollmentDB,
    queries: &[IntrinsicIrisCode],
    n_bins: usize,
) -> Result<PenetrationResult> {
    if queries.is_empty() {
        return Err(Error::EmptyInput("penetration needs at least one query"));
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("need at least one histogram bin".into()));
    }
    let ranks: Vec<usize> = queries
        .par_iter()
        .map(|q| query_rank(db, q))
        .collect::<Result<Vec<_>>>()?;
    let n = db.len();
    let samples: Vec<f64> = ranks.iter().map(|&c| c as f64 / n as f64).collect();
    // exact integer rank total, one correctly rounded division; agrees
    // with mean(samples) to well below 1e-12
    let total: u64 = ranks.iter().map(|&c| c as u64).sum();
    let p = total as f64 / (queries.len() as f64 * n as f64);
    let mut histogram = vec![0u64; n_bins];
    for &s in &samples {
        let bin = ((s * n_bins as f64).floor() as usize).min(n_bins - 1);
        histogram[bin] += 1;
    }
    Ok(PenetrationResult {
        p,
        samples,
        q: queries.len(),
        n,
        histogram,
    })
}

/// Fits, enrolls, and benchmarks the penetration rate at each requested
/// mapping dimension.
pub fn dimension_sweep(
    averages: &[KeyPortion],
    samples: &[KeyPortion],
    dims: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if dims.is_empty() {
        return Err(Error::EmptyInput("dimension sweep needs at least one dimension"));
    }
    dims.iter()
        .map(|&d| {
            let map = crate::embed::fit_map(averages, d)?;
            let db = enroll(&map, averages)?;
            let queries = samples
                .iter()
                .map(|key| project(&map, key))
                .collect::<Result<Vec<_>>>()?;
            let result = penetration(&db, &queries, DEFAULT_HISTOGRAM_BINS)?;
            Ok((d, result.p))
        })
        .collect()
}
