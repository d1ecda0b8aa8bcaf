//! Optional `key = value` configuration file plus the precedence rules:
//! explicit flags override the config file; the `IRIS_INDEX_THREADS`
//! environment variable supplies the thread count only when `--threads`
//! is absent.

use std::collections::BTreeMap;
use std::path::Path;

use iris_index::error::{Error, Result};
use iris_index::keyextract::PreprocessConfig;

pub const THREADS_ENV: &str = "IRIS_INDEX_THREADS";

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::FormatAt {
                path: path.to_owned(),
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config value `{raw}` is invalid for `{key}`"))
            }),
        }
    }

    /// flag > environment > config file > automatic (0).
    pub fn resolve_threads(&self, flag: Option<usize>) -> Result<usize> {
        if let Some(n) = flag {
            return Ok(n);
        }
        if let Ok(raw) = std::env::var(THREADS_ENV) {
            return raw.parse::<usize>().map_err(|_| {
                Error::InvalidArgument(format!("{THREADS_ENV}=`{raw}` is not a thread count"))
            });
        }
        Ok(self.get::<usize>("threads")?.unwrap_or(0))
    }

    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag {
            return Ok(s);
        }
        Ok(self.get::<u64>("seed")?.unwrap_or(0))
    }

    /// Merges preprocessing settings: each flag falls back to the config
    /// file, then to the defaults.
    #[allow(clippy::too_many_arguments)]
    pub fn resolve_preprocess(
        &self,
        mad_span: Option<f64>,
        sat_count: Option<usize>,
        sat_level: Option<f64>,
        mad_min: Option<f64>,
        mad_max: Option<f64>,
        kernel_size: Option<usize>,
        offset_cols: Option<usize>,
    ) -> Result<PreprocessConfig> {
        let defaults = PreprocessConfig::default();
        let cfg = PreprocessConfig {
            mad_span: match mad_span {
                Some(v) => v,
                None => self.get("mad_span")?.unwrap_or(defaults.mad_span),
            },
            saturation_threshold_count: match sat_count {
                Some(v) => v,
                None => self
                    .get("saturation_threshold_count")?
                    .unwrap_or(defaults.saturation_threshold_count),
            },
            saturation_level: match sat_level {
                Some(v) => v,
                None => self
                    .get("saturation_level")?
                    .unwrap_or(defaults.saturation_level),
            },
            mad_min: match mad_min {
                Some(v) => v,
                None => self.get("mad_min")?.unwrap_or(defaults.mad_min),
            },
            mad_max: match mad_max {
                Some(v) => v,
                None => self.get("mad_max")?.unwrap_or(defaults.mad_max),
            },
            kernel_size: match kernel_size {
                Some(v) => v,
                None => self.get("kernel_size")?.unwrap_or(defaults.kernel_size),
            },
            angular_offset_cols: match offset_cols {
                Some(v) => v,
                None => self
                    .get("angular_offset_cols")?
                    .unwrap_or(defaults.angular_offset_cols),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
