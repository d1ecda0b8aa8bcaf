//! One function per subcommand, all speaking the checkpoint file formats.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use iris_index::embed::fit_map;
use iris_index::error::{Error, Result};
use iris_index::index::{dimension_sweep, enroll, expanding_search, penetration, query_rank};
use iris_index::intdim::{dimension_table, DEFAULT_TABLE_RANGES};
use iris_index::io::{
    map_fingerprint, read_db_checked, read_key_portion, read_manifest, read_map,
    read_normalized_iris, read_pgm_gray, write_db, write_key_portion, write_manifest, write_map,
    write_normalized_iris, Manifest, ManifestRow,
};
use iris_index::keyextract::{
    average_per_eye, extract_key, preprocess, quality_filter, PreprocessConfig, PreprocessOutcome,
};
use iris_index::model::{IntrinsicIrisCode, KeyPortion, NormalizedIris, QualityReport};
use iris_index::normalize::{unwrap, EyeImage};
use iris_index::synth::{gen_eyes, gen_samples, Embedding, SynthConfig};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Files with the given extension, sorted by file name for deterministic
/// processing order.
fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()).map_err(|e| io_err(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().map(|x| x == ext).unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Format {
            path: dir.to_owned(),
            msg: format!("no *.{ext} files found"),
        });
    }
    Ok(files)
}

fn file_name_for(id: &str) -> Result<String> {
    if id.is_empty() || id.contains(['/', '\\', '\0']) || id == "." || id == ".." {
        return Err(Error::InvalidArgument(format!(
            "`{id}` cannot be used as a file name"
        )));
    }
    Ok(id.to_string())
}

fn read_keys(dir: &Path) -> Result<Vec<KeyPortion>> {
    list_files(dir, "ikp")?
        .iter()
        .map(|p| read_key_portion(p))
        .collect()
}

pub fn cmd_synth(
    eyes: usize,
    dim_true: usize,
    samples_per_eye: usize,
    noise: f64,
    embedding: Embedding,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let cfg = SynthConfig {
        n_eyes: eyes,
        d_true: dim_true,
        samples_per_eye,
        noise_sigma: noise,
        embedding,
        seed,
    };
    let averages = gen_eyes(&cfg)?;
    let samples = gen_samples(&averages, samples_per_eye, noise, seed)?;
    let avg_dir = out.join("averages");
    let sample_dir = out.join("samples");
    ensure_dir(&avg_dir)?;
    ensure_dir(&sample_dir)?;
    for key in &averages {
        let name = file_name_for(key.sample_id())?;
        write_key_portion(&avg_dir.join(format!("{name}.ikp")), key)?;
    }
    let mut rows = Vec::with_capacity(samples.len());
    for key in &samples {
        let name = file_name_for(key.sample_id())?;
        write_key_portion(&sample_dir.join(format!("{name}.ikp")), key)?;
        rows.push(ManifestRow {
            sample_id: key.sample_id().to_string(),
            label: key.label().clone(),
            path: format!("samples/{name}.ikp"),
            circles: None,
        });
    }
    write_manifest(&out.join("manifest.csv"), &Manifest::new(rows, false)?)?;
    println!(
        "synth: eyes={} dim_true={} samples={} noise={} seed={}",
        eyes,
        dim_true,
        samples.len(),
        noise,
        seed
    );
    Ok(())
}

pub fn cmd_normalize(manifest_path: &Path, out: &Path) -> Result<()> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    ensure_dir(out)?;
    let results: Vec<Result<(String, NormalizedIris)>> = manifest
        .rows()
        .par_iter()
        .map(|row| {
            let (pupil, iris) = row.circles.as_ref().ok_or_else(|| Error::Format {
                path: manifest_path.to_owned(),
                msg: format!("row `{}` has no circle parameters", row.sample_id),
            })?;
            let image_path = resolve(base, &row.path);
            let (w, h, pixels) = read_pgm_gray(&image_path)?;
            let image = EyeImage::new(w, h, pixels, row.label.clone(), row.sample_id.clone())?;
            let norm = unwrap(&image, pupil, iris)?;
            Ok((row.sample_id.clone(), norm))
        })
        .collect();
    let mut count = 0usize;
    for result in results {
        let (sample_id, norm) = result?;
        let name = file_name_for(&sample_id)?;
        write_normalized_iris(&out.join(format!("{name}.pgm")), &norm)?;
        count += 1;
    }
    println!("normalize: wrote {count} normalized irises");
    Ok(())
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

pub fn cmd_extract(in_dir: &Path, out: &Path, offset_cols: usize) -> Result<()> {
    let files = list_files(in_dir, "pgm")?;
    ensure_dir(out)?;
    let keys: Vec<Result<KeyPortion>> = files
        .par_iter()
        .map(|path| {
            let norm = read_normalized_iris(path)?;
            extract_key(&norm, offset_cols)
        })
        .collect();
    let mut count = 0usize;
    for key in keys {
        let key = key?;
        let name = file_name_for(key.sample_id())?;
        write_key_portion(&out.join(format!("{name}.ikp")), &key)?;
        count += 1;
    }
    println!("extract: wrote {count} raw key portions");
    Ok(())
}

pub fn cmd_preprocess(
    in_dir: &Path,
    out: &Path,
    report_path: &Path,
    cfg: &PreprocessConfig,
) -> Result<()> {
    let keys = read_keys(in_dir)?;
    ensure_dir(out)?;
    let outcomes: Vec<Result<(QualityReport, PreprocessOutcome)>> = keys
        .par_iter()
        .map(|key| Ok((quality_filter(key, cfg)?, preprocess(key, cfg)?)))
        .collect();
    let mut report = String::from("sample_id,label,accepted,reason,saturated_count,mad\n");
    let mut kept = 0usize;
    let mut discarded = 0usize;
    for (key, outcome) in keys.iter().zip(outcomes) {
        let (quality, outcome) = outcome?;
        writeln!(
            report,
            "{},{},{},{},{},{}",
            key.sample_id(),
            key.label(),
            quality.accepted,
            quality.reason,
            quality.saturated_count,
            quality.mad
        )
        .unwrap();
        match outcome {
            PreprocessOutcome::Kept(processed) => {
                let name = file_name_for(processed.sample_id())?;
                write_key_portion(&out.join(format!("{name}.ikp")), &processed)?;
                kept += 1;
            }
            PreprocessOutcome::Rejected(_) => discarded += 1,
        }
    }
    write_text(report_path, &report)?;
    println!("preprocess: kept={kept} discarded={discarded}");
    Ok(())
}

pub fn cmd_average(in_dir: &Path, out: &Path) -> Result<()> {
    let keys = read_keys(in_dir)?;
    let averages = average_per_eye(&keys)?;
    ensure_dir(out)?;
    for key in &averages {
        let name = file_name_for(key.sample_id())?;
        write_key_portion(&out.join(format!("{name}.ikp")), key)?;
    }
    println!("average: {} eyes from {} keys", averages.len(), keys.len());
    Ok(())
}

pub fn cmd_dim(in_dir: &Path, out: &Path) -> Result<()> {
    let keys = read_keys(in_dir)?;
    let points: Vec<Vec<f64>> = keys.iter().map(|k| k.values().to_vec()).collect();
    let table = dimension_table(&points, &DEFAULT_TABLE_RANGES)?;
    let mut csv = String::from("lo_pct,hi_pct,dimension\n");
    for row in &table {
        writeln!(csv, "{},{},{}", row.lo_pct, row.hi_pct, row.slope).unwrap();
    }
    write_text(out, &csv)?;
    print!("{csv}");
    Ok(())
}

pub fn cmd_fit(in_dir: &Path, dim: usize, out: &Path) -> Result<()> {
    let keys = read_keys(in_dir)?;
    let map = fit_map(&keys, dim)?;
    write_map(out, &map)?;
    println!("fit: dim={} fingerprint={:016x}", dim, map_fingerprint(&map));
    Ok(())
}

pub fn cmd_enroll(map_path: &Path, in_dir: &Path, out: &Path) -> Result<()> {
    let map = read_map(map_path)?;
    let keys = read_keys(in_dir)?;
    let db = enroll(&map, &keys)?;
    write_db(out, &db)?;
    println!("enroll: {} eyes at dim {}", db.len(), db.d());
    Ok(())
}

pub fn cmd_query(map_path: &Path, db_path: &Path, key_path: &Path, batch: usize) -> Result<()> {
    let map = read_map(map_path)?;
    let db = read_db_checked(db_path, &map)?;
    let key = read_key_portion(key_path)?;
    let code = iris_index::embed::project(&map, &key)?;
    let rank = query_rank(&db, &code)?;
    println!("C={rank}");
    println!("rank,label,distance");
    let mut printed = 0usize;
    let mut found = false;
    for hits in expanding_search(&db, code.coords(), batch) {
        for hit in hits {
            printed += 1;
            println!("{},{},{}", printed, hit.label, hit.distance);
            if &hit.label == code.label() {
                found = true;
            }
        }
        if found {
            break;
        }
    }
    Ok(())
}

pub fn cmd_bench(
    map_path: &Path,
    db_path: &Path,
    in_dir: &Path,
    out_samples: &Path,
    out_hist: &Path,
    bins: usize,
) -> Result<()> {
    let map = read_map(map_path)?;
    let db = read_db_checked(db_path, &map)?;
    let keys = read_keys(in_dir)?;
    let queries = keys
        .iter()
        .map(|key| iris_index::embed::project(&map, key))
        .collect::<Result<Vec<IntrinsicIrisCode>>>()?;
    let result = penetration(&db, &queries, bins)?;
    let mut samples_csv = String::from("sample_id,label,rank,penetration\n");
    for (key, sample) in keys.iter().zip(&result.samples) {
        let rank = (sample * result.n as f64).round() as usize;
        writeln!(
            samples_csv,
            "{},{},{},{}",
            key.sample_id(),
            key.label(),
            rank,
            sample
        )
        .unwrap();
    }
    write_text(out_samples, &samples_csv)?;
    let mut hist_csv = String::from("bin_lo,bin_hi,count\n");
    for (i, count) in result.histogram.iter().enumerate() {
        writeln!(
            hist_csv,
            "{},{},{}",
            i as f64 / bins as f64,
            (i + 1) as f64 / bins as f64,
            count
        )
        .unwrap();
    }
    write_text(out_hist, &hist_csv)?;
    println!("P={}", result.p);
    Ok(())
}

pub fn cmd_sweep(averages_dir: &Path, samples_dir: &Path, dims: &[usize], out: &Path) -> Result<()> {
    let averages = read_keys(averages_dir)?;
    let samples = read_keys(samples_dir)?;
    let rows = dimension_sweep(&averages, &samples, dims)?;
    let mut csv = String::from("dim,penetration_rate\n");
    for (d, p) in &rows {
        writeln!(csv, "{d},{p}").unwrap();
    }
    write_text(out, &csv)?;
    print!("{csv}");
    Ok(())
}

/// Parses `2..6` (inclusive) or `2,3,4`.
pub fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    let parse_one = |s: &str| -> Result<usize> {
        let v: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad dimension `{s}`")))?;
        if v == 0 {
            return Err(Error::InvalidArgument("dimensions start at 1".into()));
        }
        Ok(v)
    };
    if let Some((a, b)) = spec.split_once("..") {
        let lo = parse_one(a)?;
        let hi = parse_one(b)?;
        if hi < lo {
            return Err(Error::InvalidArgument(format!(
                "empty dimension range `{spec}`"
            )));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',').map(parse_one).collect()
}
