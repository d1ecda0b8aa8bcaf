//! `iris-index`: the iris-indexing pipeline as composable subcommands.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
//! or degenerate-geometry error. Errors print one line to stderr as
//! `error: <category>: <detail>`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use config::ConfigFile;
use iris_index::error::{Error, ErrorCategory, Result};
use iris_index::synth::Embedding;

#[derive(Parser)]
#[command(
    name = "iris-index",
    about = "Iris indexing by intrinsic dimension",
    version
)]
struct Cli {
    /// Worker threads (0 = automatic). Falls back to IRIS_INDEX_THREADS,
    /// then the config file.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Optional `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbeddingArg {
    Linear,
    Smooth,
}

impl From<EmbeddingArg> for Embedding {
    fn from(v: EmbeddingArg) -> Embedding {
        match v {
            EmbeddingArg::Linear => Embedding::Linear,
            EmbeddingArg::Smooth => Embedding::Smooth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known intrinsic dimension.
    Synth {
        /// Number of distinct eyes.
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        eyes: u64,
        /// True manifold dimension.
        #[arg(long = "dim-true", value_parser = clap::value_parser!(u64).range(1..=4096))]
        dim_true: u64,
        /// Samples per eye.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Per-pixel Gaussian noise sigma.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Latent-to-key embedding.
        #[arg(long, value_enum, default_value_t = EmbeddingArg::Linear)]
        embedding: EmbeddingArg,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rubber-sheet normalize eye images listed in a manifest with circles.
    Normalize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Slice raw 16x256 key portions out of normalized irises.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Column where the key portion starts (wraps modulo 512).
        #[arg(long = "offset-cols")]
        offset_cols: Option<usize>,
    },
    /// Quality-filter, range-normalize, and smooth raw key portions.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-sample acceptance report CSV.
        #[arg(long)]
        report: PathBuf,
        #[arg(long = "mad-span")]
        mad_span: Option<f64>,
        /// Saturated-pixel count above which a key is discarded.
        #[arg(long = "sat-count")]
        sat_count: Option<usize>,
        /// Raw level at which a pixel counts as saturated.
        #[arg(long = "sat-level")]
        sat_level: Option<f64>,
        #[arg(long = "mad-min")]
        mad_min: Option<f64>,
        #[arg(long = "mad-max")]
        mad_max: Option<f64>,
        /// Averaging kernel size (odd).
        #[arg(long = "kernel-size")]
        kernel_size: Option<usize>,
    },
    /// Average preprocessed key portions per eye.
    Average {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation-dimension table of averaged key portions.
    Dim {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a PCA map on averaged key portions.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Intrinsic dimension of the map.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
        dim: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project averaged key portions and build the enrollment database.
    Enroll {
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Identify one key portion: rank and the candidates examined.
    Query {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// Candidates fetched per expanding-search step.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        batch: u64,
    },
    /// Penetration rate of a set of query key portions.
    Bench {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Per-query penetration CSV.
        #[arg(long = "out-samples")]
        out_samples: PathBuf,
        /// Histogram CSV of penetration samples.
        #[arg(long = "out-hist")]
        out_hist: PathBuf,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        bins: u64,
    },
    /// Penetration rate across PCA mapping dimensions.
    Sweep {
        #[arg(long)]
        averages: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        /// Dimensions as `2..6` (inclusive) or `2,3,4`.
        #[arg(long)]
        dims: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let message = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("bad arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("error: usage: {message}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e);
            let code = match e.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numeric => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let threads = file.resolve_threads(cli.threads)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| {
                Error::InvalidArgument(format!("cannot configure {threads} threads: {e}"))
            })?;
    }
    let seed = file.resolve_seed(cli.seed)?;

    match cli.command {
        Command::Synth {
            eyes,
            dim_true,
            samples,
            noise,
            embedding,
            out,
        } => commands::cmd_synth(
            eyes as usize,
            dim_true as usize,
            samples as usize,
            noise,
            embedding.into(),
            seed,
            &out,
        ),
        Command::Normalize { manifest, out } => commands::cmd_normalize(&manifest, &out),
        Command::Extract {
            input,
            out,
            offset_cols,
        } => {
            let cfg = file.resolve_preprocess(None, None, None, None, None, None, offset_cols)?;
            commands::cmd_extract(&input, &out, cfg.angular_offset_cols)
        }
        Command::Preprocess {
            input,
            out,
            report,
            mad_span,
            sat_count,
            sat_level,
            mad_min,
            mad_max,
            kernel_size,
        } => {
            let cfg = file.resolve_preprocess(
                mad_span,
                sat_count,
                sat_level,
                mad_min,
                mad_max,
                kernel_size,
                None,
            )?;
            commands::cmd_preprocess(&input, &out, &report, &cfg)
        }
        Command::Average { input, out } => commands::cmd_average(&input, &out),
        Command::Dim { input, out } => commands::cmd_dim(&input, &out),
        Command::Fit { input, dim, out } => commands::cmd_fit(&input, dim as usize, &out),
        Command::Enroll { map, input, out } => commands::cmd_enroll(&map, &input, &out),
        Command::Query {
            map,
            db,
            key,
            batch,
        } => commands::cmd_query(&map, &db, &key, batch as usize),
        Command::Bench {
            map,
            db,
            input,
            out_samples,
            out_hist,
            bins,
        } => commands::cmd_bench(&map, &db, &input, &out_samples, &out_hist, bins as usize),
        Command::Sweep {
            averages,
            samples,
            dims,
            out,
        } => {
            let dims = commands::parse_dims(&dims)?;
            commands::cmd_sweep(&averages, &samples, &dims, &out)
        }
    }
}
