//! `sknj` — command-line front end for the sparse KNN join engine.
//!
//! Subcommands: `generate` (seeded synthetic datasets), `convert` (text
//! spectra to the binary dataset format), `join` (the join itself, TSV
//! output plus an optional JSON run report), and `bench` (parameter sweeps
//! emitting one JSON line per run).
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

mod bench;
mod report;

use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use sknj_core::datagen::{generate, SyntheticSpec};
use sknj_core::driver::{DEFAULT_PAGE_SIZE, DEFAULT_R_FRACTION};
use sknj_core::spectra::{convert_spectra, ConvertOptions, DEFAULT_DIMS_CAP};
use sknj_core::{run_join, Algorithm, JoinConfig, TsvSink};

#[derive(Debug, Parser)]
#[command(name = "sknj", version, about = "Disk-aware KNN joins over sparse vectors")]
struct Cli {
    /// Page size in bytes for block budgeting.
    #[arg(long, global = true, default_value_t = DEFAULT_PAGE_SIZE)]
    page_size: u64,

    /// Worker threads for join execution.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset.
    Generate {
        /// Number of vectors.
        #[arg(long)]
        count: u64,

        /// Dimensionality.
        #[arg(long, default_value_t = 10_000)]
        dims: u32,

        /// Features per vector, as LO:HI inclusive.
        #[arg(long, value_parser = parse_u32_pair, default_value = "80:120")]
        features: (u32, u32),

        /// Weight range, drawn from (LO, HI].
        #[arg(long, value_parser = parse_f32_pair, default_value = "0:1")]
        weights: (f32, f32),

        /// RNG seed; the same seed yields the same bytes.
        #[arg(long, default_value_t = 7)]
        seed: u64,

        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
    },

    /// Convert text spectra into the binary dataset format.
    Convert {
        /// Input spectra file.
        #[arg(long)]
        input: PathBuf,

        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,

        /// Peaks discretizing to this dimension or above are dropped.
        #[arg(long, default_value_t = DEFAULT_DIMS_CAP)]
        dims_cap: u32,
    },

    /// Join two datasets: the k nearest inner vectors per outer vector.
    Join {
        /// Outer dataset (streamed once).
        #[arg(long)]
        r: PathBuf,

        /// Inner dataset (rescanned per outer block).
        #[arg(long)]
        s: PathBuf,

        /// Neighbors per outer vector.
        #[arg(long, default_value_t = 5)]
        k: usize,

        /// Join kernel: bf, iib, or iiib.
        #[arg(long, default_value = "iiib", value_parser = parse_algorithm)]
        algo: Algorithm,

        /// Buffer size as a percentage of the combined dataset size.
        #[arg(long, default_value_t = 50.0, conflicts_with = "buffer_pages")]
        buffer_pct: f64,

        /// Buffer size in pages (bypasses --buffer-pct).
        #[arg(long)]
        buffer_pages: Option<u64>,

        /// Fraction of the buffer granted to outer blocks.
        #[arg(long, default_value_t = DEFAULT_R_FRACTION)]
        r_fraction: f64,

        /// Result TSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,

        /// Append a JSON run report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },

    /// Sweep one parameter and emit a JSON-lines measurement report.
    Bench(bench::BenchArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate {
            count,
            dims,
            features,
            weights,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                count: *count,
                dims: *dims,
                features: *features,
                weights: *weights,
                seed: *seed,
            };
            let header = generate(&spec, out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} vectors ({} dims) to {}",
                header.vector_count,
                header.dims,
                out.display()
            );
        }
        Command::Convert {
            input,
            out,
            dims_cap,
        } => {
            let reader = BufReader::new(
                File::open(input).with_context(|| format!("opening {}", input.display()))?,
            );
            let summary = convert_spectra(reader, out, ConvertOptions { dims_cap: *dims_cap })
                .with_context(|| format!("converting {}", input.display()))?;
            println!(
                "wrote {} vectors ({} dims) to {}; dropped {} peaks past the cap",
                summary.header.vector_count,
                summary.header.dims,
                out.display(),
                summary.dropped_peaks
            );
        }
        Command::Join {
            r,
            s,
            k,
            algo,
            buffer_pct,
            buffer_pages,
            r_fraction,
            out,
            report,
        } => {
            let buffer_pages = match buffer_pages {
                Some(p) => *p,
                None => buffer_pages_for(r, s, *buffer_pct, cli.page_size)?,
            };
            let mut config = JoinConfig::new(*k, *algo, buffer_pages);
            config.page_size = cli.page_size;
            config.r_fraction = *r_fraction;

            let writer: Box<dyn Write> = match out {
                Some(path) => Box::new(BufWriter::new(
                    File::create(path).with_context(|| format!("creating {}", path.display()))?,
                )),
                None => Box::new(BufWriter::new(io::stdout())),
            };
            let mut sink = TsvSink::new(writer);
            let wall = Instant::now();
            let summary = run_join(r, s, &config, cli.threads, &mut sink)?;
            sink.into_inner().flush().context("flushing results")?;

            if let Some(path) = report {
                let record = report::merge(
                    report::run_json(&config, cli.threads, &summary, wall.elapsed()),
                    json!({
                        "command": "join",
                        "r": r.display().to_string(),
                        "s": s.display().to_string(),
                    }),
                );
                let mut file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .with_context(|| format!("opening {}", path.display()))?;
                report::write_json_line(&mut file, &record)?;
            }
        }
        Command::Bench(args) => bench::run(args, cli.page_size, cli.threads)?,
    }
    Ok(())
}

/// Converts a buffer percentage into whole pages against the combined size
/// of the two dataset files, keeping at least one page per share.
pub fn buffer_pages_for(r: &Path, s: &Path, pct: f64, page_size: u64) -> Result<u64> {
    if !(pct.is_finite() && pct > 0.0) {
        bail!("buffer percentage must be positive, got {pct}");
    }
    let bytes = file_len(r)? + file_len(s)?;
    let pages = (pct / 100.0 * bytes as f64 / page_size as f64).floor() as u64;
    Ok(pages.max(2))
}

fn file_len(path: &Path) -> Result<u64> {
    Ok(std::fs::metadata(path)
        .with_context(|| format!("reading size of {}", path.display()))?
        .len())
}

pub fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: sknj_core::Error| e.to_string())
}

pub fn parse_u32_pair(s: &str) -> std::result::Result<(u32, u32), String> {
    let (lo, hi) = split_pair(s)?;
    let lo = lo.parse().map_err(|e| format!("bad low bound: {e}"))?;
    let hi = hi.parse().map_err(|e| format!("bad high bound: {e}"))?;
    Ok((lo, hi))
}

pub fn parse_f32_pair(s: &str) -> std::result::Result<(f32, f32), String> {
    let (lo, hi) = split_pair(s)?;
    let lo = lo.parse().map_err(|e| format!("bad low bound: {e}"))?;
    let hi = hi.parse().map_err(|e| format!("bad high bound: {e}"))?;
    Ok((lo, hi))
}

fn split_pair(s: &str) -> std::result::Result<(&str, &str), String> {
    s.split_once(':')
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))
}
