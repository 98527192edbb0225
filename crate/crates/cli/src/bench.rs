use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;
use sknj_core::datagen::{generate, SyntheticSpec};
use sknj_core::driver::{run_join, Algorithm, JoinConfig, NullSink};

use crate::report;
use crate::{buffer_pages_for, parse_f32_pair, parse_u32_pair};

/// Which knob the measurement grid sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Both dataset sizes: each value is used as |R| and |S|.
    DataSize,
    /// Inner dataset size: |R| stays at --r-count, each value sets |S|.
    RelativeSize,
    /// Neighbor count k.
    K,
    /// Buffer size as a percentage of the combined dataset size.
    Buffer,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::DataSize => "data-size",
            Axis::RelativeSize => "relative-size",
            Axis::K => "k",
            Axis::Buffer => "buffer",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Parameter swept across cells.
    #[arg(long, value_enum)]
    pub axis: Axis,

    /// Comma-separated cell values for the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,

    /// Algorithms to measure in every cell.
    #[arg(long, value_delimiter = ',', default_values_t = vec![Algorithm::Bf, Algorithm::Iib, Algorithm::Iiib], value_parser = crate::parse_algorithm)]
    pub algos: Vec<Algorithm>,

    /// Runs per (cell, algorithm); each run is one report record.
    #[arg(long, default_value_t = 1)]
    pub repeat: u32,

    /// Existing outer dataset (k and buffer axes only; skips generation).
    #[arg(long, requires = "s")]
    pub r: Option<PathBuf>,

    /// Existing inner dataset (k and buffer axes only; skips generation).
    #[arg(long, requires = "r")]
    pub s: Option<PathBuf>,

    /// Outer vector count for generated data.
    #[arg(long, default_value_t = 10_000)]
    pub r_count: u64,

    /// Inner vector count for generated data.
    #[arg(long, default_value_t = 10_000)]
    pub s_count: u64,

    /// Dimensionality of generated data.
    #[arg(long, default_value_t = 10_000)]
    pub dims: u32,

    /// Features per generated vector, as LO:HI inclusive.
    #[arg(long, value_parser = parse_u32_pair, default_value = "80:120")]
    pub features: (u32, u32),

    /// Weight range for generated data, drawn from (LO, HI].
    #[arg(long, value_parser = parse_f32_pair, default_value = "0:1")]
    pub weights: (f32, f32),

    /// Base seed; per-cell seeds derive from it and are recorded.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// k used on axes that do not sweep it.
    #[arg(long, default_value_t = 5)]
    pub k: usize,

    /// Buffer percentage used on axes that do not sweep it.
    #[arg(long, default_value_t = 50.0)]
    pub buffer_pct: f64,

    /// Fraction of the buffer granted to outer blocks.
    #[arg(long, default_value_t = 0.8)]
    pub r_fraction: f64,

    /// Report destination (JSON lines); stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Keep generated datasets in this directory instead of a temp dir.
    #[arg(long)]
    pub keep_data: Option<PathBuf>,
}

struct CellData {
    r_path: PathBuf,
    s_path: PathBuf,
    r_count: u64,
    s_count: u64,
    seed_r: Option<u64>,
    seed_s: Option<u64>,
}

pub fn run(args: &BenchArgs, page_size: u64, threads: usize) -> Result<()> {
    let mut out: Box<dyn Write> = match &args.report {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    };

    let provided = match (&args.r, &args.s) {
        (Some(r), Some(s)) => {
            if matches!(args.axis, Axis::DataSize | Axis::RelativeSize) {
                bail!("--r/--s cannot be combined with a size axis; those cells regenerate data");
            }
            Some((r.clone(), s.clone()))
        }
        _ => None,
    };

    let tmp;
    let data_dir: &Path = match &args.keep_data {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            dir
        }
        None => {
            tmp = tempfile::tempdir().context("creating bench scratch directory")?;
            tmp.path()
        }
    };

    // Data shared by every cell on axes that do not sweep dataset size.
    let shared = if provided.is_none() && matches!(args.axis, Axis::K | Axis::Buffer) {
        Some(generate_pair(
            args,
            data_dir,
            "base",
            args.r_count,
            args.s_count,
            args.seed,
            args.seed + 1,
        )?)
    } else {
        None
    };

    for (ci, cell) in args.values.iter().enumerate() {
        let mut k = args.k;
        let mut buffer_pct = args.buffer_pct;
        let data: CellData = match args.axis {
            Axis::DataSize => {
                let n: u64 = cell
                    .parse()
                    .with_context(|| format!("cell {cell:?} is not a vector count"))?;
                let seed_r = args.seed + 2 * ci as u64;
                generate_pair(args, data_dir, &format!("c{ci}"), n, n, seed_r, seed_r + 1)?
            }
            Axis::RelativeSize => {
                let n: u64 = cell
                    .parse()
                    .with_context(|| format!("cell {cell:?} is not a vector count"))?;
                let seed_s = args.seed + 1 + ci as u64;
                generate_pair(
                    args,
                    data_dir,
                    &format!("c{ci}"),
                    args.r_count,
                    n,
                    args.seed,
                    seed_s,
                )?
            }
            Axis::K => {
                k = cell
                    .parse()
                    .with_context(|| format!("cell {cell:?} is not a k value"))?;
                cell_data_from(&provided, &shared, args)
            }
            Axis::Buffer => {
                buffer_pct = cell
                    .parse()
                    .with_context(|| format!("cell {cell:?} is not a buffer percentage"))?;
                cell_data_from(&provided, &shared, args)
            }
        };

        let buffer_pages = buffer_pages_for(&data.r_path, &data.s_path, buffer_pct, page_size)?;
        for &algorithm in &args.algos {
            for repeat in 0..args.repeat {
                let mut config = JoinConfig::new(k, algorithm, buffer_pages);
                config.page_size = page_size;
                config.r_fraction = args.r_fraction;
                let wall = Instant::now();
                let mut sink = NullSink;
                let summary = run_join(&data.r_path, &data.s_path, &config, threads, &mut sink)
                    .with_context(|| format!("join failed in cell {cell:?}"))?;
                let record = report::merge(
                    report::run_json(&config, threads, &summary, wall.elapsed()),
                    json!({
                        "command": "bench",
                        "axis": args.axis.name(),
                        "cell": cell,
                        "repeat": repeat,
                        "buffer_pct": buffer_pct,
                        "r_count": data.r_count,
                        "s_count": data.s_count,
                        "gen_dims": args.dims,
                        "features": format!("{}:{}", args.features.0, args.features.1),
                        "weights": format!("{}:{}", args.weights.0, args.weights.1),
                        "seed_r": data.seed_r,
                        "seed_s": data.seed_s,
                    }),
                );
                report::write_json_line(&mut out, &record)?;
            }
        }
    }
    out.flush().context("flushing report")?;
    Ok(())
}

fn cell_data_from(
    provided: &Option<(PathBuf, PathBuf)>,
    shared: &Option<CellData>,
    args: &BenchArgs,
) -> CellData {
    if let Some((r, s)) = provided {
        return CellData {
            r_path: r.clone(),
            s_path: s.clone(),
            r_count: 0,
            s_count: 0,
            seed_r: None,
            seed_s: None,
        };
    }
    let shared = shared.as_ref().expect("shared data generated for this axis");
    CellData {
        r_path: shared.r_path.clone(),
        s_path: shared.s_path.clone(),
        r_count: args.r_count,
        s_count: args.s_count,
        seed_r: shared.seed_r,
        seed_s: shared.seed_s,
    }
}

fn generate_pair(
    args: &BenchArgs,
    dir: &Path,
    tag: &str,
    r_count: u64,
    s_count: u64,
    seed_r: u64,
    seed_s: u64,
) -> Result<CellData> {
    let r_path = dir.join(format!("{tag}-r.sknj"));
    let s_path = dir.join(format!("{tag}-s.sknj"));
    let base = SyntheticSpec {
        count: r_count,
        dims: args.dims,
        features: args.features,
        weights: args.weights,
        seed: seed_r,
    };
    generate(&base, &r_path).context("generating outer dataset")?;
    let inner = SyntheticSpec {
        count: s_count,
        seed: seed_s,
        ..base
    };
    generate(&inner, &s_path).context("generating inner dataset")?;
    Ok(CellData {
        r_path,
        s_path,
        r_count,
        s_count,
        seed_r: Some(seed_r),
        seed_s: Some(seed_s),
    })
}
