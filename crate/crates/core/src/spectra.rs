//! Text spectra ingestion.
//!
//! The input is a sequence of records separated by blank lines. A record
//! starts with a `# <id>` header line and continues with one peak per line:
//! a mass-to-charge ratio and an intensity, whitespace-separated, both
//! positive and finite. Example:
//!
//! ```text
//! # 17
//! 234.56 77.3
//! 512.0  12.25
//! ```
//!
//! Conversion discretizes each m/z to a dimension with one decimal of
//! precision — `dim = floor(mz * 10 + 0.5)` — and uses the intensity as the
//! weight. Peaks that land on the same dimension keep the largest
//! intensity; peaks at or above the dimensionality cap are dropped and
//! counted. Records become vectors in input order.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{DatasetHeader, DatasetWriter};
use crate::sparse::{Feature, SparseVector};

/// Default dimensionality cap: m/z below 2000.0 at one-decimal resolution.
pub const DEFAULT_DIMS_CAP: u32 = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub id: u64,
    /// `(mz, intensity)` pairs in input order.
    pub peaks: Vec<(f64, f64)>,
}

/// Parses the whole input, validating ids, peak syntax, and value ranges.
/// Errors carry 1-based line numbers.
pub fn parse_spectra<R: BufRead>(input: R) -> Result<Vec<SpectrumRecord>> {
    let mut records: Vec<SpectrumRecord> = Vec::new();
    let mut current: Option<SpectrumRecord> = None;
    let mut seen = std::collections::HashSet::new();

    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            if let Some(rec) = current.take() {
                records.push(rec);
            }
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            // A new header flushes any record still open.
            if let Some(rec) = current.take() {
                records.push(rec);
            }
            let id: u64 = rest.trim().parse().map_err(|_| Error::SpectraParse {
                line: lineno,
                message: format!("record id {:?} is not an unsigned integer", rest.trim()),
            })?;
            if !seen.insert(id) {
                return Err(Error::SpectraParse {
                    line: lineno,
                    message: format!("duplicate record id {id}"),
                });
            }
            current = Some(SpectrumRecord {
                id,
                peaks: Vec::new(),
            });
            continue;
        }
        let Some(rec) = current.as_mut() else {
            return Err(Error::SpectraParse {
                line: lineno,
                message: "peak line before any `# <id>` header".into(),
            });
        };
        let mut parts = text.split_whitespace();
        let (Some(mz_tok), Some(int_tok), None) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::SpectraParse {
                line: lineno,
                message: "expected exactly two fields: m/z and intensity".into(),
            });
        };
        let mz: f64 = mz_tok.parse().map_err(|_| Error::SpectraParse {
            line: lineno,
            message: format!("bad m/z value {mz_tok:?}"),
        })?;
        let intensity: f64 = int_tok.parse().map_err(|_| Error::SpectraParse {
            line: lineno,
            message: format!("bad intensity value {int_tok:?}"),
        })?;
        if !(mz.is_finite() && mz > 0.0) {
            return Err(Error::SpectraParse {
                line: lineno,
                message: format!("m/z {mz} must be positive and finite"),
            });
        }
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(Error::SpectraParse {
                line: lineno,
                message: format!("intensity {intensity} must be positive and finite"),
            });
        }
        rec.peaks.push((mz, intensity));
    }
    if let Some(rec) = current.take() {
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy)]
pub struct ConvertOptions {
    /// Dimensions at or above this cap are dropped.
    pub dims_cap: u32,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        Self {
            dims_cap: DEFAULT_DIMS_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvertSummary {
    pub header: DatasetHeader,
    /// Peaks discarded because their dimension reached the cap.
    pub dropped_peaks: u64,
}

/// Discretizes one record into a sparse vector under `opts`, returning the
/// vector and how many peaks were dropped by the cap.
pub fn record_to_vector(rec: &SpectrumRecord, opts: ConvertOptions) -> Result<(SparseVector, u64)> {
    let mut by_dim = std::collections::BTreeMap::<u32, f64>::new();
    let mut dropped = 0u64;
    for &(mz, intensity) in &rec.peaks {
        let dim = (mz * 10.0 + 0.5).floor();
        if dim >= opts.dims_cap as f64 {
            dropped += 1;
            continue;
        }
        let dim = dim as u32;
        let slot = by_dim.entry(dim).or_insert(f64::NEG_INFINITY);
        if intensity > *slot {
            *slot = intensity;
        }
    }
    let features = by_dim
        .into_iter()
        .map(|(dim, w)| Feature {
            dim,
            weight: w as f32,
        })
        .collect();
    Ok((SparseVector::new(rec.id, features)?, dropped))
}

/// Parses spectra from `input` and writes the converted dataset to `path`.
pub fn convert_spectra<R: BufRead, P: AsRef<Path>>(
    input: R,
    path: P,
    opts: ConvertOptions,
) -> Result<ConvertSummary> {
    if opts.dims_cap == 0 {
        return Err(Error::InvalidConfig("dimensionality cap must be positive".into()));
    }
    let records = parse_spectra(input)?;
    let mut writer = DatasetWriter::create(path, opts.dims_cap)?;
    let mut dropped = 0u64;
    for rec in &records {
        let (vector, d) = record_to_vector(rec, opts)?;
        dropped += d;
        writer.write_vector(&vector)?;
    }
    writer.finish()?;
    Ok(ConvertSummary {
        header: DatasetHeader {
            dims: opts.dims_cap,
            vector_count: records.len() as u64,
        },
        dropped_peaks: dropped,
    })
}
