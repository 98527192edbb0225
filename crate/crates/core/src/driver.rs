//! Block nested-loop join driver.
//!
//! The outer dataset R is streamed once in blocks sized to the R share of
//! the buffer; for every R block the inner dataset S is streamed in full in
//! blocks sized to the S share. A kernel consumes each block pair, and the
//! per-vector candidate sets are flushed to the output sink after each R
//! block finishes its S scan. Block reads are charged to `io_time`, kernel
//! execution (including index construction and prune-score refreshes) to
//! `cpu_time`.

use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::Instant;

use crate::counters::CostCounters;
use crate::error::{Error, Result};
use crate::format::{read_header, Block, BlockReader};
use crate::kernels::{kernel_bf, kernel_iib, kernel_iiib, FrequencyProfile};
use crate::state::{JoinState, Neighbor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Brute force over every pair.
    Bf,
    /// Inverted index per inner block.
    Iib,
    /// Inverted index with threshold-based partial indexing.
    Iiib,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bf => "bf",
            Algorithm::Iib => "iib",
            Algorithm::Iiib => "iiib",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bf" => Ok(Algorithm::Bf),
            "iib" => Ok(Algorithm::Iib),
            "iiib" => Ok(Algorithm::Iiib),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm {other:?} (expected bf, iib, or iiib)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_PAGE_SIZE: u64 = 8192;
pub const DEFAULT_R_FRACTION: f64 = 0.8;

/// Join parameters. The buffer is split into an R share and an S share by
/// `r_fraction` (R gets the larger share so the inner dataset is rescanned
/// fewer times); `with_page_split` pins the two shares exactly instead.
#[derive(Debug, Clone)]
pub struct JoinConfig {
    pub k: usize,
    pub algorithm: Algorithm,
    pub page_size: u64,
    pub buffer_pages: u64,
    pub r_fraction: f64,
    page_split: Option<(u64, u64)>,
}

impl JoinConfig {
    pub fn new(k: usize, algorithm: Algorithm, buffer_pages: u64) -> Self {
        Self {
            k,
            algorithm,
            page_size: DEFAULT_PAGE_SIZE,
            buffer_pages,
            r_fraction: DEFAULT_R_FRACTION,
            page_split: None,
        }
    }

    /// Pins the page budgets of the two shares directly.
    pub fn with_page_split(
        k: usize,
        algorithm: Algorithm,
        page_size: u64,
        n_r_pages: u64,
        n_s_pages: u64,
    ) -> Self {
        Self {
            k,
            algorithm,
            page_size,
            buffer_pages: n_r_pages + n_s_pages,
            r_fraction: DEFAULT_R_FRACTION,
            page_split: Some((n_r_pages, n_s_pages)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.page_size == 0 {
            return Err(Error::InvalidConfig("page size must be positive".into()));
        }
        match self.page_split {
            Some((r, s)) => {
                if r == 0 || s == 0 {
                    return Err(Error::InvalidConfig(
                        "both page shares must be positive".into(),
                    ));
                }
            }
            None => {
                if self.buffer_pages < 2 {
                    return Err(Error::InvalidConfig(
                        "buffer must span at least 2 pages".into(),
                    ));
                }
                if !(self.r_fraction > 0.0 && self.r_fraction < 1.0) {
                    return Err(Error::InvalidConfig(
                        "r_fraction must lie strictly between 0 and 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Pages of buffer granted to R blocks: `floor(r_fraction *
    /// buffer_pages)`, clamped so both shares keep at least one page.
    pub fn n_r_pages(&self) -> u64 {
        if let Some((r, _)) = self.page_split {
            return r;
        }
        let raw = (self.r_fraction * self.buffer_pages as f64).floor() as u64;
        raw.clamp(1, self.buffer_pages - 1)
    }

    pub fn n_s_pages(&self) -> u64 {
        if let Some((_, s)) = self.page_split {
            return s;
        }
        self.buffer_pages - self.n_r_pages()
    }

    pub fn r_budget_bytes(&self) -> u64 {
        self.n_r_pages() * self.page_size
    }

    pub fn s_budget_bytes(&self) -> u64 {
        self.n_s_pages() * self.page_size
    }
}

/// Consumes join results, one outer vector at a time, in R file order.
/// `neighbors` arrives sorted best-first and holds at most k entries; only
/// matches actually found are reported.
pub trait ResultSink {
    fn emit(&mut self, r_id: u64, neighbors: &[Neighbor]) -> io::Result<()>;
}

/// Tab-separated output: `r_id  rank  s_id  score`, rank starting at 1,
/// score printed with six significant digits.
pub struct TsvSink<W: Write> {
    out: W,
}

impl<W: Write> TsvSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> ResultSink for TsvSink<W> {
    fn emit(&mut self, r_id: u64, neighbors: &[Neighbor]) -> io::Result<()> {
        for (i, n) in neighbors.iter().enumerate() {
            writeln!(
                self.out,
                "{}\t{}\t{}\t{}",
                r_id,
                i + 1,
                n.s_id,
                fmt_sig6(n.score)
            )?;
        }
        Ok(())
    }
}

/// Collects results in memory.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub results: Vec<(u64, Vec<Neighbor>)>,
}

impl ResultSink for CollectSink {
    fn emit(&mut self, r_id: u64, neighbors: &[Neighbor]) -> io::Result<()> {
        self.results.push((r_id, neighbors.to_vec()));
        Ok(())
    }
}

/// Discards results; useful for pure measurement runs.
#[derive(Debug, Default)]
pub struct NullSink;

impl ResultSink for NullSink {
    fn emit(&mut self, _r_id: u64, _neighbors: &[Neighbor]) -> io::Result<()> {
        Ok(())
    }
}

/// Formats with six significant digits, trailing zeros trimmed, switching to
/// scientific notation outside `1e-4 ..= 1e5` — printf `%.6g` semantics.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let neg = x < 0.0;
    let sci = format!("{:.5e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: Vec<u8> = mantissa
        .bytes()
        .filter(|b| b.is_ascii_digit())
        .collect();
    debug_assert_eq!(digits.len(), 6);
    let digits = std::str::from_utf8(&digits).unwrap().to_string();

    let mut out = if !(-4..6).contains(&exp) {
        let frac = digits[1..].trim_end_matches('0');
        let m = if frac.is_empty() {
            digits[..1].to_string()
        } else {
            format!("{}.{}", &digits[..1], frac)
        };
        format!("{}e{}{:02}", m, if exp < 0 { '-' } else { '+' }, exp.abs())
    } else if exp >= 0 {
        let split = exp as usize + 1;
        let frac = digits[split..].trim_end_matches('0');
        if frac.is_empty() {
            digits[..split].to_string()
        } else {
            format!("{}.{}", &digits[..split], frac)
        }
    } else {
        let frac = digits.trim_end_matches('0');
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), frac)
    };
    if neg {
        out.insert(0, '-');
    }
    out
}

/// What a join run did, beyond the results themselves.
#[derive(Debug, Clone)]
pub struct JoinSummary {
    pub counters: CostCounters,
    pub dims: u32,
    pub r_vectors: u64,
    pub s_vectors: u64,
}

/// Runs the block nested-loop join of `r_path` against `s_path`, feeding
/// results to `sink` in R file order. With `threads > 1`, R blocks are
/// processed by a worker pool (each worker makes its own pass over S), and
/// `io_time`/`cpu_time` aggregate the per-worker time — total work, not
/// wall clock. Output is identical for any thread count.
pub fn run_join<S: ResultSink>(
    r_path: &Path,
    s_path: &Path,
    config: &JoinConfig,
    threads: usize,
    sink: &mut S,
) -> Result<JoinSummary> {
    config.validate()?;
    if threads == 0 {
        return Err(Error::InvalidConfig("thread count must be positive".into()));
    }

    let mut s_probe = std::fs::File::open(s_path)?;
    let s_header = read_header(&mut io::BufReader::new(&mut s_probe))?;
    drop(s_probe);

    let mut counters = CostCounters::new();
    let started = Instant::now();
    let mut r_reader = BlockReader::open(r_path, config.r_budget_bytes())?;
    let r_header = r_reader.header();
    counters.io_time += started.elapsed();

    if r_header.dims != s_header.dims {
        return Err(Error::DimensionalityMismatch {
            r_dims: r_header.dims,
            s_dims: s_header.dims,
        });
    }

    if threads == 1 {
        loop {
            let t0 = Instant::now();
            let block = r_reader.next().transpose()?;
            counters.io_time += t0.elapsed();
            let Some(b_r) = block else { break };
            counters.r_blocks_read += 1;
            let results = join_one_r_block(&b_r, s_path, config, s_header.dims, &mut counters)?;
            for (r_id, neighbors) in results {
                sink.emit(r_id, &neighbors).map_err(Error::Io)?;
            }
        }
    } else {
        run_parallel(&mut r_reader, s_path, config, s_header.dims, threads, sink, &mut counters)?;
    }

    Ok(JoinSummary {
        counters,
        dims: s_header.dims,
        r_vectors: r_header.vector_count,
        s_vectors: s_header.vector_count,
    })
}

/// Joins one outer block against the whole inner dataset and returns its
/// results in block order.
fn join_one_r_block(
    b_r: &Block,
    s_path: &Path,
    config: &JoinConfig,
    dims: u32,
    counters: &mut CostCounters,
) -> Result<Vec<(u64, Vec<Neighbor>)>> {
    let mut state = JoinState::new(b_r.vectors.iter().map(|v| v.id()), config.k);

    let profile = if config.algorithm == Algorithm::Iiib {
        let t0 = Instant::now();
        let p = FrequencyProfile::build(b_r, dims);
        counters.cpu_time += t0.elapsed();
        Some(p)
    } else {
        None
    };

    let t0 = Instant::now();
    let mut s_reader = BlockReader::open(s_path, config.s_budget_bytes())?;
    counters.io_time += t0.elapsed();
    loop {
        let t0 = Instant::now();
        let block = s_reader.next().transpose()?;
        counters.io_time += t0.elapsed();
        let Some(b_s) = block else { break };
        counters.s_blocks_read += 1;

        let t0 = Instant::now();
        match config.algorithm {
            Algorithm::Bf => kernel_bf(b_r, &b_s, &mut state, counters),
            Algorithm::Iib => kernel_iib(b_r, &b_s, dims, &mut state, counters),
            Algorithm::Iiib => {
                kernel_iiib(b_r, &b_s, profile.as_ref().unwrap(), &mut state, counters)
            }
        }
        state.refresh_min_prune_score();
        counters.cpu_time += t0.elapsed();
    }

    Ok(state
        .into_sets()
        .into_iter()
        .map(|set| (set.r_id(), set.into_neighbors()))
        .collect())
}

fn run_parallel<S: ResultSink>(
    r_reader: &mut BlockReader<io::BufReader<std::fs::File>>,
    s_path: &Path,
    config: &JoinConfig,
    dims: u32,
    threads: usize,
    sink: &mut S,
    counters: &mut CostCounters,
) -> Result<()> {
    type BlockResult = (usize, Result<(Vec<(u64, Vec<Neighbor>)>, CostCounters)>);

    let (work_tx, work_rx) = mpsc::sync_channel::<(usize, Block)>(threads);
    let work_rx = Mutex::new(work_rx);
    let (done_tx, done_rx) = mpsc::channel::<BlockResult>();

    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..threads {
            let done_tx = done_tx.clone();
            let work_rx = &work_rx;
            scope.spawn(move || {
                loop {
                    let job = work_rx.lock().expect("work queue").recv();
                    let Ok((index, b_r)) = job else { break };
                    let mut local = CostCounters::new();
                    let res = join_one_r_block(&b_r, s_path, config, dims, &mut local)
                        .map(|results| (results, local));
                    if done_tx.send((index, res)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(done_tx);

        let mut sent = 0usize;
        let feed_err: Option<Error> = loop {
            let t0 = Instant::now();
            let block = match r_reader.next().transpose() {
                Ok(b) => b,
                Err(e) => break Some(e),
            };
            counters.io_time += t0.elapsed();
            let Some(b_r) = block else { break None };
            counters.r_blocks_read += 1;
            if work_tx.send((sent, b_r)).is_err() {
                break None;
            }
            sent += 1;
        };
        drop(work_tx);

        // Collect every outstanding result, then emit in block order.
        let mut finished: Vec<Option<(Vec<(u64, Vec<Neighbor>)>, CostCounters)>> = Vec::new();
        finished.resize_with(sent, || None);
        let mut first_err = feed_err;
        for (index, res) in done_rx.iter() {
            match res {
                Ok(payload) => finished[index] = Some(payload),
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        if let Some(e) = first_err {
            return Err(e);
        }
        for slot in finished {
            let (results, local) = slot.expect("every block produced a result");
            *counters += &local;
            for (r_id, neighbors) in results {
                sink.emit(r_id, &neighbors).map_err(Error::Io)?;
            }
        }
        Ok(())
    })
}
