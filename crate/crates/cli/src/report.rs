use std::io::Write;
use std::time::Duration;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sknj_core::driver::{JoinConfig, JoinSummary};
use sknj_core::CostCounters;

pub fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub fn counters_json(c: &CostCounters) -> Value {
    json!({
        "feature_visits": c.feature_visits,
        "merge_advances": c.merge_advances,
        "postings_built": c.postings_built,
        "postings_visited": c.postings_visited,
        "residual_visits": c.residual_visits,
        "r_blocks_read": c.r_blocks_read,
        "s_blocks_read": c.s_blocks_read,
    })
}

/// The config/summary fields shared by join reports and bench records.
pub fn run_json(config: &JoinConfig, threads: usize, summary: &JoinSummary, wall: Duration) -> Value {
    json!({
        "algorithm": config.algorithm.name(),
        "k": config.k,
        "page_size": config.page_size,
        "buffer_pages": config.buffer_pages,
        "n_r_pages": config.n_r_pages(),
        "n_s_pages": config.n_s_pages(),
        "threads": threads,
        "dims": summary.dims,
        "r_vectors": summary.r_vectors,
        "s_vectors": summary.s_vectors,
        "counters": counters_json(&summary.counters),
        "io_time_s": secs(summary.counters.io_time),
        "cpu_time_s": secs(summary.counters.cpu_time),
        "wall_time_s": secs(wall),
    })
}

/// Merges `extra` fields into a `run_json` record (flat, top level).
pub fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Some(e)) = (base.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            b.insert(k.clone(), v.clone());
        }
    }
    base
}

pub fn write_json_line<W: Write>(out: &mut W, record: &Value) -> Result<()> {
    serde_json::to_writer(&mut *out, record).context("serializing report record")?;
    out.write_all(b"\n").context("writing report record")?;
    Ok(())
}
