//! CSV rows emitted by the bench commands.

use std::io::Write;

use anyhow::Result;
use layout_gemm::PackCounters;
use serde::{Deserialize, Serialize};

use crate::timing::{gflops, Timing};

/// One timed kernel on one problem.
///
/// Attention rows use `m = n_tokens`, `n = k = embed_dim` (MLP rows: `k = hidden`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub kernel: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub depth: usize,
    pub n_tokens: usize,
    pub reps: usize,
    pub warmup: usize,
    pub mean_ns: u64,
    pub median_ns: u64,
    pub min_ns: u64,
    pub gflops: f64,
    pub multiplier_pack_elems: u64,
    pub multiplicand_pack_elems: u64,
    pub unpack_elems: u64,
    pub speedup_vs_baseline: f64,
}

/// Problem description shared by the rows of one measurement group.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub experiment: &'a str,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub depth: usize,
    pub n_tokens: usize,
    pub flops: f64,
}

impl BenchRecord {
    /// Row for `kernel`; the speedup is filled in by [`set_speedups`].
    pub fn new(p: &Problem<'_>, kernel: &str, timing: &Timing, warmup: usize, counters: &PackCounters) -> Self {
        let median = timing.median_ns();
        BenchRecord {
            experiment: p.experiment.to_string(),
            kernel: kernel.to_string(),
            m: p.m,
            n: p.n,
            k: p.k,
            depth: p.depth,
            n_tokens: p.n_tokens,
            reps: timing.samples_ns.len(),
            warmup,
            mean_ns: timing.mean_ns(),
            median_ns: median,
            min_ns: timing.min_ns(),
            gflops: gflops(p.flops, median),
            multiplier_pack_elems: counters.multiplier_pack_elems,
            multiplicand_pack_elems: counters.multiplicand_pack_elems,
            unpack_elems: counters.unpack_elems,
            speedup_vs_baseline: 1.0,
        }
    }
}

/// Sets `speedup_vs_baseline = baseline median / row median` for `rows`.
pub fn set_speedups(rows: &mut [BenchRecord], baseline_median_ns: u64) {
    for r in rows {
        r.speedup_vs_baseline = baseline_median_ns as f64 / r.median_ns as f64;
    }
}

pub fn write_csv(w: impl Write, rows: &[BenchRecord]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(true).from_writer(w);
    if rows.is_empty() {
        out.write_record(HEADER)?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl std::io::Read) -> Result<Vec<BenchRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<Result<Vec<BenchRecord>, _>>()?)
}

pub const HEADER: [&str; 17] = [
    "experiment",
    "kernel",
    "m",
    "n",
    "k",
    "depth",
    "n_tokens",
    "reps",
    "warmup",
    "mean_ns",
    "median_ns",
    "min_ns",
    "gflops",
    "multiplier_pack_elems",
    "multiplicand_pack_elems",
    "unpack_elems",
    "speedup_vs_baseline",
];
