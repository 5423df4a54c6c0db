//! Wall-clock profiling of a generation run and the report emitters.

use crate::error::Result;
use crate::perf::{decode_bandwidth_bound, estimate_throughput, HwParams, Stage};
use crate::runtime::{ForwardTrace, Model, OpClass, Sampler};
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub description: &'static str,
    pub time_s: f64,
    pub percentage: f64,
    pub flops: u64,
    pub is_mac: bool,
}

/// Latency/FLOP breakdown of a profiled generation plus roofline estimates.
#[derive(Debug, Clone, Serialize)]
pub struct PerfReport {
    pub rows: Vec<ReportRow>,
    pub total_time_s: f64,
    pub total_flops: u64,
    pub mac_time_s: f64,
    pub mac_flops: u64,
    /// Share of wall time spent in MAC rows, percent.
    pub mac_time_percent: f64,
    /// Share of counted operations that are MACs, percent.
    pub mac_flop_percent: f64,
    pub estimated_prefill_tokens_per_s: f64,
    pub estimated_decode_tokens_per_s: f64,
    pub decode_bandwidth_bound_tokens_per_s: f64,
    pub streamed_bytes_per_token: u64,
    /// Generated tokens over the fastest run's wall time (absent for n=0).
    pub achieved_tokens_per_s: Option<f64>,
    pub runs: usize,
}

/// Profile `runs` identical greedy generations and report per-row minima.
///
/// FLOP columns are identical across runs by construction and are asserted to
/// be; only the wall times vary, and taking the per-row minimum suppresses
/// scheduling noise.
pub fn profile_generate(
    model: &Model,
    prompt: &[u32],
    n_new: usize,
    runs: usize,
    hw: &HwParams,
) -> Result<PerfReport> {
    let runs = runs.max(1);
    let mut traces = Vec::with_capacity(runs);
    let mut best_wall = f64::INFINITY;
    for _ in 0..runs {
        let mut trace = ForwardTrace::new();
        let t0 = Instant::now();
        model.generate_traced(prompt, n_new, Sampler::Greedy, &mut trace)?;
        best_wall = best_wall.min(t0.elapsed().as_secs_f64());
        traces.push(trace);
    }
    for t in &traces[1..] {
        assert!(
            t.same_flops(&traces[0]),
            "FLOP counts must not vary across identical runs"
        );
    }

    let min_nanos =
        |op: OpClass| -> u64 { traces.iter().map(|t| t.nanos_of(op)).min().unwrap_or(0) };
    let total_nanos: u64 = OpClass::ALL.iter().map(|&op| min_nanos(op)).sum();
    let total_time_s = total_nanos as f64 / 1e9;
    let total_flops = traces[0].total_flops();

    let mut rows = Vec::with_capacity(OpClass::ALL.len());
    let mut mac_time_s = 0.0;
    let mut mac_flops = 0u64;
    for &op in &OpClass::ALL {
        let time_s = min_nanos(op) as f64 / 1e9;
        let flops = traces[0].flops_of(op);
        if op.is_mac() {
            mac_time_s += time_s;
            mac_flops += flops;
        }
        rows.push(ReportRow {
            description: op.description(),
            time_s,
            percentage: if total_time_s > 0.0 {
                100.0 * time_s / total_time_s
            } else {
                0.0
            },
            flops,
            is_mac: op.is_mac(),
        });
    }

    let config = &model.config;
    Ok(PerfReport {
        rows,
        total_time_s,
        total_flops,
        mac_time_s,
        mac_flops,
        mac_time_percent: if total_time_s > 0.0 {
            100.0 * mac_time_s / total_time_s
        } else {
            0.0
        },
        mac_flop_percent: if total_flops > 0 {
            100.0 * mac_flops as f64 / total_flops as f64
        } else {
            0.0
        },
        estimated_prefill_tokens_per_s: estimate_throughput(
            config,
            hw,
            Stage::Prefill {
                prompt_tokens: prompt.len().max(1),
            },
        ),
        estimated_decode_tokens_per_s: estimate_throughput(config, hw, Stage::Decode),
        decode_bandwidth_bound_tokens_per_s: decode_bandwidth_bound(config, hw),
        streamed_bytes_per_token: crate::perf::streamed_bytes_per_token(config),
        achieved_tokens_per_s: (n_new > 0).then(|| n_new as f64 / best_wall),
        runs,
    })
}

impl PerfReport {
    /// Aligned text table, one row per operation class plus MAC and total
    /// summary rows.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .rows
            .iter()
            .map(|r| r.description.len())
            .max()
            .unwrap_or(12)
            .max("Overall MAC operations".len());
        out.push_str(&format!(
            "{:<width$}  {:>12}  {:>7}  {:>16}\n",
            "Description",
            "Time (us)",
            "%",
            "FLOPs",
            width = width
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>12.1}  {:>7.2}  {:>16}\n",
                r.description,
                r.time_s * 1e6,
                r.percentage,
                r.flops,
                width = width
            ));
        }
        out.push_str(&format!(
            "{:<width$}  {:>12.1}  {:>7.2}  {:>16}\n",
            "Overall MAC operations",
            self.mac_time_s * 1e6,
            self.mac_time_percent,
            self.mac_flops,
            width = width
        ));
        out.push_str(&format!(
            "{:<width$}  {:>12.1}  {:>7.2}  {:>16}\n",
            "Total",
            self.total_time_s * 1e6,
            100.0,
            self.total_flops,
            width = width
        ));
        out.push_str(&format!(
            "MAC share of counted operations: {:.2}%\n",
            self.mac_flop_percent
        ));
        out.push_str(&format!(
            "Estimated roofline: prefill {:.2} tokens/s, decode {:.2} tokens/s (bandwidth bound {:.2})\n",
            self.estimated_prefill_tokens_per_s,
            self.estimated_decode_tokens_per_s,
            self.decode_bandwidth_bound_tokens_per_s
        ));
        out.push_str(&format!(
            "Streamed quantized bytes per token: {}\n",
            self.streamed_bytes_per_token
        ));
        if let Some(tps) = self.achieved_tokens_per_s {
            out.push_str(&format!("Achieved on this host: {tps:.2} tokens/s\n"));
        }
        out.push_str(&format!("Runs: {} (per-row minimum reported)\n", self.runs));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("description,time_s,percentage,flops,is_mac\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.9},{:.4},{},{}\n",
                r.description, r.time_s, r.percentage, r.flops, r.is_mac
            ));
        }
        out.push_str(&format!(
            "Overall MAC operations,{:.9},{:.4},{},true\n",
            self.mac_time_s, self.mac_time_percent, self.mac_flops
        ));
        out.push_str(&format!(
            "Total,{:.9},100.0,{},\n",
            self.total_time_s, self.total_flops
        ));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
