//! Analytic performance model: roofline throughput estimates for the
//! 4-channel accelerator, the weighted benchmark score, and the model
//! compression report.

mod report;

pub use report::{profile_generate, PerfReport, ReportRow};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::pack::{model_tensor_specs, packed_size, PackOptions, TensorKind};

/// Accelerator-side hardware parameters.
///
/// The estimator is an upper-bound roofline: a token costs the larger of its
/// weight-streaming time and its PE-array compute time, plus a configurable
/// host-side overhead. `cycles_per_tile` models the pipelined 8x8 array
/// (one tile per cycle steady-state); `pipeline_fill_cycles` amortizes the
/// fill once per forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct HwParams {
    /// Bytes per second of weight streaming bandwidth.
    pub mem_bandwidth: f64,
    /// Accelerator clock in Hz.
    pub accel_freq: f64,
    /// Independent stream channels.
    pub channels: usize,
    /// Stream beat width in bits (fixed at 128 in format v1).
    pub strip_bits: usize,
    pub pe_rows: usize,
    pub pe_cols: usize,
    /// Host-side seconds added to every token.
    pub ps_overhead_per_token: f64,
    pub cycles_per_tile: f64,
    pub pipeline_fill_cycles: f64,
}

impl Default for HwParams {
    fn default() -> Self {
        Self {
            mem_bandwidth: 19.2e9,
            accel_freq: 200e6,
            channels: 4,
            strip_bits: 128,
            pe_rows: 8,
            pe_cols: 8,
            ps_overhead_per_token: 0.0,
            cycles_per_tile: 1.0,
            pipeline_fill_cycles: 0.0,
        }
    }
}

/// Which stage the estimate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Batch prompt processing: weights stream once for the whole prompt.
    Prefill { prompt_tokens: usize },
    /// One token at a time: weights stream once per token.
    Decode,
}

/// Packed quantized bytes touched per decoded token (macro payloads only;
/// f16 sections and container overhead ride the host side).
pub fn streamed_bytes_per_token(config: &ModelConfig) -> u64 {
    model_tensor_specs(config, &PackOptions::quantized())
        .iter()
        .filter_map(|s| match &s.kind {
            TensorKind::Quant {
                out_channels,
                in_channels,
            } => {
                let macros = (out_channels / 8) * (in_channels / config.group_size);
                Some((macros * crate::pack::macro_bytes(config.group_size)) as u64)
            }
            TensorKind::F16 { .. } => None,
        })
        .sum()
}

/// PE-array tiles consumed per token: 8 input positions per tile, per macro.
pub fn macro_tiles_per_token(config: &ModelConfig) -> u64 {
    model_tensor_specs(config, &PackOptions::quantized())
        .iter()
        .filter_map(|s| match &s.kind {
            TensorKind::Quant {
                out_channels,
                in_channels,
            } => {
                let macros = (out_channels / 8) * (in_channels / config.group_size);
                Some((macros * (config.group_size / 8)) as u64)
            }
            TensorKind::F16 { .. } => None,
        })
        .sum()
}

/// Roofline tokens/s for a stage.
pub fn estimate_throughput(config: &ModelConfig, hw: &HwParams, stage: Stage) -> f64 {
    let bytes = streamed_bytes_per_token(config) as f64;
    let tiles = macro_tiles_per_token(config) as f64;
    let compute_per_token = tiles * hw.cycles_per_tile / (hw.accel_freq * hw.channels as f64);
    match stage {
        Stage::Decode => {
            let t = (bytes / hw.mem_bandwidth).max(compute_per_token) + hw.ps_overhead_per_token;
            1.0 / t
        }
        Stage::Prefill { prompt_tokens } => {
            let n = prompt_tokens.max(1) as f64;
            let t = (bytes / hw.mem_bandwidth).max(n * compute_per_token)
                + n * hw.ps_overhead_per_token
                + hw.pipeline_fill_cycles / hw.accel_freq;
            n / t
        }
    }
}

/// Bandwidth-only decode ceiling: tokens/s if streaming were the sole cost.
pub fn decode_bandwidth_bound(config: &ModelConfig, hw: &HwParams) -> f64 {
    hw.mem_bandwidth / streamed_bytes_per_token(config) as f64
}

/// The four (candidate, max-over-compared-systems) ratio pairs of the
/// benchmark score. The comparison set defining each max is the caller's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreInputs {
    pub accuracy: (f64, f64),
    pub memory: (f64, f64),
    pub throughput_prefill: (f64, f64),
    pub throughput_decode: (f64, f64),
}

/// Weighted benchmark score:
/// `0.4*acc/max + 0.2*mem/max + 0.2*tpP/max + 0.2*tpD/max`.
///
/// Computed as `(2a + b + c + d) / 5` (the same weights) so the all-maximal
/// case is exactly 1.0 in f64.
pub fn score(inputs: &ScoreInputs) -> Result<f64> {
    let ratio = |name: &'static str, (candidate, max): (f64, f64)| -> Result<f64> {
        if !(max > 0.0) || !(candidate > 0.0) {
            return Err(Error::InvalidRatio {
                name,
                candidate,
                max,
            });
        }
        Ok(candidate / max)
    };
    let a = ratio("accuracy", inputs.accuracy)?;
    let m = ratio("memory", inputs.memory)?;
    let p = ratio("throughput_prefill", inputs.throughput_prefill)?;
    let d = ratio("throughput_decode", inputs.throughput_decode)?;
    Ok((2.0 * a + m + p + d) / 5.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CompressionReport {
    /// f16 bytes of every parameter (embeddings counted once when tied).
    pub original_bytes: u64,
    /// Written size of the packed weights blob.
    pub packed_bytes: u64,
    /// `1 - packed/original`.
    pub reduction: f64,
}

impl CompressionReport {
    pub fn reduction_percent(&self) -> f64 {
        self.reduction * 100.0
    }
}

/// Size report for a config packed with the given options.
pub fn compression_report_with(config: &ModelConfig, opts: &PackOptions) -> CompressionReport {
    let params: u64 = model_tensor_specs(config, &PackOptions::raw())
        .iter()
        .map(|s| match &s.kind {
            TensorKind::F16 { shape } => shape.iter().product::<usize>() as u64,
            TensorKind::Quant { .. } => unreachable!("raw enumeration"),
        })
        .sum();
    let original_bytes = 2 * params;
    let packed_bytes = packed_size(config, opts);
    CompressionReport {
        original_bytes,
        packed_bytes,
        reduction: 1.0 - packed_bytes as f64 / original_bytes as f64,
    }
}

/// Size report for the standard packing (all projections quantized).
pub fn compression_report(config: &ModelConfig) -> CompressionReport {
    compression_report_with(config, &PackOptions::quantized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_one_layer() -> ModelConfig {
        ModelConfig {
            dim: 64,
            n_layers: 1,
            n_heads: 1,
            n_kv_heads: 1,
            head_dim: 64,
            ffn_hidden: 64,
            vocab_size: 64,
            group_size: 64,
            rope_theta: 10_000.0,
            rms_eps: 1e-6,
            tie_embeddings: true,
            quantized_tensors: Vec::new(),
            max_seq: 64,
        }
    }

    #[test]
    fn compute_bound_matches_hand_calculation() {
        // 7 projections of 64x64 at GS=64: 8 macros each, 8 tiles per macro.
        let cfg = toy_one_layer();
        assert_eq!(macro_tiles_per_token(&cfg), 7 * 8 * 8);
        let hw = HwParams {
            mem_bandwidth: f64::INFINITY,
            ps_overhead_per_token: 0.0,
            ..HwParams::default()
        };
        let got = estimate_throughput(&cfg, &hw, Stage::Decode);
        let expect = 200e6 * 4.0 / 448.0;
        assert!((got - expect).abs() / expect < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn halving_bandwidth_never_speeds_up() {
        let cfg = toy_one_layer();
        for bw in [1e6f64, 1e9, 19.2e9, 1e12] {
            let fast = estimate_throughput(
                &cfg,
                &HwParams {
                    mem_bandwidth: bw,
                    ..HwParams::default()
                },
                Stage::Decode,
            );
            let slow = estimate_throughput(
                &cfg,
                &HwParams {
                    mem_bandwidth: bw / 2.0,
                    ..HwParams::default()
                },
                Stage::Decode,
            );
            assert!(slow <= fast);
        }
    }

    #[test]
    fn prefill_amortizes_streaming() {
        let cfg = ModelConfig::qwen25_0_5b_like();
        let hw = HwParams::default();
        let one = estimate_throughput(&cfg, &hw, Stage::Prefill { prompt_tokens: 1 });
        let many = estimate_throughput(&cfg, &hw, Stage::Prefill { prompt_tokens: 64 });
        assert!(many > one);
    }

    #[test]
    fn score_exact_cases() {
        let all_max = ScoreInputs {
            accuracy: (3.0, 3.0),
            memory: (7.0, 7.0),
            throughput_prefill: (0.5, 0.5),
            throughput_decode: (12.0, 12.0),
        };
        assert_eq!(score(&all_max).unwrap(), 1.0);

        let hand = ScoreInputs {
            accuracy: (1.0, 1.0),
            memory: (0.5, 1.0),
            throughput_prefill: (0.5, 1.0),
            throughput_decode: (0.5, 1.0),
        };
        assert_eq!(score(&hand).unwrap(), 0.7);
    }

    #[test]
    fn score_is_monotone_in_each_argument() {
        let base = ScoreInputs {
            accuracy: (0.5, 1.0),
            memory: (0.5, 1.0),
            throughput_prefill: (0.5, 1.0),
            throughput_decode: (0.5, 1.0),
        };
        let s0 = score(&base).unwrap();
        for field in 0..4 {
            let mut bumped = base;
            match field {
                0 => bumped.accuracy.0 += 0.1,
                1 => bumped.memory.0 += 0.1,
                2 => bumped.throughput_prefill.0 += 0.1,
                _ => bumped.throughput_decode.0 += 0.1,
            }
            assert!(score(&bumped).unwrap() > s0, "field {field}");
        }
    }

    #[test]
    fn score_rejects_nonpositive_values() {
        let mut bad = ScoreInputs {
            accuracy: (1.0, 0.0),
            memory: (1.0, 1.0),
            throughput_prefill: (1.0, 1.0),
            throughput_decode: (1.0, 1.0),
        };
        assert!(score(&bad).is_err());
        bad.accuracy = (0.0, 1.0);
        assert!(score(&bad).is_err());
    }

    #[test]
    fn unquantized_pack_has_no_real_reduction() {
        let cfg = toy_one_layer();
        let rep = compression_report_with(&cfg, &PackOptions::raw());
        // Only container overhead: reduction is slightly negative, near zero.
        assert!(rep.reduction <= 0.0);
        assert!(rep.reduction.abs() < 0.02, "{}", rep.reduction);
    }

    #[test]
    fn pure_linear_reduction_arithmetic() {
        // A quantized linear stores 4.5 bits where f16 stored 16:
        // 1 - 4.5/16 = 71.875% payload reduction.
        let bpw = crate::pack::bits_per_weight(64);
        assert_eq!(100.0 * (1.0 - bpw / 16.0), 71.875);
    }

    #[test]
    fn qwen_like_compression_is_near_half() {
        let cfg = ModelConfig::qwen25_0_5b_like();
        let rep = compression_report(&cfg);
        // ~988 MB of f16 parameters.
        assert!((rep.original_bytes as f64 / 1e6 - 988.0).abs() < 1.0);
        assert!(
            rep.reduction > 0.45 && rep.reduction < 0.60,
            "{}",
            rep.reduction
        );
    }
}
