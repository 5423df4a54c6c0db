//! INT4 weight-only inference stack: activation-aware group quantization,
//! the AWQ_MACRO packed-weight format, a fused unpack/dequantize/MAC kernel
//! that mirrors a 4-channel 8x8-PE accelerator datapath, a Qwen2.5-style
//! decoder runtime, and an analytic performance/scoring model.
//!
//! Module map:
//! - [`tensor`] — FP32 reference math (matmul, RMSNorm, RoPE, attention, SiLU)
//! - [`quant`] — asymmetric INT4 group quantization + AWQ channel-scale search
//! - [`pack`] — AWQ_MACRO bit layout, channel schedule, model file container
//! - [`kernel`] — PE-array MAC emulation (fixed tile order, adder-tree reduce)
//! - [`runtime`] — decoder model, KV cache, prefill/decode/generate, FLOP counts
//! - [`perf`] — profiler report, roofline throughput estimate, benchmark score

pub mod config;
pub mod error;
pub mod fp16;
pub mod kernel;
pub mod pack;
pub mod perf;
pub mod quant;
pub mod runtime;
pub mod synth;
pub mod tensor;

pub use config::ModelConfig;
pub use error::{Error, Result};
