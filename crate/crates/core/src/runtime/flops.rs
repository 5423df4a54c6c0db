//! Per-operation FLOP accounting and the forward trace.
//!
//! Counts are exact integers derived from the config. Conventions, fixed so
//! the closed forms here match the runtime's own accumulation bit for bit:
//! one MAC is 2 flops; attention counts scores + weighted sum (4*head_dim
//! per head per cached position) with softmax treated as movement; RMSNorm
//! is `4*dim + 3`; one RoPE pair rotation is 6; SiLU plus the gate multiply
//! is 6 per lane; embedding lookup and concatenation are zero-flop copies.
//! The optional AWQ activation division is time, not counted flops.

use crate::config::ModelConfig;
use std::time::Duration;

/// Row taxonomy of the latency/FLOP breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpClass {
    EmbedCopy,
    QkvProj,
    QkvBias,
    AttnOutProj,
    MhaAttention,
    FfnGateUp,
    FfnDown,
    LmHead,
    Rope,
    RmsNorm,
    SiluMul,
}

impl OpClass {
    pub const ALL: [OpClass; 11] = [
        OpClass::EmbedCopy,
        OpClass::QkvProj,
        OpClass::QkvBias,
        OpClass::AttnOutProj,
        OpClass::MhaAttention,
        OpClass::FfnGateUp,
        OpClass::FfnDown,
        OpClass::LmHead,
        OpClass::Rope,
        OpClass::RmsNorm,
        OpClass::SiluMul,
    ];

    pub fn description(self) -> &'static str {
        match self {
            OpClass::EmbedCopy => "Token embedding copy",
            OpClass::QkvProj => "Q/K/V projection",
            OpClass::QkvBias => "Q/K/V bias add",
            OpClass::AttnOutProj => "Attention output projection + residual",
            OpClass::MhaAttention => "Attention scores + weighted sum",
            OpClass::FfnGateUp => "FFN gate + up projection",
            OpClass::FfnDown => "FFN down projection + residual",
            OpClass::LmHead => "LM head",
            OpClass::Rope => "Rotary position embedding (Q/K)",
            OpClass::RmsNorm => "RMS normalization",
            OpClass::SiluMul => "SiLU + elementwise multiply",
        }
    }

    /// Rows whose work is multiply-accumulate (matrix or attention MACs).
    pub fn is_mac(self) -> bool {
        matches!(
            self,
            OpClass::QkvProj
                | OpClass::AttnOutProj
                | OpClass::MhaAttention
                | OpClass::FfnGateUp
                | OpClass::FfnDown
                | OpClass::LmHead
        )
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|&o| o == self).unwrap()
    }
}

/// Accumulated per-op FLOPs and wall time for one or more forward passes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForwardTrace {
    flops: [u64; 11],
    nanos: [u64; 11],
}

impl ForwardTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, op: OpClass, flops: u64, elapsed: Duration) {
        let i = op.index();
        self.flops[i] += flops;
        self.nanos[i] += elapsed.as_nanos() as u64;
    }

    pub fn add_flops(&mut self, op: OpClass, flops: u64) {
        self.flops[op.index()] += flops;
    }

    pub fn flops_of(&self, op: OpClass) -> u64 {
        self.flops[op.index()]
    }

    pub fn nanos_of(&self, op: OpClass) -> u64 {
        self.nanos[op.index()]
    }

    pub fn total_flops(&self) -> u64 {
        self.flops.iter().sum()
    }

    pub fn total_nanos(&self) -> u64 {
        self.nanos.iter().sum()
    }

    pub fn mac_flops(&self) -> u64 {
        OpClass::ALL
            .iter()
            .filter(|o| o.is_mac())
            .map(|&o| self.flops_of(o))
            .sum()
    }

    /// Share of counted operations that are MACs, in [0, 1].
    pub fn mac_flop_share(&self) -> f64 {
        let total = self.total_flops();
        if total == 0 {
            return 0.0;
        }
        self.mac_flops() as f64 / total as f64
    }

    /// Same FLOP counts on both sides? (times are expected to differ)
    pub fn same_flops(&self, other: &Self) -> bool {
        self.flops == other.flops
    }
}

/// Add one token's per-layer flops at `cache_len` cached positions
/// (including the token itself).
fn add_layer_token(trace: &mut ForwardTrace, cfg: &ModelConfig, cache_len: usize) {
    let (dim, kv, ffn) = (cfg.dim as u64, cfg.kv_dim() as u64, cfg.ffn_hidden as u64);
    let layers = cfg.n_layers as u64;
    let heads = cfg.n_heads as u64 + cfg.n_kv_heads as u64;
    trace.add_flops(OpClass::QkvProj, layers * 2 * dim * (dim + 2 * kv));
    trace.add_flops(OpClass::QkvBias, layers * (dim + 2 * kv));
    trace.add_flops(
        OpClass::Rope,
        layers * heads * (cfg.head_dim as u64 / 2) * 6,
    );
    trace.add_flops(
        OpClass::MhaAttention,
        layers * cfg.n_heads as u64 * 4 * cfg.head_dim as u64 * cache_len as u64,
    );
    trace.add_flops(OpClass::AttnOutProj, layers * (2 * dim * dim + dim));
    trace.add_flops(OpClass::RmsNorm, layers * 2 * (4 * dim + 3));
    trace.add_flops(OpClass::FfnGateUp, layers * 4 * ffn * dim);
    trace.add_flops(OpClass::SiluMul, layers * 6 * ffn);
    trace.add_flops(OpClass::FfnDown, layers * (2 * dim * ffn + dim));
}

fn add_head(trace: &mut ForwardTrace, cfg: &ModelConfig) {
    let dim = cfg.dim as u64;
    trace.add_flops(OpClass::RmsNorm, 4 * dim + 3);
    trace.add_flops(OpClass::LmHead, 2 * cfg.vocab_size as u64 * dim);
}

/// Exact operation counts for one causal pass over `seq_len` tokens with the
/// head applied at the final position (the prefill shape of work).
pub fn count_flops(cfg: &ModelConfig, seq_len: usize) -> ForwardTrace {
    let mut trace = ForwardTrace::new();
    trace.add_flops(OpClass::EmbedCopy, 0);
    for p in 0..seq_len {
        add_layer_token(&mut trace, cfg, p + 1);
    }
    if seq_len > 0 {
        add_head(&mut trace, cfg);
    }
    trace
}

/// Exact counts for `generate`: a prefill over `prompt_len` tokens followed
/// by `n_new.saturating_sub(1)` decode steps (the last sampled token is never
/// fed back).
pub fn generate_flops(cfg: &ModelConfig, prompt_len: usize, n_new: usize) -> ForwardTrace {
    let mut trace = count_flops(cfg, prompt_len);
    for k in 0..n_new.saturating_sub(1) {
        add_layer_token(&mut trace, cfg, prompt_len + k + 1);
        add_head(&mut trace, cfg);
    }
    trace
}
