//! Model architecture configuration.
//!
//! The JSON architecture file is the source of truth for all hyperparameters;
//! the binary weights file carries no shape information beyond its tensor
//! directory. A loaded pair is cross-checked against this config.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn default_max_seq() -> usize {
    2048
}

/// Decoder architecture hyperparameters, serialized as the JSON half of a
/// model file pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Model (residual stream) width; equals `n_heads * head_dim`.
    pub dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub n_kv_heads: usize,
    pub head_dim: usize,
    /// FFN intermediate width (gate/up output, down input).
    pub ffn_hidden: usize,
    pub vocab_size: usize,
    /// Quantization group size along the input dimension.
    pub group_size: usize,
    /// RoPE frequency base.
    pub rope_theta: f32,
    pub rms_eps: f32,
    /// When set, the LM head shares storage with the embedding table.
    pub tie_embeddings: bool,
    /// Names of tensors stored as packed INT4 macros (empty for raw f16 pairs).
    #[serde(default)]
    pub quantized_tensors: Vec<String>,
    #[serde(default = "default_max_seq")]
    pub max_seq: usize,
}

impl ModelConfig {
    /// Qwen2.5-0.5B-shaped default: dim 896, 24 layers, 14 query / 2 kv heads,
    /// FFN 4864, vocab 151936, tied embeddings, GS 64, RoPE base 1e6.
    pub fn qwen25_0_5b_like() -> Self {
        Self {
            dim: 896,
            n_layers: 24,
            n_heads: 14,
            n_kv_heads: 2,
            head_dim: 64,
            ffn_hidden: 4864,
            vocab_size: 151_936,
            group_size: 64,
            rope_theta: 1_000_000.0,
            rms_eps: 1e-6,
            tie_embeddings: true,
            quantized_tensors: Vec::new(),
            max_seq: 2048,
        }
    }

    /// Key/value width: `n_kv_heads * head_dim`.
    pub fn kv_dim(&self) -> usize {
        self.n_kv_heads * self.head_dim
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dim == 0
            || self.n_heads == 0
            || self.n_kv_heads == 0
            || self.head_dim == 0
            || self.ffn_hidden == 0
            || self.vocab_size == 0
            || self.max_seq == 0
        {
            return err("all dimensions must be positive".into());
        }
        if self.n_heads % self.n_kv_heads != 0 {
            return Err(Error::HeadsNotDivisible {
                n_heads: self.n_heads,
                n_kv_heads: self.n_kv_heads,
            });
        }
        if self.dim != self.n_heads * self.head_dim {
            return err(format!(
                "dim ({}) != n_heads ({}) * head_dim ({})",
                self.dim, self.n_heads, self.head_dim
            ));
        }
        if self.head_dim % 2 != 0 {
            return Err(Error::OddHeadDim(self.head_dim));
        }
        if self.group_size == 0 || self.group_size % 8 != 0 {
            return Err(Error::InvalidGroupSize(self.group_size));
        }
        if !(self.rope_theta > 0.0) {
            return err(format!(
                "rope_theta must be positive, got {}",
                self.rope_theta
            ));
        }
        if !(self.rms_eps > 0.0) {
            return err(format!("rms_eps must be positive, got {}", self.rms_eps));
        }
        // Quantized projections: out channels divisible by 8 (macro row block),
        // in channels divisible by GS (grouping).
        let gs = self.group_size;
        for (name, out, inp) in [
            ("wq", self.dim, self.dim),
            ("wk", self.kv_dim(), self.dim),
            ("wv", self.kv_dim(), self.dim),
            ("wo", self.dim, self.dim),
            ("w_gate", self.ffn_hidden, self.dim),
            ("w_up", self.ffn_hidden, self.dim),
            ("w_down", self.dim, self.ffn_hidden),
        ] {
            if out % 8 != 0 {
                return err(format!("{name}: out channels {out} not divisible by 8"));
            }
            if inp % gs != 0 {
                return err(format!(
                    "{name}: in channels {inp} not divisible by GS {gs}"
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
