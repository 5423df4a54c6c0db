//! Shared helpers for the integration suites: an independent FP32 reference
//! decoder built from pre-dequantized weights, plus small config builders.

pub mod reference;

use awq_edge_core::ModelConfig;

/// dim 64, 4 layers: the runtime-equivalence configuration.
pub fn config_dim64() -> ModelConfig {
    ModelConfig {
        dim: 64,
        n_layers: 4,
        n_heads: 4,
        n_kv_heads: 2,
        head_dim: 16,
        ffn_hidden: 128,
        vocab_size: 256,
        group_size: 64,
        rope_theta: 1_000_000.0,
        rms_eps: 1e-6,
        tie_embeddings: true,
        quantized_tensors: Vec::new(),
        max_seq: 64,
    }
}

/// dim 16, GS=8 variant exercising the smallest allowed group size.
pub fn config_dim16_gs8() -> ModelConfig {
    ModelConfig {
        dim: 16,
        n_layers: 2,
        n_heads: 2,
        n_kv_heads: 1,
        head_dim: 8,
        ffn_hidden: 32,
        vocab_size: 64,
        group_size: 8,
        rope_theta: 10_000.0,
        rms_eps: 1e-6,
        tie_embeddings: true,
        quantized_tensors: Vec::new(),
        max_seq: 32,
    }
}

/// Max element-wise error relative to the reference's scale (infinity norm).
///
/// Summation-order error scales with the magnitude of the sums involved, so
/// elements that cancel toward zero are judged against the vector scale, not
/// their own (arbitrarily small) value.
pub fn max_rel_err(got: &[f32], want: &[f32]) -> f32 {
    assert_eq!(got.len(), want.len());
    let inf = want.iter().fold(f32::MIN_POSITIVE, |m, &v| m.max(v.abs()));
    got.iter()
        .zip(want)
        .map(|(&g, &w)| (g - w).abs() / inf)
        .fold(0.0f32, f32::max)
}
