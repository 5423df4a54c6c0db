//! Half-precision storage helpers.
//!
//! Scales, embeddings, norm weights, and biases are stored as IEEE 754
//! binary16 and widened to f32 before use; no arithmetic happens in f16.

use half::f16;

/// Widen f16 bits (little-endian storage form) to f32. Exact.
#[inline]
pub fn widen(bits: u16) -> f32 {
    f16::from_bits(bits).to_f32()
}

/// Narrow f32 to f16 bits, round-to-nearest-even.
#[inline]
pub fn narrow(value: f32) -> u16 {
    f16::from_f32(value).to_bits()
}

/// Smallest positive f16 (subnormal, 2^-24). Used as the degenerate scale
/// for constant quantization groups.
pub const MIN_POSITIVE_BITS: u16 = 0x0001;

/// Widen a slice of f16 bits to f32.
pub fn widen_slice(bits: &[u16]) -> Vec<f32> {
    bits.iter().map(|&b| widen(b)).collect()
}

/// Narrow a slice of f32 to f16 bits.
pub fn narrow_slice(values: &[f32]) -> Vec<u16> {
    values.iter().map(|&v| narrow(v)).collect()
}
