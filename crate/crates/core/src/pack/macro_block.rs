//! One AWQ_MACRO: GS x 8 INT4 weight codes, 8 f16 scales, 8 INT4 zeros,
//! arranged in little-endian 128-bit strips.
//!
//! Layout (GS = group size, a positive multiple of 8):
//! - `GS/4` qweight strips. Each strip is four 32-bit words; each word holds
//!   the 8 codes of one input position, nibble `j` (bits `4j..4j+4`) being
//!   output channel `j`. Words ascend by input position, so word `w` of strip
//!   `t` is input position `t*4 + w`.
//! - one scale strip: 8 little-endian f16 values, index order 0..=7.
//! - one zero strip: nibble `j` of the low 32-bit word is output channel `j`'s
//!   zero point; the high 96 bits are zero padding and are verified on unpack.
//!
//! Total size is `(GS/4 + 2) * 16` bytes: 288 bytes at GS=64, i.e. 4.5 bits
//! per weight.

use crate::error::{Error, Result};
use crate::fp16;

/// Bytes occupied by one packed macro at the given group size.
pub const fn macro_bytes(group_size: usize) -> usize {
    (group_size / 4 + 2) * 16
}

/// Storage cost of a packed weight including its share of scales and zeros.
pub fn bits_per_weight(group_size: usize) -> f64 {
    (macro_bytes(group_size) * 8) as f64 / (group_size * 8) as f64
}

fn check_group_size(group_size: usize) -> Result<()> {
    if group_size == 0 || group_size % 8 != 0 {
        return Err(Error::InvalidGroupSize(group_size));
    }
    Ok(())
}

/// One packed block covering 8 output channels x GS input positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AwqMacro {
    /// `4 * GS` bytes of nibble-packed codes (GS/4 strips).
    qweight: Vec<u8>,
    /// 8 little-endian f16 scales.
    scales: [u8; 16],
    /// 8 zero nibbles in the low word, 12 zero padding bytes above.
    zeros: [u8; 16],
}

impl AwqMacro {
    pub fn group_size(&self) -> usize {
        self.qweight.len() / 4
    }

    /// Code of output channel `out` at input position `pos`.
    #[inline]
    pub fn code(&self, pos: usize, out: usize) -> u8 {
        (self.qweight[pos * 4 + out / 2] >> (4 * (out & 1))) & 0xF
    }

    /// The 8 zero points, output-channel order.
    #[inline]
    pub fn zeros(&self) -> [u8; 8] {
        let mut z = [0u8; 8];
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = (self.zeros[j / 2] >> (4 * (j & 1))) & 0xF;
        }
        z
    }

    /// The 8 scales as raw f16 bits, output-channel order.
    #[inline]
    pub fn scale_bits(&self) -> [u16; 8] {
        let mut s = [0u16; 8];
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = u16::from_le_bytes([self.scales[2 * j], self.scales[2 * j + 1]]);
        }
        s
    }

    /// Scales widened to f32 (widening happens on request only).
    #[inline]
    pub fn scales_f32(&self) -> [f32; 8] {
        self.scale_bits().map(fp16::widen)
    }

    /// Serialize: qweight strips, then the scale strip, then the zero strip.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(macro_bytes(self.group_size()));
        out.extend_from_slice(&self.qweight);
        out.extend_from_slice(&self.scales);
        out.extend_from_slice(&self.zeros);
        out
    }

    /// Parse a serialized macro, verifying size and zero-strip padding.
    pub fn from_bytes(group_size: usize, bytes: &[u8]) -> Result<Self> {
        check_group_size(group_size)?;
        let expected = macro_bytes(group_size);
        if bytes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: bytes.len(),
            });
        }
        let qw_len = 4 * group_size;
        let mut scales = [0u8; 16];
        scales.copy_from_slice(&bytes[qw_len..qw_len + 16]);
        let mut zeros = [0u8; 16];
        zeros.copy_from_slice(&bytes[qw_len + 16..qw_len + 32]);
        if zeros[4..].iter().any(|&b| b != 0) {
            return Err(Error::CorruptZeroPadding);
        }
        Ok(Self {
            qweight: bytes[..qw_len].to_vec(),
            scales,
            zeros,
        })
    }

    #[cfg(test)]
    pub(crate) fn corrupt_padding_bit(&mut self, bit: usize) {
        debug_assert!((32..128).contains(&bit));
        self.zeros[bit / 8] ^= 1 << (bit % 8);
    }
}

/// Pack codes, scales, and zeros into one macro.
///
/// `codes` is input-position-major: `codes[pos * 8 + out]`.
pub fn pack_macro(codes: &[u8], scale_bits: &[u16; 8], zeros: &[u8; 8]) -> Result<AwqMacro> {
    if codes.len() % 8 != 0 {
        return Err(Error::LengthMismatch {
            expected: (codes.len() / 8 + 1) * 8,
            got: codes.len(),
        });
    }
    let group_size = codes.len() / 8;
    check_group_size(group_size)?;
    for &c in codes {
        if c > 15 {
            return Err(Error::NibbleRange(c));
        }
    }
    for &z in zeros {
        if z > 15 {
            return Err(Error::NibbleRange(z));
        }
    }

    let mut qweight = vec![0u8; 4 * group_size];
    for pos in 0..group_size {
        for out in 0..8 {
            qweight[pos * 4 + out / 2] |= codes[pos * 8 + out] << (4 * (out & 1));
        }
    }
    let mut scales = [0u8; 16];
    for (j, &s) in scale_bits.iter().enumerate() {
        scales[2 * j..2 * j + 2].copy_from_slice(&s.to_le_bytes());
    }
    let mut zwords = [0u8; 16];
    for (j, &z) in zeros.iter().enumerate() {
        zwords[j / 2] |= z << (4 * (j & 1));
    }
    Ok(AwqMacro {
        qweight,
        scales,
        zeros: zwords,
    })
}

/// Exact inverse of [`pack_macro`]. Rejects nonzero padding in the zero strip.
pub fn unpack_macro(m: &AwqMacro) -> Result<(Vec<u8>, [u16; 8], [u8; 8])> {
    if m.zeros[4..].iter().any(|&b| b != 0) {
        return Err(Error::CorruptZeroPadding);
    }
    let gs = m.group_size();
    let mut codes = vec![0u8; gs * 8];
    for pos in 0..gs {
        for out in 0..8 {
            codes[pos * 8 + out] = m.code(pos, out);
        }
    }
    Ok((codes, m.scale_bits(), m.zeros()))
}
