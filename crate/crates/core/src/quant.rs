//! Activation-aware INT4 group quantization.
//!
//! Asymmetric unsigned INT4 with an explicit zero point, one (scale, zero)
//! pair per `group_size` consecutive input channels of each output row.
//! Scales are stored in f16 and rounded *before* codes are computed, so the
//! stored codes are optimal for the stored scale. Code rounding is
//! round-half-away-from-zero.
//!
//! The optional AWQ step searches a per-input-channel scaling vector
//! `s[c] = (mean_abs_act[c] / geomean)^alpha` over an alpha grid, picking the
//! candidate that minimizes calibration MSE. Weights are multiplied by `s`
//! before grouping; the runtime divides activations by the stored vector,
//! which is the same linear map.

use crate::error::{Error, Result};
use crate::fp16;
use crate::tensor::TensorF32;

/// One quantization group: `group_size` codes sharing a scale and zero point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantGroup {
    /// Unsigned 4-bit codes, one per input channel of the group.
    pub codes: Vec<u8>,
    /// f16 bit pattern of the positive scale.
    pub scale_bits: u16,
    /// Zero-point code in 0..=15; real value 0 maps to this code.
    pub zero: u8,
}

impl QuantGroup {
    /// Scale widened to f32.
    pub fn scale(&self) -> f32 {
        fp16::widen(self.scale_bits)
    }
}

/// A quantized `out_channels x in_channels` weight matrix.
///
/// Group `(o, g)` covers `w[o][g*group_size .. (g+1)*group_size)`; groups are
/// stored row-major in that order. When `awq_channel_scale` is present the
/// codes quantize the column-scaled matrix `W * diag(s)` and
/// [`QuantizedTensor::dequantize`] reconstructs that scaled matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    pub out_channels: usize,
    pub in_channels: usize,
    pub group_size: usize,
    pub groups: Vec<QuantGroup>,
    pub awq_channel_scale: Option<Vec<f32>>,
}

impl QuantizedTensor {
    pub fn groups_per_row(&self) -> usize {
        self.in_channels / self.group_size
    }

    pub fn group(&self, out_channel: usize, input_group: usize) -> &QuantGroup {
        &self.groups[out_channel * self.groups_per_row() + input_group]
    }

    /// Reconstruct the (channel-scaled) matrix, row-major `[out x in]`.
    pub fn dequantize(&self) -> Vec<f32> {
        let mut w = vec![0.0f32; self.out_channels * self.in_channels];
        let gpr = self.groups_per_row();
        for o in 0..self.out_channels {
            for g in 0..gpr {
                let grp = &self.groups[o * gpr + g];
                let dst = &mut w[o * self.in_channels + g * self.group_size..][..self.group_size];
                for (d, v) in dst.iter_mut().zip(dequantize_group(grp)) {
                    *d = v;
                }
            }
        }
        w
    }
}

/// Quantize one group of weights.
///
/// `scale = (max - min) / 15` rounded to f16; `zero = clamp(round(-min/scale))`;
/// `code = clamp(round(w/scale) + zero)`. Constant groups (or ranges too small
/// to survive the f16 rounding) degenerate to the smallest positive f16 scale
/// with `zero = 8` and every code equal to the zero point.
///
/// The `scale/2 + f16-slack` reconstruction bound holds whenever the group
/// straddles zero (the realistic weight case); a group entirely on one side
/// of zero clamps the zero point and loses its offset instead.
pub fn quantize_group(w: &[f32]) -> Result<QuantGroup> {
    if w.is_empty() {
        return Err(Error::InvalidGroupSize(0));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let min = w.iter().copied().fold(f32::INFINITY, f32::min);
    let max = w.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let scale_bits = fp16::narrow((max - min) / 15.0);
    let scale = fp16::widen(scale_bits);
    if !(scale > 0.0) {
        return Ok(QuantGroup {
            codes: vec![8; w.len()],
            scale_bits: fp16::MIN_POSITIVE_BITS,
            zero: 8,
        });
    }
    let zero = ((-min / scale).round() as i32).clamp(0, 15) as u8;
    let codes = w
        .iter()
        .map(|&v| ((v / scale).round() as i32 + zero as i32).clamp(0, 15) as u8)
        .collect();
    Ok(QuantGroup {
        codes,
        scale_bits,
        zero,
    })
}

/// Reconstruct a group: element `i` is `(codes[i] - zero) * scale`.
pub fn dequantize_group(g: &QuantGroup) -> Vec<f32> {
    let scale = g.scale();
    g.codes
        .iter()
        .map(|&c| (c as i32 - g.zero as i32) as f32 * scale)
        .collect()
}

/// Group-quantize a weight matrix, optionally column-scaled by an AWQ vector.
pub fn quantize_tensor(
    w: &TensorF32,
    group_size: usize,
    channel_scale: Option<&[f32]>,
) -> Result<QuantizedTensor> {
    if w.shape.len() != 2 {
        return Err(Error::DimMismatch {
            left: w.shape.clone(),
            right: vec![],
        });
    }
    let (out_channels, in_channels) = (w.rows(), w.cols());
    if group_size == 0 {
        return Err(Error::InvalidGroupSize(0));
    }
    if in_channels % group_size != 0 {
        return Err(Error::InChannelsNotDivisible {
            in_channels,
            group_size,
        });
    }
    if let Some(s) = channel_scale {
        if s.len() != in_channels {
            return Err(Error::LengthMismatch {
                expected: in_channels,
                got: s.len(),
            });
        }
        if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonFinite);
        }
    }

    let gpr = in_channels / group_size;
    let mut groups = Vec::with_capacity(out_channels * gpr);
    let mut scaled = vec![0.0f32; group_size];
    for o in 0..out_channels {
        let row = w.row(o);
        for g in 0..gpr {
            let cols = g * group_size..(g + 1) * group_size;
            match channel_scale {
                Some(s) => {
                    for (i, c) in cols.clone().enumerate() {
                        scaled[i] = row[c] * s[c];
                    }
                    groups.push(quantize_group(&scaled)?);
                }
                None => groups.push(quantize_group(&row[cols])?),
            }
        }
    }
    Ok(QuantizedTensor {
        out_channels,
        in_channels,
        group_size,
        groups,
        awq_channel_scale: channel_scale.map(|s| s.to_vec()),
    })
}

/// Default AWQ search grid: alpha in 0, 0.05, ..., 1.0.
pub fn default_alpha_grid() -> Vec<f32> {
    (0..=20).map(|i| i as f32 * 0.05).collect()
}

/// Search the per-input-channel AWQ scaling vector.
///
/// Candidate for exponent `alpha`: `s[c] = exp(alpha * (ln m[c] - mean ln m))`
/// where `m[c]` is the mean absolute calibration activation of channel `c`
/// (geometric mean of `s` is 1 by construction; `alpha = 0` gives exactly 1.0
/// everywhere). Each candidate is scored by the MSE between `calib * W^T` and
/// the quantized path `calib * diag(1/s) * What^T`; the minimizer is returned,
/// ties broken toward smaller alpha. Channels with zero activation fall back
/// to the smallest positive `m`.
pub fn awq_search_channel_scales(
    w: &TensorF32,
    calib: &TensorF32,
    alpha_grid: &[f32],
    group_size: usize,
) -> Result<Vec<f32>> {
    if alpha_grid.is_empty() {
        return Err(Error::EmptyAlphaGrid);
    }
    if calib.shape.len() != 2 || calib.rows() == 0 {
        return Err(Error::EmptyCalibration);
    }
    if calib.cols() != w.cols() {
        return Err(Error::DimMismatch {
            left: calib.shape.clone(),
            right: w.shape.clone(),
        });
    }
    let in_channels = w.cols();
    let samples = calib.rows();

    let mut mean_abs = vec![0.0f32; in_channels];
    for s in 0..samples {
        for (m, &v) in mean_abs.iter_mut().zip(calib.row(s)) {
            *m += v.abs();
        }
    }
    for m in mean_abs.iter_mut() {
        *m /= samples as f32;
    }
    let smallest_positive = mean_abs
        .iter()
        .copied()
        .filter(|&m| m > 0.0)
        .fold(f32::INFINITY, f32::min);
    if !smallest_positive.is_finite() {
        // Every channel is silent; scaling cannot help.
        return Ok(vec![1.0; in_channels]);
    }
    for m in mean_abs.iter_mut() {
        if *m == 0.0 {
            *m = smallest_positive;
        }
    }
    if mean_abs.iter().all(|&m| m == mean_abs[0]) {
        // Uniform salience: s = 1 for every alpha, exactly.
        return Ok(vec![1.0; in_channels]);
    }

    let ln_m: Vec<f32> = mean_abs.iter().map(|&m| m.ln()).collect();
    let mean_ln = ln_m.iter().sum::<f32>() / in_channels as f32;

    let baseline = matmul_wt(calib, &w.data, w.rows(), in_channels, None);
    let mut best: Option<(f64, f32, Vec<f32>)> = None;
    for &alpha in alpha_grid {
        let scales: Vec<f32> = ln_m
            .iter()
            .map(|&l| (alpha * (l - mean_ln)).exp())
            .collect();
        let qt = quantize_tensor(w, group_size, Some(&scales))?;
        let deq = qt.dequantize();
        let pred = matmul_wt(calib, &deq, w.rows(), in_channels, Some(&scales));
        let mut mse = 0.0f64;
        for (p, b) in pred.iter().zip(&baseline) {
            let d = (p - b) as f64;
            mse += d * d;
        }
        mse /= pred.len() as f64;
        let better = match &best {
            None => true,
            Some((bm, ba, _)) => mse < *bm || (mse == *bm && alpha < *ba),
        };
        if better {
            best = Some((mse, alpha, scales));
        }
    }
    Ok(best.expect("non-empty grid").2)
}

/// `calib [samples x in] * w^T [in x out]`, optionally dividing activations
/// column-wise by `inv_scale` first. Row-major `[samples x out]` output.
fn matmul_wt(
    calib: &TensorF32,
    w: &[f32],
    out_channels: usize,
    in_channels: usize,
    inv_scale: Option<&[f32]>,
) -> Vec<f32> {
    let samples = calib.rows();
    let mut out = vec![0.0f32; samples * out_channels];
    let mut x = vec![0.0f32; in_channels];
    for s in 0..samples {
        match inv_scale {
            Some(sc) => {
                for (xv, (&a, &d)) in x.iter_mut().zip(calib.row(s).iter().zip(sc)) {
                    *xv = a / d;
                }
            }
            None => x.copy_from_slice(calib.row(s)),
        }
        for o in 0..out_channels {
            let row = &w[o * in_channels..(o + 1) * in_channels];
            let mut acc = 0.0f32;
            for (wv, xv) in row.iter().zip(&x) {
                acc += wv * xv;
            }
            out[s * out_channels + o] = acc;
        }
    }
    out
}
