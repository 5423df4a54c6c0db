//! FP32 reference tensor math and the decoder's non-linear operators.
//!
//! Everything here is the oracle side of the stack: plain sequential
//! summation order, f32 accumulation throughout, no tiling. The quantized
//! kernel is validated against these routines.

use crate::error::{Error, Result};

/// Row-major f32 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorF32 {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl TensorF32 {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }
}

/// Rotary embedding parameters for one head width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RopeParams {
    pub head_dim: usize,
    pub theta_base: f32,
    pub max_position: usize,
}

impl RopeParams {
    pub fn new(head_dim: usize, theta_base: f32, max_position: usize) -> Result<Self> {
        if head_dim % 2 != 0 || head_dim == 0 {
            return Err(Error::OddHeadDim(head_dim));
        }
        Ok(Self {
            head_dim,
            theta_base,
            max_position,
        })
    }
}

/// `[m x k] * [k x n] -> [m x n]`, accumulated in f32 in ascending-k order.
///
/// The summation order is part of the contract: this routine defines the
/// sequential oracle that ordered kernels are compared against.
pub fn matmul_f32(a: &TensorF32, b: &TensorF32) -> Result<TensorF32> {
    if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
        return Err(Error::DimMismatch {
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut out = vec![0.0f32; m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        for j in 0..n {
            let mut acc = 0.0f32;
            for (t, &av) in arow.iter().enumerate() {
                acc += av * b.data[t * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    TensorF32::new(vec![m, n], out)
}

/// Dense matrix-vector product `w [out x in] * x [in]`, sequential order.
pub fn matvec_f32(w: &[f32], x: &[f32], out_dim: usize, in_dim: usize) -> Vec<f32> {
    debug_assert_eq!(w.len(), out_dim * in_dim);
    debug_assert_eq!(x.len(), in_dim);
    let mut y = vec![0.0f32; out_dim];
    for (o, yo) in y.iter_mut().enumerate() {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let mut acc = 0.0f32;
        for (wv, xv) in row.iter().zip(x) {
            acc += wv * xv;
        }
        *yo = acc;
    }
    y
}

/// `y[i] = gamma[i] * x[i] / sqrt(mean(x^2) + eps)`.
pub fn rmsnorm(x: &[f32], gamma: &[f32], eps: f32) -> Result<Vec<f32>> {
    if x.len() != gamma.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: gamma.len(),
        });
    }
    let mut ss = 0.0f32;
    for &v in x {
        ss += v * v;
    }
    let inv = 1.0 / (ss / x.len() as f32 + eps).sqrt();
    Ok(x.iter().zip(gamma).map(|(&xv, &g)| g * xv * inv).collect())
}

/// Rotate lane pairs `(i, i + head_dim/2)` by `position / theta^(2i/head_dim)`.
///
/// Half-split pairing convention (Qwen/Llama family).
pub fn rope_apply(x: &[f32], position: usize, params: &RopeParams) -> Result<Vec<f32>> {
    let hd = params.head_dim;
    if hd % 2 != 0 {
        return Err(Error::OddHeadDim(hd));
    }
    if x.len() != hd {
        return Err(Error::LengthMismatch {
            expected: hd,
            got: x.len(),
        });
    }
    let half = hd / 2;
    let mut out = x.to_vec();
    for i in 0..half {
        let freq = 1.0f32 / params.theta_base.powf(2.0 * i as f32 / hd as f32);
        let angle = position as f32 * freq;
        let (sin, cos) = angle.sin_cos();
        let a = x[i];
        let b = x[i + half];
        out[i] = a * cos - b * sin;
        out[i + half] = a * sin + b * cos;
    }
    Ok(out)
}

/// `x * sigmoid(x)`.
pub fn silu(x: f32) -> f32 {
    x / (1.0 + (-x).exp())
}

/// Numerically stable in-place softmax (max subtraction).
pub fn softmax_inplace(xs: &mut [f32]) {
    if xs.is_empty() {
        return;
    }
    let max = xs.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for v in xs.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in xs.iter_mut() {
        *v /= sum;
    }
}

/// Grouped-query causal attention over a populated cache prefix.
///
/// `q` holds `n_q_heads * head_dim` values; `keys`/`values` hold
/// `cache_len * n_kv_heads * head_dim` each. Query head `h` attends with
/// kv head `h / (n_q_heads / n_kv_heads)`. Scores are `q . k / sqrt(head_dim)`
/// over every cached position, softmaxed, then used to weight the V rows.
pub fn causal_attention(
    q: &[f32],
    keys: &[f32],
    values: &[f32],
    n_q_heads: usize,
    n_kv_heads: usize,
    head_dim: usize,
) -> Result<Vec<f32>> {
    if n_kv_heads == 0 || n_q_heads % n_kv_heads != 0 {
        return Err(Error::HeadsNotDivisible {
            n_heads: n_q_heads,
            n_kv_heads,
        });
    }
    if q.len() != n_q_heads * head_dim {
        return Err(Error::LengthMismatch {
            expected: n_q_heads * head_dim,
            got: q.len(),
        });
    }
    let kv_width = n_kv_heads * head_dim;
    if keys.is_empty() || keys.len() % kv_width != 0 {
        return Err(Error::EmptyCache);
    }
    if values.len() != keys.len() {
        return Err(Error::LengthMismatch {
            expected: keys.len(),
            got: values.len(),
        });
    }
    let cache_len = keys.len() / kv_width;
    let heads_per_kv = n_q_heads / n_kv_heads;
    let scale = 1.0 / (head_dim as f32).sqrt();

    let mut out = vec![0.0f32; n_q_heads * head_dim];
    let mut scores = vec![0.0f32; cache_len];
    for h in 0..n_q_heads {
        let g = h / heads_per_kv;
        let qh = &q[h * head_dim..(h + 1) * head_dim];
        for (p, s) in scores.iter_mut().enumerate() {
            let krow = &keys[p * kv_width + g * head_dim..][..head_dim];
            let mut dot = 0.0f32;
            for (qv, kv) in qh.iter().zip(krow) {
                dot += qv * kv;
            }
            *s = dot * scale;
        }
        softmax_inplace(&mut scores);
        let oh = &mut out[h * head_dim..(h + 1) * head_dim];
        for (p, &w) in scores.iter().enumerate() {
            let vrow = &values[p * kv_width + g * head_dim..][..head_dim];
            for (ov, vv) in oh.iter_mut().zip(vrow) {
                *ov += w * vv;
            }
        }
    }
    Ok(out)
}
