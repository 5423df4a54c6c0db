//! Decoder runtime: embeddings, stacked decoder layers, tied output head,
//! prefill and incremental decode, generation.
//!
//! Layer dataflow:
//! `h = x + Wo * attn(rope(Wq*rms(x) + bq), cache)` with K/V built the same
//! way, then `out = h + Wdown * (silu(Wgate * rms(h)) .* Wup * rms(h))`.
//! Every projection runs through the quantized kernel; biases and norm gains
//! are widened from their f16 storage at load. Activations entering a
//! projection that carries an AWQ channel-scale vector are divided by it
//! first (the inverse of the fold applied at quantization time).
//!
//! Prefill processes the whole prompt layer by layer through the batched
//! kernel path; since rows are independent everywhere, its logits are
//! bit-identical to running the same tokens through `decode_step` one by one.

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::fp16;
use crate::kernel::qmatvec;
use crate::pack::{
    read_model_pair, ChannelSchedule, ModelData, ModelFilePair, PackedTensor, TensorPayload,
    DEFAULT_CHANNELS,
};
use crate::runtime::cache::KvCache;
use crate::runtime::flops::{ForwardTrace, OpClass};
use crate::runtime::sampler::Sampler;
use crate::tensor::{causal_attention, rmsnorm, rope_apply, silu, RopeParams};
use std::time::Instant;

/// One quantized projection plus its stream schedule and optional AWQ vector.
#[derive(Debug, Clone)]
pub struct Projection {
    packed: PackedTensor,
    schedule: ChannelSchedule,
    /// Stored channel scales widened to f32; activations are divided by this.
    awq_scale: Option<Vec<f32>>,
}

impl Projection {
    fn matvec(&self, x: &[f32], workers: usize) -> Result<Vec<f32>> {
        match &self.awq_scale {
            Some(s) => {
                let divided: Vec<f32> = x.iter().zip(s).map(|(&xv, &sv)| xv / sv).collect();
                qmatvec(&self.packed, &self.schedule, &divided, workers)
            }
            None => qmatvec(&self.packed, &self.schedule, x, workers),
        }
    }

    pub fn packed(&self) -> &PackedTensor {
        &self.packed
    }

    pub fn awq_scale(&self) -> Option<&[f32]> {
        self.awq_scale.as_deref()
    }
}

#[derive(Debug, Clone)]
struct LayerWeights {
    attn_norm: Vec<f32>,
    ffn_norm: Vec<f32>,
    wq: Projection,
    wk: Projection,
    wv: Projection,
    wo: Projection,
    w_gate: Projection,
    w_up: Projection,
    w_down: Projection,
    bq: Vec<f32>,
    bk: Vec<f32>,
    bv: Vec<f32>,
}

/// An immutable loaded model; generation sessions own their [`KvCache`].
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    /// f16 embedding table, one copy; doubles as the tied LM head.
    embed: Vec<u16>,
    /// Separate f16 head when embeddings are not tied.
    lm_head: Option<Vec<u16>>,
    layers: Vec<LayerWeights>,
    final_norm: Vec<f32>,
    rope: RopeParams,
    workers: usize,
}

fn timed<R>(
    trace: &mut Option<&mut ForwardTrace>,
    op: OpClass,
    flops: u64,
    f: impl FnOnce() -> R,
) -> R {
    match trace {
        Some(tr) => {
            let t0 = Instant::now();
            let r = f();
            tr.record(op, flops, t0.elapsed());
            r
        }
        None => f(),
    }
}

fn add_assign(a: &mut [f32], b: &[f32]) {
    for (av, bv) in a.iter_mut().zip(b) {
        *av += bv;
    }
}

impl Model {
    pub fn from_data(data: &ModelData) -> Result<Self> {
        let config = data.config.clone();
        config.validate()?;

        let f16_vec = |name: &str| -> Result<Vec<f32>> {
            match data.tensor(name) {
                Some(TensorPayload::F16 { bits, .. }) => Ok(fp16::widen_slice(bits)),
                _ => Err(Error::DirectoryInconsistent(format!(
                    "missing tensor {name}"
                ))),
            }
        };
        let f16_bits = |name: &str| -> Result<Vec<u16>> {
            match data.tensor(name) {
                Some(TensorPayload::F16 { bits, .. }) => Ok(bits.clone()),
                _ => Err(Error::DirectoryInconsistent(format!(
                    "missing tensor {name}"
                ))),
            }
        };
        let projection = |name: &str| -> Result<Projection> {
            match data.tensor(name) {
                Some(TensorPayload::Quant(t)) => {
                    let awq_scale = match data.tensor(&format!("{name}.awq_scale")) {
                        Some(TensorPayload::F16 { bits, .. }) => Some(fp16::widen_slice(bits)),
                        _ => None,
                    };
                    Ok(Projection {
                        schedule: ChannelSchedule::for_tensor(t, DEFAULT_CHANNELS),
                        packed: t.clone(),
                        awq_scale,
                    })
                }
                Some(TensorPayload::F16 { .. }) => Err(Error::InvalidConfig(format!(
                    "projection {name} is stored as f16; the runtime needs a packed model"
                ))),
                None => Err(Error::DirectoryInconsistent(format!(
                    "missing tensor {name}"
                ))),
            }
        };

        let mut layers = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            let p = |s: &str| format!("layers.{l}.{s}");
            layers.push(LayerWeights {
                attn_norm: f16_vec(&p("attn_norm"))?,
                ffn_norm: f16_vec(&p("ffn_norm"))?,
                wq: projection(&p("wq"))?,
                wk: projection(&p("wk"))?,
                wv: projection(&p("wv"))?,
                wo: projection(&p("wo"))?,
                w_gate: projection(&p("w_gate"))?,
                w_up: projection(&p("w_up"))?,
                w_down: projection(&p("w_down"))?,
                bq: f16_vec(&p("bq"))?,
                bk: f16_vec(&p("bk"))?,
                bv: f16_vec(&p("bv"))?,
            });
        }
        let rope = RopeParams::new(config.head_dim, config.rope_theta, config.max_seq)?;
        Ok(Self {
            embed: f16_bits("embed")?,
            lm_head: if config.tie_embeddings {
                None
            } else {
                Some(f16_bits("lm_head")?)
            },
            layers,
            final_norm: f16_vec("final_norm")?,
            rope,
            workers: 1,
            config,
        })
    }

    pub fn from_pair(pair: &ModelFilePair) -> Result<Self> {
        Self::from_data(&read_model_pair(pair)?)
    }

    /// Host workers backing the kernel's logical channels (clamped to >= 1).
    pub fn set_workers(&mut self, workers: usize) {
        self.workers = workers.max(1);
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn new_cache(&self) -> KvCache {
        KvCache::new(&self.config)
    }

    /// True when the LM head is the embedding table itself.
    pub fn head_is_tied(&self) -> bool {
        self.lm_head.is_none()
    }

    fn embed_row(&self, token: u32) -> Vec<f32> {
        let dim = self.config.dim;
        let at = token as usize * dim;
        self.embed[at..at + dim]
            .iter()
            .map(|&b| fp16::widen(b))
            .collect()
    }

    /// One decoder layer over a batch of rows starting at cache position
    /// `base`. Stages this layer's K/V into the cache without committing.
    fn layer_batch(
        &self,
        layer: usize,
        x: Vec<Vec<f32>>,
        base: usize,
        cache: &mut KvCache,
        trace: &mut Option<&mut ForwardTrace>,
    ) -> Result<Vec<Vec<f32>>> {
        let cfg = &self.config;
        let lw = &self.layers[layer];
        let n = x.len();
        let (dim, kv_dim, hd) = (cfg.dim, cfg.kv_dim(), cfg.head_dim);
        let nu = n as u64;

        let f_rms = (4 * dim + 3) as u64;
        let f_qkv = 2 * dim as u64 * (dim + 2 * kv_dim) as u64;
        let f_bias = (dim + 2 * kv_dim) as u64;
        let f_rope = ((cfg.n_heads + cfg.n_kv_heads) * (hd / 2) * 6) as u64;
        let f_attn: u64 = (0..n)
            .map(|i| (cfg.n_heads * 4 * hd * (base + i + 1)) as u64)
            .sum();
        let f_out = (2 * dim * dim + dim) as u64;
        let f_gateup = (4 * cfg.ffn_hidden * dim) as u64;
        let f_silu = (6 * cfg.ffn_hidden) as u64;
        let f_down = (2 * dim * cfg.ffn_hidden + dim) as u64;

        let xn = timed(trace, OpClass::RmsNorm, nu * f_rms, || {
            x.iter()
                .map(|row| rmsnorm(row, &lw.attn_norm, cfg.rms_eps))
                .collect::<Result<Vec<_>>>()
        })?;

        let (mut q, mut k, mut v) = timed(trace, OpClass::QkvProj, nu * f_qkv, || {
            let mut q = Vec::with_capacity(n);
            let mut k = Vec::with_capacity(n);
            let mut v = Vec::with_capacity(n);
            for row in &xn {
                q.push(lw.wq.matvec(row, self.workers)?);
                k.push(lw.wk.matvec(row, self.workers)?);
                v.push(lw.wv.matvec(row, self.workers)?);
            }
            Ok::<_, Error>((q, k, v))
        })?;

        timed(trace, OpClass::QkvBias, nu * f_bias, || {
            for i in 0..n {
                add_assign(&mut q[i], &lw.bq);
                add_assign(&mut k[i], &lw.bk);
                add_assign(&mut v[i], &lw.bv);
            }
        });

        timed(trace, OpClass::Rope, nu * f_rope, || {
            for i in 0..n {
                let pos = base + i;
                for h in 0..cfg.n_heads {
                    let rotated = rope_apply(&q[i][h * hd..(h + 1) * hd], pos, &self.rope)?;
                    q[i][h * hd..(h + 1) * hd].copy_from_slice(&rotated);
                }
                for h in 0..cfg.n_kv_heads {
                    let rotated = rope_apply(&k[i][h * hd..(h + 1) * hd], pos, &self.rope)?;
                    k[i][h * hd..(h + 1) * hd].copy_from_slice(&rotated);
                }
            }
            Ok::<_, Error>(())
        })?;

        let attn = timed(trace, OpClass::MhaAttention, f_attn, || {
            for i in 0..n {
                cache.write(layer, base + i, &k[i], &v[i])?;
            }
            (0..n)
                .map(|i| {
                    causal_attention(
                        &q[i],
                        cache.keys_upto(layer, base + i + 1),
                        cache.values_upto(layer, base + i + 1),
                        cfg.n_heads,
                        cfg.n_kv_heads,
                        hd,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let h = timed(trace, OpClass::AttnOutProj, nu * f_out, || {
            x.iter()
                .zip(&attn)
                .map(|(xi, ai)| {
                    let mut o = lw.wo.matvec(ai, self.workers)?;
                    add_assign(&mut o, xi);
                    Ok(o)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let hn = timed(trace, OpClass::RmsNorm, nu * f_rms, || {
            h.iter()
                .map(|row| rmsnorm(row, &lw.ffn_norm, cfg.rms_eps))
                .collect::<Result<Vec<_>>>()
        })?;

        let (gate, up) = timed(trace, OpClass::FfnGateUp, nu * f_gateup, || {
            let mut gate = Vec::with_capacity(n);
            let mut up = Vec::with_capacity(n);
            for row in &hn {
                gate.push(lw.w_gate.matvec(row, self.workers)?);
                up.push(lw.w_up.matvec(row, self.workers)?);
            }
            Ok::<_, Error>((gate, up))
        })?;

        let act = timed(trace, OpClass::SiluMul, nu * f_silu, || {
            gate.iter()
                .zip(&up)
                .map(|(g, u)| g.iter().zip(u).map(|(&gv, &uv)| silu(gv) * uv).collect())
                .collect::<Vec<Vec<f32>>>()
        });

        timed(trace, OpClass::FfnDown, nu * f_down, || {
            h.into_iter()
                .zip(&act)
                .map(|(hi, ai)| {
                    let mut d = lw.w_down.matvec(ai, self.workers)?;
                    add_assign(&mut d, &hi);
                    Ok(d)
                })
                .collect::<Result<Vec<_>>>()
        })
    }

    /// One layer over one row at position `cache.len()`, without committing
    /// the cache (the caller commits after running every layer).
    pub fn layer_forward(&self, layer: usize, x: &[f32], cache: &mut KvCache) -> Result<Vec<f32>> {
        if x.len() != self.config.dim {
            return Err(Error::LengthMismatch {
                expected: self.config.dim,
                got: x.len(),
            });
        }
        let base = cache.len();
        let mut rows = self.layer_batch(layer, vec![x.to_vec()], base, cache, &mut None)?;
        Ok(rows.pop().expect("one row in, one row out"))
    }

    fn forward_batch(
        &self,
        tokens: &[u32],
        cache: &mut KvCache,
        mut trace: Option<&mut ForwardTrace>,
    ) -> Result<Vec<f32>> {
        let cfg = &self.config;
        if tokens.is_empty() {
            return Err(Error::EmptyPrompt);
        }
        for &t in tokens {
            if t as usize >= cfg.vocab_size {
                return Err(Error::TokenOutOfRange {
                    token: t,
                    vocab_size: cfg.vocab_size,
                });
            }
        }
        let n = tokens.len();
        if cache.len() + n > cfg.max_seq {
            return Err(Error::CacheOverflow {
                max_seq: cfg.max_seq,
            });
        }
        let base = cache.len();
        let dim = cfg.dim;

        let mut x: Vec<Vec<f32>> = timed(&mut trace, OpClass::EmbedCopy, 0, || {
            tokens.iter().map(|&t| self.embed_row(t)).collect()
        });
        for layer in 0..self.layers.len() {
            x = self.layer_batch(layer, x, base, cache, &mut trace)?;
        }
        cache.advance(n)?;

        let f_rms = (4 * dim + 3) as u64;
        let last = x.last().expect("non-empty batch");
        let hn = timed(&mut trace, OpClass::RmsNorm, f_rms, || {
            rmsnorm(last, &self.final_norm, cfg.rms_eps)
        })?;

        let head = self.lm_head.as_deref().unwrap_or(&self.embed);
        let f_head = 2 * cfg.vocab_size as u64 * dim as u64;
        let logits = timed(&mut trace, OpClass::LmHead, f_head, || {
            let mut logits = Vec::with_capacity(cfg.vocab_size);
            for vrow in head.chunks_exact(dim) {
                let mut acc = 0.0f32;
                for (&bits, &hv) in vrow.iter().zip(&hn) {
                    acc += fp16::widen(bits) * hv;
                }
                logits.push(acc);
            }
            logits
        });
        Ok(logits)
    }

    /// Process the whole prompt, fill the cache, return final-position logits.
    pub fn prefill(&self, tokens: &[u32], cache: &mut KvCache) -> Result<Vec<f32>> {
        self.forward_batch(tokens, cache, None)
    }

    pub fn prefill_traced(
        &self,
        tokens: &[u32],
        cache: &mut KvCache,
        trace: &mut ForwardTrace,
    ) -> Result<Vec<f32>> {
        self.forward_batch(tokens, cache, Some(trace))
    }

    /// Append one token and return the next-token logits.
    pub fn decode_step(&self, token: u32, cache: &mut KvCache) -> Result<Vec<f32>> {
        self.forward_batch(&[token], cache, None)
    }

    pub fn decode_step_traced(
        &self,
        token: u32,
        cache: &mut KvCache,
        trace: &mut ForwardTrace,
    ) -> Result<Vec<f32>> {
        self.forward_batch(&[token], cache, Some(trace))
    }

    /// Prefill then sample `n_new` tokens (the final sampled token is not fed
    /// back through the model).
    pub fn generate(&self, prompt: &[u32], n_new: usize, sampler: Sampler) -> Result<Vec<u32>> {
        let mut cache = self.new_cache();
        self.generate_with(prompt, n_new, sampler, &mut cache, None)
    }

    pub fn generate_traced(
        &self,
        prompt: &[u32],
        n_new: usize,
        sampler: Sampler,
        trace: &mut ForwardTrace,
    ) -> Result<Vec<u32>> {
        let mut cache = self.new_cache();
        self.generate_with(prompt, n_new, sampler, &mut cache, Some(trace))
    }

    fn generate_with(
        &self,
        prompt: &[u32],
        n_new: usize,
        sampler: Sampler,
        cache: &mut KvCache,
        mut trace: Option<&mut ForwardTrace>,
    ) -> Result<Vec<u32>> {
        let mut state = sampler.state()?;
        let mut logits = self.forward_batch(prompt, cache, trace.as_deref_mut())?;
        let mut out = Vec::with_capacity(n_new);
        for step in 0..n_new {
            let tok = state.sample(&logits);
            out.push(tok);
            if step + 1 < n_new {
                logits = self.forward_batch(&[tok], cache, trace.as_deref_mut())?;
            }
        }
        Ok(out)
    }
}
