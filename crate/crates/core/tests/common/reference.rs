//! FP32 reference decoder: every projection is pre-dequantized to a dense
//! matrix and applied with the sequential matvec oracle. Identical math to
//! the runtime otherwise, so any logit difference against the kernel path
//! comes from the kernel's tile/tree ordering alone.

use awq_edge_core::fp16;
use awq_edge_core::pack::{ModelData, TensorPayload};
use awq_edge_core::tensor::{causal_attention, matvec_f32, rmsnorm, rope_apply, silu, RopeParams};
use awq_edge_core::ModelConfig;

struct RefProjection {
    w: Vec<f32>,
    out: usize,
    inp: usize,
    awq_scale: Option<Vec<f32>>,
}

impl RefProjection {
    fn apply(&self, x: &[f32]) -> Vec<f32> {
        match &self.awq_scale {
            Some(s) => {
                let divided: Vec<f32> = x.iter().zip(s).map(|(&xv, &sv)| xv / sv).collect();
                matvec_f32(&self.w, &divided, self.out, self.inp)
            }
            None => matvec_f32(&self.w, x, self.out, self.inp),
        }
    }
}

struct RefLayer {
    attn_norm: Vec<f32>,
    ffn_norm: Vec<f32>,
    wq: RefProjection,
    wk: RefProjection,
    wv: RefProjection,
    wo: RefProjection,
    w_gate: RefProjection,
    w_up: RefProjection,
    w_down: RefProjection,
    bq: Vec<f32>,
    bk: Vec<f32>,
    bv: Vec<f32>,
}

pub struct ReferenceModel {
    cfg: ModelConfig,
    embed: Vec<f32>,
    lm_head: Option<Vec<f32>>,
    layers: Vec<RefLayer>,
    final_norm: Vec<f32>,
    rope: RopeParams,
    keys: Vec<Vec<f32>>,
    values: Vec<Vec<f32>>,
    len: usize,
}

impl ReferenceModel {
    pub fn from_data(data: &ModelData) -> Self {
        let cfg = data.config.clone();
        let f16_vec = |name: &str| -> Vec<f32> {
            match data.tensor(name) {
                Some(TensorPayload::F16 { bits, .. }) => fp16::widen_slice(bits),
                _ => panic!("missing f16 tensor {name}"),
            }
        };
        let projection = |name: &str| -> RefProjection {
            match data.tensor(name) {
                Some(TensorPayload::Quant(t)) => RefProjection {
                    w: t.to_quantized().unwrap().dequantize(),
                    out: t.out_channels,
                    inp: t.in_channels,
                    awq_scale: match data.tensor(&format!("{name}.awq_scale")) {
                        Some(TensorPayload::F16 { bits, .. }) => Some(fp16::widen_slice(bits)),
                        _ => None,
                    },
                },
                _ => panic!("missing packed tensor {name}"),
            }
        };
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let p = |s: &str| format!("layers.{l}.{s}");
                RefLayer {
                    attn_norm: f16_vec(&p("attn_norm")),
                    ffn_norm: f16_vec(&p("ffn_norm")),
                    wq: projection(&p("wq")),
                    wk: projection(&p("wk")),
                    wv: projection(&p("wv")),
                    wo: projection(&p("wo")),
                    w_gate: projection(&p("w_gate")),
                    w_up: projection(&p("w_up")),
                    w_down: projection(&p("w_down")),
                    bq: f16_vec(&p("bq")),
                    bk: f16_vec(&p("bk")),
                    bv: f16_vec(&p("bv")),
                }
            })
            .collect();
        Self {
            embed: f16_vec("embed"),
            lm_head: (!cfg.tie_embeddings).then(|| f16_vec("lm_head")),
            layers,
            final_norm: f16_vec("final_norm"),
            rope: RopeParams::new(cfg.head_dim, cfg.rope_theta, cfg.max_seq).unwrap(),
            keys: vec![Vec::new(); cfg.n_layers],
            values: vec![Vec::new(); cfg.n_layers],
            len: 0,
            cfg,
        }
    }

    pub fn decode_step(&mut self, token: u32) -> Vec<f32> {
        let cfg = self.cfg.clone();
        let (dim, hd) = (cfg.dim, cfg.head_dim);
        let pos = self.len;
        let mut x = self.embed[token as usize * dim..(token as usize + 1) * dim].to_vec();

        for l in 0..self.layers.len() {
            let lw = &self.layers[l];
            let xn = rmsnorm(&x, &lw.attn_norm, cfg.rms_eps).unwrap();
            let mut q = lw.wq.apply(&xn);
            let mut k = lw.wk.apply(&xn);
            let mut v = lw.wv.apply(&xn);
            for (a, b) in q.iter_mut().zip(&lw.bq) {
                *a += b;
            }
            for (a, b) in k.iter_mut().zip(&lw.bk) {
                *a += b;
            }
            for (a, b) in v.iter_mut().zip(&lw.bv) {
                *a += b;
            }
            for h in 0..cfg.n_heads {
                let rot = rope_apply(&q[h * hd..(h + 1) * hd], pos, &self.rope).unwrap();
                q[h * hd..(h + 1) * hd].copy_from_slice(&rot);
            }
            for h in 0..cfg.n_kv_heads {
                let rot = rope_apply(&k[h * hd..(h + 1) * hd], pos, &self.rope).unwrap();
                k[h * hd..(h + 1) * hd].copy_from_slice(&rot);
            }
            self.keys[l].extend_from_slice(&k);
            self.values[l].extend_from_slice(&v);
            let attn = causal_attention(
                &q,
                &self.keys[l],
                &self.values[l],
                cfg.n_heads,
                cfg.n_kv_heads,
                hd,
            )
            .unwrap();
            let o = lw.wo.apply(&attn);
            let h_res: Vec<f32> = x.iter().zip(&o).map(|(a, b)| a + b).collect();

            let hn = rmsnorm(&h_res, &lw.ffn_norm, cfg.rms_eps).unwrap();
            let gate = lw.w_gate.apply(&hn);
            let up = lw.w_up.apply(&hn);
            let act: Vec<f32> = gate.iter().zip(&up).map(|(&g, &u)| silu(g) * u).collect();
            let down = lw.w_down.apply(&act);
            x = h_res.iter().zip(&down).map(|(a, b)| a + b).collect();
        }
        self.len += 1;

        let hn = rmsnorm(&x, &self.final_norm, cfg.rms_eps).unwrap();
        let head = self.lm_head.as_deref().unwrap_or(&self.embed);
        matvec_f32(head, &hn, cfg.vocab_size, dim)
    }

    /// Sequential prefill: final-position logits.
    pub fn prefill(&mut self, tokens: &[u32]) -> Vec<f32> {
        let mut logits = Vec::new();
        for &t in tokens {
            logits = self.decode_step(t);
        }
        logits
    }
}
