//! Seeded synthetic models and the raw-to-packed quantization pipeline.
//!
//! A synthetic model stands in for a real checkpoint: every tensor is drawn
//! from a fixed-seed generator in canonical enumeration order, so the same
//! seed always produces byte-identical files.

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::fp16;
use crate::pack::{
    model_tensor_specs, ModelData, PackOptions, PackedTensor, TensorKind, TensorPayload,
};
use crate::quant::{awq_search_channel_scales, default_alpha_grid, quantize_tensor};
use crate::tensor::TensorF32;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// AWQ search settings for the quantization pipeline.
#[derive(Debug, Clone)]
pub struct AwqOptions {
    /// Synthetic calibration rows drawn per tensor when no data is supplied.
    pub calib_samples: usize,
    pub alpha_grid: Vec<f32>,
}

impl Default for AwqOptions {
    fn default() -> Self {
        Self {
            calib_samples: 32,
            alpha_grid: default_alpha_grid(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub quantize_projections: bool,
    pub awq: Option<AwqOptions>,
}

impl SynthOptions {
    pub fn raw() -> Self {
        Self {
            quantize_projections: false,
            awq: None,
        }
    }

    pub fn quantized() -> Self {
        Self {
            quantize_projections: true,
            awq: None,
        }
    }

    pub fn quantized_awq(calib_samples: usize) -> Self {
        Self {
            quantize_projections: true,
            awq: Some(AwqOptions {
                calib_samples,
                ..AwqOptions::default()
            }),
        }
    }
}

fn normal_f16(rng: &mut ChaCha8Rng, mean: f32, sd: f32, n: usize) -> Vec<u16> {
    let dist = Normal::new(mean, sd).expect("valid normal");
    (0..n).map(|_| fp16::narrow(dist.sample(rng))).collect()
}

/// Generate a raw (all-f16) model with seeded pseudo-random weights, then
/// optionally quantize it.
pub fn synth_model(config: &ModelConfig, seed: u64, opts: &SynthOptions) -> Result<ModelData> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.quantized_tensors = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = Vec::new();
    for spec in model_tensor_specs(&cfg, &PackOptions::raw()) {
        let shape = match &spec.kind {
            TensorKind::F16 { shape } => shape.clone(),
            TensorKind::Quant { .. } => unreachable!("raw enumeration"),
        };
        let n: usize = shape.iter().product();
        let leaf = spec.name.rsplit('.').next().unwrap_or(&spec.name);
        let bits = if leaf.ends_with("_norm") {
            normal_f16(&mut rng, 1.0, 0.05, n)
        } else if leaf.starts_with('b') || leaf == "embed" || leaf == "lm_head" {
            normal_f16(&mut rng, 0.0, 0.02, n)
        } else {
            normal_f16(&mut rng, 0.0, 0.05, n)
        };
        tensors.push((spec.name, TensorPayload::F16 { shape, bits }));
    }
    let raw = ModelData {
        config: cfg,
        tensors,
    };
    if !opts.quantize_projections {
        return Ok(raw);
    }
    quantize_model(
        &raw,
        config.group_size,
        opts.awq.as_ref(),
        seed ^ 0x9e37_79b9_7f4a_7c15,
    )
}

/// Quantize every projection of a raw model into packed macros.
///
/// Projections are the rank-2 f16 tensors other than the embedding and LM
/// head. With `awq` set, a per-tensor channel-scale search runs against
/// seeded synthetic calibration activations; the chosen vector is rounded to
/// f16 (the storage format) before it is applied, so the stored model is
/// self-consistent.
pub fn quantize_model(
    raw: &ModelData,
    group_size: usize,
    awq: Option<&AwqOptions>,
    calib_seed: u64,
) -> Result<ModelData> {
    if !raw.config.quantized_tensors.is_empty() {
        return Err(Error::InvalidConfig(
            "input model is already quantized".into(),
        ));
    }
    let mut config = raw.config.clone();
    config.group_size = group_size;
    config.validate()?;

    let mut calib_rng = ChaCha8Rng::seed_from_u64(calib_seed);
    let unit = Normal::new(0.0f32, 1.0).expect("valid normal");

    let mut tensors: Vec<(String, TensorPayload)> = Vec::with_capacity(raw.tensors.len());
    let mut quantized_names = Vec::new();
    for (name, payload) in &raw.tensors {
        let is_projection = matches!(
            payload,
            TensorPayload::F16 { shape, .. } if shape.len() == 2
        ) && name != "embed"
            && name != "lm_head";
        if !is_projection {
            tensors.push((name.clone(), payload.clone()));
            continue;
        }
        let (shape, bits) = match payload {
            TensorPayload::F16 { shape, bits } => (shape, bits),
            TensorPayload::Quant(_) => unreachable!(),
        };
        let (out, inp) = (shape[0], shape[1]);
        let w = TensorF32::new(vec![out, inp], fp16::widen_slice(bits))?;

        let channel_scale = match awq {
            Some(opts) => {
                let rows = opts.calib_samples.max(1);
                let data: Vec<f32> = (0..rows * inp)
                    .map(|_| unit.sample(&mut calib_rng))
                    .collect();
                let calib = TensorF32::new(vec![rows, inp], data)?;
                let searched = awq_search_channel_scales(&w, &calib, &opts.alpha_grid, group_size)?;
                // Round to the storage format before applying.
                Some(fp16::widen_slice(&fp16::narrow_slice(&searched)))
            }
            None => None,
        };

        let qt = quantize_tensor(&w, group_size, channel_scale.as_deref())?;
        let packed = PackedTensor::from_quantized(&qt)?;
        quantized_names.push(name.clone());
        tensors.push((name.clone(), TensorPayload::Quant(packed)));
        if let Some(s) = &channel_scale {
            tensors.push((
                format!("{name}.awq_scale"),
                TensorPayload::F16 {
                    shape: vec![inp],
                    bits: fp16::narrow_slice(s),
                },
            ));
        }
    }
    config.quantized_tensors = quantized_names;
    Ok(ModelData { config, tensors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            dim: 16,
            n_layers: 1,
            n_heads: 2,
            n_kv_heads: 1,
            head_dim: 8,
            ffn_hidden: 16,
            vocab_size: 32,
            group_size: 8,
            rope_theta: 10_000.0,
            rms_eps: 1e-6,
            tie_embeddings: true,
            quantized_tensors: Vec::new(),
            max_seq: 8,
        }
    }

    #[test]
    fn synth_is_seed_deterministic() {
        let a = synth_model(&cfg(), 42, &SynthOptions::quantized()).unwrap();
        let b = synth_model(&cfg(), 42, &SynthOptions::quantized()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quantized_model_declares_its_tensors() {
        let m = synth_model(&cfg(), 1, &SynthOptions::quantized()).unwrap();
        assert_eq!(m.config.quantized_tensors.len(), 7);
        assert!(m
            .config
            .quantized_tensors
            .iter()
            .all(|n| matches!(m.tensor(n), Some(TensorPayload::Quant(_)))));
    }

    #[test]
    fn awq_adds_one_scale_vector_per_projection() {
        let m = synth_model(&cfg(), 2, &SynthOptions::quantized_awq(4)).unwrap();
        for name in &m.config.quantized_tensors {
            let aux = format!("{name}.awq_scale");
            assert!(
                matches!(m.tensor(&aux), Some(TensorPayload::F16 { shape, .. }) if shape.len() == 1),
                "missing {aux}"
            );
        }
    }

    #[test]
    fn double_quantization_is_rejected() {
        let m = synth_model(&cfg(), 3, &SynthOptions::quantized()).unwrap();
        assert!(quantize_model(&m, 8, None, 0).is_err());
    }

    #[test]
    fn group_size_override_changes_payload() {
        let mut c = cfg();
        c.dim = 128;
        c.head_dim = 64;
        c.ffn_hidden = 128;
        c.group_size = 64;
        let raw = synth_model(&c, 4, &SynthOptions::raw()).unwrap();
        let q64 = quantize_model(&raw, 64, None, 0).unwrap();
        let q128 = quantize_model(&raw, 128, None, 0).unwrap();
        assert_eq!(q64.config.group_size, 64);
        assert_eq!(q128.config.group_size, 128);
        let macros = |m: &ModelData| match m.tensor("layers.0.wq") {
            Some(TensorPayload::Quant(t)) => t.macros.len(),
            _ => panic!(),
        };
        assert_eq!(macros(&q64), 2 * macros(&q128));
    }
}
