//! Binary weights file + JSON architecture file.
//!
//! Blob layout (all integers little-endian):
//! - 8-byte magic `AWQMACRO`, u32 format version, u32 tensor count
//! - directory: 56 bytes per tensor
//!   (name hash u64, dtype u32, rank u32, dim0 u64, dim1 u64, group size u32,
//!   reserved u32, offset u64, length u64)
//! - payloads, contiguous, in directory order
//!
//! dtype 1 is raw f16 (rank 1 or 2); dtype 2 is a packed INT4 macro stream in
//! (row block, input group) order. Tensor names are not stored; the reader
//! derives the expected name set from the JSON config and matches on FNV-1a
//! hashes. Offsets are fully determined by the directory, so two writes of
//! the same model are byte-identical.

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::pack::layout::PackedTensor;
use crate::pack::macro_block::{macro_bytes, AwqMacro};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub const MAGIC: [u8; 8] = *b"AWQMACRO";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_BYTES: u64 = 16;
const DIR_ENTRY_BYTES: u64 = 56;

const DTYPE_F16: u32 = 1;
const DTYPE_Q4: u32 = 2;

/// FNV-1a 64-bit hash of a tensor name.
pub fn fnv1a64(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in name.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Expected kind of one tensor in a model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorKind {
    F16 {
        shape: Vec<usize>,
    },
    Quant {
        out_channels: usize,
        in_channels: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub kind: TensorKind,
}

/// What a model file stores for the projection weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackOptions {
    /// Projections stored as INT4 macros (false: raw f16 pair).
    pub quantize_projections: bool,
    /// Include one f16 AWQ channel-scale vector per quantized projection.
    pub awq_scales: bool,
}

impl PackOptions {
    pub fn quantized() -> Self {
        Self {
            quantize_projections: true,
            awq_scales: false,
        }
    }

    pub fn raw() -> Self {
        Self {
            quantize_projections: false,
            awq_scales: false,
        }
    }
}

/// Names of the seven projection matrices of one layer, with shapes.
fn projection_shapes(config: &ModelConfig) -> [(&'static str, usize, usize); 7] {
    let kv = config.kv_dim();
    [
        ("wq", config.dim, config.dim),
        ("wk", kv, config.dim),
        ("wv", kv, config.dim),
        ("wo", config.dim, config.dim),
        ("w_gate", config.ffn_hidden, config.dim),
        ("w_up", config.ffn_hidden, config.dim),
        ("w_down", config.dim, config.ffn_hidden),
    ]
}

/// Canonical tensor enumeration for a model: names, kinds, and file order.
pub fn model_tensor_specs(config: &ModelConfig, opts: &PackOptions) -> Vec<TensorSpec> {
    let mut specs = Vec::new();
    let f16 = |name: String, shape: Vec<usize>| TensorSpec {
        name,
        kind: TensorKind::F16 { shape },
    };
    specs.push(f16("embed".into(), vec![config.vocab_size, config.dim]));
    for layer in 0..config.n_layers {
        let p = |suffix: &str| format!("layers.{layer}.{suffix}");
        specs.push(f16(p("attn_norm"), vec![config.dim]));
        for (name, out, inp) in projection_shapes(config) {
            if opts.quantize_projections {
                specs.push(TensorSpec {
                    name: p(name),
                    kind: TensorKind::Quant {
                        out_channels: out,
                        in_channels: inp,
                    },
                });
                if opts.awq_scales {
                    specs.push(f16(format!("{}.awq_scale", p(name)), vec![inp]));
                }
            } else {
                specs.push(f16(p(name), vec![out, inp]));
            }
            match name {
                "wq" => specs.push(f16(p("bq"), vec![config.dim])),
                "wk" => specs.push(f16(p("bk"), vec![config.kv_dim()])),
                "wv" => specs.push(f16(p("bv"), vec![config.kv_dim()])),
                _ => {}
            }
        }
        specs.push(f16(p("ffn_norm"), vec![config.dim]));
    }
    specs.push(f16("final_norm".into(), vec![config.dim]));
    if !config.tie_embeddings {
        specs.push(f16("lm_head".into(), vec![config.vocab_size, config.dim]));
    }
    specs
}

fn payload_bytes(kind: &TensorKind, group_size: usize) -> u64 {
    match kind {
        TensorKind::F16 { shape } => 2 * shape.iter().product::<usize>() as u64,
        TensorKind::Quant {
            out_channels,
            in_channels,
        } => {
            let macros = (out_channels / 8) * (in_channels / group_size);
            (macros * macro_bytes(group_size)) as u64
        }
    }
}

/// Closed-form byte size of the weights blob for a config.
///
/// Equals the length `write_model` produces for the same options, exactly.
pub fn packed_size(config: &ModelConfig, opts: &PackOptions) -> u64 {
    let specs = model_tensor_specs(config, opts);
    HEADER_BYTES
        + DIR_ENTRY_BYTES * specs.len() as u64
        + specs
            .iter()
            .map(|s| payload_bytes(&s.kind, config.group_size))
            .sum::<u64>()
}

/// One stored tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorPayload {
    F16 { shape: Vec<usize>, bits: Vec<u16> },
    Quant(PackedTensor),
}

/// An in-memory model: config plus tensors in canonical file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub config: ModelConfig,
    pub tensors: Vec<(String, TensorPayload)>,
}

impl ModelData {
    pub fn tensor(&self, name: &str) -> Option<&TensorPayload> {
        self.tensors
            .iter()
            .find_map(|(n, p)| (n == name).then_some(p))
    }
}

/// The two files of a stored model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFilePair {
    pub weights: Vec<u8>,
    pub config_json: String,
}

impl ModelFilePair {
    /// Write `<stem>.bin` and `<stem>.json`.
    pub fn to_files(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        std::fs::write(&bin, &self.weights)?;
        std::fs::write(&json, &self.config_json)?;
        Ok((bin, json))
    }

    /// Read a pair given its stem (or either member's path).
    pub fn from_files(stem: &Path) -> Result<Self> {
        let stem = match stem.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("json") => stem.with_extension(""),
            _ => stem.to_path_buf(),
        };
        Ok(Self {
            weights: std::fs::read(stem.with_extension("bin"))?,
            config_json: std::fs::read_to_string(stem.with_extension("json"))?,
        })
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

/// Serialize a model into its file pair.
///
/// The JSON half must reference exactly the quantized tensors present in the
/// blob; any mismatch is a directory error.
pub fn write_model(model: &ModelData) -> Result<ModelFilePair> {
    model.config.validate()?;

    let quant_names: Vec<&str> = model
        .tensors
        .iter()
        .filter(|(_, p)| matches!(p, TensorPayload::Quant(_)))
        .map(|(n, _)| n.as_str())
        .collect();
    let declared: Vec<&str> = model
        .config
        .quantized_tensors
        .iter()
        .map(|s| s.as_str())
        .collect();
    if quant_names != declared {
        return Err(Error::DirectoryInconsistent(format!(
            "config declares quantized tensors {declared:?} but blob holds {quant_names:?}"
        )));
    }

    let mut seen = HashMap::new();
    for (name, _) in &model.tensors {
        if let Some(prev) = seen.insert(fnv1a64(name), name.clone()) {
            return Err(Error::DirectoryInconsistent(format!(
                "name hash collision between {prev:?} and {name:?}"
            )));
        }
    }

    // Directory pass: compute offsets.
    let count = model.tensors.len();
    let mut offset = HEADER_BYTES + DIR_ENTRY_BYTES * count as u64;
    let mut blob = Vec::new();
    blob.extend_from_slice(&MAGIC);
    push_u32(&mut blob, FORMAT_VERSION);
    push_u32(&mut blob, count as u32);
    for (name, payload) in &model.tensors {
        let (dtype, rank, dim0, dim1, gs, length) = match payload {
            TensorPayload::F16 { shape, bits } => {
                let expected: usize = shape.iter().product();
                if bits.len() != expected || shape.is_empty() || shape.len() > 2 {
                    return Err(Error::DirectoryInconsistent(format!(
                        "tensor {name}: f16 payload does not match shape {shape:?}"
                    )));
                }
                let dim1 = if shape.len() == 2 { shape[1] } else { 0 };
                (
                    DTYPE_F16,
                    shape.len() as u32,
                    shape[0] as u64,
                    dim1 as u64,
                    0u32,
                    (bits.len() * 2) as u64,
                )
            }
            TensorPayload::Quant(t) => {
                if t.out_channels % 8 != 0 {
                    return Err(Error::OutChannelsNotDivisible(t.out_channels));
                }
                let expected = t.row_blocks() * t.input_groups();
                if t.macros.len() != expected {
                    return Err(Error::DirectoryInconsistent(format!(
                        "tensor {name}: {} macros, geometry implies {expected}",
                        t.macros.len()
                    )));
                }
                (
                    DTYPE_Q4,
                    2,
                    t.out_channels as u64,
                    t.in_channels as u64,
                    t.group_size as u32,
                    (t.macros.len() * macro_bytes(t.group_size)) as u64,
                )
            }
        };
        push_u64(&mut blob, fnv1a64(name));
        push_u32(&mut blob, dtype);
        push_u32(&mut blob, rank);
        push_u64(&mut blob, dim0);
        push_u64(&mut blob, dim1);
        push_u32(&mut blob, gs);
        push_u32(&mut blob, 0); // reserved
        push_u64(&mut blob, offset);
        push_u64(&mut blob, length);
        offset += length;
    }

    // Payload pass.
    for (_, payload) in &model.tensors {
        match payload {
            TensorPayload::F16 { bits, .. } => {
                for b in bits {
                    blob.extend_from_slice(&b.to_le_bytes());
                }
            }
            TensorPayload::Quant(t) => {
                for m in &t.macros {
                    blob.extend_from_slice(&m.to_bytes());
                }
            }
        }
    }
    debug_assert_eq!(blob.len() as u64, offset);

    Ok(ModelFilePair {
        weights: blob,
        config_json: model.config.to_json()?,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                needed: n as u64,
                available: self.bytes.len() as u64,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parse and validate a model file pair.
pub fn read_model(weights: &[u8], config_json: &str) -> Result<ModelData> {
    let config = ModelConfig::from_json(config_json)?;

    // The name universe this config can reference: required tensors plus the
    // optional per-projection AWQ scale vectors.
    let quantized: Vec<&str> = config
        .quantized_tensors
        .iter()
        .map(|s| s.as_str())
        .collect();
    let projection_names: std::collections::HashSet<String> = (0..config.n_layers)
        .flat_map(|l| {
            projection_shapes(&config)
                .into_iter()
                .map(move |(n, _, _)| format!("layers.{l}.{n}"))
        })
        .collect();
    let mut expected: HashMap<u64, (String, TensorKind, bool)> = HashMap::new();
    let mut required: Vec<String> = Vec::new();
    let base = model_tensor_specs(&config, &PackOptions::raw());
    for spec in base {
        let is_projection = projection_names.contains(&spec.name);
        let kind = if is_projection && quantized.contains(&spec.name.as_str()) {
            match &spec.kind {
                TensorKind::F16 { shape } if shape.len() == 2 => {
                    let aux = format!("{}.awq_scale", spec.name);
                    expected.insert(
                        fnv1a64(&aux),
                        (
                            aux,
                            TensorKind::F16 {
                                shape: vec![shape[1]],
                            },
                            true,
                        ),
                    );
                    TensorKind::Quant {
                        out_channels: shape[0],
                        in_channels: shape[1],
                    }
                }
                other => other.clone(),
            }
        } else {
            spec.kind.clone()
        };
        required.push(spec.name.clone());
        expected.insert(fnv1a64(&spec.name), (spec.name, kind, false));
    }
    for q in &quantized {
        if !expected
            .get(&fnv1a64(q))
            .map(|(_, k, _)| matches!(k, TensorKind::Quant { .. }))
            .unwrap_or(false)
        {
            return Err(Error::DirectoryInconsistent(format!(
                "config quantized_tensors entry {q:?} is not a projection of this architecture"
            )));
        }
    }

    let mut r = Reader {
        bytes: weights,
        pos: 0,
    };
    let magic: [u8; 8] = r.take(8)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let count = r.u32()? as usize;

    struct Entry {
        name: String,
        kind: TensorKind,
        group_size: usize,
        dtype: u32,
        offset: u64,
        length: u64,
    }
    let mut entries = Vec::with_capacity(count);
    let mut cursor = HEADER_BYTES + DIR_ENTRY_BYTES * count as u64;
    let mut seen = HashMap::new();
    for i in 0..count {
        let hash = r.u64()?;
        let dtype = r.u32()?;
        let rank = r.u32()?;
        let dim0 = r.u64()? as usize;
        let dim1 = r.u64()? as usize;
        let gs = r.u32()? as usize;
        let _reserved = r.u32()?;
        let offset = r.u64()?;
        let length = r.u64()?;

        let (name, kind, _optional) = expected.get(&hash).cloned().ok_or_else(|| {
            Error::DirectoryInconsistent(format!("entry {i}: unknown tensor hash {hash:#018x}"))
        })?;
        if seen.insert(hash, ()).is_some() {
            return Err(Error::DirectoryInconsistent(format!(
                "tensor {name} appears twice"
            )));
        }

        // Shape / dtype / length must agree with the config-derived kind.
        let err = |msg: String| Error::DirectoryInconsistent(format!("tensor {name}: {msg}"));
        match &kind {
            TensorKind::F16 { shape } => {
                if dtype != DTYPE_F16 {
                    return Err(err(format!("expected f16, dtype tag {dtype}")));
                }
                let want_rank = shape.len() as u32;
                let want1 = if shape.len() == 2 { shape[1] } else { 0 };
                if rank != want_rank || dim0 != shape[0] || dim1 != want1 || gs != 0 {
                    return Err(err(format!(
                        "shape [{dim0}, {dim1}] rank {rank} gs {gs}, config implies {shape:?}"
                    )));
                }
            }
            TensorKind::Quant {
                out_channels,
                in_channels,
            } => {
                if dtype != DTYPE_Q4 {
                    return Err(err(format!("expected packed INT4, dtype tag {dtype}")));
                }
                if rank != 2 || dim0 != *out_channels || dim1 != *in_channels {
                    return Err(err(format!(
                        "shape [{dim0}, {dim1}], config implies [{out_channels}, {in_channels}]"
                    )));
                }
                if gs != config.group_size {
                    return Err(err(format!(
                        "group size {gs}, config says {}",
                        config.group_size
                    )));
                }
            }
        }
        if offset != cursor {
            return Err(err(format!("offset {offset}, expected {cursor}")));
        }
        let want_len = payload_bytes(&kind, config.group_size);
        if length != want_len {
            return Err(err(format!("length {length}, expected {want_len}")));
        }
        cursor = offset + length;
        entries.push(Entry {
            name,
            kind,
            group_size: gs,
            dtype,
            offset,
            length,
        });
    }
    if cursor != weights.len() as u64 {
        if cursor > weights.len() as u64 {
            return Err(Error::Truncated {
                offset: cursor,
                needed: cursor - weights.len() as u64,
                available: weights.len() as u64,
            });
        }
        return Err(Error::DirectoryInconsistent(format!(
            "{} trailing bytes after the last payload",
            weights.len() as u64 - cursor
        )));
    }

    for req in &required {
        if !entries.iter().any(|e| &e.name == req) {
            return Err(Error::DirectoryInconsistent(format!(
                "missing tensor {req}"
            )));
        }
    }

    let mut tensors = Vec::with_capacity(entries.len());
    for e in &entries {
        let bytes = &weights[e.offset as usize..(e.offset + e.length) as usize];
        let payload = match e.dtype {
            DTYPE_F16 => {
                let bits: Vec<u16> = bytes
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect();
                let shape = match &e.kind {
                    TensorKind::F16 { shape } => shape.clone(),
                    _ => unreachable!(),
                };
                TensorPayload::F16 { shape, bits }
            }
            _ => {
                let (out_channels, in_channels) = match &e.kind {
                    TensorKind::Quant {
                        out_channels,
                        in_channels,
                    } => (*out_channels, *in_channels),
                    _ => unreachable!(),
                };
                let per = macro_bytes(e.group_size);
                let macros = bytes
                    .chunks_exact(per)
                    .map(|c| AwqMacro::from_bytes(e.group_size, c))
                    .collect::<Result<Vec<_>>>()?;
                TensorPayload::Quant(PackedTensor {
                    out_channels,
                    in_channels,
                    group_size: e.group_size,
                    macros,
                })
            }
        };
        tensors.push((e.name.clone(), payload));
    }

    Ok(ModelData { config, tensors })
}

/// Convenience: parse a [`ModelFilePair`].
pub fn read_model_pair(pair: &ModelFilePair) -> Result<ModelData> {
    read_model(&pair.weights, &pair.config_json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::synth::{synth_model, SynthOptions};

    fn tiny_config() -> ModelConfig {
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

    #[test]
    fn specs_enumeration_counts() {
        let cfg = tiny_config();
        // embed + per layer (2 norms + 7 projections + 3 biases) + final_norm
        let raw = model_tensor_specs(&cfg, &PackOptions::raw());
        assert_eq!(raw.len(), 1 + 2 * 12 + 1);
        let q = model_tensor_specs(
            &cfg,
            &PackOptions {
                quantize_projections: true,
                awq_scales: true,
            },
        );
        assert_eq!(q.len(), 1 + 2 * 19 + 1);
        let mut untied = cfg.clone();
        untied.tie_embeddings = false;
        assert_eq!(
            model_tensor_specs(&untied, &PackOptions::raw()).len(),
            raw.len() + 1
        );
    }

    #[test]
    fn packed_size_single_macro_arithmetic() {
        // One 8x64 GS=64 linear is one 288-byte macro plus fixed overhead.
        assert_eq!(
            payload_bytes(
                &TensorKind::Quant {
                    out_channels: 8,
                    in_channels: 64
                },
                64
            ),
            288
        );
        assert_eq!(HEADER_BYTES + DIR_ENTRY_BYTES + 288, 360);
    }

    #[test]
    fn empty_model_round_trips() {
        let mut cfg = tiny_config();
        cfg.n_layers = 0;
        let model = synth_model(&cfg, 7, &SynthOptions::quantized()).unwrap();
        let pair = write_model(&model).unwrap();
        let back = read_model_pair(&pair).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn tiny_model_round_trips_bit_exact() {
        let cfg = tiny_config();
        for opts in [
            SynthOptions::raw(),
            SynthOptions::quantized(),
            SynthOptions::quantized_awq(4),
        ] {
            let model = synth_model(&cfg, 9, &opts).unwrap();
            let pair = write_model(&model).unwrap();
            let back = read_model_pair(&pair).unwrap();
            assert_eq!(back, model);
            // Byte-compare oracle: writing the parsed model reproduces the blob.
            let pair2 = write_model(&back).unwrap();
            assert_eq!(pair2.weights, pair.weights);
            assert_eq!(pair2.config_json, pair.config_json);
        }
    }

    #[test]
    fn packed_size_matches_written_bytes_exactly() {
        let cfg = tiny_config();
        for (synth_opts, pack_opts) in [
            (SynthOptions::raw(), PackOptions::raw()),
            (SynthOptions::quantized(), PackOptions::quantized()),
            (
                SynthOptions::quantized_awq(4),
                PackOptions {
                    quantize_projections: true,
                    awq_scales: true,
                },
            ),
        ] {
            let model = synth_model(&cfg, 11, &synth_opts).unwrap();
            let pair = write_model(&model).unwrap();
            assert_eq!(
                pair.weights.len() as u64,
                packed_size(&cfg, &pack_opts),
                "{synth_opts:?}"
            );
        }
    }

    #[test]
    fn same_seed_writes_identical_bytes() {
        let cfg = tiny_config();
        let a = write_model(&synth_model(&cfg, 3, &SynthOptions::quantized()).unwrap()).unwrap();
        let b = write_model(&synth_model(&cfg, 3, &SynthOptions::quantized()).unwrap()).unwrap();
        assert_eq!(a.weights, b.weights);
        let c = write_model(&synth_model(&cfg, 4, &SynthOptions::quantized()).unwrap()).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn distinct_errors_for_each_corruption() {
        let cfg = tiny_config();
        let model = synth_model(&cfg, 5, &SynthOptions::quantized()).unwrap();
        let pair = write_model(&model).unwrap();

        let mut bad_magic = pair.weights.clone();
        bad_magic[0] ^= 0xFF;
        assert!(matches!(
            read_model(&bad_magic, &pair.config_json),
            Err(Error::BadMagic(_))
        ));

        let mut bad_version = pair.weights.clone();
        bad_version[8] = 99;
        assert!(matches!(
            read_model(&bad_version, &pair.config_json),
            Err(Error::VersionMismatch { found: 99, .. })
        ));

        let truncated = &pair.weights[..pair.weights.len() - 1];
        assert!(matches!(
            read_model(truncated, &pair.config_json),
            Err(Error::Truncated { .. })
        ));

        let mut trailing = pair.weights.clone();
        trailing.push(0);
        assert!(matches!(
            read_model(&trailing, &pair.config_json),
            Err(Error::DirectoryInconsistent(_))
        ));

        // Offset field of the first directory entry.
        let mut bad_offset = pair.weights.clone();
        let off_pos = 16 + 40;
        bad_offset[off_pos] ^= 1;
        assert!(matches!(
            read_model(&bad_offset, &pair.config_json),
            Err(Error::DirectoryInconsistent(_))
        ));

        // Unknown hash.
        let mut bad_hash = pair.weights.clone();
        bad_hash[16] ^= 1;
        assert!(matches!(
            read_model(&bad_hash, &pair.config_json),
            Err(Error::DirectoryInconsistent(_))
        ));
    }

    #[test]
    fn config_must_declare_blob_quantization() {
        let cfg = tiny_config();
        let model = synth_model(&cfg, 6, &SynthOptions::quantized()).unwrap();
        let pair = write_model(&model).unwrap();
        // Drop the quantized list from the JSON: reader expects f16 projections.
        let stripped = ModelConfig {
            quantized_tensors: Vec::new(),
            ..model.config.clone()
        };
        assert!(read_model(&pair.weights, &stripped.to_json().unwrap()).is_err());
    }

    #[test]
    fn file_pair_io() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        let model = synth_model(&cfg, 8, &SynthOptions::quantized()).unwrap();
        let pair = write_model(&model).unwrap();
        let stem = dir.path().join("m");
        pair.to_files(&stem).unwrap();
        for open_as in ["m", "m.bin", "m.json"] {
            let loaded = ModelFilePair::from_files(&dir.path().join(open_as)).unwrap();
            assert_eq!(loaded, pair);
        }
    }
}
