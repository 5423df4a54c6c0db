//! Decoder runtime: model, KV cache, sampling, tokenization, FLOP counts.

mod cache;
mod flops;
mod model;
mod sampler;
mod tokenizer;

pub use cache::KvCache;
pub use flops::{count_flops, generate_flops, ForwardTrace, OpClass};
pub use model::{Model, Projection};
pub use sampler::{argmax, Sampler};
pub use tokenizer::{detokenize, tokenize};
