//! AWQ_MACRO packed-weight format: bit-exact macro blocks, the 4-channel
//! streaming layout, and the binary-weights + JSON-architecture file pair.
//!
//! See FORMAT.md at the repository root for the frozen byte layout.

mod layout;
mod macro_block;
mod model_file;

pub use layout::{layout_tensor, ChannelSchedule, PackedTensor, DEFAULT_CHANNELS};
pub use macro_block::{bits_per_weight, macro_bytes, pack_macro, unpack_macro, AwqMacro};
pub use model_file::{
    fnv1a64, model_tensor_specs, packed_size, read_model, read_model_pair, write_model, ModelData,
    ModelFilePair, PackOptions, TensorKind, TensorPayload, TensorSpec, FORMAT_VERSION, MAGIC,
};
