//! Per-layer key/value cache for incremental decoding.

use crate::config::ModelConfig;
use crate::error::{Error, Result};

/// Append-only K/V storage: one `[max_seq x n_kv_heads * head_dim]` plane per
/// layer for keys and one for values. Entries before `len` are immutable.
#[derive(Debug, Clone)]
pub struct KvCache {
    keys: Vec<Vec<f32>>,
    values: Vec<Vec<f32>>,
    kv_dim: usize,
    max_seq: usize,
    len: usize,
}

impl KvCache {
    pub fn new(config: &ModelConfig) -> Self {
        let kv_dim = config.kv_dim();
        let plane = vec![0.0f32; config.max_seq * kv_dim];
        Self {
            keys: vec![plane.clone(); config.n_layers],
            values: vec![plane; config.n_layers],
            kv_dim,
            max_seq: config.max_seq,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_seq(&self) -> usize {
        self.max_seq
    }

    /// Committed keys of one layer, `len * kv_dim` values.
    pub fn keys(&self, layer: usize) -> &[f32] {
        &self.keys[layer][..self.len * self.kv_dim]
    }

    pub fn values(&self, layer: usize) -> &[f32] {
        &self.values[layer][..self.len * self.kv_dim]
    }

    /// View including positions written but not yet committed by `advance`.
    pub(crate) fn keys_upto(&self, layer: usize, positions: usize) -> &[f32] {
        &self.keys[layer][..positions * self.kv_dim]
    }

    pub(crate) fn values_upto(&self, layer: usize, positions: usize) -> &[f32] {
        &self.values[layer][..positions * self.kv_dim]
    }

    /// Stage one position's k/v for a layer. Only positions at or past the
    /// committed length can be written; committed entries never change.
    pub(crate) fn write(
        &mut self,
        layer: usize,
        position: usize,
        k: &[f32],
        v: &[f32],
    ) -> Result<()> {
        if position >= self.max_seq {
            return Err(Error::CacheOverflow {
                max_seq: self.max_seq,
            });
        }
        debug_assert!(position >= self.len, "cache is append-only");
        debug_assert_eq!(k.len(), self.kv_dim);
        debug_assert_eq!(v.len(), self.kv_dim);
        let at = position * self.kv_dim;
        self.keys[layer][at..at + self.kv_dim].copy_from_slice(k);
        self.values[layer][at..at + self.kv_dim].copy_from_slice(v);
        Ok(())
    }

    /// Commit `n` staged positions.
    pub(crate) fn advance(&mut self, n: usize) -> Result<()> {
        if self.len + n > self.max_seq {
            return Err(Error::CacheOverflow {
                max_seq: self.max_seq,
            });
        }
        self.len += n;
        Ok(())
    }
}
