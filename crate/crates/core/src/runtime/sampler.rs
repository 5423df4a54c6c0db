//! Token sampling: greedy argmax or seeded temperature sampling.
//!
//! Lives in the library (not the CLI) so determinism is testable as a
//! property: a fixed seed reproduces the same token sequence everywhere.

use crate::error::{Error, Result};
use crate::tensor::softmax_inplace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    /// Argmax with lowest-index tie-break.
    Greedy,
    Temperature {
        temperature: f32,
        seed: u64,
    },
}

pub(crate) enum SamplerState {
    Greedy,
    Temperature { temperature: f32, rng: ChaCha8Rng },
}

impl Sampler {
    pub(crate) fn state(&self) -> Result<SamplerState> {
        match *self {
            Sampler::Greedy => Ok(SamplerState::Greedy),
            Sampler::Temperature { temperature, seed } => {
                if !(temperature > 0.0 && temperature.is_finite()) {
                    return Err(Error::InvalidTemperature(temperature));
                }
                Ok(SamplerState::Temperature {
                    temperature,
                    rng: ChaCha8Rng::seed_from_u64(seed),
                })
            }
        }
    }
}

/// First index attaining the maximum.
pub fn argmax(logits: &[f32]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best as u32
}

impl SamplerState {
    pub(crate) fn sample(&mut self, logits: &[f32]) -> u32 {
        match self {
            SamplerState::Greedy => argmax(logits),
            SamplerState::Temperature { temperature, rng } => {
                let mut probs: Vec<f32> = logits.iter().map(|&l| l / *temperature).collect();
                softmax_inplace(&mut probs);
                let u: f32 = rng.random();
                let mut acc = 0.0f32;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i as u32;
                    }
                }
                (probs.len() - 1) as u32
            }
        }
    }
}
