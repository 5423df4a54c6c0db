//! Fused unpack/dequantize/MAC kernel emulating the accelerator datapath.
//!
//! Dequantization happens on the fly, one macro at a time: a PE computes
//! `(q - z) * (x * s)` in f32 (exactly that association order), an 8-wide
//! adder tree reduces the 8 input positions of a tile in a fixed binary
//! shape, and tiles advance in ascending input-position order. Row blocks
//! stream on their assigned channel in (row block, input group) order.
//!
//! The tile order, tree shape, and channel ownership of disjoint output rows
//! make every output bit-deterministic across runs and across any worker
//! count backing the logical channels.

use crate::error::{Error, Result};
use crate::pack::{AwqMacro, ChannelSchedule, PackedTensor};
use crate::tensor::TensorF32;

/// Inputs of one processing element.
#[derive(Debug, Clone, Copy)]
pub struct PeInput {
    pub qweight: u8,
    pub zero: u8,
    /// f16 scale already widened to f32.
    pub scale: f32,
    pub activation: f32,
}

/// One PE: `(q - z) * (activation * scale)`, f32 throughout.
#[inline]
pub fn pe_element(input: PeInput) -> f32 {
    (input.qweight as i32 - input.zero as i32) as f32 * (input.activation * input.scale)
}

/// Fixed-shape reduction: `((p0+p1)+(p2+p3)) + ((p4+p5)+(p6+p7))`.
#[inline]
pub fn adder_tree_8(p: &[f32; 8]) -> f32 {
    ((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7]))
}

/// Accumulator state for the current row block.
#[derive(Debug, Clone)]
pub struct MacState {
    /// One f32 accumulator per output channel of the row block.
    pub partial_sums: [f32; 8],
    /// Input positions consumed so far within the row block's stream.
    pub cursor: usize,
}

impl MacState {
    pub fn new() -> Self {
        Self {
            partial_sums: [0.0; 8],
            cursor: 0,
        }
    }
}

impl Default for MacState {
    fn default() -> Self {
        Self::new()
    }
}

/// Accumulate one macro against its activation slice.
///
/// Tiles of 8 consecutive input positions run in ascending order; each tile
/// produces 64 PE products (8 output channels x 8 positions) and one
/// adder-tree reduction per output channel.
pub fn macro_mac(m: &AwqMacro, x: &[f32], state: &mut MacState) -> Result<()> {
    let gs = m.group_size();
    if x.len() != gs {
        return Err(Error::ActivationLength {
            expected: gs,
            got: x.len(),
        });
    }
    let scales = m.scales_f32();
    let zeros = m.zeros();
    let mut products = [0.0f32; 8];
    for tile in 0..gs / 8 {
        let base = tile * 8;
        for j in 0..8 {
            for (k, p) in products.iter_mut().enumerate() {
                *p = pe_element(PeInput {
                    qweight: m.code(base + k, j),
                    zero: zeros[j],
                    scale: scales[j],
                    activation: x[base + k],
                });
            }
            state.partial_sums[j] += adder_tree_8(&products);
        }
    }
    state.cursor += gs;
    Ok(())
}

/// Row blocks owned by one channel, each fully accumulated in
/// (input group ascending) order.
fn run_channel(
    t: &PackedTensor,
    schedule: &ChannelSchedule,
    x: &[f32],
    channel: usize,
) -> Result<Vec<(usize, [f32; 8])>> {
    let gs = t.group_size;
    let mut out = Vec::new();
    for r in schedule.channel_row_blocks(channel) {
        let mut state = MacState::new();
        for g in 0..t.input_groups() {
            macro_mac(t.macro_at(r, g), &x[g * gs..(g + 1) * gs], &mut state)?;
        }
        out.push((r, state.partial_sums));
    }
    Ok(out)
}

/// Quantized matrix-vector product through the emulated datapath.
///
/// `workers` host threads back the schedule's logical channels (a worker
/// serves channels round-robin). Channels own disjoint row blocks, so the
/// output is identical for any worker count.
pub fn qmatvec(
    t: &PackedTensor,
    schedule: &ChannelSchedule,
    x: &[f32],
    workers: usize,
) -> Result<Vec<f32>> {
    schedule.check(t)?;
    if x.len() != t.in_channels {
        return Err(Error::ActivationLength {
            expected: t.in_channels,
            got: x.len(),
        });
    }
    let mut y = vec![0.0f32; t.out_channels];
    let workers = workers.max(1).min(schedule.channel_count);
    if workers == 1 {
        for c in 0..schedule.channel_count {
            for (r, sums) in run_channel(t, schedule, x, c)? {
                y[r * 8..r * 8 + 8].copy_from_slice(&sums);
            }
        }
        return Ok(y);
    }

    let results: Vec<Result<Vec<(usize, [f32; 8])>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut acc = Vec::new();
                    let mut c = w;
                    while c < schedule.channel_count {
                        acc.extend(run_channel(t, schedule, x, c)?);
                        c += workers;
                    }
                    Ok(acc)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("channel worker panicked"))
            .collect()
    });
    for res in results {
        for (r, sums) in res? {
            y[r * 8..r * 8 + 8].copy_from_slice(&sums);
        }
    }
    Ok(y)
}

/// Row-wise [`qmatvec`] over an `m x in` activation matrix.
pub fn qmatmul(
    t: &PackedTensor,
    schedule: &ChannelSchedule,
    x: &TensorF32,
    workers: usize,
) -> Result<TensorF32> {
    if x.shape.len() != 2 || x.cols() != t.in_channels {
        return Err(Error::DimMismatch {
            left: x.shape.clone(),
            right: vec![t.out_channels, t.in_channels],
        });
    }
    let m = x.rows();
    let mut out = Vec::with_capacity(m * t.out_channels);
    for i in 0..m {
        out.extend(qmatvec(t, schedule, x.row(i), workers)?);
    }
    TensorF32::new(vec![m, t.out_channels], out)
}
