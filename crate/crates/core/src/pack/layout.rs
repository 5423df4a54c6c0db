//! Macro stream layout and the 4-channel streaming schedule.
//!
//! A quantized tensor becomes one macro per (row block, input group):
//! row block `r` covers output channels `8r..8r+8`, input group `g` covers
//! columns `g*GS..(g+1)*GS`. Macros are stored in (r ascending, g ascending)
//! order, giving a one-to-one correspondence with positions in the original
//! weight matrix. Row blocks are distributed round-robin over the stream
//! channels (`r mod channel_count`); within a channel, macros keep
//! (r ascending, g ascending) order.

use crate::error::{Error, Result};
use crate::pack::macro_block::{pack_macro, AwqMacro};
use crate::quant::{QuantGroup, QuantizedTensor};

/// AXI channel count emulated by the kernel.
pub const DEFAULT_CHANNELS: usize = 4;

/// A fully packed weight matrix: macros in (row block, input group) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedTensor {
    pub out_channels: usize,
    pub in_channels: usize,
    pub group_size: usize,
    pub macros: Vec<AwqMacro>,
}

impl PackedTensor {
    pub fn row_blocks(&self) -> usize {
        self.out_channels / 8
    }

    pub fn input_groups(&self) -> usize {
        self.in_channels / self.group_size
    }

    pub fn macro_at(&self, row_block: usize, input_group: usize) -> &AwqMacro {
        &self.macros[row_block * self.input_groups() + input_group]
    }

    pub fn from_quantized(t: &QuantizedTensor) -> Result<Self> {
        Ok(Self {
            out_channels: t.out_channels,
            in_channels: t.in_channels,
            group_size: t.group_size,
            macros: layout_tensor(t)?,
        })
    }

    /// Inverse mapping: reassemble the quantized tensor from its macros.
    ///
    /// The AWQ channel-scale vector travels outside the macro stream, so the
    /// result carries `awq_channel_scale: None`.
    pub fn to_quantized(&self) -> Result<QuantizedTensor> {
        let gpr = self.input_groups();
        let gs = self.group_size;
        let mut groups = Vec::with_capacity(self.out_channels * gpr);
        for o in 0..self.out_channels {
            let (r, j) = (o / 8, o % 8);
            for g in 0..gpr {
                let m = self.macro_at(r, g);
                let mut codes = Vec::with_capacity(gs);
                for pos in 0..gs {
                    codes.push(m.code(pos, j));
                }
                groups.push(QuantGroup {
                    codes,
                    scale_bits: m.scale_bits()[j],
                    zero: m.zeros()[j],
                });
            }
        }
        Ok(QuantizedTensor {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            group_size: gs,
            groups,
            awq_channel_scale: None,
        })
    }
}

/// Pack a quantized tensor into its macro stream, (r ascending, g ascending).
pub fn layout_tensor(t: &QuantizedTensor) -> Result<Vec<AwqMacro>> {
    if t.out_channels % 8 != 0 {
        return Err(Error::OutChannelsNotDivisible(t.out_channels));
    }
    if t.group_size % 8 != 0 || t.group_size == 0 {
        return Err(Error::InvalidGroupSize(t.group_size));
    }
    let gs = t.group_size;
    let gpr = t.in_channels / gs;
    let mut macros = Vec::with_capacity((t.out_channels / 8) * gpr);
    let mut codes = vec![0u8; gs * 8];
    for r in 0..t.out_channels / 8 {
        for g in 0..gpr {
            let mut scales = [0u16; 8];
            let mut zeros = [0u8; 8];
            for j in 0..8 {
                let grp = t.group(r * 8 + j, g);
                scales[j] = grp.scale_bits;
                zeros[j] = grp.zero;
                for pos in 0..gs {
                    codes[pos * 8 + j] = grp.codes[pos];
                }
            }
            macros.push(pack_macro(&codes, &scales, &zeros)?);
        }
    }
    Ok(macros)
}

/// Assignment of a tensor's macros to stream channels.
///
/// Row block `r` streams on channel `r mod channel_count`; within a channel,
/// macros are ordered (r ascending, g ascending). The assignment is a
/// bijection between macro indices and (channel, sequence) slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSchedule {
    pub channel_count: usize,
    pub row_blocks: usize,
    pub input_groups: usize,
}

impl ChannelSchedule {
    pub fn new(channel_count: usize, row_blocks: usize, input_groups: usize) -> Self {
        assert!(channel_count >= 1, "at least one channel");
        Self {
            channel_count,
            row_blocks,
            input_groups,
        }
    }

    pub fn for_tensor(t: &PackedTensor, channel_count: usize) -> Self {
        Self::new(channel_count, t.row_blocks(), t.input_groups())
    }

    pub fn macro_count(&self) -> usize {
        self.row_blocks * self.input_groups
    }

    /// (channel, position-within-channel) of a macro index in (r, g) order.
    pub fn assignment(&self, macro_index: usize) -> (usize, usize) {
        let r = macro_index / self.input_groups;
        let g = macro_index % self.input_groups;
        let channel = r % self.channel_count;
        let seq = (r / self.channel_count) * self.input_groups + g;
        (channel, seq)
    }

    /// Row blocks served by one channel, ascending.
    pub fn channel_row_blocks(&self, channel: usize) -> impl Iterator<Item = usize> + '_ {
        (channel..self.row_blocks).step_by(self.channel_count)
    }

    /// Validate that the schedule matches a tensor's geometry.
    pub fn check(&self, t: &PackedTensor) -> Result<()> {
        if self.row_blocks != t.row_blocks() || self.input_groups != t.input_groups() {
            return Err(Error::ScheduleMismatch(format!(
                "schedule is {}x{} blocks, tensor is {}x{}",
                self.row_blocks,
                self.input_groups,
                t.row_blocks(),
                t.input_groups()
            )));
        }
        Ok(())
    }
}
