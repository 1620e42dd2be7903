//! Parameter and multiply-accumulate accounting for the searched ResNet.
//!
//! Network layout for a genotype:
//!
//! - stem: 3x3 conv `stem_in -> stem_out`, stride 1, then batch norm
//! - per block: choice conv1 (`k x k`, carries the stage stride) + norm,
//!   fixed 3x3 conv2 + norm, and a 1x1 projection shortcut + norm whenever
//!   the block changes stride or width
//! - global average pool, then an affine classifier `last_width -> classes`
//!
//! Convolutions carry no bias. A norm layer contributes two learnable
//! scalars per channel and no MACs; running statistics are not parameters.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::search_space::{Genotype, SpaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelCost {
    pub params: u64,
    pub macs: u64,
}

/// Bias-free convolution weight count.
pub fn conv_params(c_in: u64, c_out: u64, k: u64) -> u64 {
    c_in * c_out * k * k
}

pub fn conv_macs(c_in: u64, c_out: u64, k: u64, h_out: u64, w_out: u64) -> u64 {
    k * k * c_in * c_out * h_out * w_out
}

/// Output side of a "same"-padded convolution.
fn conv_out_side(side: u64, stride: u64) -> u64 {
    (side - 1) / stride + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv { c_in: u64, c_out: u64, kernel: u64, stride: u64 },
    Norm { channels: u64 },
    Linear { inputs: u64, outputs: u64 },
}

/// A layer together with the spatial side of its output feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    pub out_side: u64,
}

impl Layer {
    pub fn params(&self) -> u64 {
        match self.kind {
            LayerKind::Conv { c_in, c_out, kernel, .. } => conv_params(c_in, c_out, kernel),
            LayerKind::Norm { channels } => 2 * channels,
            LayerKind::Linear { inputs, outputs } => inputs * outputs + outputs,
        }
    }

    pub fn macs(&self) -> u64 {
        match self.kind {
            LayerKind::Conv { c_in, c_out, kernel, .. } => {
                conv_macs(c_in, c_out, kernel, self.out_side, self.out_side)
            }
            LayerKind::Norm { .. } => 0,
            LayerKind::Linear { inputs, outputs } => inputs * outputs,
        }
    }
}

/// Walks the network for `g` in forward order.
pub fn layers(g: &Genotype, spec: &SpaceSpec) -> Result<Vec<Layer>> {
    spec.validate_genotype(g)?;
    let kernels = spec.kernels(g);
    let mut out = Vec::new();
    let mut side = spec.input_resolution;
    let stem = spec.stem_out_channels;
    out.push(Layer {
        kind: LayerKind::Conv {
            c_in: spec.stem_in_channels,
            c_out: stem,
            kernel: 3,
            stride: 1,
        },
        out_side: side,
    });
    out.push(Layer {
        kind: LayerKind::Norm { channels: stem },
        out_side: side,
    });

    let mut c_in = stem;
    let mut slot = 0;
    for ((&width, &blocks), &stage_stride) in spec
        .stage_widths
        .iter()
        .zip(&spec.blocks_per_stage)
        .zip(&spec.stage_strides)
    {
        for b in 0..blocks {
            let stride = if b == 0 { stage_stride } else { 1 };
            let in_side = side;
            side = conv_out_side(side, stride);
            out.push(Layer {
                kind: LayerKind::Conv {
                    c_in,
                    c_out: width,
                    kernel: kernels[slot] as u64,
                    stride,
                },
                out_side: side,
            });
            out.push(Layer {
                kind: LayerKind::Norm { channels: width },
                out_side: side,
            });
            out.push(Layer {
                kind: LayerKind::Conv {
                    c_in: width,
                    c_out: width,
                    kernel: 3,
                    stride: 1,
                },
                out_side: side,
            });
            out.push(Layer {
                kind: LayerKind::Norm { channels: width },
                out_side: side,
            });
            if stride != 1 || c_in != width {
                debug_assert_eq!(conv_out_side(in_side, stride), side);
                out.push(Layer {
                    kind: LayerKind::Conv {
                        c_in,
                        c_out: width,
                        kernel: 1,
                        stride,
                    },
                    out_side: side,
                });
                out.push(Layer {
                    kind: LayerKind::Norm { channels: width },
                    out_side: side,
                });
            }
            c_in = width;
            slot += 1;
        }
    }
    out.push(Layer {
        kind: LayerKind::Linear {
            inputs: c_in,
            outputs: spec.num_classes,
        },
        out_side: 1,
    });
    Ok(out)
}

pub fn model_cost(g: &Genotype, spec: &SpaceSpec) -> Result<ModelCost> {
    let layers = layers(g, spec)?;
    Ok(ModelCost {
        params: layers.iter().map(Layer::params).sum(),
        macs: layers.iter().map(Layer::macs).sum(),
    })
}

pub fn count_params(g: &Genotype, spec: &SpaceSpec) -> Result<u64> {
    model_cost(g, spec).map(|c| c.params)
}

pub fn count_macs(g: &Genotype, spec: &SpaceSpec) -> Result<u64> {
    model_cost(g, spec).map(|c| c.macs)
}

/// Genotype with the fewest parameters. Parameters are additive across
/// slots and grow with kernel size, so the smallest kernel in every slot
/// wins; ties go to the lowest choice index.
pub fn smallest_genotype(spec: &SpaceSpec) -> Genotype {
    let best = spec
        .choices
        .iter()
        .min_by_key(|c| (c.kernel, c.index))
        .expect("validated spec has choices")
        .index;
    Genotype::uniform(spec.num_slots(), best)
}

/// Parameter count of the smallest model in the space.
pub fn p_min(spec: &SpaceSpec) -> Result<u64> {
    spec.validate()?;
    count_params(&smallest_genotype(spec), spec)
}
