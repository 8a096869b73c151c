//! Masked multi-head self-attention and topical aggregation.
//!
//! A block runs the same attention parameters once per mask ("sub-network"),
//! then a topical attention layer with a learned task query mixes the
//! sub-network outputs per token. Forward passes return a cache from which
//! [`block_backward`] computes exact gradients.

mod block;
mod checkpoint;
mod dump;
mod gradcheck;
mod kernel;
mod multihead;
mod params;
mod topical;

use serde::{Deserialize, Serialize};

pub use block::{block_backward, block_forward, gelu, gelu_grad, normalize_rows, BlockCache, LAYER_NORM_EPS};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use dump::{attention_dump, AttentionDump, SubnetworkMap};
pub use gradcheck::{grad_check, numerical_gradient, GradReport};
pub use kernel::{
    masked_attention, masked_attention_backward, scaled_dot_product_attention, sparse_masked_attention, AttentionGrads,
    AttentionOutput, SparseAttention, MASKED_SCORE,
};
pub use multihead::multi_head_masked;
pub use params::{
    init_uniform, AttentionParams, BlockDims, BlockParams, FeedForwardParams, LayerNormParams, Params, TopicalParams,
};
pub use topical::{topical_attention, TopicalOutput};

/// How a mask enters the attention scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Masked scores become −1e9 and masked weights are exactly zero.
    #[default]
    Additive,
    /// Scores are multiplied by the mask before scaling and softmax.
    Multiplicative,
}

impl std::str::FromStr for MaskMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "additive" => Ok(MaskMode::Additive),
            "multiplicative" => Ok(MaskMode::Multiplicative),
            other => Err(crate::Error::Config(format!("unknown masking mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Dense,
    /// Row-list kernel; additive mode only.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttnOptions {
    pub mode: MaskMode,
    pub kernel: Kernel,
}

impl AttnOptions {
    pub fn mode(mode: MaskMode) -> Self {
        AttnOptions {
            mode,
            kernel: Kernel::Dense,
        }
    }
}
