//! Syntax-aware self-attention.
//!
//! Trees come in through [`treebank`], become families of token-level
//! masks in [`maskgen`], and drive the masked and topical attention layers
//! in [`attention`]. [`probe`] measures how much tree structure a set of
//! embeddings encodes, and [`toytask`] runs small synthetic ablations.

pub mod attention;
pub mod error;
pub mod maskgen;
pub mod probe;
pub mod rng;
pub mod tensor;
pub mod toytask;
pub mod treebank;

pub use attention::{block_backward, block_forward, AttnOptions, BlockDims, BlockParams, Kernel, MaskMode, Params};
pub use error::{Error, Location, Result};
pub use maskgen::{
    build_mask, build_mask_set, Alignment, Category, Mask, MaskConfig, MaskGroup, MaskInput, MaskSet, MaskSpec,
};
pub use tensor::Matrix;
pub use treebank::{parse_conllu, parse_ptb, validate, SentencePair, SyntaxTree, TreeKind};
