//! Synthetic tree-labeling tasks for comparing syntax masks, random masks
//! of matching density, and full attention.

mod dataset;
mod generate;
mod train;

pub use dataset::{make_dataset, DatasetSizes, ToyDataset, ToyExample, ToyTask};
pub use generate::{decode_tree, gen_random_constituency, gen_random_tree, prufer_edges, tree_from_edges};
pub use train::{
    dataset_masks, random_mask_like, run_ablation, train_seed, train_toy, ExperimentConfig, MaskSource, Optimizer,
    RunMetrics, ToyMetrics, ToyModel,
};
