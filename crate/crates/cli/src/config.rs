use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synattn::probe::ProbeConfig;
use synattn::toytask::{DatasetSizes, ExperimentConfig, MaskSource, ToyTask};
use synattn::{BlockDims, Kernel, MaskConfig, MaskMode, TreeKind};

use crate::error::{CliError, CliResult};

/// Everything a run needs. Command-line flags override these values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dims: BlockDims,
    pub max_dist: usize,
    pub tree_kinds: Vec<TreeKind>,
    pub masking: MaskMode,
    pub kernel: Kernel,
    pub self_loops: bool,
    pub literal_sibling: bool,
    pub prune_empty: bool,
    /// Seed for parameter init and random inputs in `attend` and `bench`.
    pub seed: u64,
    /// Tree files; the k-th tree of every file is sentence k.
    pub inputs: Vec<PathBuf>,
    pub params: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub trees: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub probe: ProbeConfig,
    /// Share of probe sentences used for training; the rest are scored.
    pub probe_train_fraction: f64,
    pub toy: ToyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mask = MaskConfig::default();
        RunConfig {
            dims: BlockDims {
                d_model: 64,
                heads: 4,
                d_head: 16,
                d_ff: 128,
            },
            max_dist: mask.max_dist,
            tree_kinds: mask.tree_kinds,
            masking: MaskMode::Additive,
            kernel: Kernel::Dense,
            self_loops: mask.self_loops,
            literal_sibling: mask.literal_sibling,
            prune_empty: mask.prune_empty,
            seed: 0,
            inputs: Vec::new(),
            params: None,
            embeddings: None,
            trees: None,
            output: None,
            probe: ProbeConfig::default(),
            probe_train_fraction: 0.8,
            toy: ToyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub task: ToyTask,
    pub dataset: DatasetSizes,
    pub dataset_seed: u64,
    pub modes: Vec<MaskSource>,
    pub training: ExperimentConfig,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            task: ToyTask::RootDistanceParity,
            dataset: DatasetSizes::default(),
            dataset_seed: 42,
            modes: vec![MaskSource::Syntax, MaskSource::Random],
            training: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn mask_config(&self) -> MaskConfig {
        MaskConfig {
            max_dist: self.max_dist,
            tree_kinds: self.tree_kinds.clone(),
            self_loops: self.self_loops,
            literal_sibling: self.literal_sibling,
            prune_empty: self.prune_empty,
        }
    }

    pub fn check(&self) -> CliResult<()> {
        self.mask_config().check()?;
        self.dims.check()?;
        if !(self.probe_train_fraction > 0.0 && self.probe_train_fraction <= 1.0) {
            return Err(CliError::usage("probe_train_fraction must be in (0, 1]"));
        }
        Ok(())
    }

    /// Pretty JSON of the defaults, shown in `--help`.
    pub fn defaults_json() -> String {
        serde_json::to_string_pretty(&RunConfig::default()).expect("config serialization is infallible")
    }
}
