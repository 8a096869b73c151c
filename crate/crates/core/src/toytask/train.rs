use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{ToyDataset, ToyExample};
use crate::attention::{
    block_backward, block_forward, init_uniform, AttnOptions, BlockCache, BlockDims, BlockParams, MaskMode, Params,
};
use crate::error::{Error, Result};
use crate::maskgen::{build_mask_set, Mask, MaskConfig, MaskGroup, MaskSet, MaskSpec};
use crate::rng::{self, streams};
use crate::tensor::Matrix;
use crate::treebank::TreeKind;

/// Where a sentence's sub-network masks come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    /// The parent/child/sibling family of the sentence's tree.
    Syntax,
    /// Uniformly placed masks with the syntax masks' one-counts.
    Random,
    /// One all-ones mask.
    Full,
}

impl MaskSource {
    pub const ALL: [MaskSource; 3] = [MaskSource::Syntax, MaskSource::Random, MaskSource::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            MaskSource::Syntax => "syntax",
            MaskSource::Random => "random",
            MaskSource::Full => "full",
        }
    }
}

impl fmt::Display for MaskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "syntax" => Ok(MaskSource::Syntax),
            "random" => Ok(MaskSource::Random),
            "full" => Ok(MaskSource::Full),
            _ => Err(Error::Config(format!("unknown mask mode {s:?} (syntax, random, full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent with a fixed step.
    Sgd,
    /// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "mask_mode")]
    pub mask_source: MaskSource,
    pub layers: usize,
    pub dims: BlockDims,
    pub max_dist: usize,
    pub self_loops: bool,
    pub literal_sibling: bool,
    pub masking: MaskMode,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mask_source: MaskSource::Syntax,
            layers: 1,
            dims: BlockDims {
                d_model: 32,
                heads: 4,
                d_head: 8,
                d_ff: 64,
            },
            max_dist: 6,
            self_loops: true,
            literal_sibling: true,
            masking: MaskMode::Additive,
            optimizer: Optimizer::Adam,
            learning_rate: 0.002,
            epochs: 20,
            batch_size: 16,
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        self.dims.check()?;
        self.mask_config().check()?;
        if self.layers == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("layers, epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        Ok(())
    }

    pub fn mask_config(&self) -> MaskConfig {
        MaskConfig {
            max_dist: self.max_dist,
            tree_kinds: vec![TreeKind::Dependency],
            self_loops: self.self_loops,
            literal_sibling: self.literal_sibling,
            prune_empty: false,
        }
    }
}

/// Position embedding table, a stack of blocks and a per-token linear
/// classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    /// max_len × d_model, row `t` embeds position `t`.
    pub embeddings: Matrix,
    pub blocks: Vec<BlockParams>,
    /// d_model × classes.
    pub classifier: Matrix,
    /// 1 × classes.
    pub bias: Matrix,
}

impl Params for ToyModel {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut out = vec![&self.embeddings];
        for b in &self.blocks {
            out.extend(b.tensors());
        }
        out.push(&self.classifier);
        out.push(&self.bias);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.embeddings];
        for b in &mut self.blocks {
            out.extend(b.tensors_mut());
        }
        out.push(&mut self.classifier);
        out.push(&mut self.bias);
        out
    }

    fn tensor_names(&self) -> Vec<String> {
        let mut out = vec!["embeddings".to_string()];
        for (l, b) in self.blocks.iter().enumerate() {
            out.extend(b.tensor_names().into_iter().map(|n| format!("block{l}.{n}")));
        }
        out.push("classifier".into());
        out.push("classifier_bias".into());
        out
    }
}

impl ToyModel {
    pub fn init(config: &ExperimentConfig, max_len: usize, classes: usize, seed: u64) -> Result<ToyModel> {
        config.dims.check()?;
        let d = config.dims.d_model;
        let mut emb = rng::stream(seed, streams::EMBEDDING_INIT);
        let mut cls = rng::stream(seed, streams::CLASSIFIER_INIT);
        let blocks = (0..config.layers)
            .map(|l| BlockParams::init(config.dims, rng::derive_seed(seed, streams::PARAM_INIT, l as u64)))
            .collect::<Result<_>>()?;
        Ok(ToyModel {
            embeddings: init_uniform(max_len, d, 1, &mut emb),
            blocks,
            classifier: init_uniform(d, classes, d, &mut cls),
            bias: Matrix::zeros(1, classes),
        })
    }

    fn zeros_like(&self) -> ToyModel {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn forward(&self, n: usize, masks: &MaskSet, opts: AttnOptions) -> Result<(Matrix, Vec<BlockCache>, Matrix)> {
        if n > self.embeddings.rows() {
            return Err(Error::dim(format!(
                "sentence of {n} tokens exceeds the {} embedded positions",
                self.embeddings.rows()
            )));
        }
        let mut h = Matrix::from_fn(n, self.embeddings.cols(), |i, j| self.embeddings[(i, j)]);
        let mut caches = Vec::with_capacity(self.blocks.len());
        for p in &self.blocks {
            let (out, cache) = block_forward(&h, masks, p, opts)?;
            caches.push(cache);
            h = out;
        }
        let logits = h.matmul(&self.classifier);
        let logits = Matrix::from_fn(n, logits.cols(), |i, c| logits[(i, c)] + self.bias[(0, c)]);
        Ok((logits, caches, h))
    }

    /// Class predictions, ties to the lower class.
    pub fn predict(&self, masks: &MaskSet, opts: AttnOptions) -> Result<Vec<usize>> {
        let (logits, _, _) = self.forward(masks.n(), masks, opts)?;
        Ok((0..logits.rows()).map(|i| argmax(logits.row(i))).collect())
    }

    /// Cross-entropy summed over tokens, scaled by `scale`; gradients are
    /// added to `grads`.
    fn accumulate(
        &self,
        example: &ToyExample,
        masks: &MaskSet,
        opts: AttnOptions,
        scale: f64,
        grads: &mut ToyModel,
    ) -> Result<f64> {
        let n = example.tree.len();
        let (logits, caches, h) = self.forward(n, masks, opts)?;
        let mut loss = 0.0;
        let mut d_logits = Matrix::zeros(n, logits.cols());
        for i in 0..n {
            let row = logits.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let y = example.labels[i];
            loss -= row[y] - max - z.ln();
            for (c, &x) in row.iter().enumerate() {
                let p = (x - max).exp() / z;
                d_logits[(i, c)] = scale * (p - f64::from(u8::from(c == y)));
            }
        }
        grads.classifier.add_assign(&h.t_matmul(&d_logits));
        for i in 0..n {
            for (b, &g) in grads.bias.row_mut(0).iter_mut().zip(d_logits.row(i)) {
                *b += g;
            }
        }
        let mut d_h = d_logits.matmul_t(&self.classifier);
        for (l, cache) in caches.iter().enumerate().rev() {
            let (d_in, g) = block_backward(&self.blocks[l], cache, &d_h)?;
            for (acc, x) in grads.blocks[l].tensors_mut().into_iter().zip(g.tensors()) {
                acc.add_assign(x);
            }
            d_h = d_in;
        }
        for i in 0..n {
            for (e, &g) in grads.embeddings.row_mut(i).iter_mut().zip(d_h.row(i)) {
                *e += g;
            }
        }
        Ok(loss * scale)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, model: &mut ToyModel, grads: &ToyModel, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let mut k = 0;
        for (p, g) in model.tensors_mut().into_iter().zip(grads.tensors()) {
            for (x, &gx) in p.data_mut().iter_mut().zip(g.data()) {
                self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * gx;
                self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * gx * gx;
                *x -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
                k += 1;
            }
        }
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = c;
        }
    }
    best
}

/// Uniformly placed off-diagonal ones with the same count as `like`,
/// diagonal copied from `like`.
pub fn random_mask_like(like: &Mask, rng: &mut rng::SeededRng) -> Mask {
    let n = like.n();
    let picks = rand::seq::index::sample(rng, n * (n - 1), like.off_diagonal_ones());
    let mut allowed = vec![false; n * n];
    for k in picks {
        let (i, r) = (k / (n - 1), k % (n - 1));
        let j = if r >= i { r + 1 } else { r };
        allowed[i * n + j] = true;
    }
    for i in 0..n {
        allowed[i * n + i] = like.get(i, i);
    }
    Mask::from_fn(n, *like.spec(), |i, j| allowed[i * n + j])
}

/// Masks for every sentence of the dataset, in [`ToyDataset::examples`]
/// order.
pub fn dataset_masks(config: &ExperimentConfig, dataset: &ToyDataset, seed: u64) -> Result<Vec<MaskSet>> {
    let mask_config = config.mask_config();
    dataset
        .examples()
        .enumerate()
        .map(|(k, ex)| {
            let n = ex.tree.len();
            match config.mask_source {
                MaskSource::Full => MaskSet::from_masks(
                    n,
                    vec![Mask::all_ones(n, MaskSpec::full(TreeKind::Dependency))],
                    mask_config.clone(),
                ),
                MaskSource::Syntax => build_mask_set(MaskGroup::Single(std::slice::from_ref(&ex.tree)), &mask_config),
                MaskSource::Random => {
                    let syntax = build_mask_set(MaskGroup::Single(std::slice::from_ref(&ex.tree)), &mask_config)?;
                    let mut r = rng::stream(rng::derive_seed(seed, streams::RANDOM_MASKS, k as u64), 0);
                    let masks = syntax.masks().iter().map(|m| random_mask_like(m, &mut r)).collect();
                    MaskSet::from_masks(n, masks, mask_config.clone())
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub mode: MaskSource,
    pub seed: u64,
    pub test_accuracy: f64,
    pub dev_accuracy: f64,
    pub final_train_loss: f64,
    pub num_params: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToyMetrics {
    pub runs: Vec<RunMetrics>,
}

impl ToyMetrics {
    pub fn accuracies(&self, mode: MaskSource) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.test_accuracy)
            .collect()
    }

    pub fn mean(&self, mode: MaskSource) -> Option<f64> {
        let a = self.accuracies(mode);
        (!a.is_empty()).then(|| a.iter().sum::<f64>() / a.len() as f64)
    }

    /// Sample standard deviation; 0 for a single run.
    pub fn std(&self, mode: MaskSource) -> Option<f64> {
        let a = self.accuracies(mode);
        let mean = self.mean(mode)?;
        if a.len() < 2 {
            return Some(0.0);
        }
        let var = a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (a.len() - 1) as f64;
        Some(var.sqrt())
    }

    fn modes(&self) -> Vec<MaskSource> {
        let mut modes = Vec::new();
        for r in &self.runs {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        modes
    }

    /// `mode  seed  test_accuracy` rows, then `mean` and `std` rows per mode.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("mode\tseed\ttest_accuracy\n");
        for r in &self.runs {
            let _ = writeln!(out, "{}\t{}\t{:.6}", r.mode, r.seed, r.test_accuracy);
        }
        for mode in self.modes() {
            let _ = writeln!(out, "{mode}\tmean\t{:.6}", self.mean(mode).unwrap_or(f64::NAN));
            let _ = writeln!(out, "{mode}\tstd\t{:.6}", self.std(mode).unwrap_or(f64::NAN));
        }
        out
    }
}

fn accuracy(model: &ToyModel, examples: &[ToyExample], masks: &[MaskSet], opts: AttnOptions) -> Result<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    for (ex, m) in examples.iter().zip(masks) {
        let pred = model.predict(m, opts)?;
        hit += pred.iter().zip(&ex.labels).filter(|(p, y)| p == y).count();
        total += ex.labels.len();
    }
    Ok(if total == 0 { 0.0 } else { hit as f64 / total as f64 })
}

/// Trains one model for `seed` and scores it.
pub fn train_seed(config: &ExperimentConfig, dataset: &ToyDataset, seed: u64) -> Result<(ToyModel, RunMetrics)> {
    config.check()?;
    if dataset.train.is_empty() || dataset.test.is_empty() {
        return Err(Error::Config(
            "toy training needs non-empty train and test splits".into(),
        ));
    }
    let opts = AttnOptions::mode(config.masking);
    let masks = dataset_masks(config, dataset, seed)?;
    let (train_masks, rest) = masks.split_at(dataset.train.len());
    let (dev_masks, test_masks) = rest.split_at(dataset.dev.len());

    let mut model = ToyModel::init(config, dataset.max_len(), dataset.task.classes(), seed)?;
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut shuffle = rng::stream(seed, streams::SHUFFLE);
    let mut adam = Adam::new(model.num_params());
    let mut epoch_loss = 0.0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle);
        epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let tokens: usize = batch.iter().map(|&k| dataset.train[k].tree.len()).sum();
            let scale = 1.0 / tokens as f64;
            let mut grads = model.zeros_like();
            for &k in batch {
                epoch_loss += model.accumulate(&dataset.train[k], &train_masks[k], opts, scale, &mut grads)?;
            }
            if !epoch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "toy training diverged: seed {seed}, epoch {epoch}"
                )));
            }
            match config.optimizer {
                Optimizer::Sgd => model.sgd_step(&grads, config.learning_rate),
                Optimizer::Adam => adam.step(&mut model, &grads, config.learning_rate),
            }
        }
        if model.tensors().iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite(format!(
                "toy training diverged: seed {seed}, epoch {epoch}"
            )));
        }
    }
    let batches = dataset.train.len().div_ceil(config.batch_size);
    let metrics = RunMetrics {
        mode: config.mask_source,
        seed,
        test_accuracy: accuracy(&model, &dataset.test, test_masks, opts)?,
        dev_accuracy: accuracy(&model, &dataset.dev, dev_masks, opts)?,
        final_train_loss: epoch_loss / batches as f64,
        num_params: model.num_params(),
    };
    Ok((model, metrics))
}

/// Runs every configured seed with `config.mask_source`.
pub fn train_toy(config: &ExperimentConfig, dataset: &ToyDataset) -> Result<ToyMetrics> {
    let runs = config
        .seeds
        .iter()
        .map(|&s| train_seed(config, dataset, s).map(|(_, m)| m))
        .collect::<Result<_>>()?;
    Ok(ToyMetrics { runs })
}

/// [`train_toy`] once per mode, same seeds and dims.
pub fn run_ablation(config: &ExperimentConfig, dataset: &ToyDataset, modes: &[MaskSource]) -> Result<ToyMetrics> {
    let mut all = ToyMetrics::default();
    for &mode in modes {
        let c = ExperimentConfig {
            mask_source: mode,
            ..config.clone()
        };
        all.runs.extend(train_toy(&c, dataset)?.runs);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::grad_check;
    use crate::toytask::{make_dataset, DatasetSizes, ToyTask};

    fn small() -> (ExperimentConfig, ToyDataset) {
        let config = ExperimentConfig {
            layers: 2,
            dims: BlockDims {
                d_model: 4,
                heads: 2,
                d_head: 2,
                d_ff: 6,
            },
            max_dist: 3,
            epochs: 1,
            seeds: vec![3],
            ..ExperimentConfig::default()
        };
        let sizes = DatasetSizes {
            train: 3,
            dev: 1,
            test: 1,
            min_len: 3,
            max_len: 5,
        };
        (config, make_dataset(ToyTask::RootDistanceParity, sizes, 5).unwrap())
    }

    #[test]
    fn model_gradient_matches_finite_differences() {
        let (config, data) = small();
        for source in MaskSource::ALL {
            let config = ExperimentConfig {
                mask_source: source,
                ..config.clone()
            };
            let masks = dataset_masks(&config, &data, 3).unwrap();
            let model = ToyModel::init(&config, data.max_len(), 2, 3).unwrap();
            let opts = AttnOptions::default();
            let ex = &data.train[0];
            let mut grads = model.zeros_like();
            model.accumulate(ex, &masks[0], opts, 1.0, &mut grads).unwrap();
            let f = |x: &[f64]| {
                let mut m = model.clone();
                m.load_flat(x).unwrap();
                let mut scratch = model.zeros_like();
                m.accumulate(ex, &masks[0], opts, 1.0, &mut scratch).unwrap()
            };
            let report = grad_check(f, &model.flatten(), &grads.flatten(), 1e-5).unwrap();
            assert!(report.max_rel_error < 1e-6, "{source}: {}", report.max_rel_error);
        }
    }
}
