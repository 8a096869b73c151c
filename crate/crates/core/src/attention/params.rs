use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams, SeededRng};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDims {
    pub d_model: usize,
    pub heads: usize,
    pub d_head: usize,
    pub d_ff: usize,
}

impl BlockDims {
    pub fn check(&self) -> Result<()> {
        if self.d_model == 0 || self.heads == 0 || self.d_head == 0 || self.d_ff == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.heads * self.d_head != self.d_model {
            return Err(Error::Config(format!(
                "d_model {} must equal heads {} x d_head {}",
                self.d_model, self.heads, self.d_head
            )));
        }
        Ok(())
    }
}

/// Flat, ordered access to every parameter tensor of a model part.
///
/// The order of [`Params::tensors`] is the checkpoint order.
pub trait Params {
    fn tensors(&self) -> Vec<&Matrix>;
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;
    fn tensor_names(&self) -> Vec<String>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    fn load_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::dim(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                values.len()
            )));
        }
        let mut at = 0;
        for t in self.tensors_mut() {
            let len = t.len();
            t.data_mut().copy_from_slice(&values[at..at + len]);
            at += len;
        }
        Ok(())
    }

    /// `self -= lr * grad`.
    fn sgd_step(&mut self, grad: &Self, lr: f64)
    where
        Self: Sized,
    {
        for (p, g) in self.tensors_mut().into_iter().zip(grad.tensors()) {
            p.axpy(-lr, g);
        }
    }

    /// Order-sensitive hash of all parameter bits.
    fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for x in t.data() {
                h ^= x.to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= t.len() as u64;
        }
        h
    }
}

/// Uniform in `(-1/√fan_in, 1/√fan_in)`.
pub fn init_uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut SeededRng) -> Matrix {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// Per head, d_model × d_head.
    pub wq: Vec<Matrix>,
    pub wk: Vec<Matrix>,
    pub wv: Vec<Matrix>,
    /// (heads · d_head) × d_model.
    pub wo: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicalParams {
    /// 1 × d_model task query.
    pub q_task: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gain: Matrix,
    pub bias: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub attention: AttentionParams,
    pub topical: TopicalParams,
    pub ffn: FeedForwardParams,
    pub ln1: LayerNormParams,
    pub ln2: LayerNormParams,
}

impl BlockParams {
    /// Seeded initialization: weights and biases uniform in ±1/√fan_in,
    /// layer-norm gains 1 and biases 0.
    pub fn init(dims: BlockDims, seed: u64) -> Result<BlockParams> {
        dims.check()?;
        let mut rng = rng::stream(seed, streams::PARAM_INIT);
        Ok(Self::init_with(dims, &mut rng))
    }

    pub fn init_with(dims: BlockDims, rng: &mut SeededRng) -> BlockParams {
        let BlockDims {
            d_model: d,
            heads,
            d_head,
            d_ff,
        } = dims;
        let per_head =
            |rng: &mut SeededRng| -> Vec<Matrix> { (0..heads).map(|_| init_uniform(d, d_head, d, rng)).collect() };
        let wq = per_head(rng);
        let wk = per_head(rng);
        let wv = per_head(rng);
        let wo = init_uniform(heads * d_head, d, heads * d_head, rng);
        let topical = TopicalParams {
            q_task: init_uniform(1, d, d, rng),
            wk: init_uniform(d, d, d, rng),
            wv: init_uniform(d, d, d, rng),
        };
        let ffn = FeedForwardParams {
            w1: init_uniform(d, d_ff, d, rng),
            b1: init_uniform(1, d_ff, d, rng),
            w2: init_uniform(d_ff, d, d_ff, rng),
            b2: init_uniform(1, d, d_ff, rng),
        };
        let ln = || LayerNormParams {
            gain: Matrix::from_fn(1, d, |_, _| 1.0),
            bias: Matrix::zeros(1, d),
        };
        BlockParams {
            attention: AttentionParams { wq, wk, wv, wo },
            topical,
            ffn,
            ln1: ln(),
            ln2: ln(),
        }
    }

    pub fn zeros(dims: BlockDims) -> BlockParams {
        let BlockDims {
            d_model: d,
            heads,
            d_head,
            d_ff,
        } = dims;
        let z = Matrix::zeros;
        BlockParams {
            attention: AttentionParams {
                wq: vec![z(d, d_head); heads],
                wk: vec![z(d, d_head); heads],
                wv: vec![z(d, d_head); heads],
                wo: z(heads * d_head, d),
            },
            topical: TopicalParams {
                q_task: z(1, d),
                wk: z(d, d),
                wv: z(d, d),
            },
            ffn: FeedForwardParams {
                w1: z(d, d_ff),
                b1: z(1, d_ff),
                w2: z(d_ff, d),
                b2: z(1, d),
            },
            ln1: LayerNormParams {
                gain: z(1, d),
                bias: z(1, d),
            },
            ln2: LayerNormParams {
                gain: z(1, d),
                bias: z(1, d),
            },
        }
    }

    pub fn dims(&self) -> BlockDims {
        BlockDims {
            d_model: self.attention.wo.cols(),
            heads: self.attention.wq.len(),
            d_head: self.attention.wq.first().map_or(0, Matrix::cols),
            d_ff: self.ffn.w1.cols(),
        }
    }

    /// Checks every tensor shape against [`BlockParams::dims`].
    pub fn check_shapes(&self) -> Result<()> {
        let dims = self.dims();
        dims.check()?;
        let expected = BlockParams::zeros(dims);
        for ((name, got), want) in self
            .tensor_names()
            .into_iter()
            .zip(self.tensors())
            .zip(expected.tensors())
        {
            if got.shape() != want.shape() {
                return Err(Error::dim(format!(
                    "{name} is {:?}, expected {:?}",
                    got.shape(),
                    want.shape()
                )));
            }
        }
        if self.tensors().len() != expected.tensors().len() {
            return Err(Error::dim("head count differs between projections"));
        }
        Ok(())
    }
}

impl Params for BlockParams {
    fn tensors(&self) -> Vec<&Matrix> {
        let a = &self.attention;
        let mut v: Vec<&Matrix> = Vec::new();
        v.extend(&a.wq);
        v.extend(&a.wk);
        v.extend(&a.wv);
        v.push(&a.wo);
        v.extend([&self.topical.q_task, &self.topical.wk, &self.topical.wv]);
        v.extend([&self.ffn.w1, &self.ffn.b1, &self.ffn.w2, &self.ffn.b2]);
        v.extend([&self.ln1.gain, &self.ln1.bias, &self.ln2.gain, &self.ln2.bias]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let a = &mut self.attention;
        let mut v: Vec<&mut Matrix> = Vec::new();
        v.extend(a.wq.iter_mut());
        v.extend(a.wk.iter_mut());
        v.extend(a.wv.iter_mut());
        v.push(&mut a.wo);
        let t = &mut self.topical;
        v.extend([&mut t.q_task, &mut t.wk, &mut t.wv]);
        let f = &mut self.ffn;
        v.extend([&mut f.w1, &mut f.b1, &mut f.w2, &mut f.b2]);
        v.extend([
            &mut self.ln1.gain,
            &mut self.ln1.bias,
            &mut self.ln2.gain,
            &mut self.ln2.bias,
        ]);
        v
    }

    fn tensor_names(&self) -> Vec<String> {
        let k = self.attention.wq.len();
        let mut names = Vec::new();
        for w in ["wq", "wk", "wv"] {
            names.extend((0..k).map(|h| format!("attention.{w}[{h}]")));
        }
        names.push("attention.wo".into());
        names.extend(
            [
                "topical.q_task",
                "topical.wk",
                "topical.wv",
                "ffn.w1",
                "ffn.b1",
                "ffn.w2",
                "ffn.b2",
                "ln1.gain",
                "ln1.bias",
                "ln2.gain",
                "ln2.bias",
            ]
            .map(String::from),
        );
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMS: BlockDims = BlockDims {
        d_model: 8,
        heads: 2,
        d_head: 4,
        d_ff: 16,
    };

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = BlockParams::init(DIMS, 1).unwrap();
        assert_eq!(a, BlockParams::init(DIMS, 1).unwrap());
        assert_ne!(a, BlockParams::init(DIMS, 2).unwrap());
        let bound = 1.0 / 8f64.sqrt();
        assert!(a.attention.wq[0].max_abs() < bound);
        assert_eq!(a.ln1.gain.data(), &[1.0; 8]);
        a.check_shapes().unwrap();
    }

    #[test]
    fn flat_round_trip() {
        let a = BlockParams::init(DIMS, 3).unwrap();
        let mut b = BlockParams::zeros(DIMS);
        b.load_flat(&a.flatten()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tensor_names().len(), a.tensors().len());
        assert_eq!(
            a.num_params(),
            3 * 2 * 8 * 4 + 8 * 8 + 8 + 2 * 64 + 8 * 16 + 16 + 16 * 8 + 8 + 4 * 8
        );
    }

    #[test]
    fn rejects_inconsistent_dims() {
        let bad = BlockDims { d_model: 9, ..DIMS };
        assert!(BlockParams::init(bad, 0).is_err());
    }
}
