use super::kernel::{ensure_finite, masked_attention_backward, masked_weights, sparse_masked_attention};
use super::params::{AttentionParams, BlockDims};
use super::{AttnOptions, Kernel, MaskMode};
use crate::error::{Error, Result};
use crate::maskgen::Mask;
use crate::tensor::{Axis, Matrix};

/// Per-head Q, K, V of one input. Sub-networks share these: only the mask
/// changes between them.
#[derive(Debug, Clone)]
pub(crate) struct Projections {
    pub q: Vec<Matrix>,
    pub k: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

impl Projections {
    pub fn new(h: &Matrix, p: &AttentionParams) -> Projections {
        Projections {
            q: p.wq.iter().map(|w| h.matmul(w)).collect(),
            k: p.wk.iter().map(|w| h.matmul(w)).collect(),
            v: p.wv.iter().map(|w| h.matmul(w)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Projections {
        let z = |ms: &[Matrix]| ms.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
        Projections {
            q: z(&self.q),
            k: z(&self.k),
            v: z(&self.v),
        }
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the
    /// input the projections were computed from.
    pub fn backward(&self, h: &Matrix, p: &AttentionParams, grads: &mut AttentionParams) -> Matrix {
        let mut dh = Matrix::zeros(h.rows(), h.cols());
        for (i, (dq, (dk, dv))) in self.q.iter().zip(self.k.iter().zip(&self.v)).enumerate() {
            grads.wq[i].add_assign(&h.t_matmul(dq));
            grads.wk[i].add_assign(&h.t_matmul(dk));
            grads.wv[i].add_assign(&h.t_matmul(dv));
            dh.add_assign(&dq.matmul_t(&p.wq[i]));
            dh.add_assign(&dk.matmul_t(&p.wk[i]));
            dh.add_assign(&dv.matmul_t(&p.wv[i]));
        }
        dh
    }
}

/// Intermediates of one sub-network.
#[derive(Debug, Clone)]
pub(crate) struct Subnetwork {
    /// Per head, n × n.
    pub weights: Vec<Matrix>,
    /// n × (heads · d_head), the concatenated head outputs. The
    /// sub-network output is `concat · W^O`.
    pub concat: Matrix,
}

pub(crate) fn subnetwork_forward(proj: &Projections, mask: &Mask, opts: AttnOptions) -> Result<Subnetwork> {
    let n = mask.n();
    if let Some(row) = (opts.mode == MaskMode::Additive)
        .then(|| (0..n).find(|&i| mask.row(i).is_empty()))
        .flatten()
    {
        return Err(Error::DegenerateRow { row });
    }
    let mut weights = Vec::with_capacity(proj.q.len());
    let mut heads = Vec::with_capacity(proj.q.len());
    for ((q, k), v) in proj.q.iter().zip(&proj.k).zip(&proj.v) {
        let w = match opts.kernel {
            Kernel::Dense => masked_weights(q, k, mask, opts.mode),
            Kernel::Sparse => sparse_masked_attention(q, k, v, mask)?.dense_weights(mask),
        };
        heads.push(w.matmul(v));
        weights.push(w);
    }
    let concat = Matrix::hstack(&heads).with_axes(Axis::Tokens, Axis::Features);
    ensure_finite(&concat, "sub-network output")?;
    Ok(Subnetwork { weights, concat })
}

/// Takes the gradient of `concat` and accumulates into `dproj`.
pub(crate) fn subnetwork_backward(
    proj: &Projections,
    mask: &Mask,
    mode: MaskMode,
    cache: &Subnetwork,
    d_concat: &Matrix,
    dproj: &mut Projections,
) {
    let d_head = proj.q[0].cols();
    for i in 0..proj.q.len() {
        let d_a = d_concat.columns(i * d_head, (i + 1) * d_head);
        let g = masked_attention_backward(&proj.q[i], &proj.k[i], &proj.v[i], mask, mode, &cache.weights[i], &d_a);
        dproj.q[i].add_assign(&g.q);
        dproj.k[i].add_assign(&g.k);
        dproj.v[i].add_assign(&g.v);
    }
}

pub(crate) fn check_input(h: &Matrix, p: &AttentionParams) -> Result<BlockDims> {
    let heads = p.wq.len();
    if heads == 0 || p.wk.len() != heads || p.wv.len() != heads {
        return Err(Error::dim(
            "attention parameters need the same positive head count for Q, K, V",
        ));
    }
    let d_head = p.wq[0].cols();
    let d_model = h.cols();
    for w in p.wq.iter().chain(&p.wk).chain(&p.wv) {
        if w.shape() != (d_model, d_head) {
            return Err(Error::dim(format!(
                "head projection is {:?}, expected ({d_model}, {d_head})",
                w.shape()
            )));
        }
    }
    if p.wo.rows() != heads * d_head {
        return Err(Error::dim(format!(
            "output projection has {} rows, expected {}",
            p.wo.rows(),
            heads * d_head
        )));
    }
    Ok(BlockDims {
        d_model,
        heads,
        d_head,
        d_ff: 0,
    })
}

/// One sub-network: every head attends under `mask`, the head outputs are
/// concatenated and projected by `W^O`. Returns n × d_model.
pub fn multi_head_masked(h: &Matrix, params: &AttentionParams, mask: &Mask, mode: MaskMode) -> Result<Matrix> {
    check_input(h, params)?;
    if mask.n() != h.rows() {
        return Err(Error::dim(format!(
            "mask is {0}x{0} for {1} tokens",
            mask.n(),
            h.rows()
        )));
    }
    let proj = Projections::new(h, params);
    let opts = AttnOptions {
        mode,
        kernel: Kernel::Dense,
    };
    let out = subnetwork_forward(&proj, mask, opts)?.concat.matmul(&params.wo);
    ensure_finite(&out, "sub-network output")?;
    Ok(out)
}
