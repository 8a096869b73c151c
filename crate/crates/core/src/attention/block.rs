use super::kernel::{ensure_finite, softmax_backward, softmax_in_place};
use super::multihead::{check_input, subnetwork_backward, subnetwork_forward, Projections, Subnetwork};
use super::params::{BlockParams, LayerNormParams, Params};
use super::{AttnOptions, Kernel, MaskMode};
use crate::error::{Error, Result};
use crate::maskgen::MaskSet;
use crate::tensor::{dot, Axis, Matrix};

pub const LAYER_NORM_EPS: f64 = 1e-12;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + (GELU_C * (z + GELU_A * z * z * z)).tanh())
}

pub fn gelu_grad(z: f64) -> f64 {
    let t = (GELU_C * (z + GELU_A * z * z * z)).tanh();
    0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * z * z)
}

#[derive(Debug, Clone)]
struct LayerNormCache {
    xhat: Matrix,
    rstd: Vec<f64>,
}

fn layer_norm(x: &Matrix, p: &LayerNormParams) -> (Matrix, LayerNormCache) {
    let (n, d) = x.shape();
    let mut xhat = Matrix::zeros(n, d);
    let mut y = Matrix::zeros(n, d).with_axes(Axis::Tokens, Axis::Features);
    let mut rstd = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let r = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        rstd.push(r);
        for j in 0..d {
            let h = (row[j] - mean) * r;
            xhat[(i, j)] = h;
            y[(i, j)] = p.gain[(0, j)] * h + p.bias[(0, j)];
        }
    }
    (y, LayerNormCache { xhat, rstd })
}

/// Plain layer normalization (gain 1, bias 0).
pub fn normalize_rows(x: &Matrix) -> Matrix {
    let d = x.cols();
    let p = LayerNormParams {
        gain: Matrix::from_fn(1, d, |_, _| 1.0),
        bias: Matrix::zeros(1, d),
    };
    layer_norm(x, &p).0
}

fn layer_norm_backward(dy: &Matrix, p: &LayerNormParams, c: &LayerNormCache, grads: &mut LayerNormParams) -> Matrix {
    let (n, d) = dy.shape();
    let mut dx = Matrix::zeros(n, d);
    let mut dxhat = vec![0.0; d];
    for i in 0..n {
        let g = dy.row(i);
        let xh = c.xhat.row(i);
        for j in 0..d {
            grads.gain[(0, j)] += g[j] * xh[j];
            grads.bias[(0, j)] += g[j];
            dxhat[j] = g[j] * p.gain[(0, j)];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        for j in 0..d {
            dx[(i, j)] = c.rstd[i] * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
    }
    dx
}

fn add_row_bias(x: &Matrix, b: &Matrix) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (o, &v) in out.row_mut(i).iter_mut().zip(b.row(0)) {
            *o += v;
        }
    }
    out
}

fn column_sums_into(x: &Matrix, acc: &mut Matrix) {
    for i in 0..x.rows() {
        for (a, &v) in acc.row_mut(0).iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
}

/// Topical attention over the sub-network outputs `H_j = concat_j · W^O`
/// without forming them: the logits `q·(H_j W^K)` equal `concat_j · b` with
/// `b = W^O W^K qᵀ`, and `Σ_j w_j H_j W^V = (Σ_j w_j concat_j) W^O W^V`.
#[derive(Debug, Clone)]
struct Pooled {
    /// `W^K qᵀ`.
    a: Vec<f64>,
    /// `W^O a`.
    b: Vec<f64>,
    /// n × m.
    weights: Matrix,
    /// `Σ_j w_j concat_j`, n × (heads · d_head).
    mix: Matrix,
    /// `mix · W^O`.
    mixed_out: Matrix,
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows()).map(|r| dot(m.row(r), v)).collect()
}

fn mat_t_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (r, &x) in v.iter().enumerate() {
        for (o, &w) in out.iter_mut().zip(m.row(r)) {
            *o += x * w;
        }
    }
    out
}

fn outer_into(acc: &mut Matrix, u: &[f64], v: &[f64]) {
    for (r, &x) in u.iter().enumerate() {
        for (o, &y) in acc.row_mut(r).iter_mut().zip(v) {
            *o += x * y;
        }
    }
}

fn pooled_forward(subs: &[Subnetwork], p: &BlockParams) -> (Matrix, Pooled) {
    let (n, width) = subs[0].concat.shape();
    let m = subs.len();
    let scale = (p.topical.wk.rows() as f64).sqrt();
    let a = mat_vec(&p.topical.wk, p.topical.q_task.row(0));
    let b = mat_vec(&p.attention.wo, &a);
    let mut weights = Matrix::zeros(n, m).with_axes(Axis::Tokens, Axis::Subnetworks);
    let mut mix = Matrix::zeros(n, width);
    for t in 0..n {
        let w = weights.row_mut(t);
        for (j, sub) in subs.iter().enumerate() {
            w[j] = dot(sub.concat.row(t), &b) / scale;
        }
        softmax_in_place(w);
        // Fixed sub-network order keeps the sum schedule-independent.
        let out = mix.row_mut(t);
        for (j, sub) in subs.iter().enumerate() {
            let wj = weights[(t, j)];
            for (o, &x) in out.iter_mut().zip(sub.concat.row(t)) {
                *o += wj * x;
            }
        }
    }
    let mixed_out = mix.matmul(&p.attention.wo);
    let output = mixed_out.matmul(&p.topical.wv).with_axes(Axis::Tokens, Axis::Features);
    (
        output,
        Pooled {
            a,
            b,
            weights,
            mix,
            mixed_out,
        },
    )
}

/// Accumulates W^O and topical gradients; returns `dL/d concat_j`.
fn pooled_backward(
    subs: &[Subnetwork],
    p: &BlockParams,
    c: &Pooled,
    d_out: &Matrix,
    grads: &mut BlockParams,
) -> Vec<Matrix> {
    let (n, width) = subs[0].concat.shape();
    let m = subs.len();
    let scale = (p.topical.wk.rows() as f64).sqrt();
    grads.topical.wv.add_assign(&c.mixed_out.t_matmul(d_out));
    let d_mixed_out = d_out.matmul_t(&p.topical.wv);
    grads.attention.wo.add_assign(&c.mix.t_matmul(&d_mixed_out));
    let d_mix = d_mixed_out.matmul_t(&p.attention.wo);

    let mut d_concat = vec![Matrix::zeros(n, width); m];
    let mut d_b = vec![0.0; width];
    let mut dw = vec![0.0; m];
    let mut dlogit = vec![0.0; m];
    for t in 0..n {
        let g = d_mix.row(t);
        let w = c.weights.row(t);
        for (j, sub) in subs.iter().enumerate() {
            dw[j] = dot(g, sub.concat.row(t));
            for (dc, &x) in d_concat[j].row_mut(t).iter_mut().zip(g) {
                *dc += w[j] * x;
            }
        }
        softmax_backward(w, &dw, &mut dlogit);
        for (j, sub) in subs.iter().enumerate() {
            let s = dlogit[j] / scale;
            for ((db, dc), (&x, &bv)) in d_b
                .iter_mut()
                .zip(d_concat[j].row_mut(t))
                .zip(sub.concat.row(t).iter().zip(&c.b))
            {
                *db += s * x;
                *dc += s * bv;
            }
        }
    }
    // b = W^O a, a = W^K qᵀ
    outer_into(&mut grads.attention.wo, &d_b, &c.a);
    let d_a = mat_t_vec(&p.attention.wo, &d_b);
    outer_into(&mut grads.topical.wk, &d_a, p.topical.q_task.row(0));
    let d_q = mat_t_vec(&p.topical.wk, &d_a);
    for (g, x) in grads.topical.q_task.row_mut(0).iter_mut().zip(d_q) {
        *g += x;
    }
    d_concat
}

/// Everything [`block_backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct BlockCache {
    fingerprint: u64,
    mode: MaskMode,
    masks: MaskSet,
    input: Matrix,
    proj: Projections,
    subnetworks: Vec<Subnetwork>,
    wo: Matrix,
    pooled: Pooled,
    ln1: LayerNormCache,
    y1: Matrix,
    pre_act: Matrix,
    act: Matrix,
    ln2: LayerNormCache,
    output: Matrix,
}

impl BlockCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }

    /// H_j for every sub-network, in mask-set order.
    pub fn subnetwork_outputs(&self) -> Vec<Matrix> {
        self.subnetworks.iter().map(|s| s.concat.matmul(&self.wo)).collect()
    }

    /// Head weights of sub-network `j`, one n × n matrix per head.
    pub fn attention_weights(&self, j: usize) -> &[Matrix] {
        &self.subnetworks[j].weights
    }

    /// n × m topical weights.
    pub fn topical_weights(&self) -> &Matrix {
        &self.pooled.weights
    }

    pub fn masks(&self) -> &MaskSet {
        &self.masks
    }
}

/// Runs one syntax block: every mask's sub-network on shared parameters,
/// topical aggregation, then residual + LayerNorm, feed-forward, residual +
/// LayerNorm.
pub fn block_forward(
    h: &Matrix,
    masks: &MaskSet,
    params: &BlockParams,
    opts: AttnOptions,
) -> Result<(Matrix, BlockCache)> {
    params.check_shapes()?;
    check_input(h, &params.attention)?;
    if masks.is_empty() {
        return Err(Error::Config("block needs at least one mask".into()));
    }
    if masks.n() != h.rows() {
        return Err(Error::dim(format!(
            "masks cover {} tokens but input has {}",
            masks.n(),
            h.rows()
        )));
    }
    if opts.kernel == Kernel::Sparse && opts.mode == MaskMode::Multiplicative {
        return Err(Error::Config("the sparse kernel supports additive masking only".into()));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("block input".into()));
    }

    let proj = Projections::new(h, &params.attention);
    let subnetworks = masks
        .masks()
        .iter()
        .map(|m| subnetwork_forward(&proj, m, opts))
        .collect::<Result<Vec<_>>>()?;
    let (topical_out, pooled) = pooled_forward(&subnetworks, params);
    ensure_finite(&topical_out, "topical attention output")?;

    let (y1, ln1) = layer_norm(&h.add(&topical_out), &params.ln1);
    let pre_act = add_row_bias(&y1.matmul(&params.ffn.w1), &params.ffn.b1);
    let act = pre_act.map(gelu);
    let ffn_out = add_row_bias(&act.matmul(&params.ffn.w2), &params.ffn.b2);
    let (output, ln2) = layer_norm(&y1.add(&ffn_out), &params.ln2);
    ensure_finite(&output, "block output")?;

    let cache = BlockCache {
        fingerprint: params.fingerprint(),
        mode: opts.mode,
        masks: masks.clone(),
        input: h.clone(),
        proj,
        subnetworks,
        wo: params.attention.wo.clone(),
        pooled,
        ln1,
        y1,
        pre_act,
        act,
        ln2,
        output: output.clone(),
    };
    Ok((output, cache))
}

/// Exact gradients of a scalar loss given `dL/d output`. `params` must be
/// the parameters the cache was produced with.
pub fn block_backward(params: &BlockParams, cache: &BlockCache, grad_output: &Matrix) -> Result<(Matrix, BlockParams)> {
    if params.fingerprint() != cache.fingerprint {
        return Err(Error::StaleCache("parameters changed since the forward pass".into()));
    }
    if grad_output.shape() != cache.output.shape() {
        return Err(Error::dim(format!(
            "output gradient is {:?}, expected {:?}",
            grad_output.shape(),
            cache.output.shape()
        )));
    }
    let mut grads = BlockParams::zeros(params.dims());

    let d_u = layer_norm_backward(grad_output, &params.ln2, &cache.ln2, &mut grads.ln2);
    // u = y1 + act·W2 + b2
    column_sums_into(&d_u, &mut grads.ffn.b2);
    grads.ffn.w2.add_assign(&cache.act.t_matmul(&d_u));
    let d_act = d_u.matmul_t(&params.ffn.w2);
    let d_pre = Matrix::from_fn(d_act.rows(), d_act.cols(), |i, j| {
        d_act[(i, j)] * gelu_grad(cache.pre_act[(i, j)])
    });
    column_sums_into(&d_pre, &mut grads.ffn.b1);
    grads.ffn.w1.add_assign(&cache.y1.t_matmul(&d_pre));
    let d_y1 = d_u.add(&d_pre.matmul_t(&params.ffn.w1));

    // x = h + topical(...)
    let d_x = layer_norm_backward(&d_y1, &params.ln1, &cache.ln1, &mut grads.ln1);
    let d_concat = pooled_backward(&cache.subnetworks, params, &cache.pooled, &d_x, &mut grads);

    let mut d_proj = cache.proj.zeros_like();
    for ((mask, sub), d_c) in cache.masks.masks().iter().zip(&cache.subnetworks).zip(&d_concat) {
        subnetwork_backward(&cache.proj, mask, cache.mode, sub, d_c, &mut d_proj);
    }
    let mut d_h = d_proj.backward(&cache.input, &params.attention, &mut grads.attention);
    d_h.add_assign(&d_x);

    ensure_finite(&d_h, "input gradient")?;
    for t in grads.tensors() {
        ensure_finite(t, "parameter gradient")?;
    }
    Ok((d_h, grads))
}
