use crate::error::{Error, Result};
use crate::maskgen::Mask;
use crate::tensor::{dot, Axis, Matrix};

use super::MaskMode;

/// Score given to masked pairs in additive mode before the softmax.
pub const MASKED_SCORE: f64 = -1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// n × d_v.
    pub output: Matrix,
    /// n × n, row-stochastic.
    pub weights: Matrix,
}

/// Numerically stable softmax over a row, in place.
pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

/// Gradient through a softmax row: `dx_j = w_j (dw_j - Σ_k w_k dw_k)`.
pub(crate) fn softmax_backward(w: &[f64], dw: &[f64], dx: &mut [f64]) {
    let inner = dot(w, dw);
    for ((dx, &w), &dw) in dx.iter_mut().zip(w).zip(dw) {
        *dx = w * (dw - inner);
    }
}

fn check_qkv(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<()> {
    let n = q.rows();
    if k.rows() != n || v.rows() != n {
        return Err(Error::dim(format!(
            "Q, K, V have {}, {}, {} rows",
            q.rows(),
            k.rows(),
            v.rows()
        )));
    }
    if q.cols() != k.cols() {
        return Err(Error::dim(format!(
            "Q has width {} but K has width {}",
            q.cols(),
            k.cols()
        )));
    }
    if q.cols() == 0 {
        return Err(Error::dim("zero-width queries"));
    }
    Ok(())
}

fn check_mask(mask: &Mask, n: usize, mode: MaskMode) -> Result<()> {
    if mask.n() != n {
        return Err(Error::dim(format!(
            "mask is {0}x{0} but there are {n} tokens",
            mask.n()
        )));
    }
    if mode == MaskMode::Additive {
        if let Some(row) = (0..n).find(|&i| mask.row(i).is_empty()) {
            return Err(Error::DegenerateRow { row });
        }
    }
    Ok(())
}

pub(crate) fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Plain scaled dot-product attention, `softmax(QKᵀ/√d)V`.
pub fn scaled_dot_product_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<AttentionOutput> {
    check_qkv(q, k, v)?;
    let scale = (q.cols() as f64).sqrt();
    let mut weights = q.matmul_t(k).map(|x| x / scale);
    for i in 0..weights.rows() {
        softmax_in_place(weights.row_mut(i));
    }
    let output = weights.matmul(v);
    ensure_finite(&output, "attention output")?;
    Ok(AttentionOutput {
        output: output.with_axes(Axis::Tokens, Axis::Features),
        weights: weights.with_axes(Axis::Tokens, Axis::Tokens),
    })
}

/// Attention restricted by a mask.
///
/// Additive mode sets masked scores to [`MASKED_SCORE`] and guarantees the
/// resulting weights are exactly zero there. Multiplicative mode computes
/// `softmax((QKᵀ ⊙ M)/√d)` as written, so masked pairs keep score zero and
/// a nonzero weight.
pub fn masked_attention(q: &Matrix, k: &Matrix, v: &Matrix, mask: &Mask, mode: MaskMode) -> Result<AttentionOutput> {
    check_qkv(q, k, v)?;
    check_mask(mask, q.rows(), mode)?;
    let weights = masked_weights(q, k, mask, mode);
    let output = weights.matmul(v);
    ensure_finite(&output, "masked attention output")?;
    Ok(AttentionOutput {
        output: output.with_axes(Axis::Tokens, Axis::Features),
        weights,
    })
}

/// Weights only; inputs must already be checked.
pub(crate) fn masked_weights(q: &Matrix, k: &Matrix, mask: &Mask, mode: MaskMode) -> Matrix {
    let n = q.rows();
    let scale = (q.cols() as f64).sqrt();
    let mut w = q.matmul_t(k);
    for i in 0..n {
        let row = w.row_mut(i);
        match mode {
            MaskMode::Multiplicative => {
                for (j, x) in row.iter_mut().enumerate() {
                    let m = if mask.get(i, j) { 1.0 } else { 0.0 };
                    *x = (*x * m) / scale;
                }
                softmax_in_place(row);
            }
            MaskMode::Additive => {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = if mask.get(i, j) { *x / scale } else { MASKED_SCORE };
                }
                softmax_in_place(row);
                let mut leaked = false;
                for (j, x) in row.iter_mut().enumerate() {
                    if !mask.get(i, j) && *x != 0.0 {
                        *x = 0.0;
                        leaked = true;
                    }
                }
                if leaked {
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= s);
                }
            }
        }
    }
    w.with_axes(Axis::Tokens, Axis::Tokens)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrads {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
}

/// Backward pass of [`masked_attention`] given its weights. The mask is a
/// constant in both modes.
pub fn masked_attention_backward(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    mask: &Mask,
    mode: MaskMode,
    weights: &Matrix,
    grad_output: &Matrix,
) -> AttentionGrads {
    let n = q.rows();
    let scale = (q.cols() as f64).sqrt();
    let dw = grad_output.matmul_t(v);
    let dv = weights.t_matmul(grad_output);
    let mut ds = Matrix::zeros(n, n);
    for i in 0..n {
        softmax_backward(weights.row(i), dw.row(i), ds.row_mut(i));
        for (j, x) in ds.row_mut(i).iter_mut().enumerate() {
            *x /= scale;
            if mode == MaskMode::Multiplicative && !mask.get(i, j) {
                *x = 0.0;
            }
        }
    }
    AttentionGrads {
        q: ds.matmul(k),
        k: ds.t_matmul(q),
        v: dv,
    }
}

/// Result of the sparse kernel. `weights[i]` lines up with `mask.row(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAttention {
    pub output: Matrix,
    pub weights: Vec<Vec<f64>>,
    /// Number of (query, key) score evaluations performed.
    pub visited_pairs: u64,
}

impl SparseAttention {
    pub fn dense_weights(&self, mask: &Mask) -> Matrix {
        let n = mask.n();
        let mut w = Matrix::zeros(n, n).with_axes(Axis::Tokens, Axis::Tokens);
        for i in 0..n {
            for (&j, &x) in mask.row(i).iter().zip(&self.weights[i]) {
                w[(i, j)] = x;
            }
        }
        w
    }
}

/// Additive-mode masked attention that only touches allowed pairs, using
/// the mask's row lists. Cost is proportional to the mask's one-count.
pub fn sparse_masked_attention(q: &Matrix, k: &Matrix, v: &Matrix, mask: &Mask) -> Result<SparseAttention> {
    check_qkv(q, k, v)?;
    check_mask(mask, q.rows(), MaskMode::Additive)?;
    let n = q.rows();
    let scale = (q.cols() as f64).sqrt();
    let mut output = Matrix::zeros(n, v.cols()).with_axes(Axis::Tokens, Axis::Features);
    let mut weights = Vec::with_capacity(n);
    let mut visited = 0u64;
    for i in 0..n {
        let cols = mask.row(i);
        let mut row: Vec<f64> = cols.iter().map(|&j| dot(q.row(i), k.row(j)) / scale).collect();
        visited += cols.len() as u64;
        softmax_in_place(&mut row);
        let out = output.row_mut(i);
        for (&j, &w) in cols.iter().zip(&row) {
            if w == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(v.row(j)) {
                *o += w * x;
            }
        }
        weights.push(row);
    }
    ensure_finite(&output, "sparse attention output")?;
    Ok(SparseAttention {
        output,
        weights,
        visited_pairs: visited,
    })
}
