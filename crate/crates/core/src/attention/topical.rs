use super::kernel::{ensure_finite, softmax_in_place};
use super::params::TopicalParams;
use crate::error::{Error, Result};
use crate::tensor::{dot, Axis, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TopicalOutput {
    /// n × d_model aggregated representation.
    pub output: Matrix,
    /// n × m; row `t` is token `t`'s distribution over sub-networks.
    pub weights: Matrix,
}

fn check(stack: &[Matrix], p: &TopicalParams) -> Result<()> {
    let first = stack
        .first()
        .ok_or_else(|| Error::dim("topical attention needs at least one sub-network"))?;
    let (n, d) = first.shape();
    if let Some(bad) = stack.iter().find(|h| h.shape() != (n, d)) {
        return Err(Error::dim(format!(
            "sub-network output is {:?}, expected ({n}, {d})",
            bad.shape()
        )));
    }
    if p.q_task.shape() != (1, d) || p.wk.shape() != (d, d) || p.wv.shape() != (d, d) {
        return Err(Error::dim(format!("topical parameters do not match d_model {d}")));
    }
    Ok(())
}

/// Per-token aggregation over sub-network outputs `stack[j]` (each
/// n × d_model) with a single learned task query.
pub fn topical_attention(stack: &[Matrix], params: &TopicalParams) -> Result<TopicalOutput> {
    check(stack, params)?;
    let p = params;
    let (n, d) = stack[0].shape();
    let m = stack.len();
    let scale = (d as f64).sqrt();
    let keys: Vec<Matrix> = stack.iter().map(|h| h.matmul(&p.wk)).collect();
    let values: Vec<Matrix> = stack.iter().map(|h| h.matmul(&p.wv)).collect();
    let q = p.q_task.row(0);
    let mut weights = Matrix::zeros(n, m).with_axes(Axis::Tokens, Axis::Subnetworks);
    let mut output = Matrix::zeros(n, d).with_axes(Axis::Tokens, Axis::Features);
    for t in 0..n {
        let w = weights.row_mut(t);
        for (j, k) in keys.iter().enumerate() {
            w[j] = dot(q, k.row(t)) / scale;
        }
        softmax_in_place(w);
        let out = output.row_mut(t);
        for (j, v) in values.iter().enumerate() {
            let wj = weights[(t, j)];
            for (o, &x) in out.iter_mut().zip(v.row(t)) {
                *o += wj * x;
            }
        }
    }
    ensure_finite(&output, "topical attention output")?;
    Ok(TopicalOutput { output, weights })
}
