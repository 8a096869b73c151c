use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    /// `max_i |a_i - n_i| / max(1, |a_i|, |n_i|)`.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub numeric: Vec<f64>,
}

/// Central differences `(f(θ+ε) − f(θ−ε)) / 2ε`, one coordinate at a time.
pub fn numerical_gradient(mut f: impl FnMut(&[f64]) -> f64, theta: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + eps;
        let plus = f(&x);
        x[i] = theta[i] - eps;
        let minus = f(&x);
        x[i] = theta[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("objective at coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// Compares an analytic gradient against central differences.
pub fn grad_check(f: impl FnMut(&[f64]) -> f64, theta: &[f64], analytic: &[f64], eps: f64) -> Result<GradReport> {
    if analytic.len() != theta.len() {
        return Err(Error::dim(format!(
            "{} analytic entries for {} parameters",
            analytic.len(),
            theta.len()
        )));
    }
    if let Some(i) = analytic.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("analytic gradient at coordinate {i}")));
    }
    let numeric = numerical_gradient(f, theta, eps)?;
    let (worst_index, max_rel_error) = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| (a - n).abs() / 1f64.max(a.abs()).max(n.abs()))
        .enumerate()
        .fold((0, 0.0), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    Ok(GradReport {
        max_rel_error,
        worst_index,
        numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square() {
        let g = numerical_gradient(|t| t[0] * t[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-9, "{}", g[0]);
    }

    #[test]
    fn linear_is_exact_for_any_eps() {
        let f = |t: &[f64]| 2.0 * t[0] - 0.5 * t[1] + 4.0;
        for eps in [1e-2, 1e-5, 1e-3] {
            let r = grad_check(f, &[0.3, -1.2], &[2.0, -0.5], eps).unwrap();
            assert!(r.max_rel_error < 1e-10, "eps {eps}: {}", r.max_rel_error);
        }
    }

    #[test]
    fn reports_worst_coordinate() {
        let r = grad_check(|t| t[0] + t[1], &[0.0, 0.0], &[1.0, 3.0], 1e-5).unwrap();
        assert_eq!(r.worst_index, 1);
        assert!((r.max_rel_error - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_objective() {
        let r = grad_check(|t| (t[0]).ln(), &[0.0], &[1.0], 1e-5);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
