use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Weighted softmax cross-entropy over one group of `k` logits starting at
/// column `offset`, averaged over rows. Adds `ω (softmax − onehot) / B` into
/// the matching slice of `grad` and returns the batch-mean loss.
fn group_ce(
    logits: &Matrix,
    offset: usize,
    k: usize,
    target: impl Fn(usize) -> usize,
    weights: &[f64],
    grad: &mut Matrix,
) -> f64 {
    let batch = logits.rows();
    let inv_b = 1.0 / batch as f64;
    let mut total = 0.0;
    let mut probs = vec![0.0; k];
    for r in 0..batch {
        let z = &logits.row(r)[offset..offset + k];
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (p, &v) in probs.iter_mut().zip(z) {
            *p = (v - max).exp();
            sum += *p;
        }
        let lse = max + sum.ln();
        let c = target(r);
        let w = weights[c];
        total += w * (lse - z[c]);
        let g = &mut grad.row_mut(r)[offset..offset + k];
        for (j, (gj, p)) in g.iter_mut().zip(&probs).enumerate() {
            let onehot = if j == c { 1.0 } else { 0.0 };
            *gj += w * (p / sum - onehot) * inv_b;
        }
    }
    total * inv_b
}

/// Sum over column groups of [`weighted_softmax_ce`]. `targets` is row-major,
/// one category index per group.
pub(crate) fn grouped_softmax_ce(
    logits: &Matrix,
    offsets: &[usize],
    targets: &[u32],
    weights: &[Vec<f64>],
    grad: &mut Matrix,
) -> f64 {
    let n_groups = offsets.len();
    debug_assert_eq!(targets.len(), logits.rows() * n_groups);
    offsets
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(g, (&off, w))| {
            group_ce(logits, off, w.len(), |r| targets[r * n_groups + g] as usize, w, grad)
        })
        .sum()
}

/// Batch-mean weighted cross-entropy `−ω_c* · log softmax(logits)[c*]` and its
/// gradient with respect to the logits.
pub fn weighted_softmax_ce(logits: &Matrix, target_onehot: &Matrix, weights: &[f64]) -> Result<(f64, Matrix)> {
    let (batch, k) = logits.shape();
    target_onehot.ensure_shape(batch, k, "cross-entropy targets")?;
    if weights.len() != k {
        return Err(Error::Dimension(format!("{} weights for {k} classes", weights.len())));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Contract("cross-entropy weights must be positive and finite".into()));
    }
    let targets = (0..batch)
        .map(|r| {
            let row = target_onehot.row(r);
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != k {
                return Err(Error::Contract(format!("target row {r} is not one-hot")));
            }
            Ok(row.iter().position(|&v| v == 1.0).unwrap_or(0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grad = Matrix::zeros(batch, k);
    let loss = group_ce(logits, 0, k, |r| targets[r], weights, &mut grad);
    Ok((loss, grad))
}

#[derive(Debug, Clone)]
pub struct KlOutput {
    pub loss: f64,
    pub grad_mu: Matrix,
    pub grad_logvar: Matrix,
}

/// KL divergence of `N(μ, e^logvar)` from `N(0, 1)`, summed over latent
/// dimensions and averaged over the batch.
pub fn gaussian_kl(mu: &Matrix, logvar: &Matrix) -> Result<KlOutput> {
    logvar.ensure_shape(mu.rows(), mu.cols(), "logvar")?;
    let inv_b = 1.0 / mu.rows().max(1) as f64;
    let mut loss = 0.0;
    let mut grad_mu = Matrix::zeros(mu.rows(), mu.cols());
    let mut grad_logvar = Matrix::zeros(mu.rows(), mu.cols());
    for (i, (&m, &lv)) in mu.as_slice().iter().zip(logvar.as_slice()).enumerate() {
        let var = lv.exp();
        loss += 0.5 * (m * m + var - 1.0 - lv);
        grad_mu.as_mut_slice()[i] = m * inv_b;
        grad_logvar.as_mut_slice()[i] = 0.5 * (var - 1.0) * inv_b;
    }
    Ok(KlOutput { loss: loss * inv_b, grad_mu, grad_logvar })
}
