use super::dense::{DenseGrad, DenseLayer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment accumulators, one pair per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

/// A named parameter buffer together with its gradient.
pub struct ParamBlock<'a> {
    pub name: String,
    pub values: &'a mut [f64],
    pub grads: &'a [f64],
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, t: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn second_moments(&self) -> impl Iterator<Item = &f64> {
        self.second.iter().flatten()
    }
}

/// One bias-corrected Adam update over all blocks. Gradients are checked for
/// finiteness before anything is modified.
pub fn adam_step(blocks: &mut [ParamBlock<'_>], state: &mut AdamState) -> Result<()> {
    for b in blocks.iter() {
        if b.values.len() != b.grads.len() {
            return Err(Error::Dimension(format!("block `{}`: gradient shape mismatch", b.name)));
        }
        if b.grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Optimizer { block: b.name.clone() });
        }
    }
    if state.first.is_empty() {
        state.first = blocks.iter().map(|b| vec![0.0; b.values.len()]).collect();
        state.second = state.first.clone();
    }
    if state.first.len() != blocks.len()
        || state.first.iter().zip(blocks.iter()).any(|(m, b)| m.len() != b.values.len())
    {
        return Err(Error::Dimension("parameter blocks changed shape between Adam steps".into()));
    }

    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let bias1 = 1.0 - beta1.powf(state.t as f64);
    let bias2 = 1.0 - beta2.powf(state.t as f64);
    for ((block, m), v) in blocks.iter_mut().zip(&mut state.first).zip(&mut state.second) {
        for (((p, &g), mi), vi) in block.values.iter_mut().zip(block.grads).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = beta1 * *mi + (1.0 - beta1) * g;
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Two blocks (`<name>.weight`, `<name>.bias`) per layer.
pub fn layer_blocks<'a>(layers: &'a mut [DenseLayer], grads: &'a [DenseGrad], names: &[&str]) -> Vec<ParamBlock<'a>> {
    assert_eq!(layers.len(), grads.len());
    assert_eq!(layers.len(), names.len());
    let mut blocks = Vec::with_capacity(layers.len() * 2);
    for ((layer, grad), name) in layers.iter_mut().zip(grads).zip(names) {
        blocks.push(ParamBlock {
            name: format!("{name}.weight"),
            values: layer.weights.as_mut_slice(),
            grads: grad.weights.as_slice(),
        });
        blocks.push(ParamBlock { name: format!("{name}.bias"), values: &mut layer.bias, grads: &grad.bias });
    }
    blocks
}
