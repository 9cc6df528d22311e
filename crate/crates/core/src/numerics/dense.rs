use rand::Rng;

use super::activation::{mish, mish_and_derivative};
use super::matrix::{gemm, Matrix, View};
use crate::error::{Error, Result};

/// Fully connected layer computing `x · Wᵀ + b` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients shaped like a [`DenseLayer`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// What a linear layer's backward pass needs from its forward pass.
#[derive(Debug, Clone)]
pub struct LayerTape {
    pub input: Matrix,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self { weights: Matrix::zeros(output, input), bias: vec![0.0; output] }
    }

    /// Glorot-uniform weights in `±√(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let weights = Matrix::from_fn(output, input, |_, _| rng.gen_range(-limit..limit));
        Self { weights, bias: vec![0.0; output] }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "layer expects width {}, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        let mut out = Matrix::zeros(input.rows(), self.output_dim());
        for r in 0..input.rows() {
            out.row_mut(r).copy_from_slice(&self.bias);
        }
        gemm(View::of(input), View::transposed(&self.weights), 1.0, &mut out);
        Ok(out)
    }

    /// Returns `(grad, grad_input)` for the given layer input and upstream gradient.
    pub fn backward(&self, input: &Matrix, upstream: &Matrix) -> Result<(DenseGrad, Matrix)> {
        input.ensure_shape(upstream.rows(), self.input_dim(), "layer input")?;
        upstream.ensure_shape(input.rows(), self.output_dim(), "layer upstream gradient")?;
        let mut grad_w = Matrix::zeros(self.output_dim(), self.input_dim());
        gemm(View::transposed(upstream), View::of(input), 0.0, &mut grad_w);
        let mut grad_b = vec![0.0; self.output_dim()];
        for r in 0..upstream.rows() {
            for (b, g) in grad_b.iter_mut().zip(upstream.row(r)) {
                *b += g;
            }
        }
        let mut grad_in = Matrix::zeros(input.rows(), self.input_dim());
        gemm(View::of(upstream), View::of(&self.weights), 0.0, &mut grad_in);
        Ok((DenseGrad { weights: grad_w, bias: grad_b }, grad_in))
    }

    pub fn all_finite(&self) -> bool {
        self.weights.all_finite() && self.bias.iter().all(|v| v.is_finite())
    }
}

impl DenseGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self { weights: Matrix::zeros(layer.output_dim(), layer.input_dim()), bias: vec![0.0; layer.output_dim()] }
    }

    pub fn add_assign(&mut self, other: &DenseGrad) {
        self.weights.add_assign(&other.weights);
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

pub fn linear_forward(layer: &DenseLayer, input: &Matrix) -> Result<(Matrix, LayerTape)> {
    let out = layer.forward(input)?;
    Ok((out, LayerTape { input: input.clone() }))
}

pub fn linear_backward(layer: &DenseLayer, tape: &LayerTape, upstream: &Matrix) -> Result<(DenseGrad, Matrix)> {
    layer.backward(&tape.input, upstream)
}

/// A stack of dense layers with Mish between them. When `activate_output` is
/// set, Mish is also applied after the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MishMlp {
    pub layers: Vec<DenseLayer>,
    pub activate_output: bool,
}

/// Activations recorded by one [`MishMlp::forward`] call.
#[derive(Debug, Clone)]
pub struct MlpTape {
    /// Input of each layer.
    inputs: Vec<Matrix>,
    /// Mish derivative at the pre-activation of each layer followed by Mish.
    derivatives: Vec<Matrix>,
}

impl MishMlp {
    /// Glorot-initialised stack with the given widths (`widths[0]` is the input).
    pub fn new<R: Rng + ?Sized>(widths: &[usize], activate_output: bool, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "need at least one layer");
        let layers = widths.windows(2).map(|w| DenseLayer::glorot(w[0], w[1], rng)).collect();
        Self { layers, activate_output }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    fn activated(&self, i: usize) -> bool {
        i + 1 < self.layers.len() || self.activate_output
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        let mut x = self.layers[0].forward(input)?;
        if self.activated(0) {
            x = mish(&x);
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            x = layer.forward(&x)?;
            if self.activated(i) {
                x = mish(&x);
            }
        }
        Ok(x)
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, MlpTape)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut derivatives = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = layer.forward(&x)?;
            inputs.push(x);
            if self.activated(i) {
                let mut deriv = Matrix::zeros(out.rows(), out.cols());
                for (v, d) in out.as_mut_slice().iter_mut().zip(deriv.as_mut_slice()) {
                    (*v, *d) = mish_and_derivative(*v);
                }
                derivatives.push(deriv);
            }
            x = out;
        }
        Ok((x, MlpTape { inputs, derivatives }))
    }

    /// Consumes the tape of the matching forward pass.
    pub fn backward(&self, tape: MlpTape, upstream: &Matrix) -> Result<(Vec<DenseGrad>, Matrix)> {
        let MlpTape { inputs, mut derivatives } = tape;
        if inputs.len() != self.layers.len() {
            return Err(Error::Dimension("tape does not match this network".into()));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (i, (layer, input)) in self.layers.iter().zip(inputs).enumerate().rev() {
            if self.activated(i) {
                let deriv = derivatives.pop().ok_or_else(|| Error::Dimension("tape is missing activations".into()))?;
                for (gi, d) in g.as_mut_slice().iter_mut().zip(deriv.as_slice()) {
                    *gi *= d;
                }
            }
            let (grad, grad_in) = layer.backward(&input, &g)?;
            grads.push(grad);
            g = grad_in;
        }
        grads.reverse();
        Ok((grads, g))
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(DenseLayer::all_finite)
    }
}
