//! The VAE: a Mish encoder trunk with μ / log-variance heads, the
//! reparameterisation step, a Mish decoder emitting raw per-category logits,
//! and the training loop that rebalances β once per epoch.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data_pipeline::{CategoryWeights, EncodedMatrix, IndexTable, TableSchema};
use crate::error::{Error, Result};
use crate::numerics::{
    adam_step, gaussian_kl, grouped_softmax_ce, layer_blocks, AdamConfig, AdamState, DenseGrad, DenseLayer, Matrix,
    MishMlp, MlpTape, ParamBlock,
};
use crate::rng::{stream, Stream};

pub const DEFAULT_HIDDEN_DIM: usize = 256;
pub const DEFAULT_LATENT_DIM: usize = 128;
pub const BETA_FACTOR: f64 = 1.04;
pub const KL_TARGET_FRACTION: f64 = 1.0 / 3.0;

const ENCODER_NAMES: [&str; 2] = ["enc1", "enc2"];
const DECODER_NAMES: [&str; 3] = ["dec1", "dec2", "dec_out"];

/// Trained (or training) network weights plus the current β.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams {
    /// Two Mish-activated feature layers.
    pub encoder: MishMlp,
    pub head_mu: DenseLayer,
    pub head_logvar: DenseLayer,
    /// Two Mish-activated layers then a linear output layer.
    pub decoder: MishMlp,
    pub beta: f64,
}

/// Gradients for every parameter block of [`VaeParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct VaeGrads {
    pub encoder: Vec<DenseGrad>,
    pub head_mu: DenseGrad,
    pub head_logvar: DenseGrad,
    pub decoder: Vec<DenseGrad>,
}

impl VaeParams {
    pub fn new<R: Rng + ?Sized>(input_width: usize, hidden_dim: usize, latent_dim: usize, rng: &mut R) -> Self {
        let encoder = MishMlp::new(&[input_width, hidden_dim, hidden_dim], true, rng);
        let head_mu = DenseLayer::glorot(hidden_dim, latent_dim, rng);
        let head_logvar = DenseLayer::glorot(hidden_dim, latent_dim, rng);
        let decoder = MishMlp::new(&[latent_dim, hidden_dim, hidden_dim, input_width], false, rng);
        Self { encoder, head_mu, head_logvar, decoder, beta: 1.0 }
    }

    /// All weights and biases zero.
    pub fn zeros(input_width: usize, hidden_dim: usize, latent_dim: usize) -> Self {
        let stack = |widths: &[usize], activate_output| MishMlp {
            layers: widths.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect(),
            activate_output,
        };
        Self {
            encoder: stack(&[input_width, hidden_dim, hidden_dim], true),
            head_mu: DenseLayer::zeros(hidden_dim, latent_dim),
            head_logvar: DenseLayer::zeros(hidden_dim, latent_dim),
            decoder: stack(&[latent_dim, hidden_dim, hidden_dim, input_width], false),
            beta: 1.0,
        }
    }

    pub fn input_width(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.head_mu.output_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.head_mu.input_dim()
    }

    /// Layers in a fixed order: encoder, μ head, log-variance head, decoder.
    pub fn layers(&self) -> Vec<&DenseLayer> {
        self.encoder
            .layers
            .iter()
            .chain([&self.head_mu, &self.head_logvar])
            .chain(&self.decoder.layers)
            .collect()
    }

    /// Inverse of [`VaeParams::layers`].
    pub fn from_layers(mut layers: Vec<DenseLayer>, beta: f64) -> Result<Self> {
        if layers.len() != 7 {
            return Err(Error::Dimension(format!("expected 7 layers, got {}", layers.len())));
        }
        let decoder = layers.split_off(4);
        let head_logvar = layers.pop().expect("length checked");
        let head_mu = layers.pop().expect("length checked");
        let params = Self {
            encoder: MishMlp { layers, activate_output: true },
            head_mu,
            head_logvar,
            decoder: MishMlp { layers: decoder, activate_output: false },
            beta,
        };
        params.check_shapes()?;
        Ok(params)
    }

    fn check_shapes(&self) -> Result<()> {
        let layers = self.layers();
        let (w, h, l) = (self.input_width(), self.hidden_dim(), self.latent_dim());
        let expected = [(w, h), (h, h), (h, l), (h, l), (l, h), (h, h), (h, w)];
        for (i, (layer, &(fan_in, fan_out))) in layers.iter().zip(&expected).enumerate() {
            if layer.input_dim() != fan_in || layer.output_dim() != fan_out || layer.bias.len() != fan_out {
                return Err(Error::Dimension(format!(
                    "layer {i} is {}x{}, expected {fan_out}x{fan_in}",
                    layer.output_dim(),
                    layer.input_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.encoder.all_finite()
            && self.decoder.all_finite()
            && self.head_mu.all_finite()
            && self.head_logvar.all_finite()
    }

    fn blocks<'a>(&'a mut self, grads: &'a VaeGrads) -> Vec<ParamBlock<'a>> {
        let mut blocks = layer_blocks(&mut self.encoder.layers, &grads.encoder, &ENCODER_NAMES);
        blocks.extend(layer_blocks(
            std::slice::from_mut(&mut self.head_mu),
            std::slice::from_ref(&grads.head_mu),
            &["head_mu"],
        ));
        blocks.extend(layer_blocks(
            std::slice::from_mut(&mut self.head_logvar),
            std::slice::from_ref(&grads.head_logvar),
            &["head_logvar"],
        ));
        blocks.extend(layer_blocks(&mut self.decoder.layers, &grads.decoder, &DECODER_NAMES));
        blocks
    }
}

/// `(μ, log σ²)` for a one-hot batch.
pub fn encode(params: &VaeParams, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let h = params.encoder.predict(x)?;
    Ok((params.head_mu.forward(&h)?, params.head_logvar.forward(&h)?))
}

/// `z = μ + exp(½ logvar) ⊙ ε`.
pub fn reparameterize(mu: &Matrix, logvar: &Matrix, eps: &Matrix) -> Result<Matrix> {
    logvar.ensure_shape(mu.rows(), mu.cols(), "logvar")?;
    eps.ensure_shape(mu.rows(), mu.cols(), "eps")?;
    let data = mu
        .as_slice()
        .iter()
        .zip(logvar.as_slice())
        .zip(eps.as_slice())
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect();
    Matrix::from_vec(mu.rows(), mu.cols(), data)
}

/// Raw logits, one group of `cardinality` columns per schema column.
pub fn decode(params: &VaeParams, z: &Matrix) -> Result<Matrix> {
    params.decoder.predict(z)
}

/// Standard-normal `rows × cols` draws.
pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Sum over columns of the weighted cross-entropy of each column's logit slice.
pub fn reconstruction_loss(
    logits: &Matrix,
    targets: &IndexTable,
    weights: &CategoryWeights,
    schema: &TableSchema,
) -> Result<(f64, Matrix)> {
    logits.ensure_shape(targets.n_rows(), schema.total_width(), "reconstruction logits")?;
    if targets.n_cols() != schema.n_cols() || weights.per_column.len() != schema.n_cols() {
        return Err(Error::Dimension("targets or weights do not match the schema".into()));
    }
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let loss = grouped_softmax_ce(logits, &schema.group_offsets(), targets.as_flat(), &weights.per_column, &mut grad);
    Ok((loss, grad))
}

/// One-step β controller: grow β when KL holds more than its target share of
/// the epoch's total loss, shrink it otherwise.
pub fn adjust_beta(sum_kl: f64, sum_re: f64, beta: f64) -> f64 {
    adjust_beta_with(sum_kl, sum_re, beta, BETA_FACTOR, KL_TARGET_FRACTION)
}

pub fn adjust_beta_with(sum_kl: f64, sum_re: f64, beta: f64, factor: f64, kl_fraction: f64) -> f64 {
    let target = kl_fraction * (sum_kl + sum_re);
    if sum_kl > target {
        beta * factor
    } else {
        beta / factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub reconstruction: f64,
    pub kl: f64,
}

impl LossParts {
    pub fn total(&self, beta: f64) -> f64 {
        self.reconstruction + beta * self.kl
    }
}

/// Forward and backward pass of `L_RE + β·L_KL` for one batch with fixed
/// reparameterisation noise.
pub fn loss_and_grad(
    params: &VaeParams,
    x: &Matrix,
    targets: &IndexTable,
    eps: &Matrix,
    weights: &CategoryWeights,
    schema: &TableSchema,
) -> Result<(LossParts, VaeGrads)> {
    let (h, enc_tape): (Matrix, MlpTape) = params.encoder.forward(x)?;
    let mu = params.head_mu.forward(&h)?;
    let logvar = params.head_logvar.forward(&h)?;
    let z = reparameterize(&mu, &logvar, eps)?;
    let (logits, dec_tape) = params.decoder.forward(&z)?;

    let (re, grad_logits) = reconstruction_loss(&logits, targets, weights, schema)?;
    let kl = gaussian_kl(&mu, &logvar)?;
    let beta = params.beta;

    let (decoder_grads, grad_z) = params.decoder.backward(dec_tape, &grad_logits)?;
    let mut grad_mu = grad_z.clone();
    let mut grad_logvar = Matrix::zeros(logvar.rows(), logvar.cols());
    for i in 0..grad_mu.as_slice().len() {
        let std = (0.5 * logvar.as_slice()[i]).exp();
        grad_mu.as_mut_slice()[i] += beta * kl.grad_mu.as_slice()[i];
        grad_logvar.as_mut_slice()[i] =
            grad_z.as_slice()[i] * eps.as_slice()[i] * 0.5 * std + beta * kl.grad_logvar.as_slice()[i];
    }
    let (mu_grad, mut grad_h) = params.head_mu.backward(&h, &grad_mu)?;
    let (logvar_grad, grad_h2) = params.head_logvar.backward(&h, &grad_logvar)?;
    grad_h.add_assign(&grad_h2);
    let (encoder_grads, _) = params.encoder.backward(enc_tape, &grad_h)?;

    Ok((
        LossParts { reconstruction: re, kl: kl.loss },
        VaeGrads { encoder: encoder_grads, head_mu: mu_grad, head_logvar: logvar_grad, decoder: decoder_grads },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchSampling {
    /// Each epoch is a shuffled partition of all rows.
    #[default]
    ShuffledPartition,
    /// Each batch is drawn with replacement; an epoch still has `ceil(N / batch)` batches.
    WithReplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta_init: f64,
    pub beta_factor: f64,
    pub kl_target_fraction: f64,
    pub seed: u64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub batch_sampling: BatchSampling,
    /// When false β stays at `beta_init`.
    pub adjust_beta: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 500,
            learning_rate: 1e-3,
            beta_init: 1.0,
            beta_factor: BETA_FACTOR,
            kl_target_fraction: KL_TARGET_FRACTION,
            seed: 0,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            latent_dim: DEFAULT_LATENT_DIM,
            batch_sampling: BatchSampling::ShuffledPartition,
            adjust_beta: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_dim == 0 || self.latent_dim == 0 {
            return Err(Error::Config("epochs, batch size and layer widths must be positive".into()));
        }
        if !positive(self.learning_rate) || !positive(self.beta_init) || !positive(self.beta_factor) {
            return Err(Error::Config("learning rate, beta and beta factor must be positive".into()));
        }
        if !(self.kl_target_fraction > 0.0 && self.kl_target_fraction < 1.0) {
            return Err(Error::Config("KL target fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub sum_kl: f64,
    pub sum_re: f64,
    /// β after this epoch's adjustment.
    pub beta: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn epoch_seconds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.seconds).collect()
    }
}

pub fn fit(
    encoded: &EncodedMatrix,
    weights: &CategoryWeights,
    schema: &TableSchema,
    config: &TrainConfig,
) -> Result<(VaeParams, TrainLog)> {
    fit_with_observer(encoded, weights, schema, config, |_| {})
}

/// [`fit`], calling `on_epoch` after every epoch.
pub fn fit_with_observer(
    encoded: &EncodedMatrix,
    weights: &CategoryWeights,
    schema: &TableSchema,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(VaeParams, TrainLog)> {
    config.validate()?;
    let n = encoded.rows();
    if n == 0 {
        return Err(Error::Contract("cannot fit on an empty table".into()));
    }
    let width = schema.total_width();
    if encoded.width() != width {
        return Err(Error::Dimension(format!("encoded width {} != schema width {width}", encoded.width())));
    }

    let mut init_rng = stream(config.seed, Stream::Init);
    let mut shuffle_rng = stream(config.seed, Stream::Shuffle);
    let mut latent_rng = stream(config.seed, Stream::Latent);

    let mut params = VaeParams::new(width, config.hidden_dim, config.latent_dim, &mut init_rng);
    params.beta = config.beta_init;
    let mut adam = AdamState::new(AdamConfig { lr: config.learning_rate, ..AdamConfig::default() });
    let targets = encoded.to_indices();
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..n).collect();
    let n_batches = n.div_ceil(config.batch_size);

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        match config.batch_sampling {
            BatchSampling::ShuffledPartition => order.shuffle(&mut shuffle_rng),
            BatchSampling::WithReplacement => {
                order.iter_mut().for_each(|slot| *slot = shuffle_rng.gen_range(0..n));
            }
        }
        let (mut sum_kl, mut sum_re) = (0.0, 0.0);
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let mut x = Matrix::zeros(rows.len(), width);
            encoded.fill_dense(rows, x.as_mut_slice());
            let batch_targets = targets.select_rows(rows);
            let eps = standard_normal(rows.len(), config.latent_dim, &mut latent_rng);
            let (parts, grads) = loss_and_grad(&params, &x, &batch_targets, &eps, weights, schema)?;
            if !parts.total(params.beta).is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            adam_step(&mut params.blocks(&grads), &mut adam)?;
            sum_kl += parts.kl;
            sum_re += parts.reconstruction;
        }
        debug_assert_eq!(adam.t as usize, epoch * n_batches);
        if config.adjust_beta {
            params.beta =
                adjust_beta_with(sum_kl, sum_re, params.beta, config.beta_factor, config.kl_target_fraction);
        }
        let record = EpochRecord { epoch, sum_kl, sum_re, beta: params.beta, seconds: started.elapsed().as_secs_f64() };
        on_epoch(&record);
        log.records.push(record);
    }
    Ok((params, log))
}
