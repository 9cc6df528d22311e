//! Quality metrics for a synthetic table against the real one: averaged
//! per-column L1, summed absolute Pearson-correlation differences, and the
//! macro F1 of a classifier trained on one table and tested on another.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::data_pipeline::{to_indices_clamped, ColumnKind, IndexTable, MarginalSet, RawTable, TableSchema};
use crate::error::{Error, Result};
use crate::numerics::{adam_step, grouped_softmax_ce, layer_blocks, AdamConfig, AdamState, Matrix, MishMlp};
use crate::post_selection::marginal_distance;

/// The JSON document emitted by `psvae eval`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub l1: f64,
    pub rho: f64,
    pub f1: f64,
    pub identity_f1: Option<f64>,
    pub epoch_seconds: Option<Vec<f64>>,
    pub dataset: String,
    pub model: String,
    pub seed: u64,
}

/// Mean over columns of the L1 distance between the two tables' category
/// distributions, with continuous columns binned on the schema's buckets.
pub fn l1_metric(real: &RawTable, syn: &RawTable, schema: &TableSchema) -> Result<f64> {
    if real.n_rows() == 0 || syn.n_rows() == 0 {
        return Err(Error::Contract("L1 metric needs non-empty tables".into()));
    }
    let cards = schema.cardinalities();
    let real_m = MarginalSet::of_indices(&to_indices_clamped(real, schema)?, &cards);
    let syn_m = MarginalSet::of_indices(&to_indices_clamped(syn, schema)?, &cards);
    l1_from_marginals(&real_m, &syn_m)
}

pub fn l1_from_marginals(real: &MarginalSet, syn: &MarginalSet) -> Result<f64> {
    Ok(marginal_distance(syn, real)? / real.n_cols() as f64)
}

/// Pearson r; 0 when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Numeric view of every column: raw values for continuous columns, schema
/// category indices for categorical ones.
fn numeric_columns(table: &RawTable, schema: &TableSchema) -> Result<Vec<Vec<f64>>> {
    let indices = to_indices_clamped(table, schema)?;
    schema
        .columns
        .iter()
        .enumerate()
        .map(|(c, col)| match &col.kind {
            ColumnKind::Continuous { .. } => table
                .column(c)
                .numeric
                .clone()
                .ok_or_else(|| Error::Eval(format!("column `{}` is not numeric", col.name))),
            ColumnKind::Categorical { .. } => Ok(indices.column(c).into_iter().map(f64::from).collect()),
        })
        .collect()
}

/// Pearson r for every unordered column pair, in `(0,1), (0,2), …` order.
pub fn correlation_pairs(table: &RawTable, schema: &TableSchema) -> Result<Vec<f64>> {
    let cols = numeric_columns(table, schema)?;
    let mut out = Vec::with_capacity(cols.len() * cols.len().saturating_sub(1) / 2);
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            out.push(pearson(&cols[i], &cols[j]));
        }
    }
    Ok(out)
}

/// `Σ_pairs |r_real − r_syn|`.
pub fn pearson_rho_diff(real: &RawTable, syn: &RawTable, schema: &TableSchema) -> Result<f64> {
    if schema.n_cols() < 2 {
        return Err(Error::Contract("correlation difference needs at least two columns".into()));
    }
    if real.n_rows() == 0 || syn.n_rows() == 0 {
        return Err(Error::Contract("correlation difference needs non-empty tables".into()));
    }
    let a = correlation_pairs(real, schema)?;
    let b = correlation_pairs(syn, schema)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum())
}

/// Macro F1 over every class that occurs in `truth` or `predicted`.
pub fn macro_f1(truth: &[u32], predicted: &[u32], n_classes: usize) -> f64 {
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            tp[t as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fn_[t as usize] += 1;
        }
    }
    let scores: Vec<f64> = (0..n_classes)
        .filter(|&c| tp[c] + fp[c] + fn_[c] > 0)
        .map(|c| 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fn_[c]) as f64)
        .collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub target_column: String,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl ClassifierConfig {
    pub fn new(target_column: impl Into<String>) -> Self {
        Self { target_column: target_column.into(), hidden: vec![64, 64], epochs: 30, learning_rate: 1e-3, batch_size: 256 }
    }

    fn target_index(&self, schema: &TableSchema) -> Result<usize> {
        schema
            .column_index(&self.target_column)
            .ok_or_else(|| Error::Config(format!("target column `{}` not found", self.target_column)))
    }
}

/// A Mish MLP over the one-hot encoding of every non-target column.
#[derive(Debug, Clone)]
pub struct Classifier {
    net: MishMlp,
    target: usize,
    cards: Vec<usize>,
}

impl Classifier {
    fn features(&self, rows: &IndexTable) -> Matrix {
        let width: usize = self.feature_width();
        let mut x = Matrix::zeros(rows.n_rows(), width);
        for (r, row) in rows.rows().enumerate() {
            let dst = x.row_mut(r);
            let mut offset = 0;
            for (c, (&idx, &k)) in row.iter().zip(&self.cards).enumerate() {
                if c == self.target {
                    continue;
                }
                dst[offset + idx as usize] = 1.0;
                offset += k;
            }
        }
        x
    }

    fn feature_width(&self) -> usize {
        self.cards.iter().enumerate().filter(|&(c, _)| c != self.target).map(|(_, k)| k).sum()
    }

    pub fn train<R: Rng + ?Sized>(rows: &IndexTable, schema: &TableSchema, cfg: &ClassifierConfig, rng: &mut R) -> Result<Self> {
        let target = cfg.target_index(schema)?;
        if rows.is_empty() {
            return Err(Error::Contract("classifier needs training rows".into()));
        }
        if cfg.epochs == 0 || cfg.batch_size == 0 {
            return Err(Error::Config("classifier epochs and batch size must be positive".into()));
        }
        let cards = schema.cardinalities();
        let n_classes = cards[target];
        let mut clf = Self { net: MishMlp { layers: Vec::new(), activate_output: false }, target, cards };
        let mut widths = vec![clf.feature_width().max(1)];
        widths.extend(&cfg.hidden);
        widths.push(n_classes);
        clf.net = MishMlp::new(&widths, false, rng);

        let names: Vec<String> = (0..clf.net.layers.len()).map(|i| format!("clf{i}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let weights = vec![vec![1.0; n_classes]];
        let mut adam = AdamState::new(AdamConfig { lr: cfg.learning_rate, ..AdamConfig::default() });
        let mut order: Vec<usize> = (0..rows.n_rows()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for batch in order.chunks(cfg.batch_size) {
                let sub = rows.select_rows(batch);
                let x = clf.padded_features(&sub);
                let labels = sub.column(target);
                let (logits, tape) = clf.net.forward(&x)?;
                let mut grad = Matrix::zeros(logits.rows(), n_classes);
                grouped_softmax_ce(&logits, &[0], &labels, &weights, &mut grad);
                let (grads, _) = clf.net.backward(tape, &grad)?;
                adam_step(&mut layer_blocks(&mut clf.net.layers, &grads, &names), &mut adam)?;
            }
        }
        Ok(clf)
    }

    /// Feature matrix, with a single zero column when there are no features.
    fn padded_features(&self, rows: &IndexTable) -> Matrix {
        if self.feature_width() == 0 {
            Matrix::zeros(rows.n_rows(), 1)
        } else {
            self.features(rows)
        }
    }

    pub fn predict(&self, rows: &IndexTable) -> Result<Vec<u32>> {
        let logits = self.net.predict(&self.padded_features(rows))?;
        Ok((0..logits.rows())
            .map(|r| {
                let row = logits.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                row.iter().position(|&v| v == max).unwrap_or(0) as u32
            })
            .collect())
    }

    /// Macro F1 on `rows`.
    pub fn score(&self, rows: &IndexTable) -> Result<f64> {
        let predicted = self.predict(rows)?;
        Ok(macro_f1(&rows.column(self.target), &predicted, self.cards[self.target]))
    }
}

/// Train on `syn_train`, test on `real_test`, both over the same schema.
pub fn f1_cross<R: Rng + ?Sized>(
    syn_train: &RawTable,
    real_test: &RawTable,
    schema: &TableSchema,
    cfg: &ClassifierConfig,
    rng: &mut R,
) -> Result<f64> {
    cfg.target_index(schema)?;
    let train = to_indices_clamped(syn_train, schema)?;
    let test = to_indices_clamped(real_test, schema)?;
    f1_cross_indices(&train, &test, schema, cfg, rng)
}

pub fn f1_cross_indices<R: Rng + ?Sized>(
    train: &IndexTable,
    test: &IndexTable,
    schema: &TableSchema,
    cfg: &ClassifierConfig,
    rng: &mut R,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Contract("F1 needs test rows".into()));
    }
    Classifier::train(train, schema, cfg, rng)?.score(test)
}

/// Sizes of a random train/test split: `round(split · N)` training rows.
pub fn split_sizes(n: usize, split: f64) -> (usize, usize) {
    let train = ((split * n as f64).round() as usize).min(n);
    (train, n - train)
}

/// Random `split` / `1 − split` partition of the real table; train on the first part, test on the second.
pub fn identity_f1<R: Rng + ?Sized>(
    real: &RawTable,
    schema: &TableSchema,
    cfg: &ClassifierConfig,
    split: f64,
    rng: &mut R,
) -> Result<f64> {
    cfg.target_index(schema)?;
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::Config("split fraction must lie in (0, 1)".into()));
    }
    let rows = to_indices_clamped(real, schema)?;
    let (n_train, n_test) = split_sizes(rows.n_rows(), split);
    if n_train == 0 || n_test == 0 {
        return Err(Error::Contract("table too small to split".into()));
    }
    let mut order: Vec<usize> = (0..rows.n_rows()).collect();
    order.shuffle(rng);
    let train = rows.select_rows(&order[..n_train]);
    let test = rows.select_rows(&order[n_train..]);
    f1_cross_indices(&train, &test, schema, cfg, rng)
}
