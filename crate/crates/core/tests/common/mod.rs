//! Test-only oracles: a known-joint dataset sampler and a central
//! finite-difference gradient checker that only ever evaluates the loss.
#![allow(dead_code)]

use psvae::data_pipeline::{CategoryWeights, ColumnSchema, IndexTable, MarginalSet, RawTable, TableSchema};
use psvae::numerics::{DenseLayer, Matrix};
use psvae::vae::{loss_and_grad, standard_normal, VaeGrads, VaeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const ORACLE_ROWS: usize = 5000;

/// Four columns with a known joint:
/// * `flag`: Bernoulli(0.5) as "0"/"1"
/// * `echo`: agrees with `flag` with probability 0.9 ("same"/"diff" labels are
///   avoided so the column is a pure copy-with-noise: "up" iff the echoed bit is 1)
/// * `grade`: a/b/c/d with probabilities 0.4/0.3/0.2/0.1, independent
/// * `score`: `flag + (2/3)·N(0,1)`, so corr(flag, score) = 0.5 / √(0.25 + 4/9) = 0.6
pub fn oracle_table(n: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::new(); 4];
    for _ in 0..n {
        let flag = rng.gen_bool(0.5);
        let echo = if rng.gen_bool(0.9) { flag } else { !flag };
        let u: f64 = rng.gen();
        let grade = if u < 0.4 {
            "a"
        } else if u < 0.7 {
            "b"
        } else if u < 0.9 {
            "c"
        } else {
            "d"
        };
        let noise: f64 = rng.sample(StandardNormal);
        let score = f64::from(u8::from(flag)) + 2.0 / 3.0 * noise;
        cols[0].push(u8::from(flag).to_string());
        cols[1].push(if echo { "up" } else { "down" }.to_string());
        cols[2].push(grade.to_string());
        cols[3].push(format!("{score:.6}"));
    }
    RawTable::new(vec!["flag".into(), "echo".into(), "grade".into(), "score".into()], cols).unwrap()
}

fn layers_mut(p: &mut VaeParams) -> Vec<&mut DenseLayer> {
    p.encoder
        .layers
        .iter_mut()
        .chain([&mut p.head_mu, &mut p.head_logvar])
        .chain(p.decoder.layers.iter_mut())
        .collect()
}

fn param_mut(p: &mut VaeParams, layer: usize, is_bias: bool, k: usize) -> &mut f64 {
    let layer = layers_mut(p).swap_remove(layer);
    if is_bias {
        &mut layer.bias[k]
    } else {
        &mut layer.weights.as_mut_slice()[k]
    }
}

fn grads_in_order(g: &VaeGrads) -> Vec<(&Matrix, &Vec<f64>)> {
    g.encoder
        .iter()
        .chain([&g.head_mu, &g.head_logvar])
        .chain(g.decoder.iter())
        .map(|d| (&d.weights, &d.bias))
        .collect()
}

fn total_loss(p: &VaeParams, x: &Matrix, t: &IndexTable, eps: &Matrix, w: &CategoryWeights, s: &TableSchema) -> f64 {
    let (parts, _) = loss_and_grad(p, x, t, eps, w, s).unwrap();
    parts.total(p.beta)
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Worst per-block relative error (‖analytic − numeric‖ / max norm) between the
/// backpropagated gradient and central differences of the total loss.
pub fn worst_block_error(
    params: &VaeParams,
    x: &Matrix,
    targets: &IndexTable,
    eps: &Matrix,
    weights: &CategoryWeights,
    schema: &TableSchema,
    h: f64,
) -> (f64, String) {
    let (_, grads) = loss_and_grad(params, x, targets, eps, weights, schema).unwrap();
    let analytic = grads_in_order(&grads);
    let mut probe = params.clone();
    let names = ["enc1", "enc2", "head_mu", "head_logvar", "dec1", "dec2", "dec_out"];
    let mut worst = (0.0, String::new());
    for (l, (gw, gb)) in analytic.into_iter().enumerate() {
        for is_bias in [false, true] {
            let n = if is_bias { gb.len() } else { gw.as_slice().len() };
            let mut numeric = vec![0.0; n];
            for (k, slot) in numeric.iter_mut().enumerate() {
                let orig = *param_mut(&mut probe, l, is_bias, k);
                *param_mut(&mut probe, l, is_bias, k) = orig + h;
                let up = total_loss(&probe, x, targets, eps, weights, schema);
                *param_mut(&mut probe, l, is_bias, k) = orig - h;
                let down = total_loss(&probe, x, targets, eps, weights, schema);
                *param_mut(&mut probe, l, is_bias, k) = orig;
                *slot = (up - down) / (2.0 * h);
            }
            let an = if is_bias { gb.as_slice() } else { gw.as_slice() };
            let e = rel_err(an, &numeric);
            if e > worst.0 {
                worst = (e, format!("{}.{}", names[l], if is_bias { "bias" } else { "weight" }));
            }
        }
    }
    worst
}

/// Three categorical columns with 2, 3 and 4 categories.
pub fn toy_schema() -> TableSchema {
    let cat = |name: &str, k: usize| ColumnSchema::categorical(name, (0..k).map(|i| format!("{name}{i}")).collect()).unwrap();
    TableSchema::new(vec![cat("a", 2), cat("b", 3), cat("c", 4)], 16).unwrap()
}

pub fn one_hot(rows: &IndexTable, schema: &TableSchema) -> Matrix {
    let offsets = schema.group_offsets();
    let mut x = Matrix::zeros(rows.n_rows(), schema.total_width());
    for (r, row) in rows.rows().enumerate() {
        for (c, &idx) in row.iter().enumerate() {
            x.set(r, offsets[c] + idx as usize, 1.0);
        }
    }
    x
}

pub fn random_rows(n: usize, cards: &[usize], rng: &mut impl Rng) -> IndexTable {
    let mut rows = IndexTable::with_capacity(cards.len(), n);
    for _ in 0..n {
        let row: Vec<u32> = cards.iter().map(|&k| rng.gen_range(0..k as u32)).collect();
        rows.push_row(&row);
    }
    rows
}

/// Worst block error over `seeds` random toy models (hidden 8, latent 4, batch 16):
/// `(error, block, seed)`.
pub fn toy_gradient_check(seeds: std::ops::Range<u64>) -> (f64, String, u64) {
    let schema = toy_schema();
    let cards = schema.cardinalities();
    let mut worst = (0.0, String::new(), 0);
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets = random_rows(16, &cards, &mut rng);
        let weights = CategoryWeights::from_marginals(&MarginalSet::of_indices(&targets, &cards));
        let x = one_hot(&targets, &schema);
        let eps = standard_normal(16, 4, &mut rng);
        let mut params = VaeParams::new(schema.total_width(), 8, 4, &mut rng);
        params.beta = rng.gen_range(0.25..4.0);
        let (err, block) = worst_block_error(&params, &x, &targets, &eps, &weights, &schema, 1e-5);
        if err > worst.0 {
            worst = (err, block, seed);
        }
    }
    worst
}

/// Applies `steps` random single-row replacements and compares the incremental
/// marginals and deltas against a full recount after each one.
pub fn incremental_oracle(steps: usize, seed: u64) -> Result<f64, String> {
    use psvae::post_selection::{apply_replacement, influence, marginal_distance, scaled_marginal_distance, SampleSet};
    let cards = [2, 5, 3, 10, 7];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = MarginalSet::of_indices(&random_rows(600, &cards, &mut rng), &cards);
    let mut set = SampleSet::new(random_rows(250, &cards, &mut rng), &cards);
    let mut worst = 0.0f64;
    for step in 0..steps {
        let index = rng.gen_range(0..set.len());
        let candidate = random_rows(1, &cards, &mut rng).row(0).to_vec();
        let before = marginal_distance(set.marginals(), &real).unwrap();
        let scaled_before = scaled_marginal_distance(set.marginals(), &real).unwrap();
        let predicted = influence(&set, &real, index, &candidate).unwrap();
        apply_replacement(&mut set, index, &candidate);
        let after = marginal_distance(set.marginals(), &real).unwrap();
        let scaled_after = scaled_marginal_distance(set.marginals(), &real).unwrap();
        let err = (predicted.delta - (before - after)).abs();
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("step {step}: delta off by {err:.3e}"));
        }
        if predicted.scaled != scaled_before - scaled_after {
            return Err(format!("step {step}: scaled delta {} != {}", predicted.scaled, scaled_before - scaled_after));
        }
        if set.marginals() != &MarginalSet::of_indices(set.rows(), &cards) {
            return Err(format!("step {step}: marginals drifted from a full recount"));
        }
    }
    Ok(worst)
}
