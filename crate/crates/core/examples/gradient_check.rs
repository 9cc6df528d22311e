//! Compare backpropagated gradients of `L_RE + β·L_KL` with central finite
//! differences, block by block, on a tiny model.
//!
//! ```bash
//! cargo run -p psvae --example gradient_check
//! ```

use psvae::data_pipeline::{CategoryWeights, ColumnSchema, IndexTable, MarginalSet, TableSchema};
use psvae::numerics::{DenseLayer, Matrix};
use psvae::vae::{loss_and_grad, standard_normal, VaeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn layers_mut(p: &mut VaeParams) -> Vec<&mut DenseLayer> {
    p.encoder.layers.iter_mut().chain([&mut p.head_mu, &mut p.head_logvar]).chain(p.decoder.layers.iter_mut()).collect()
}

fn main() -> psvae::Result<()> {
    let cat = |name: &str, k: usize| ColumnSchema::categorical(name, (0..k).map(|i| i.to_string()).collect());
    let schema = TableSchema::new(vec![cat("a", 2)?, cat("b", 3)?, cat("c", 4)?], 32)?;
    let cards = schema.cardinalities();
    let offsets = schema.group_offsets();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut targets = IndexTable::new(3);
    let mut x = Matrix::zeros(32, schema.total_width());
    for r in 0..32 {
        let row: Vec<u32> = cards.iter().map(|&k| rng.gen_range(0..k as u32)).collect();
        for (c, &v) in row.iter().enumerate() {
            x.set(r, offsets[c] + v as usize, 1.0);
        }
        targets.push_row(&row);
    }
    let weights = CategoryWeights::from_marginals(&MarginalSet::of_indices(&targets, &cards));
    let eps = standard_normal(32, 4, &mut rng);
    let mut params = VaeParams::new(schema.total_width(), 8, 4, &mut rng);
    params.beta = 1.7;

    let (parts, grads) = loss_and_grad(&params, &x, &targets, &eps, &weights, &schema)?;
    println!("L_RE {:.6}  L_KL {:.6}  beta {}", parts.reconstruction, parts.kl, params.beta);
    let analytic: Vec<(&Matrix, &Vec<f64>)> = grads
        .encoder
        .iter()
        .chain([&grads.head_mu, &grads.head_logvar])
        .chain(grads.decoder.iter())
        .map(|g| (&g.weights, &g.bias))
        .collect();
    let names = ["enc1", "enc2", "head_mu", "head_logvar", "dec1", "dec2", "dec_out"];
    let h = 1e-5;
    let mut probe = params.clone();
    let loss_at = |p: &VaeParams| loss_and_grad(p, &x, &targets, &eps, &weights, &schema).map(|(l, _)| l.total(p.beta));

    for (l, (gw, gb)) in analytic.into_iter().enumerate() {
        let mut num = Vec::new();
        let mut ana = Vec::new();
        for k in 0..gw.as_slice().len() {
            let orig = layers_mut(&mut probe)[l].weights.as_slice()[k];
            layers_mut(&mut probe)[l].weights.as_mut_slice()[k] = orig + h;
            let up = loss_at(&probe)?;
            layers_mut(&mut probe)[l].weights.as_mut_slice()[k] = orig - h;
            let down = loss_at(&probe)?;
            layers_mut(&mut probe)[l].weights.as_mut_slice()[k] = orig;
            num.push((up - down) / (2.0 * h));
            ana.push(gw.as_slice()[k]);
        }
        for k in 0..gb.len() {
            let orig = layers_mut(&mut probe)[l].bias[k];
            layers_mut(&mut probe)[l].bias[k] = orig + h;
            let up = loss_at(&probe)?;
            layers_mut(&mut probe)[l].bias[k] = orig - h;
            let down = loss_at(&probe)?;
            layers_mut(&mut probe)[l].bias[k] = orig;
            num.push((up - down) / (2.0 * h));
            ana.push(gb[k]);
        }
        let diff = ana.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = ana.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        println!("{:<12} {:>4} params  relative error {:.2e}", names[l], ana.len(), diff / norm);
    }
    Ok(())
}
