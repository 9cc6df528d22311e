//! Fit a model on a small generated table, draw a post-selected synthetic
//! table and score it.
//!
//! ```bash
//! cargo run -p psvae --example quickstart -- [rows] [epochs]
//! ```

use psvae::data_pipeline::{RawTable, SchemaOptions};
use psvae::evaluation::{l1_metric, pearson_rho_diff};
use psvae::model_file::ModelFile;
use psvae::post_selection::CategorySampling;
use psvae::vae::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Customers with a plan, a region and a monthly spend that depends on the plan.
fn customers(n: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::new(); 3];
    for _ in 0..n {
        let premium = rng.gen_bool(0.3);
        let region = ["north", "south", "east", "west"][rng.gen_range(0..4)];
        let z: f64 = rng.sample(StandardNormal);
        let spend = if premium { 80.0 + 15.0 * z } else { 30.0 + 8.0 * z };
        cols[0].push(if premium { "premium" } else { "basic" }.to_string());
        cols[1].push(region.to_string());
        cols[2].push(format!("{spend:.2}"));
    }
    RawTable::new(vec!["plan".into(), "region".into(), "spend".into()], cols).unwrap()
}

fn main() -> psvae::Result<()> {
    let mut args = std::env::args().skip(1);
    let rows = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);

    let real = customers(rows, 1);
    let config = TrainConfig { epochs, seed: 7, ..TrainConfig::default() };
    let (model, log) = ModelFile::fit(&real, &SchemaOptions::default(), &config, |r| {
        println!("epoch {:>3}  L_RE {:>9.4}  L_KL {:>9.4}  beta {:.4}  {:.2}s", r.epoch, r.sum_re, r.sum_kl, r.beta, r.seconds);
    })?;
    println!("trained {} epochs, {} columns, one-hot width {}", log.records.len(), model.schema.n_cols(), model.schema.total_width());

    let (synthetic, selection) = model.sample(rows, 10, CategorySampling::Categorical, 3)?;
    println!("accepted replacements per cycle: {:?}", selection.accepted_per_cycle);
    println!("L1  = {:.4}", l1_metric(&real, &synthetic, &model.schema)?);
    println!("rho = {:.4}", pearson_rho_diff(&real, &synthetic, &model.schema)?);

    let mut preview = Vec::new();
    synthetic.select_rows(&[0, 1, 2, 3, 4]).write_csv(&mut preview)?;
    print!("{}", String::from_utf8_lossy(&preview));
    Ok(())
}
