//! Watch β settle: the KL share of the epoch loss is pushed towards one third,
//! compared with a run where β stays at 1.
//!
//! ```bash
//! cargo run -p psvae --example beta_schedule -- [epochs]
//! ```

use psvae::data_pipeline::{RawTable, SchemaOptions};
use psvae::model_file::ModelFile;
use psvae::vae::{TrainConfig, KL_TARGET_FRACTION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sensors(n: usize) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cols = vec![Vec::new(); 3];
    for _ in 0..n {
        let site = rng.gen_range(0..5u32);
        let temp = 12.0 + 3.0 * f64::from(site) + rng.gen_range(-2.0..2.0);
        cols[0].push(format!("site{site}"));
        cols[1].push(format!("{temp:.2}"));
        cols[2].push(if temp > 20.0 { "warm" } else { "cool" }.to_string());
    }
    RawTable::new(vec!["site".into(), "temp".into(), "label".into()], cols).unwrap()
}

fn main() -> psvae::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let real = sensors(1500);
    let adaptive = TrainConfig { epochs, seed: 5, hidden_dim: 64, latent_dim: 16, ..TrainConfig::default() };
    let frozen = TrainConfig { adjust_beta: false, ..adaptive.clone() };

    let (_, a) = ModelFile::fit(&real, &SchemaOptions::default(), &adaptive, |_| {})?;
    let (_, f) = ModelFile::fit(&real, &SchemaOptions::default(), &frozen, |_| {})?;

    println!("target KL share {KL_TARGET_FRACTION:.3}");
    println!("epoch   beta   KL share (adaptive)   KL share (beta = 1)");
    for (ra, rf) in a.records.iter().zip(&f.records) {
        let share = |kl: f64, re: f64| kl / (kl + re);
        if ra.epoch == 1 || ra.epoch % 5 == 0 {
            println!(
                "{:>5}  {:.3}  {:>19.3}  {:>20.3}",
                ra.epoch,
                ra.beta,
                share(ra.sum_kl, ra.sum_re),
                share(rf.sum_kl, rf.sum_re)
            );
        }
    }
    Ok(())
}
