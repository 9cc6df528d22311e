//! Effect of the two training-time ideas on a small table: post-selection
//! cycles (0 vs 10) and β adjustment (on vs frozen at 1).
//!
//! ```bash
//! cargo run -p psvae --example ablation -- [rows] [epochs]
//! ```

use psvae::data_pipeline::{RawTable, SchemaOptions};
use psvae::evaluation::{l1_metric, pearson_rho_diff};
use psvae::model_file::ModelFile;
use psvae::post_selection::CategorySampling;
use psvae::vae::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn survey(n: usize) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut cols = vec![Vec::new(); 4];
    for _ in 0..n {
        let smoker = rng.gen_bool(0.25);
        let sport = if rng.gen_bool(0.85) { !smoker } else { smoker };
        let z: f64 = rng.sample(StandardNormal);
        let lung = 4.0 - 0.8 * f64::from(u8::from(smoker)) + 0.5 * z;
        cols[0].push(if smoker { "yes" } else { "no" }.to_string());
        cols[1].push(if sport { "active" } else { "idle" }.to_string());
        cols[2].push(["18-30", "31-50", "51+"][rng.gen_range(0..3)].to_string());
        cols[3].push(format!("{lung:.3}"));
    }
    RawTable::new(vec!["smoker".into(), "sport".into(), "age".into(), "lung".into()], cols).unwrap()
}

fn main() -> psvae::Result<()> {
    let mut args = std::env::args().skip(1);
    let rows = args.next().and_then(|s| s.parse().ok()).unwrap_or(3000);
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);
    let real = survey(rows);
    let opts = SchemaOptions::default();
    let full = TrainConfig { epochs, seed: 2, ..TrainConfig::default() };
    let frozen = TrainConfig { adjust_beta: false, ..full.clone() };

    let (model, _) = ModelFile::fit(&real, &opts, &full, |_| {})?;
    let (frozen_model, _) = ModelFile::fit(&real, &opts, &frozen, |_| {})?;
    println!("variant               L1       rho");
    for (label, m, cycles) in [("full, 10 cycles", &model, 10), ("full, 0 cycles", &model, 0), ("beta frozen, 10 cycles", &frozen_model, 10)] {
        let (syn, _) = m.sample(rows, cycles, CategorySampling::Categorical, 1)?;
        println!("{label:<22} {:.4}  {:.4}", l1_metric(&real, &syn, &m.schema)?, pearson_rho_diff(&real, &syn, &m.schema)?);
    }
    Ok(())
}
