//! Score a synthetic CSV against a real one: L1, ρ, F1 and identity F1.
//! Without arguments it scores a noisy copy of a generated table.
//!
//! ```bash
//! cargo run -p psvae --example evaluate_csv -- real.csv synthetic.csv target
//! ```

use psvae::data_pipeline::{infer_schema, RawTable, DEFAULT_BUCKET_CAP};
use psvae::evaluation::{correlation_pairs, f1_cross, identity_f1, l1_metric, pearson_rho_diff, ClassifierConfig};
use psvae::rng::{stream, Stream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn patients(n: usize, noise: f64, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::new(); 3];
    for _ in 0..n {
        let age: f64 = rng.gen_range(20.0..90.0);
        let risk = if rng.gen_bool(noise) { rng.gen_bool(0.5) } else { age > 60.0 };
        cols[0].push(format!("{age:.1}"));
        cols[1].push(["A", "B", "O", "AB"][rng.gen_range(0..4)].to_string());
        cols[2].push(if risk { "high" } else { "low" }.to_string());
    }
    RawTable::new(vec!["age".into(), "blood".into(), "risk".into()], cols).unwrap()
}

fn main() -> psvae::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (real, syn, target) = match args.as_slice() {
        [r, s, t] => (RawTable::read_csv_path(r)?, RawTable::read_csv_path(s)?, t.clone()),
        _ => (patients(3000, 0.05, 1), patients(3000, 0.3, 2), "risk".to_string()),
    };
    let schema = infer_schema(&real, DEFAULT_BUCKET_CAP)?;
    let cfg = ClassifierConfig::new(&target);

    println!("L1           {:.4}", l1_metric(&real, &syn, &schema)?);
    println!("rho          {:.4}", pearson_rho_diff(&real, &syn, &schema)?);
    println!("F1           {:.4}", f1_cross(&syn, &real, &schema, &cfg, &mut stream(0, Stream::Classifier))?);
    println!("identity F1  {:.4}", identity_f1(&real, &schema, &cfg, 0.8, &mut stream(0, Stream::Split))?);
    let names = schema.names();
    let (a, b) = (correlation_pairs(&real, &schema)?, correlation_pairs(&syn, &schema)?);
    let mut k = 0;
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            println!("r({}, {}): real {:+.3} synthetic {:+.3}", names[i], names[j], a[k], b[k]);
            k += 1;
        }
    }
    Ok(())
}
