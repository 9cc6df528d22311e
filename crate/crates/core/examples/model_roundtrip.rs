//! Save a trained model, load it back and check that sampling with the same
//! seed gives byte-identical CSV output.
//!
//! ```bash
//! cargo run -p psvae --example model_roundtrip -- [path]
//! ```

use psvae::data_pipeline::{RawTable, SchemaOptions};
use psvae::model_file::{ModelFile, FORMAT_VERSION};
use psvae::post_selection::CategorySampling;
use psvae::vae::TrainConfig;

fn csv_bytes(model: &ModelFile, seed: u64) -> psvae::Result<Vec<u8>> {
    let (table, _) = model.sample(300, 5, CategorySampling::Categorical, seed)?;
    let mut out = Vec::new();
    table.write_csv(&mut out)?;
    Ok(out)
}

fn main() -> psvae::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("roundtrip.psvae").display().to_string());
    let rows: Vec<Vec<String>> = (0..400)
        .map(|i| vec![["red", "green", "blue"][i % 3].to_string(), format!("{}", (i * 37) % 101), (i % 2).to_string()])
        .collect();
    let real = RawTable::from_rows(vec!["colour".into(), "size".into(), "flag".into()], &rows)?;
    let config = TrainConfig { epochs: 5, seed: 1, hidden_dim: 32, latent_dim: 8, ..TrainConfig::default() };
    let (model, _) = ModelFile::fit(&real, &SchemaOptions::default(), &config, |_| {})?;

    model.save(&path)?;
    let loaded = ModelFile::load(&path)?;
    let size = std::fs::metadata(&path)?.len();
    println!("wrote {path} ({size} bytes, format version {FORMAT_VERSION})");
    println!("identical bytes after reload: {}", loaded.to_bytes() == model.to_bytes());
    println!("identical samples after reload: {}", csv_bytes(&loaded, 42)? == csv_bytes(&model, 42)?);
    println!("different seed differs: {}", csv_bytes(&loaded, 43)? != csv_bytes(&model, 42)?);

    let mut damaged = model.to_bytes();
    damaged[0] = b'X';
    match ModelFile::from_bytes(&damaged) {
        Err(e) => println!("damaged header rejected: {e}"),
        Ok(_) => println!("damaged header accepted"),
    }
    Ok(())
}
