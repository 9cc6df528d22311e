//! Post-selection on its own: a deliberately biased candidate source is
//! pulled towards a target set of marginals, one accepted swap at a time.
//!
//! ```bash
//! cargo run -p psvae --example post_selection
//! ```

use psvae::data_pipeline::{IndexTable, MarginalSet};
use psvae::post_selection::{marginal_distance, post_select_from, CandidateSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Proposes rows whose first column is almost always category 0.
struct Biased {
    cards: Vec<usize>,
    rng: ChaCha8Rng,
}

impl CandidateSource for Biased {
    fn draw(&mut self, n: usize) -> psvae::Result<IndexTable> {
        let mut rows = IndexTable::with_capacity(self.cards.len(), n);
        for _ in 0..n {
            let mut row: Vec<u32> = self.cards.iter().map(|&k| self.rng.gen_range(0..k as u32)).collect();
            if self.rng.gen_bool(0.8) {
                row[0] = 0;
            }
            rows.push_row(&row);
        }
        Ok(rows)
    }
}

fn main() -> psvae::Result<()> {
    let cards = vec![3, 4, 2];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut target_rows = IndexTable::new(cards.len());
    for _ in 0..3000 {
        target_rows.push_row(&[rng.gen_range(0..3), rng.gen_range(0..4), u32::from(rng.gen_bool(0.7))]);
    }
    let real = MarginalSet::of_indices(&target_rows, &cards);

    let mut source = Biased { cards: cards.clone(), rng: ChaCha8Rng::seed_from_u64(2) };
    let mut last_cycle = usize::MAX;
    let result = post_select_from(&mut source, &real, 1000, 8, |p| {
        if p.cycle != last_cycle {
            last_cycle = p.cycle;
            let d = marginal_distance(p.set.marginals(), &real).unwrap();
            println!("cycle {} starts at distance {d:.4}", p.cycle);
        }
    })?;

    println!("accepted per cycle: {:?}", result.accepted_per_cycle);
    println!("final distance {:.4}", marginal_distance(result.set.marginals(), &real)?);
    for col in 0..cards.len() {
        let fmt = |v: Vec<f64>| v.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ");
        println!("column {col}: target [{}]  selected [{}]", fmt(real.distribution(col)), fmt(result.set.marginals().distribution(col)));
    }
    Ok(())
}
