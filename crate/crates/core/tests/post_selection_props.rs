mod common;

use common::random_rows;
use proptest::prelude::*;
use psvae::data_pipeline::{IndexTable, MarginalSet};
use psvae::post_selection::{post_select_from, scaled_marginal_distance, CandidateSource};
use psvae::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows drawn with every column skewed towards category 0.
struct Skewed {
    cards: Vec<usize>,
    rng: ChaCha8Rng,
}

impl CandidateSource for Skewed {
    fn draw(&mut self, n: usize) -> Result<IndexTable> {
        let mut rows = IndexTable::with_capacity(self.cards.len(), n);
        for _ in 0..n {
            let row: Vec<u32> = self
                .cards
                .iter()
                .map(|&k| if self.rng.gen_bool(0.5) { 0 } else { self.rng.gen_range(0..k as u32) })
                .collect();
            rows.push_row(&row);
        }
        Ok(rows)
    }
}

#[test]
fn incremental_influence_matches_recomputation_over_a_thousand_replacements() {
    common::incremental_oracle(1000, 17).unwrap();
}

#[test]
fn distance_never_increases_across_a_hundred_seeds() {
    let cards = vec![2, 4, 6, 3];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = MarginalSet::of_indices(&random_rows(300, &cards, &mut rng), &cards);
        let mut source = Skewed { cards: cards.clone(), rng };
        let mut last = i128::MAX;
        let mut checked = 0;
        let result = post_select_from(&mut source, &real, 120, 5, |p| {
            let d = scaled_marginal_distance(p.set.marginals(), &real).unwrap();
            assert!(d <= last, "seed {seed}: distance rose at cycle {} index {}", p.cycle, p.index);
            assert_eq!(p.accepted, p.delta.scaled > 0);
            last = d;
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 600);
        assert!(result.set.is_consistent());
        assert!(result.accepted_per_cycle.iter().all(|&a| a <= 120));
    }
}

#[test]
fn zero_cycles_keep_the_initial_draw() {
    let cards = vec![3, 3];
    let real = MarginalSet::of_indices(&random_rows(50, &cards, &mut ChaCha8Rng::seed_from_u64(1)), &cards);
    let mut a = Skewed { cards: cards.clone(), rng: ChaCha8Rng::seed_from_u64(9) };
    let mut b = Skewed { cards: cards.clone(), rng: ChaCha8Rng::seed_from_u64(9) };
    let result = post_select_from(&mut a, &real, 40, 0, |_| panic!("no proposals expected")).unwrap();
    assert_eq!(result.set.rows(), &b.draw(40).unwrap());
    assert!(result.accepted_per_cycle.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn final_distance_is_at_most_initial(seed in any::<u64>(), n in 1usize..80, cycles in 0usize..6) {
        let cards = vec![2, 3, 5];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = MarginalSet::of_indices(&random_rows(97, &cards, &mut rng), &cards);
        let mut first = None;
        let mut source = Skewed { cards: cards.clone(), rng };
        let out = post_select_from(&mut source, &real, n, cycles, |p| {
            if first.is_none() {
                first = Some(p.delta.scaled.max(0) + scaled_marginal_distance(p.set.marginals(), &real).unwrap());
            }
        })
        .unwrap();
        let end = scaled_marginal_distance(out.set.marginals(), &real).unwrap();
        if let Some(start) = first {
            prop_assert!(end <= start);
        }
        prop_assert_eq!(out.set.len(), n);
    }
}
