use proptest::prelude::*;
use psvae::data_pipeline::{
    bucket_count, decode_table, encode, infer_schema, to_indices, ColumnKind, DecodeMode, RawTable, DEFAULT_BUCKET_CAP,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mixed_table(values: &[f64], labels: &[u8]) -> RawTable {
    let n = values.len().min(labels.len());
    RawTable::new(
        vec!["x".into(), "label".into()],
        vec![
            values[..n].iter().map(|v| v.to_string()).collect(),
            labels[..n].iter().map(|l| format!("L{l}")).collect(),
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn midpoint_decode_reencodes_to_the_same_buckets(
        values in prop::collection::vec(-1e6f64..1e6, 20..400),
        labels in prop::collection::vec(0u8..5, 400),
    ) {
        let raw = mixed_table(&values, &labels);
        let schema = infer_schema(&raw, DEFAULT_BUCKET_CAP).unwrap();
        let indices = to_indices(&raw, &schema).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let decoded = decode_table(&indices, &schema, DecodeMode::Midpoint, &mut rng).unwrap();
        prop_assert_eq!(to_indices(&decoded, &schema).unwrap(), indices);
    }

    #[test]
    fn uniform_decode_also_reencodes_to_the_same_buckets(
        values in prop::collection::vec(-1e3f64..1e3, 20..400),
        seed in any::<u64>(),
    ) {
        let labels = vec![0u8; values.len()];
        let raw = mixed_table(&values, &labels);
        let schema = infer_schema(&raw, DEFAULT_BUCKET_CAP).unwrap();
        let indices = to_indices(&raw, &schema).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let decoded = decode_table(&indices, &schema, DecodeMode::Uniform, &mut rng).unwrap();
        prop_assert_eq!(to_indices(&decoded, &schema).unwrap(), indices);
    }

    #[test]
    fn distinct_values_fill_buckets_within_one_of_each_other(
        n in 30usize..3000,
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut values: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 11.0).collect();
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let raw = mixed_table(&values, &vec![0; n]);
        let schema = infer_schema(&raw, DEFAULT_BUCKET_CAP).unwrap();
        let col = &schema.columns[0];
        let ColumnKind::Continuous { edges } = &col.kind else {
            return Err(TestCaseError::fail("expected a continuous column"));
        };
        prop_assert_eq!(edges.len() - 1, bucket_count(n, DEFAULT_BUCKET_CAP));
        let mut counts = vec![0usize; col.cardinality()];
        for row in to_indices(&raw, &schema).unwrap().rows() {
            counts[row[0] as usize] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1, "bucket sizes {lo}..{hi}");
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
    }

    #[test]
    fn encoded_rows_are_exactly_one_hot_per_column(
        values in prop::collection::vec(-50f64..50.0, 10..200),
        labels in prop::collection::vec(0u8..7, 200),
    ) {
        let raw = mixed_table(&values, &labels);
        let schema = infer_schema(&raw, DEFAULT_BUCKET_CAP).unwrap();
        let enc = encode(&raw, &schema).unwrap();
        let offsets = schema.group_offsets();
        for r in 0..enc.rows() {
            let row = enc.row(r);
            for (c, col) in schema.columns.iter().enumerate() {
                let ones: u32 = row[offsets[c]..offsets[c] + col.cardinality()].iter().map(|&b| u32::from(b)).sum();
                prop_assert_eq!(ones, 1);
            }
        }
    }
}
