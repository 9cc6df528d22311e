//! Post-selection: decode an initial synthetic set, then for a number of
//! cycles decode a fresh candidate batch and swap in each candidate whose
//! replacement moves the set's per-column marginals closer to the real ones.
//!
//! Similarity is the summed per-column L1 distance between probability
//! vectors. Both sets have fixed totals `S` and `R`, so the distance scaled
//! by `S·R` is an integer, `Σ |s_c·R − r_c·S|`. Influence deltas are computed
//! in that integer form, which makes the strict `> 0` acceptance test exact.

use rand::Rng;

use crate::data_pipeline::{IndexTable, MarginalSet, TableSchema};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::vae::{decode, standard_normal, VaeParams};

/// Latent rows decoded per chunk.
pub const DECODE_CHUNK: usize = 500;
pub const DEFAULT_CYCLES: usize = 10;

/// The working synthetic set with its marginals kept in sync.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    rows: IndexTable,
    marginals: MarginalSet,
}

impl SampleSet {
    pub fn new(rows: IndexTable, cardinalities: &[usize]) -> Self {
        let marginals = MarginalSet::of_indices(&rows, cardinalities);
        Self { rows, marginals }
    }

    pub fn rows(&self) -> &IndexTable {
        &self.rows
    }

    pub fn marginals(&self) -> &MarginalSet {
        &self.marginals
    }

    pub fn into_rows(self) -> IndexTable {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Full recount check of the sync invariant.
    pub fn is_consistent(&self) -> bool {
        MarginalSet::of_indices(&self.rows, &self.marginals.cardinalities()) == self.marginals
    }
}

/// Change in distance to the real marginals caused by one proposed replacement:
/// `distance(before) − distance(after)`. Positive means an improvement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceDelta {
    pub delta: f64,
    /// `delta · S · R`, exact.
    pub scaled: i128,
}

impl InfluenceDelta {
    pub fn improves(&self) -> bool {
        self.scaled > 0
    }
}

fn check_comparable(syn: &MarginalSet, real: &MarginalSet) -> Result<()> {
    if syn.cardinalities() != real.cardinalities() {
        return Err(Error::Contract("marginal sets do not share a schema".into()));
    }
    if syn.total == 0 || real.total == 0 {
        return Err(Error::Contract("marginal distance needs non-zero totals".into()));
    }
    Ok(())
}

/// `Σ_columns Σ_categories |syn_c / syn_total − real_c / real_total|`.
pub fn marginal_distance(syn: &MarginalSet, real: &MarginalSet) -> Result<f64> {
    check_comparable(syn, real)?;
    let (s, r) = (syn.total as f64, real.total as f64);
    Ok(syn
        .counts
        .iter()
        .zip(&real.counts)
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(&x, &y)| (x as f64 / s - y as f64 / r).abs())
        .sum())
}

/// The same distance multiplied by `syn_total · real_total`, as an integer.
pub fn scaled_marginal_distance(syn: &MarginalSet, real: &MarginalSet) -> Result<i128> {
    check_comparable(syn, real)?;
    let (s, r) = (i128::from(syn.total), i128::from(real.total));
    Ok(syn
        .counts
        .iter()
        .zip(&real.counts)
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(&x, &y)| (i128::from(x) * r - i128::from(y) * s).abs())
        .sum())
}

/// Influence of replacing row `row_index` with `candidate`, touching only the
/// two affected categories of each column.
pub fn influence(set: &SampleSet, real: &MarginalSet, row_index: usize, candidate: &[u32]) -> Result<InfluenceDelta> {
    let syn = &set.marginals;
    check_comparable(syn, real)?;
    if row_index >= set.len() {
        return Err(Error::Contract(format!("row {row_index} out of range {}", set.len())));
    }
    let cards = syn.cardinalities();
    if candidate.len() != cards.len() || candidate.iter().zip(&cards).any(|(&c, &k)| c as usize >= k) {
        return Err(Error::Contract("candidate row does not conform to the schema".into()));
    }
    let (s, r) = (i128::from(syn.total), i128::from(real.total));
    let current = set.rows.row(row_index);
    let term = |col: usize, cat: usize, shift: i128| -> i128 {
        ((i128::from(syn.counts[col][cat]) + shift) * r - i128::from(real.counts[col][cat]) * s).abs()
    };
    let mut scaled = 0i128;
    for (col, (&old, &new)) in current.iter().zip(candidate).enumerate() {
        if old == new {
            continue;
        }
        let (old, new) = (old as usize, new as usize);
        let before = term(col, old, 0) + term(col, new, 0);
        let after = term(col, old, -1) + term(col, new, 1);
        scaled += before - after;
    }
    Ok(InfluenceDelta { delta: scaled as f64 / (s as f64 * r as f64), scaled })
}

/// Replaces a row and moves its marginal counts accordingly.
pub fn apply_replacement(set: &mut SampleSet, row_index: usize, candidate: &[u32]) {
    let old = set.rows.row(row_index).to_vec();
    set.marginals.replace_row(&old, candidate);
    set.rows.set_row(row_index, candidate);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CategorySampling {
    /// Draw from each column's softmax.
    #[default]
    Categorical,
    /// Take each column's highest logit.
    Argmax,
}

/// Picks one category per column group from a row of logits.
fn select_categories<R: Rng + ?Sized>(
    logits: &[f64],
    cards: &[usize],
    sampling: CategorySampling,
    rng: &mut R,
    out: &mut [u32],
) {
    let mut offset = 0;
    for (slot, &k) in out.iter_mut().zip(cards) {
        let z = &logits[offset..offset + k];
        offset += k;
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        *slot = match sampling {
            CategorySampling::Argmax => z.iter().position(|&v| v == max).unwrap_or(0) as u32,
            CategorySampling::Categorical => {
                let total: f64 = z.iter().map(|v| (v - max).exp()).sum();
                let mut u = rng.gen::<f64>() * total;
                let mut pick = k - 1;
                for (j, &v) in z.iter().enumerate() {
                    u -= (v - max).exp();
                    if u < 0.0 {
                        pick = j;
                        break;
                    }
                }
                pick as u32
            }
        };
    }
}

/// Category indices for decoder logits, one row per logits row.
pub fn categories_from_logits<R: Rng + ?Sized>(
    logits: &Matrix,
    cards: &[usize],
    sampling: CategorySampling,
    rng: &mut R,
) -> IndexTable {
    let mut out = IndexTable::with_capacity(cards.len(), logits.rows());
    let mut buf = vec![0u32; cards.len()];
    for r in 0..logits.rows() {
        select_categories(logits.row(r), cards, sampling, rng, &mut buf);
        out.push_row(&buf);
    }
    out
}

/// Decodes `n` standard-normal latent vectors into category-index rows.
pub fn decode_batch<R: Rng + ?Sized>(
    params: &VaeParams,
    n: usize,
    schema: &TableSchema,
    rng: &mut R,
    sampling: CategorySampling,
) -> Result<IndexTable> {
    if params.input_width() != schema.total_width() {
        return Err(Error::Dimension("model width does not match the schema".into()));
    }
    let cards = schema.cardinalities();
    let mut out = IndexTable::with_capacity(cards.len(), n);
    let mut remaining = n;
    while remaining > 0 {
        let chunk = remaining.min(DECODE_CHUNK);
        let z = standard_normal(chunk, params.latent_dim(), rng);
        let logits = decode(params, &z)?;
        for row in categories_from_logits(&logits, &cards, sampling, rng).rows() {
            out.push_row(row);
        }
        remaining -= chunk;
    }
    Ok(out)
}

/// Anything that can propose batches of candidate rows.
pub trait CandidateSource {
    fn draw(&mut self, n: usize) -> Result<IndexTable>;
}

/// Candidates decoded from a trained model.
pub struct DecoderSource<'a, R> {
    pub params: &'a VaeParams,
    pub schema: &'a TableSchema,
    pub sampling: CategorySampling,
    pub rng: R,
}

impl<R: Rng> CandidateSource for DecoderSource<'_, R> {
    fn draw(&mut self, n: usize) -> Result<IndexTable> {
        decode_batch(self.params, n, self.schema, &mut self.rng, self.sampling)
    }
}

/// One proposal made during post-selection, observed after it was applied or rejected.
pub struct Proposal<'a> {
    pub cycle: usize,
    pub index: usize,
    pub accepted: bool,
    pub delta: InfluenceDelta,
    pub set: &'a SampleSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostSelection {
    pub set: SampleSet,
    pub accepted_per_cycle: Vec<usize>,
}

/// Runs post-selection over a trained decoder.
pub fn post_select<R: Rng>(
    params: &VaeParams,
    schema: &TableSchema,
    real: &MarginalSet,
    n: usize,
    cycles: usize,
    sampling: CategorySampling,
    rng: R,
) -> Result<PostSelection> {
    let mut source = DecoderSource { params, schema, sampling, rng };
    post_select_from(&mut source, real, n, cycles, |_| {})
}

/// Post-selection against any candidate source. `observe` sees every proposal.
pub fn post_select_from<S: CandidateSource + ?Sized>(
    source: &mut S,
    real: &MarginalSet,
    n: usize,
    cycles: usize,
    mut observe: impl FnMut(&Proposal<'_>),
) -> Result<PostSelection> {
    if n == 0 {
        return Err(Error::Contract("post-selection needs at least one sample".into()));
    }
    let cards = real.cardinalities();
    let initial = source.draw(n)?;
    if initial.n_rows() != n {
        return Err(Error::Dimension(format!("candidate source returned {} rows, wanted {n}", initial.n_rows())));
    }
    let mut set = SampleSet::new(initial, &cards);
    let mut accepted_per_cycle = Vec::with_capacity(cycles);
    for cycle in 0..cycles {
        let candidates = source.draw(n)?;
        if candidates.n_rows() != n {
            return Err(Error::Dimension(format!(
                "candidate source returned {} rows, wanted {n}",
                candidates.n_rows()
            )));
        }
        let mut accepted = 0;
        for (index, candidate) in candidates.rows().enumerate() {
            let delta = influence(&set, real, index, candidate)?;
            let take = delta.improves();
            if take {
                apply_replacement(&mut set, index, candidate);
                accepted += 1;
            }
            observe(&Proposal { cycle, index, accepted: take, delta, set: &set });
        }
        debug_assert!(set.is_consistent(), "marginals drifted from rows in cycle {cycle}");
        accepted_per_cycle.push(accepted);
    }
    Ok(PostSelection { set, accepted_per_cycle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(n_cols: usize, flat: &[u32]) -> IndexTable {
        IndexTable::from_flat(n_cols, flat.to_vec())
    }

    /// Double loop over columns and categories on probability vectors.
    fn brute_distance(syn: &MarginalSet, real: &MarginalSet) -> f64 {
        let mut d = 0.0;
        for c in 0..syn.n_cols() {
            let (p, q) = (syn.distribution(c), real.distribution(c));
            for k in 0..p.len() {
                d += (p[k] - q[k]).abs();
            }
        }
        d
    }

    #[test]
    fn distance_examples() {
        let a = MarginalSet { counts: vec![vec![3, 1]], total: 4 };
        assert_eq!(marginal_distance(&a, &a).unwrap(), 0.0);
        let syn = MarginalSet { counts: vec![vec![1, 0]], total: 1 };
        let real = MarginalSet { counts: vec![vec![0, 1]], total: 1 };
        assert_eq!(marginal_distance(&syn, &real).unwrap(), 2.0);
        let empty = MarginalSet { counts: vec![vec![0, 0]], total: 0 };
        assert!(matches!(marginal_distance(&empty, &real), Err(Error::Contract(_))));
    }

    #[test]
    fn distance_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cards = [3, 5, 2];
        for _ in 0..50 {
            let mk = |rng: &mut ChaCha8Rng, n: usize| {
                let flat: Vec<u32> = (0..n).flat_map(|_| cards.map(|k| rng.gen_range(0..k as u32))).collect();
                MarginalSet::of_indices(&table(3, &flat), &cards)
            };
            let (syn, real) = (mk(&mut rng, 17), mk(&mut rng, 29));
            let d = marginal_distance(&syn, &real).unwrap();
            assert!((d - brute_distance(&syn, &real)).abs() < 1e-12);
            let scaled = scaled_marginal_distance(&syn, &real).unwrap() as f64 / (17.0 * 29.0);
            assert!((d - scaled).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_candidate_has_zero_influence() {
        let set = SampleSet::new(table(1, &[0, 1, 1]), &[2]);
        let real = MarginalSet { counts: vec![vec![1, 1]], total: 2 };
        assert_eq!(influence(&set, &real, 1, &[1]).unwrap().scaled, 0);
    }

    #[test]
    fn moving_mass_to_underrepresented_category_helps() {
        // 10 rows: 8 in category 0, 2 in category 1; the real data is 50/50.
        let rows: Vec<u32> = (0..10).map(|i| u32::from(i >= 8)).collect();
        let set = SampleSet::new(table(1, &rows), &[2]);
        let real = MarginalSet { counts: vec![vec![5, 5]], total: 10 };
        let d = influence(&set, &real, 0, &[1]).unwrap();
        let mut after = set.clone();
        apply_replacement(&mut after, 0, &[1]);
        let recomputed = marginal_distance(&set.marginals, &real).unwrap()
            - marginal_distance(&after.marginals, &real).unwrap();
        assert!(d.delta > 0.0);
        assert!((d.delta - recomputed).abs() < 1e-12);
        assert!((d.delta - 0.2).abs() < 1e-12);
        // the reverse move hurts
        assert!(!influence(&set, &real, 9, &[0]).unwrap().improves());
    }

    #[test]
    fn replacement_keeps_marginals_in_sync() {
        let mut set = SampleSet::new(table(2, &[0, 1, 1, 2, 0, 0]), &[2, 3]);
        let before = set.clone();
        apply_replacement(&mut set, 1, &[1, 2]);
        assert_eq!(set, before);
        apply_replacement(&mut set, 1, &[0, 0]);
        assert!(set.is_consistent());
        assert_eq!(set.marginals().counts, vec![vec![3, 0], vec![2, 1, 0]]);
        assert_eq!(set.marginals().total, 3);
    }

    #[test]
    fn influence_rejects_bad_input() {
        let set = SampleSet::new(table(1, &[0]), &[2]);
        let real = MarginalSet { counts: vec![vec![1, 1]], total: 2 };
        assert!(influence(&set, &real, 1, &[0]).is_err());
        assert!(influence(&set, &real, 0, &[2]).is_err());
    }

    struct Fixed {
        row: Vec<u32>,
    }

    impl CandidateSource for Fixed {
        fn draw(&mut self, n: usize) -> Result<IndexTable> {
            let mut t = IndexTable::new(self.row.len());
            for _ in 0..n {
                t.push_row(&self.row);
            }
            Ok(t)
        }
    }

    struct Scripted {
        batches: Vec<IndexTable>,
    }

    impl CandidateSource for Scripted {
        fn draw(&mut self, _n: usize) -> Result<IndexTable> {
            Ok(self.batches.remove(0))
        }
    }

    #[test]
    fn zero_cycles_returns_initial_batch() {
        let initial = table(1, &[1, 1, 0]);
        let mut src = Scripted { batches: vec![initial.clone()] };
        let real = MarginalSet { counts: vec![vec![1, 1]], total: 2 };
        let out = post_select_from(&mut src, &real, 3, 0, |_| {}).unwrap();
        assert_eq!(out.set.rows(), &initial);
        assert!(out.accepted_per_cycle.is_empty());
    }

    #[test]
    fn fixed_row_source_is_accepted_only_while_it_helps() {
        // Real: 50/50. Start all in category 1; the source only offers category 0.
        let real = MarginalSet { counts: vec![vec![5, 5]], total: 10 };
        let offer = Fixed { row: vec![0] }.draw(10).unwrap();
        let mut fixed = Scripted { batches: vec![table(1, &[1; 10]), offer.clone(), offer] };
        let out = post_select_from(&mut fixed, &real, 10, 2, |p| {
            if p.accepted {
                assert!(p.delta.scaled > 0);
            }
        })
        .unwrap();
        assert_eq!(out.set.marginals().counts, vec![vec![5, 5]]);
        assert_eq!(out.accepted_per_cycle, vec![5, 0]);
    }

    #[test]
    fn fixed_row_never_accepted_when_it_cannot_help() {
        let mut src = Fixed { row: vec![0] };
        let real = MarginalSet { counts: vec![vec![5, 5]], total: 10 };
        let out = post_select_from(&mut src, &real, 4, 3, |_| {}).unwrap();
        assert_eq!(out.accepted_per_cycle, vec![0, 0, 0]);
    }

    #[test]
    fn constant_logits_sample_mostly_first_category() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let logits = Matrix::from_fn(10_000, 2, |_, c| if c == 0 { 10.0 } else { -10.0 });
        let rows = categories_from_logits(&logits, &[2], CategorySampling::Categorical, &mut rng);
        let zeros = rows.as_flat().iter().filter(|&&v| v == 0).count();
        assert!(zeros as f64 / 10_000.0 >= 0.999);
        let arg = categories_from_logits(&logits, &[2], CategorySampling::Argmax, &mut rng);
        assert!(arg.as_flat().iter().all(|&v| v == 0));
    }

    #[test]
    fn categorical_sampling_follows_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = [0.0, (2.0f64).ln(), (3.0f64).ln()]; // probabilities 1/6, 2/6, 3/6
        let logits = Matrix::from_fn(60_000, 3, |_, c| z[c]);
        let rows = categories_from_logits(&logits, &[3], CategorySampling::Categorical, &mut rng);
        let m = MarginalSet::of_indices(&rows, &[3]);
        for (k, want) in [1.0 / 6.0, 2.0 / 6.0, 0.5].iter().enumerate() {
            assert!((m.distribution(0)[k] - want).abs() < 0.01);
        }
    }

    #[test]
    fn decode_batch_shapes_and_determinism() {
        use crate::data_pipeline::ColumnSchema;
        let schema = TableSchema::new(
            vec![
                ColumnSchema::categorical("a", vec!["x".into(), "y".into()]).unwrap(),
                ColumnSchema::continuous("b", vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
            ],
            1,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = VaeParams::new(5, 8, 4, &mut rng);
        let rows = decode_batch(&params, 1203, &schema, &mut rng, CategorySampling::Categorical).unwrap();
        assert_eq!(rows.n_rows(), 1203);
        assert!(rows.rows().all(|r| r[0] < 2 && r[1] < 3));
        let a = decode_batch(&params, 50, &schema, &mut ChaCha8Rng::seed_from_u64(1), CategorySampling::Argmax).unwrap();
        let b = decode_batch(&params, 50, &schema, &mut ChaCha8Rng::seed_from_u64(1), CategorySampling::Argmax).unwrap();
        assert_eq!(a, b);
        // argmax is a function of z alone
        let z = standard_normal(7, 4, &mut rng);
        let logits = decode(&params, &z).unwrap();
        let x = categories_from_logits(&logits, &[2, 3], CategorySampling::Argmax, &mut ChaCha8Rng::seed_from_u64(5));
        let y = categories_from_logits(&logits, &[2, 3], CategorySampling::Argmax, &mut ChaCha8Rng::seed_from_u64(6));
        assert_eq!(x, y);
    }
}
