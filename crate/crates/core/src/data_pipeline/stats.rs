use super::encoding::EncodedMatrix;
use super::schema::TableSchema;
use super::table::IndexTable;
use crate::error::{Error, Result};

/// Exact per-column category counts over `total` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalSet {
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl MarginalSet {
    pub fn zeros(cardinalities: &[usize]) -> Self {
        Self { counts: cardinalities.iter().map(|&k| vec![0; k]).collect(), total: 0 }
    }

    pub fn of_indices(rows: &IndexTable, cardinalities: &[usize]) -> Self {
        let mut m = Self::zeros(cardinalities);
        for row in rows.rows() {
            m.add_row(row);
        }
        m
    }

    pub fn of_encoded(encoded: &EncodedMatrix, schema: &TableSchema) -> Self {
        let mut m = Self::zeros(&schema.cardinalities());
        let offsets = encoded.group_offsets();
        for r in 0..encoded.rows() {
            let row = encoded.row(r);
            for (c, counts) in m.counts.iter_mut().enumerate() {
                let start = offsets[c];
                for (k, slot) in counts.iter_mut().enumerate() {
                    *slot += u64::from(row[start + k]);
                }
            }
        }
        m.total = encoded.rows() as u64;
        m
    }

    pub fn add_row(&mut self, row: &[u32]) {
        for (counts, &idx) in self.counts.iter_mut().zip(row) {
            counts[idx as usize] += 1;
        }
        self.total += 1;
    }

    /// Moves one row's worth of counts from `old` to `new`; `total` is unchanged.
    pub fn replace_row(&mut self, old: &[u32], new: &[u32]) {
        for ((counts, &o), &n) in self.counts.iter_mut().zip(old).zip(new) {
            if o != n {
                counts[o as usize] -= 1;
                counts[n as usize] += 1;
            }
        }
    }

    /// Elementwise sum; both sets must share the same shape.
    pub fn merged(&self, other: &Self) -> Result<Self> {
        if self.cardinalities() != other.cardinalities() {
            return Err(Error::Dimension("marginal sets have different shapes".into()));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self { counts, total: self.total + other.total })
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.counts.iter().map(Vec::len).collect()
    }

    pub fn n_cols(&self) -> usize {
        self.counts.len()
    }

    /// Column `col` as a probability vector. All zeros when `total == 0`.
    pub fn distribution(&self, col: usize) -> Vec<f64> {
        let total = self.total as f64;
        self.counts[col]
            .iter()
            .map(|&c| if self.total == 0 { 0.0 } else { c as f64 / total })
            .collect()
    }
}

/// Inverse-frequency cross-entropy weights, one list per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryWeights {
    pub per_column: Vec<Vec<f64>>,
}

impl CategoryWeights {
    pub fn uniform(cardinalities: &[usize]) -> Self {
        Self { per_column: cardinalities.iter().map(|&k| vec![1.0; k]).collect() }
    }

    /// `ω_c = N / (K · (n_c + 1))` per column with `K` categories over `N` rows.
    pub fn from_marginals(marginals: &MarginalSet) -> Self {
        let n = marginals.total as f64;
        let per_column = marginals
            .counts
            .iter()
            .map(|counts| {
                let k = counts.len() as f64;
                counts.iter().map(|&c| n / (k * (c as f64 + 1.0))).collect()
            })
            .collect();
        Self { per_column }
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.per_column[col]
    }
}

pub fn compute_weights(encoded: &EncodedMatrix, schema: &TableSchema) -> CategoryWeights {
    CategoryWeights::from_marginals(&MarginalSet::of_encoded(encoded, schema))
}
