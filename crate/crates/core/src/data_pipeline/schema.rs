use std::collections::{HashMap, HashSet};

use super::table::RawTable;
use crate::error::{Error, Result};

/// Upper bound on the number of buckets for a continuous column.
pub const DEFAULT_BUCKET_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    /// Distinct raw labels in order of first appearance.
    Categorical { categories: Vec<String> },
    /// Strictly ascending bucket boundaries, `B + 1` of them.
    Continuous { edges: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSchema {
    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Result<Self> {
        let name = name.into();
        if categories.is_empty() {
            return Err(Error::Schema(format!("column `{name}` has no categories")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = categories.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Schema(format!("column `{name}` repeats category `{dup}`")));
        }
        Ok(Self { name, kind: ColumnKind::Categorical { categories } })
    }

    pub fn continuous(name: impl Into<String>, edges: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if edges.len() < 2 {
            return Err(Error::Schema(format!("column `{name}` needs at least two bucket edges")));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema(format!(
                "column `{name}` bucket edges must be finite and strictly ascending"
            )));
        }
        Ok(Self { name, kind: ColumnKind::Continuous { edges } })
    }

    pub fn cardinality(&self) -> usize {
        match &self.kind {
            ColumnKind::Categorical { categories } => categories.len(),
            ColumnKind::Continuous { edges } => edges.len() - 1,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, ColumnKind::Continuous { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSchema {
    pub columns: Vec<ColumnSchema>,
    pub n_records: usize,
}

impl TableSchema {
    pub fn new(columns: Vec<ColumnSchema>, n_records: usize) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        Ok(Self { columns, n_records })
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.columns.iter().map(ColumnSchema::cardinality).collect()
    }

    /// Width of the one-hot encoding: the sum of cardinalities.
    pub fn total_width(&self) -> usize {
        self.columns.iter().map(ColumnSchema::cardinality).sum()
    }

    /// Start of each column's one-hot group.
    pub fn group_offsets(&self) -> Vec<usize> {
        self.columns
            .iter()
            .scan(0, |acc, c| {
                let start = *acc;
                *acc += c.cardinality();
                Some(start)
            })
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// `min(floor(sqrt(n)), cap)`, computed in integers.
pub fn bucket_count(n_records: usize, cap: usize) -> usize {
    let mut r = (n_records as f64).sqrt() as usize;
    while r * r > n_records {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n_records {
        r += 1;
    }
    r.min(cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindOverride {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct SchemaOptions {
    pub bucket_cap: usize,
    pub overrides: HashMap<String, KindOverride>,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        Self { bucket_cap: DEFAULT_BUCKET_CAP, overrides: HashMap::new() }
    }
}

pub fn infer_schema(raw: &RawTable, cap: usize) -> Result<TableSchema> {
    infer_schema_with(raw, &SchemaOptions { bucket_cap: cap, ..Default::default() })
}

pub fn infer_schema_with(raw: &RawTable, options: &SchemaOptions) -> Result<TableSchema> {
    let n = raw.n_rows();
    if n == 0 || raw.n_cols() == 0 {
        return Err(Error::Schema("cannot infer a schema from an empty table".into()));
    }
    if options.bucket_cap == 0 {
        return Err(Error::Config("bucket cap must be positive".into()));
    }
    for name in options.overrides.keys() {
        if raw.column_index(name).is_none() {
            return Err(Error::Config(format!("type override names unknown column `{name}`")));
        }
    }
    let buckets = bucket_count(n, options.bucket_cap).max(1);

    let columns = raw
        .headers()
        .iter()
        .zip(raw.columns())
        .map(|(name, col)| {
            let forced = options.overrides.get(name).copied();
            let values = match (&col.numeric, forced) {
                (_, Some(KindOverride::Categorical)) => None,
                (None, Some(KindOverride::Continuous)) => {
                    return Err(Error::Schema(format!(
                        "column `{name}` is not numeric and cannot be continuous"
                    )))
                }
                (None, None) => None,
                (Some(v), _) => {
                    if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
                        return Err(Error::Encode {
                            column: name.clone(),
                            reason: format!("non-finite value at row {}", bad + 1),
                        });
                    }
                    Some(v)
                }
            };
            if let Some(values) = values {
                let distinct = count_distinct(values);
                let continuous = match forced {
                    Some(KindOverride::Continuous) => distinct >= 2,
                    _ => distinct > buckets,
                };
                if continuous {
                    return ColumnSchema::continuous(name.clone(), quantile_edges(values, buckets));
                }
            }
            ColumnSchema::categorical(name.clone(), first_appearance(&col.cells))
        })
        .collect::<Result<Vec<_>>>()?;
    TableSchema::new(columns, n)
}

fn count_distinct(values: &[f64]) -> usize {
    values.iter().map(|v| v.to_bits()).collect::<HashSet<_>>().len()
}

fn first_appearance(cells: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    cells.iter().filter(|c| seen.insert(c.as_str())).cloned().collect()
}

/// Equal-frequency bucket edges. Interior edges are the sample quantiles at
/// `i * N / B`; the outer edges are the column min and max. Coinciding edges
/// (ties) are merged, so a tie-heavy column may get fewer than `B` buckets.
fn quantile_edges(values: &[f64], buckets: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges = Vec::with_capacity(buckets + 1);
    edges.push(sorted[0]);
    for i in 1..buckets {
        edges.push(sorted[i * n / buckets]);
    }
    edges.push(sorted[n - 1]);
    edges.dedup();
    edges
}
