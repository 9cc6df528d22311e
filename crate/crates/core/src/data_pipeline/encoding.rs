use std::collections::HashMap;

use rand::Rng;

use super::schema::{ColumnKind, ColumnSchema, TableSchema};
use super::table::{IndexTable, RawColumn, RawTable};
use crate::error::{Error, Result};

/// Row-major one-hot matrix. Within each column group of each row exactly one
/// entry is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMatrix {
    rows: usize,
    width: usize,
    group_offsets: Vec<usize>,
    data: Vec<u8>,
}

impl EncodedMatrix {
    pub fn from_indices(indices: &IndexTable, schema: &TableSchema) -> Result<Self> {
        let cards = schema.cardinalities();
        if indices.n_cols() != cards.len() {
            return Err(Error::Dimension(format!(
                "index table has {} columns, schema has {}",
                indices.n_cols(),
                cards.len()
            )));
        }
        let width = schema.total_width();
        let group_offsets = schema.group_offsets();
        let mut data = vec![0u8; indices.n_rows() * width];
        for (r, row) in indices.rows().enumerate() {
            for (c, &idx) in row.iter().enumerate() {
                if idx as usize >= cards[c] {
                    return Err(Error::Encode {
                        column: schema.columns[c].name.clone(),
                        reason: format!("category index {idx} out of range {}", cards[c]),
                    });
                }
                data[r * width + group_offsets[c] + idx as usize] = 1;
            }
        }
        Ok(Self { rows: indices.n_rows(), width, group_offsets, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn group_offsets(&self) -> &[usize] {
        &self.group_offsets
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    /// Recovers per-column category indices.
    pub fn to_indices(&self) -> IndexTable {
        let n_cols = self.group_offsets.len();
        let mut out = IndexTable::with_capacity(n_cols, self.rows);
        let mut buf = vec![0u32; n_cols];
        for r in 0..self.rows {
            let row = self.row(r);
            for (c, slot) in buf.iter_mut().enumerate() {
                let start = self.group_offsets[c];
                let end = self.group_offsets.get(c + 1).copied().unwrap_or(self.width);
                *slot = row[start..end].iter().position(|&v| v == 1).unwrap_or(0) as u32;
            }
            out.push_row(&buf);
        }
        out
    }

    /// Writes the selected rows as dense `f64` into `out` (row-major).
    pub fn fill_dense(&self, rows: &[usize], out: &mut [f64]) {
        assert_eq!(out.len(), rows.len() * self.width);
        for (dst, &r) in out.chunks_exact_mut(self.width).zip(rows) {
            for (d, &s) in dst.iter_mut().zip(self.row(r)) {
                *d = f64::from(s);
            }
        }
    }
}

pub fn encode(raw: &RawTable, schema: &TableSchema) -> Result<EncodedMatrix> {
    EncodedMatrix::from_indices(&to_indices(raw, schema)?, schema)
}

/// Per-column category indices; any out-of-range continuous value is an error.
pub fn to_indices(raw: &RawTable, schema: &TableSchema) -> Result<IndexTable> {
    index_columns(raw, schema, false)
}

/// Like [`to_indices`] but continuous values outside the schema's range are
/// assigned to the first or last bucket. Used when scoring foreign tables.
pub fn to_indices_clamped(raw: &RawTable, schema: &TableSchema) -> Result<IndexTable> {
    index_columns(raw, schema, true)
}

fn index_columns(raw: &RawTable, schema: &TableSchema, clamp: bool) -> Result<IndexTable> {
    let names = schema.names();
    if raw.headers() != names.as_slice() {
        return Err(Error::Schema(format!(
            "table header {:?} does not match schema columns {:?}",
            raw.headers(),
            names
        )));
    }
    let per_column = schema
        .columns
        .iter()
        .zip(raw.columns())
        .map(|(col, data)| index_column(col, data, clamp))
        .collect::<Result<Vec<_>>>()?;
    let n_rows = raw.n_rows();
    let mut flat = Vec::with_capacity(n_rows * per_column.len());
    for r in 0..n_rows {
        flat.extend(per_column.iter().map(|c| c[r]));
    }
    Ok(IndexTable::from_flat(per_column.len(), flat))
}

fn index_column(col: &ColumnSchema, data: &RawColumn, clamp: bool) -> Result<Vec<u32>> {
    let err = |reason: String| Error::Encode { column: col.name.clone(), reason };
    match &col.kind {
        ColumnKind::Categorical { categories } => {
            let lookup: HashMap<&str, u32> =
                categories.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
            data.cells
                .iter()
                .map(|cell| {
                    lookup
                        .get(cell.as_str())
                        .copied()
                        .ok_or_else(|| err(format!("unseen label `{cell}`")))
                })
                .collect()
        }
        ColumnKind::Continuous { edges } => {
            let values = data
                .numeric
                .as_ref()
                .ok_or_else(|| err("column is not numeric".into()))?;
            values
                .iter()
                .map(|&v| bucket_of(edges, v, clamp).map(|b| b as u32).map_err(err))
                .collect()
        }
    }
}

/// Bucket `i` holds `edges[i] <= v < edges[i + 1]`; the last bucket is closed.
pub(crate) fn bucket_of(edges: &[f64], v: f64, clamp: bool) -> std::result::Result<usize, String> {
    if v.is_nan() {
        return Err("NaN value".into());
    }
    let last = edges.len() - 2;
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    if v < lo || v > hi {
        if !clamp {
            return Err(format!("value {v} outside bucket range [{lo}, {hi}]"));
        }
        return Ok(if v < lo { 0 } else { last });
    }
    Ok((edges.partition_point(|&e| e <= v) - 1).min(last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Bucket midpoint; deterministic.
    Midpoint,
    /// Uniform draw within the bucket.
    #[default]
    Uniform,
}

/// Turns one row of category indices back into raw cell text.
pub fn decode<R: Rng + ?Sized>(
    indices: &[u32],
    schema: &TableSchema,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<Vec<String>> {
    if indices.len() != schema.n_cols() {
        return Err(Error::Dimension(format!(
            "row has {} indices, schema has {} columns",
            indices.len(),
            schema.n_cols()
        )));
    }
    schema
        .columns
        .iter()
        .zip(indices)
        .map(|(col, &idx)| decode_cell(col, idx as usize, mode, rng))
        .collect()
}

fn decode_cell<R: Rng + ?Sized>(
    col: &ColumnSchema,
    idx: usize,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<String> {
    if idx >= col.cardinality() {
        return Err(Error::Decode {
            column: col.name.clone(),
            reason: format!("index {idx} out of range {}", col.cardinality()),
        });
    }
    Ok(match &col.kind {
        ColumnKind::Categorical { categories } => categories[idx].clone(),
        ColumnKind::Continuous { edges } => {
            let (lo, hi) = (edges[idx], edges[idx + 1]);
            let v = match mode {
                DecodeMode::Midpoint => lo + 0.5 * (hi - lo),
                DecodeMode::Uniform => rng.gen_range(lo..hi),
            };
            v.to_string()
        }
    })
}

pub fn decode_table<R: Rng + ?Sized>(
    indices: &IndexTable,
    schema: &TableSchema,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<RawTable> {
    let mut rows = Vec::with_capacity(indices.n_rows());
    for row in indices.rows() {
        rows.push(decode(row, schema, mode, rng)?);
    }
    let mut columns = vec![Vec::with_capacity(rows.len()); schema.n_cols()];
    for row in rows {
        for (col, cell) in columns.iter_mut().zip(row) {
            col.push(cell);
        }
    }
    RawTable::new(schema.names(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schema() -> TableSchema {
        TableSchema::new(
            vec![
                ColumnSchema::categorical("c", vec!["A".into(), "B".into(), "C".into()]).unwrap(),
                ColumnSchema::continuous("x", vec![0.0, 2.0, 4.0]).unwrap(),
            ],
            3,
        )
        .unwrap()
    }

    fn table(rows: &[[&str; 2]]) -> RawTable {
        let rows: Vec<Vec<String>> =
            rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        RawTable::from_rows(vec!["c".into(), "x".into()], &rows).unwrap()
    }

    #[test]
    fn one_hot_groups() {
        let enc = encode(&table(&[["B", "3.5"], ["A", "4"], ["C", "0"]]), &schema()).unwrap();
        assert_eq!(enc.group_offsets(), &[0, 3]);
        assert_eq!(enc.row(0), &[0, 1, 0, 0, 1]);
        // right-closed last bucket
        assert_eq!(enc.row(1), &[1, 0, 0, 0, 1]);
        assert_eq!(enc.row(2), &[0, 0, 1, 1, 0]);
        assert_eq!(enc.to_indices().as_flat(), &[1, 1, 0, 1, 2, 0]);
    }

    #[test]
    fn encode_errors() {
        let err = encode(&table(&[["D", "1"]]), &schema()).unwrap_err();
        assert!(err.to_string().contains("`c`") && err.to_string().contains("`D`"));
        assert!(encode(&table(&[["A", "NaN"]]), &schema()).is_err());
        assert!(encode(&table(&[["A", "4.5"]]), &schema()).is_err());
        assert!(encode(&table(&[["A", "-1"]]), &schema()).is_err());
        let clamped = to_indices_clamped(&table(&[["A", "9"], ["A", "-1"]]), &schema()).unwrap();
        assert_eq!(clamped.column(1), vec![1, 0]);
    }

    #[test]
    fn decode_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = schema();
        assert_eq!(decode(&[1, 0], &s, DecodeMode::Midpoint, &mut rng).unwrap(), vec!["B", "1"]);
        assert_eq!(decode(&[0, 1], &s, DecodeMode::Midpoint, &mut rng).unwrap()[1], "3");
        for _ in 0..100 {
            let v: f64 = decode(&[0, 0], &s, DecodeMode::Uniform, &mut rng).unwrap()[1].parse().unwrap();
            assert!((0.0..2.0).contains(&v));
        }
        let err = decode(&[3, 0], &s, DecodeMode::Midpoint, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));

        let wide = TableSchema::new(vec![ColumnSchema::continuous("x", vec![0.0, 10.0]).unwrap()], 1).unwrap();
        let v: f64 = decode(&[0], &wide, DecodeMode::Uniform, &mut rng).unwrap()[0].parse().unwrap();
        assert!((0.0..10.0).contains(&v));
    }

    #[test]
    fn bucket_edges_membership() {
        let e = [0.0, 2.0, 4.0];
        assert_eq!(bucket_of(&e, 0.0, false), Ok(0));
        assert_eq!(bucket_of(&e, 1.999, false), Ok(0));
        assert_eq!(bucket_of(&e, 2.0, false), Ok(1));
        assert_eq!(bucket_of(&e, 4.0, false), Ok(1));
    }
}
