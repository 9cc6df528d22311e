use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One parsed CSV column. `numeric` is present iff every cell parses as a float.
#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub cells: Vec<String>,
    pub numeric: Option<Vec<f64>>,
}

impl RawColumn {
    pub fn from_cells(cells: Vec<String>) -> Self {
        let numeric = cells
            .iter()
            .map(|c| c.trim().parse::<f64>().ok())
            .collect::<Option<Vec<f64>>>();
        Self { cells, numeric }
    }

    pub fn is_numeric(&self) -> bool {
        self.numeric.is_some()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// A header plus column-major cell storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    headers: Vec<String>,
    columns: Vec<RawColumn>,
}

impl RawTable {
    /// Builds a table from column-major string cells. Empty cells are rejected
    /// since missing values are not supported.
    pub fn new(headers: Vec<String>, columns: Vec<Vec<String>>) -> Result<Self> {
        if headers.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} headers but {} columns",
                headers.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (name, col) in headers.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{name}` has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|c| c.trim().is_empty()) {
                return Err(Error::Encode {
                    column: name.clone(),
                    reason: format!("missing value at row {}", row + 1),
                });
            }
        }
        let columns = columns.into_iter().map(RawColumn::from_cells).collect();
        Ok(Self { headers, columns })
    }

    pub fn from_rows(headers: Vec<String>, rows: &[Vec<String>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); headers.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != headers.len() {
                return Err(Error::Schema(format!(
                    "row {} has {} fields, expected {}",
                    r + 1,
                    row.len(),
                    headers.len()
                )));
            }
            for (col, cell) in columns.iter_mut().zip(row) {
                col.push(cell.clone());
            }
        }
        Self::new(headers, columns)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for record in rdr.records() {
            let record = record?;
            for (col, cell) in columns.iter_mut().zip(record.iter()) {
                col.push(cell.trim().to_string());
            }
        }
        Self::new(headers, columns)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.headers)?;
        for r in 0..self.n_rows() {
            wtr.write_record(self.columns.iter().map(|c| c.cells[r].as_str()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn columns(&self) -> &[RawColumn] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &RawColumn {
        &self.columns[index]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, RawColumn::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let cells: Vec<String> = rows.iter().map(|&r| c.cells[r].clone()).collect();
                let numeric = c.numeric.as_ref().map(|v| rows.iter().map(|&r| v[r]).collect());
                RawColumn { cells, numeric }
            })
            .collect();
        Self { headers: self.headers.clone(), columns }
    }
}

/// Row-major table of per-column category indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexTable {
    n_cols: usize,
    data: Vec<u32>,
}

impl IndexTable {
    pub fn new(n_cols: usize) -> Self {
        assert!(n_cols > 0, "index table needs at least one column");
        Self { n_cols, data: Vec::new() }
    }

    pub fn with_capacity(n_cols: usize, rows: usize) -> Self {
        assert!(n_cols > 0, "index table needs at least one column");
        Self { n_cols, data: Vec::with_capacity(rows * n_cols) }
    }

    pub fn from_flat(n_cols: usize, data: Vec<u32>) -> Self {
        assert!(n_cols > 0 && data.len().is_multiple_of(n_cols), "flat data is not a whole number of rows");
        Self { n_cols, data }
    }

    pub fn push_row(&mut self, row: &[u32]) {
        assert_eq!(row.len(), self.n_cols, "row width mismatch");
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn set_row(&mut self, i: usize, row: &[u32]) {
        assert_eq!(row.len(), self.n_cols, "row width mismatch");
        self.data[i * self.n_cols..(i + 1) * self.n_cols].copy_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.n_cols
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.data
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.n_cols, rows.len());
        for &r in rows {
            out.push_row(self.row(r));
        }
        out
    }

    /// Column `col` as a vector of indices.
    pub fn column(&self, col: usize) -> Vec<u32> {
        self.rows().map(|r| r[col]).collect()
    }
}
