//! Tabular ingestion: CSV tables, schema inference with quantile bucketing,
//! one-hot encoding, category weights and marginal counts.

mod encoding;
mod schema;
mod stats;
mod table;

pub use encoding::{decode, decode_table, encode, to_indices, to_indices_clamped, DecodeMode, EncodedMatrix};
pub use schema::{bucket_count, infer_schema, infer_schema_with, ColumnKind, ColumnSchema, KindOverride, SchemaOptions, TableSchema, DEFAULT_BUCKET_CAP};
pub use stats::{compute_weights, CategoryWeights, MarginalSet};
pub use table::{IndexTable, RawColumn, RawTable};
