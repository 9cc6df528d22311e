//! Trained-model persistence and the end-to-end fit / sample pipeline.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! "PSVAE" u8:version
//! schema      u64:n_records u32:n_cols { str:name u8:kind (0 categorical: u32:n str*n | 1 continuous: u32:n f64*n) }*
//! weights     { u32:k f64*k }*n_cols
//! marginals   u64:total { u32:k u64*k }*n_cols
//! config      u64:epochs u64:batch f64:lr f64:beta_init f64:beta_factor f64:kl_fraction
//!             u64:seed u64:hidden u64:latent u8:batch_sampling u8:adjust_beta
//! beta        f64
//! layers      u32:count { u32:out u32:in f64*(out*in) f64*out }*
//! ```
//!
//! `str` is a `u32` byte length followed by UTF-8.

use std::io::{Read, Write};
use std::path::Path;

use crate::data_pipeline::{
    compute_weights, decode_table, encode, infer_schema_with, CategoryWeights, ColumnKind, ColumnSchema, DecodeMode,
    MarginalSet, RawTable, SchemaOptions, TableSchema,
};
use crate::error::{Error, Result};
use crate::numerics::{DenseLayer, Matrix};
use crate::post_selection::{post_select, CategorySampling, PostSelection};
use crate::rng::{stream, Stream};
use crate::vae::{fit_with_observer, BatchSampling, EpochRecord, TrainConfig, TrainLog, VaeParams};

pub const MAGIC: &[u8; 5] = b"PSVAE";
pub const FORMAT_VERSION: u8 = 1;

/// Everything needed to generate synthetic rows for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub schema: TableSchema,
    pub weights: CategoryWeights,
    pub marginals: MarginalSet,
    pub config: TrainConfig,
    pub params: VaeParams,
}

impl ModelFile {
    /// Infers a schema, encodes the table and trains a model.
    pub fn fit(
        raw: &RawTable,
        schema_options: &SchemaOptions,
        config: &TrainConfig,
        on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<(Self, TrainLog)> {
        let schema = infer_schema_with(raw, schema_options)?;
        Self::fit_with_schema(raw, schema, config, on_epoch)
    }

    pub fn fit_with_schema(
        raw: &RawTable,
        schema: TableSchema,
        config: &TrainConfig,
        on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<(Self, TrainLog)> {
        let encoded = encode(raw, &schema)?;
        let weights = compute_weights(&encoded, &schema);
        let marginals = MarginalSet::of_encoded(&encoded, &schema);
        let (params, log) = fit_with_observer(&encoded, &weights, &schema, config, on_epoch)?;
        Ok((Self { schema, weights, marginals, config: config.clone(), params }, log))
    }

    /// Draws `n` rows, post-selects them for `cycles` cycles and decodes them
    /// to raw values (uniform within buckets for continuous columns).
    pub fn sample(&self, n: usize, cycles: usize, sampling: CategorySampling, seed: u64) -> Result<(RawTable, PostSelection)> {
        let selection = post_select(
            &self.params,
            &self.schema,
            &self.marginals,
            n,
            cycles,
            sampling,
            stream(seed, Stream::Latent),
        )?;
        let mut values = stream(seed, Stream::Values);
        let table = decode_table(selection.set.rows(), &self.schema, DecodeMode::Uniform, &mut values)?;
        Ok((table, selection))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.bytes(MAGIC);
        w.u8(FORMAT_VERSION);

        w.u64(self.schema.n_records as u64);
        w.u32(self.schema.n_cols() as u32);
        for col in &self.schema.columns {
            w.str(&col.name);
            match &col.kind {
                ColumnKind::Categorical { categories } => {
                    w.u8(0);
                    w.u32(categories.len() as u32);
                    categories.iter().for_each(|c| w.str(c));
                }
                ColumnKind::Continuous { edges } => {
                    w.u8(1);
                    w.f64s(edges);
                }
            }
        }
        for col in &self.weights.per_column {
            w.f64s(col);
        }
        w.u64(self.marginals.total);
        for col in &self.marginals.counts {
            w.u32(col.len() as u32);
            col.iter().for_each(|&c| w.u64(c));
        }

        let c = &self.config;
        w.u64(c.epochs as u64);
        w.u64(c.batch_size as u64);
        w.f64(c.learning_rate);
        w.f64(c.beta_init);
        w.f64(c.beta_factor);
        w.f64(c.kl_target_fraction);
        w.u64(c.seed);
        w.u64(c.hidden_dim as u64);
        w.u64(c.latent_dim as u64);
        w.u8(match c.batch_sampling {
            BatchSampling::ShuffledPartition => 0,
            BatchSampling::WithReplacement => 1,
        });
        w.u8(u8::from(c.adjust_beta));

        w.f64(self.params.beta);
        let layers = self.params.layers();
        w.u32(layers.len() as u32);
        for layer in layers {
            w.u32(layer.output_dim() as u32);
            w.u32(layer.input_dim() as u32);
            layer.weights.as_slice().iter().for_each(|&v| w.f64(v));
            layer.bias.iter().for_each(|&v| w.f64(v));
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::ModelFormat("not a model file (bad magic)".into()));
        }
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model file version {version} (expected {FORMAT_VERSION})"
            )));
        }

        let n_records = r.u64()? as usize;
        let n_cols = r.u32()? as usize;
        let mut columns = Vec::with_capacity(n_cols.min(4096));
        for _ in 0..n_cols {
            let name = r.str()?;
            let col = match r.u8()? {
                0 => {
                    let k = r.u32()? as usize;
                    let cats = (0..k).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
                    ColumnSchema::categorical(name, cats)
                }
                1 => ColumnSchema::continuous(name, r.f64s()?),
                other => return Err(Error::ModelFormat(format!("unknown column kind {other}"))),
            }
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
            columns.push(col);
        }
        let schema = TableSchema::new(columns, n_records).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let cards = schema.cardinalities();

        let per_column = (0..n_cols).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
        if per_column.iter().map(Vec::len).ne(cards.iter().copied()) {
            return Err(Error::ModelFormat("category weights do not match the schema".into()));
        }
        let total = r.u64()?;
        let mut counts = Vec::with_capacity(n_cols);
        for &k in &cards {
            let len = r.u32()? as usize;
            if len != k {
                return Err(Error::ModelFormat("marginal counts do not match the schema".into()));
            }
            counts.push((0..len).map(|_| r.u64()).collect::<Result<Vec<_>>>()?);
        }

        let config = TrainConfig {
            epochs: r.u64()? as usize,
            batch_size: r.u64()? as usize,
            learning_rate: r.f64()?,
            beta_init: r.f64()?,
            beta_factor: r.f64()?,
            kl_target_fraction: r.f64()?,
            seed: r.u64()?,
            hidden_dim: r.u64()? as usize,
            latent_dim: r.u64()? as usize,
            batch_sampling: match r.u8()? {
                0 => BatchSampling::ShuffledPartition,
                1 => BatchSampling::WithReplacement,
                other => return Err(Error::ModelFormat(format!("unknown batch sampling {other}"))),
            },
            adjust_beta: r.u8()? != 0,
        };

        let beta = r.f64()?;
        let n_layers = r.u32()? as usize;
        let mut layers = Vec::with_capacity(n_layers.min(16));
        for _ in 0..n_layers {
            let out = r.u32()? as usize;
            let inp = r.u32()? as usize;
            let weights = (0..out * inp).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let bias = (0..out).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            layers.push(DenseLayer { weights: Matrix::from_vec(out, inp, weights)?, bias });
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let params = VaeParams::from_layers(layers, beta).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if params.input_width() != schema.total_width() {
            return Err(Error::ModelFormat("network width does not match the schema".into()));
        }
        Ok(Self {
            schema,
            weights: CategoryWeights { per_column },
            marginals: MarginalSet { counts, total },
            config,
            params,
        })
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u32(v.len() as u32);
        v.iter().for_each(|&x| self.f64(x));
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked by take"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::ModelFormat("invalid UTF-8 string".into()))
    }
}
