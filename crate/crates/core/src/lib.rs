//! Synthetic tabular data from a variational autoencoder with automatic
//! KL/reconstruction balancing and marginal post-selection.
//!
//! The pipeline: [`data_pipeline`] turns a CSV into category indices and a
//! one-hot matrix, [`vae`] trains the network, [`post_selection`] draws and
//! refines a synthetic set, and [`evaluation`] scores it against the real
//! table. [`model_file`] persists trained models and [`cli`] wires the
//! `psvae` binary.

pub mod cli;
pub mod data_pipeline;
pub mod error;
pub mod evaluation;
pub mod model_file;
pub mod numerics;
pub mod post_selection;
pub mod rng;
pub mod vae;

pub use error::{Error, Result};
