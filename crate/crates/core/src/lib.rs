//! Example-based grammatical error correction.
//!
//! A small encoder-decoder proposes corrections; at every decode step its
//! next-token distribution is interpolated with a distribution formed from
//! the nearest training decoder states in a datastore. The retrieved
//! neighbors double as evidence: each edit in the output is presented with
//! the incorrect/correct training pair whose stored state supported it.

pub mod align;
pub mod baselines;
pub mod corpus;
pub mod datastore;
pub mod engine;
pub mod eval;
pub mod knn_decode;
mod error;
pub mod seq2seq;
pub mod service;

pub use error::{Error, Result};
