//! Core algorithms for formality style transfer: deterministic tokenization,
//! edit distances, a rule-based transfer engine for both directions, a trainable
//! linear formality scorer, back-off n-gram language models, and the automatic
//! evaluation metrics (BLEU, PINC, TER, rank correlation, bootstrap significance).
//!
//! This crate is `no_std` + `alloc`: everything here is a pure function over
//! in-memory data. File formats, parallelism, and the command-line interface
//! live in the companion `restyle-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod formality;
pub mod lm;
pub mod metrics;
pub mod pipeline;
pub mod rules;
pub mod text;

pub(crate) mod util;
