//! Paraphrase-oriented word and phrase embeddings.
//!
//! The crate trains word vectors and a recursive composition network on
//! paraphrase pairs with a margin-based ranking objective, curates
//! paraphrase-pair datasets (overlap and size filtering, binned sampling,
//! bigram extraction), and evaluates models against human similarity
//! ratings with rank correlations and significance tests.
//!
//! The `paragram` binary exposes the same functionality as subcommands;
//! see the repository README for the file formats and workflows.

pub mod composition;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod training;

pub use error::{Error, Result};
