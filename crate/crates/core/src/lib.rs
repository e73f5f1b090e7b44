//! Knowledge-graph summarization toolkit.
//!
//! The pipeline turns windowed information-extraction output into a
//! full-document [`KnowledgeGraph`](kg::KnowledgeGraph), predicts a compact
//! summary subgraph, and scores it against a target graph:
//!
//! - [`ingest`]: file formats, IDF statistics, embedding tables;
//! - [`build`]: full and target graph construction;
//! - [`baselines`]: PageRank, most-frequent, gold-entity and summary-induced selectors;
//! - [`gat`]: the relation-typed graph attention salience classifier;
//! - [`align`] and [`metrics`]: relaxed alignment and salience/duplication scores;
//! - [`cli`]: the `kgsum` command-line front end;
//! - [`synthetic`]: seeded random graphs for checks and demos.

pub mod align;
pub mod baselines;
pub mod build;
pub mod cli;
pub mod error;
pub mod gat;
pub mod ingest;
pub mod kg;
pub mod metrics;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
